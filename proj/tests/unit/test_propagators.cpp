#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gmemed/errors.hpp"
#include "gmemed/kernels.hpp"
#include "gmemed/propagators.hpp"

using namespace gmemed;

namespace {

KernelTable fmo_kernels(double temperature, double step = 1e-3, double horizon = 2.0, double scale = 1.0) {
    SystemSpec s = fixture::fmo4(temperature);
    for (auto& c : s.inter_couplings) c.value *= scale;
    const ExcitonBasis basis = build_exciton_basis(s);
    const DrudeLineshape g = DrudeLineshape::from_bath(s.bath);
    return kernel_med1(basis, g, UniformGrid::from_horizon(horizon, step));
}

// Symmetric damped-oscillating kernel between two modules.
KernelTable synthetic_symmetric(const UniformGrid& grid) {
    KernelTable table(grid, 2);
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double t = grid[i];
        const double k = 40.0 * std::exp(-t / 0.05) * std::cos(30.0 * t);
        table(0, 1)(static_cast<Eigen::Index>(i)) = k;
        table(1, 0)(static_cast<Eigen::Index>(i)) = k;
    }
    return table;
}

double max_sum_error(const Trajectory& traj) {
    return (traj.populations.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double max_difference_on_coarse(const Trajectory& coarse, const Trajectory& fine) {
    const auto ratio = static_cast<Eigen::Index>((fine.size() - 1) / (coarse.size() - 1));
    double worst = 0.0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(coarse.size()); ++i) {
        worst = std::max(worst, (coarse.populations.row(i) - fine.populations.row(i * ratio)).cwiseAbs().maxCoeff());
    }
    return worst;
}

} // namespace

TEST_CASE("propagators: zero kernel keeps the initial populations") {
    const UniformGrid grid = UniformGrid::from_horizon(1.0, 1e-3);
    const KernelTable zero(grid, 3);
    const Eigen::Vector3d p0(0.2, 0.5, 0.3);
    for (const Trajectory& traj : {propagate_convolution(zero, p0, grid), propagate_time_local(zero, p0, grid),
                                   propagate_pauli(markovian_rates(zero), p0, grid)}) {
        for (Eigen::Index i = 0; i < traj.populations.rows(); ++i) {
            CHECK((traj.populations.row(i).transpose() - p0).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("propagators: symmetric two-module kernel relaxes monotonically toward 1/2") {
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    const KernelTable table = synthetic_symmetric(grid);
    const Eigen::Vector2d p0(1.0, 0.0);
    for (const Trajectory& traj : {propagate_convolution(table, p0, grid), propagate_time_local(table, p0, grid)}) {
        CHECK(max_sum_error(traj) < 1e-12);
        const Eigen::VectorXd p1 = traj.populations.col(0);
        for (Eigen::Index i = 1; i < p1.size(); ++i) CHECK(p1(i) <= p1(i - 1) + 1e-12);
        CHECK(p1(p1.size() - 1) > 0.3);
        CHECK(p1(p1.size() - 1) < 0.7);
    }
}

TEST_CASE("pauli: equal rates follow 1/2 + (p(0) - 1/2) exp(-2kt)") {
    const double k = 0.8;
    RateMatrix rates;
    rates.rates = Eigen::Matrix2d{{0.0, k}, {k, 0.0}};
    const UniformGrid grid = UniformGrid::from_horizon(5.0, 1e-2);
    const Trajectory traj = propagate_pauli(rates, Eigen::Vector2d(0.9, 0.1), grid);
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double expected = 0.5 + 0.4 * std::exp(-2.0 * k * grid[i]);
        CHECK(traj.populations(static_cast<Eigen::Index>(i), 0) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(traj.populations.minCoeff() >= 0.0);
    CHECK(traj.populations.maxCoeff() <= 1.0);
}

TEST_CASE("pauli: long-time state is the null vector of the generator") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> rate(0.1, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        RateMatrix rates;
        rates.rates = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                if (a != b) rates.rates(a, b) = rate(rng);
            }
        }
        const Eigen::MatrixXd w = rates.generator();
        Eigen::VectorXd null = Eigen::FullPivLU<Eigen::MatrixXd>(w).kernel().col(0);
        null /= null.sum();

        double slowest = std::numeric_limits<double>::infinity();
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) {
                if (a != b) slowest = std::min(slowest, rates.rates(a, b));
            }
        }
        const double horizon = std::ceil(20.0 / slowest);
        const UniformGrid grid = UniformGrid::from_horizon(horizon, 0.5);
        const Trajectory traj = propagate_pauli(rates, localized_initial(static_cast<std::size_t>(n), 0), grid);
        const Eigen::VectorXd last = traj.populations.row(traj.populations.rows() - 1).transpose();
        CHECK((last - null).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("propagators: step doubling on the FMO system") {
    for (double temperature : {150.0, 300.0}) {
        const KernelTable table = fmo_kernels(temperature, 0.5e-3);
        const Eigen::Vector2d p0(1.0, 0.0);
        const UniformGrid coarse = UniformGrid::from_horizon(2.0, 1e-3);
        const UniformGrid fine = UniformGrid::from_horizon(2.0, 0.5e-3);
        CHECK(max_difference_on_coarse(propagate_convolution(table, p0, coarse),
                                       propagate_convolution(table, p0, fine)) < 1e-4);
        CHECK(max_difference_on_coarse(propagate_time_local(table, p0, coarse),
                                       propagate_time_local(table, p0, fine)) < 1e-4);
        const RateMatrix rates = markovian_rates(table);
        CHECK(max_difference_on_coarse(propagate_pauli(rates, p0, coarse), propagate_pauli(rates, p0, fine)) < 1e-12);
    }
}

TEST_CASE("time-local: instantaneous rates approach the Markovian rates after the kernel decays") {
    for (double temperature : {150.0, 300.0}) {
        const KernelTable table = fmo_kernels(temperature);
        const RateMatrix markov = markovian_rates(table);
        const double decay = kernel_decay_time(table);
        for (double t = decay; t <= 2.0; t += 0.25) {
            const Eigen::MatrixXd r = instantaneous_rates(table, t);
            CHECK(r(0, 1) == doctest::Approx(markov.rates(0, 1)).epsilon(1e-3));
            CHECK(r(1, 0) == doctest::Approx(markov.rates(1, 0)).epsilon(1e-3));
        }
        CHECK(instantaneous_rates(table, 0.0).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("time-local: any site of a module maps to the same MED initial condition") {
    const KernelTable table = fmo_kernels(300.0);
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    const Eigen::VectorXd p0 = localized_initial(2, 0);
    CHECK(p0 == Eigen::Vector2d(1.0, 0.0));
    const Trajectory a = propagate_time_local(table, p0, grid);
    const Trajectory b = propagate_time_local(table, localized_initial(2, 0), grid);
    CHECK((a.populations - b.populations).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.method != propagate_convolution(table, p0, grid).method);
}

TEST_CASE("propagators: conservation on random systems") {
    std::mt19937 rng(2024);
    const UniformGrid grid = UniformGrid::from_horizon(1.0, 1e-3);
    for (int trial = 0; trial < 20; ++trial) {
        const SystemSpec s = fixture::random_system(rng, 2 + trial % 3, 3);
        const ExcitonBasis basis = build_exciton_basis(s);
        const DrudeLineshape g = DrudeLineshape::from_bath(s.bath);
        KernelOptions options;
        options.allow_coarse_grid = true;
        const KernelTable table = kernel_med1(basis, g, UniformGrid::from_horizon(2.0, 1e-3), options);
        const Eigen::VectorXd p0 = localized_initial(s.module_count(), 0);
        CHECK(max_sum_error(propagate_convolution(table, p0, grid)) < 1e-8);
        CHECK(max_sum_error(propagate_time_local(table, p0, grid)) < 1e-8);
        CHECK(max_sum_error(propagate_pauli(markovian_rates(table), p0, grid)) < 1e-8);
    }
}

TEST_CASE("propagators: fast-decaying kernels make all three methods agree") {
    // rate x kernel decay time well below 0.05
    const KernelTable table = fmo_kernels(300.0, 1e-3, 20.0, 0.3);
    const RateMatrix rates = markovian_rates(table);
    CHECK(rates.rates.maxCoeff() * kernel_decay_time(table) < 0.05);
    const UniformGrid grid = UniformGrid::from_horizon(20.0, 5e-3);
    const Eigen::Vector2d p0(1.0, 0.0);
    const Trajectory conv = propagate_convolution(table, p0, grid);
    const Trajectory local = propagate_time_local(table, p0, grid);
    const Trajectory pauli = propagate_pauli(rates, p0, grid);
    CHECK((conv.populations - pauli.populations).cwiseAbs().maxCoeff() < 0.01);
    CHECK((local.populations - pauli.populations).cwiseAbs().maxCoeff() < 0.01);
    CHECK(pauli.populations(pauli.populations.rows() - 1, 0) < 0.7);
}

TEST_CASE("propagators: input validation") {
    const KernelTable table = fmo_kernels(300.0);
    const UniformGrid grid = UniformGrid::from_horizon(1.0, 1e-3);
    CHECK_THROWS_AS(propagate_time_local(table, Eigen::Vector2d(0.6, 0.6), grid), ValidationError);
    CHECK_THROWS_AS(propagate_time_local(table, Eigen::Vector2d(1.1, -0.1), grid), ValidationError);
    CHECK_THROWS_AS(propagate_convolution(table, Eigen::Vector3d(1.0, 0.0, 0.0), grid), ValidationError);
    CHECK_THROWS_WITH_AS(propagate_convolution(table, Eigen::Vector2d(1.0, 0.0), UniformGrid::from_horizon(3.0, 1e-3)),
                         doctest::Contains("shorter"), ValidationError);
    CHECK_THROWS_AS(propagate_time_local(table, Eigen::Vector2d(1.0, 0.0), UniformGrid::from_horizon(1.0, 1.5e-3)),
                    ValidationError);
    CHECK_THROWS_AS(localized_initial(2, 2), ValidationError);
    RateMatrix bad;
    bad.rates = Eigen::Matrix2d{{0.0, -1.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(propagate_pauli(bad, Eigen::Vector2d(1.0, 0.0), grid), ValidationError);
}

TEST_CASE("propagators: negative excursions are recorded, not clamped") {
    const KernelTable table = fmo_kernels(300.0);
    const UniformGrid grid = UniformGrid::from_horizon(2.0, 1e-3);
    const Trajectory traj = propagate_convolution(table, Eigen::Vector2d(1.0, 0.0), grid);
    CHECK(traj.max_negative_excursion <= 0.0);
    CHECK(traj.max_negative_excursion == std::min(0.0, traj.populations.minCoeff()));
}
