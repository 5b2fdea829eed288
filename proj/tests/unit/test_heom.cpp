#include <doctest.h>

#include <boost/math/special_functions/binomial.hpp>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "gmemed/errors.hpp"
#include "gmemed/heom.hpp"
#include "gmemed/units.hpp"
#include "oracles/oracles.hpp"

using namespace gmemed;

namespace {

HeomConfig short_run(int depth, int matsubara, double horizon = 0.5) {
    HeomConfig c;
    c.depth = depth;
    c.matsubara = matsubara;
    c.horizon = horizon;
    return c;
}

// The four FMO sites as a single module.
SystemSpec fmo4_merged(double temperature) {
    const SystemSpec split = fixture::fmo4(temperature);
    SystemSpec s;
    ModuleSpec m;
    m.label = "all";
    m.site_energies = Eigen::Vector4d(12400.0, 12520.0, 12200.0, 12310.0);
    m.intra_couplings = split.site_hamiltonian();
    m.intra_couplings.diagonal().setZero();
    s.modules = {m};
    s.bath = split.bath;
    return s;
}

} // namespace

TEST_CASE("heom: hierarchy size and neighbour tables") {
    for (std::size_t modes : {1u, 2u, 4u, 6u}) {
        for (int depth : {1, 3, 5}) {
            const AdoHierarchy h(modes, depth);
            const double expected =
                boost::math::binomial_coefficient<double>(static_cast<unsigned>(modes) + depth, depth);
            CHECK(static_cast<double>(h.size()) == expected);
            CHECK(h.tier(0) == 0);
            for (std::size_t a = 0; a < h.size(); ++a) {
                int sum = 0;
                for (std::uint8_t n : h.index(a)) sum += n;
                CHECK(sum == h.tier(a));
                for (std::size_t k = 0; k < modes; ++k) {
                    const std::int64_t up = h.up(a, k);
                    if (h.tier(a) == depth) {
                        CHECK(up == -1);
                    } else {
                        REQUIRE(up >= 0);
                        CHECK(h.down(static_cast<std::size_t>(up), k) == static_cast<std::int64_t>(a));
                        CHECK(h.index(static_cast<std::size_t>(up))[k] == h.index(a)[k] + 1);
                    }
                    CHECK((h.down(a, k) == -1) == (h.index(a)[k] == 0));
                }
            }
        }
    }
    CHECK(heom_ado_count(4, 4, 1) == 495);
    CHECK(heom_ado_count(4, 8, 1) == 12870);
    CHECK(heom_memory_estimate(4, short_run(4, 1)) == 495u * 16u * 16u * 4u);
}

TEST_CASE("heom: Drude-Lorentz decomposition") {
    const double lambda = units::to_angular(35.0);
    const double wc = units::to_angular(106.0);
    for (double temperature : {77.0, 150.0, 300.0}) {
        const double beta = units::beta_ps(temperature);
        const DrudeDecomposition d = drude_decomposition(lambda, wc, beta, 3);
        REQUIRE(d.modes.size() == 4);
        CHECK(d.modes[0].rate == wc);
        CHECK(d.modes[0].coefficient.imag() == doctest::Approx(-lambda * wc));
        CHECK(d.modes[0].coefficient.real() == doctest::Approx(lambda * wc / std::tan(0.5 * beta * wc)));

        // Direct summation of the omitted Matsubara terms with an integral tail.
        const int terms = 2'000'000;
        double tail = 0.0;
        for (int k = terms; k >= 4; --k) {
            const double nu = 2.0 * std::numbers::pi * k / beta;
            tail += 4.0 * lambda * wc / beta / (nu * nu - wc * wc);
        }
        tail += 4.0 * lambda * wc / beta * beta * beta / (4.0 * std::numbers::pi * std::numbers::pi * (terms + 0.5));
        CHECK(d.residual == doctest::Approx(tail).epsilon(1e-7));

        for (int k = 1; k <= 3; ++k) {
            CHECK(d.modes[static_cast<std::size_t>(k)].rate == doctest::Approx(2.0 * std::numbers::pi * k / beta));
            CHECK(d.modes[static_cast<std::size_t>(k)].coefficient.imag() == 0.0);
        }
        // the residual shrinks with K
        CHECK(drude_decomposition(lambda, wc, beta, 0).residual > d.residual);
    }
    CHECK_THROWS_AS(drude_decomposition(lambda, wc, 2.0 * std::numbers::pi / wc, 0), ValidationError);
}

TEST_CASE("heom: configuration validation and terminator names") {
    for (Terminator t : {Terminator::markovian_closure, Terminator::ishizaki_tanimura}) {
        CHECK(terminator_from_string(to_string(t)) == t);
    }
    CHECK_THROWS_AS(terminator_from_string("closure"), ValidationError);
    HeomConfig c;
    c.depth = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.depth = 4;
    c.output_step = 1.5e-3;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.output_step = 2e-3;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("heom: inter-module populations stay fixed without inter-module coupling") {
    SystemSpec s = fixture::fmo4(300.0);
    s.inter_couplings.clear();
    const Trajectory traj = heom_propagate(s, short_run(3, 0), {0, 0});
    CHECK(traj.converged);
    CHECK((traj.populations.col(0).array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(traj.populations.col(1).cwiseAbs().maxCoeff() < 1e-12);
    // the sites inside the module still exchange population
    CHECK(traj.site_populations.col(1).maxCoeff() > 0.1);

    HeomConfig base = short_run(1, 0);
    const HeomConvergence conv = heom_converge(s, base, {0, 0});
    CHECK(conv.config.depth == 1);
    CHECK(conv.config.matsubara == 0);
    CHECK(conv.last_delta < 1e-3);
}

TEST_CASE("heom: vanishing system-bath coupling reproduces coherent evolution") {
    SystemSpec s = fixture::fmo4(300.0);
    s.bath.reorganization = 1e-6;
    const Trajectory traj = heom_propagate(s, short_run(2, 0), {0, 1});
    Eigen::MatrixXd h = s.site_hamiltonian() * units::angular_per_wavenumber;
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const Eigen::VectorXd exact = oracle::schrodinger_populations(h, 1, traj.times[i]);
        worst = std::max(worst, (traj.site_populations.row(static_cast<Eigen::Index>(i)).transpose() - exact)
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("heom: invariants are tracked in the trajectory") {
    const Trajectory traj = heom_propagate(fixture::fmo4(300.0), short_run(3, 0), {0, 0});
    CHECK(traj.converged);
    CHECK(traj.notes.find("max|Tr rho - 1|") != std::string::npos);
    CHECK(traj.notes.find("hermiticity") != std::string::npos);
    CHECK((traj.site_populations.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK((traj.populations.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    CHECK(traj.populations(0, 0) == 1.0);
    CHECK(traj.site_populations(0, 0) == 1.0);
}

TEST_CASE("heom: module sums do not depend on how sites are grouped") {
    const Trajectory split = heom_propagate(fixture::fmo4(300.0), short_run(3, 0), {0, 1});
    const Trajectory merged = heom_propagate(fmo4_merged(300.0), short_run(3, 0), {0, 1});
    CHECK((split.site_populations - merged.site_populations).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd first = merged.site_populations.col(0) + merged.site_populations.col(1);
    CHECK((split.populations.col(0) - first).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("heom: resource limits") {
    HeomConfig c = short_run(6, 2);
    c.memory_budget = 1 << 20;
    CHECK_THROWS_AS(heom_propagate(fixture::fmo4(300.0), c, {0, 0}), ValidationError);

    ConvergenceOptions strict;
    strict.tolerance = 1e-12;
    strict.max_depth = 3;
    strict.max_matsubara = 0;
    CHECK_THROWS_WITH_AS(heom_converge(fixture::fmo4(300.0), short_run(2, 0, 0.2), {0, 0}, strict),
                         doctest::Contains("last delta"), NumericalError);

    HeomConfig tight = short_run(2, 0, 0.2);
    tight.memory_budget = heom_memory_estimate(4, tight);
    ConvergenceOptions loose;
    loose.tolerance = 1e-12;
    CHECK_THROWS_WITH_AS(heom_converge(fixture::fmo4(300.0), tight, {0, 0}, loose),
                         doctest::Contains("memory budget"), NumericalError);
}

TEST_CASE("heom: FMO dimer shows damped coherent oscillation") {
    const Trajectory traj = heom_propagate(fixture::fmo4(300.0), short_run(4, 0, 0.6), {0, 0});
    const Eigen::VectorXd p = traj.site_populations.col(0);
    Eigen::Index first_min = -1;
    for (Eigen::Index i = 1; i + 1 < p.size(); ++i) {
        if (p(i) < p(i - 1) && p(i) <= p(i + 1)) {
            first_min = i;
            break;
        }
    }
    REQUIRE(first_min > 0);
    CHECK(p(first_min) < 0.8);
    CHECK(p.tail(p.size() - first_min).maxCoeff() > p(first_min));
    CHECK(p.tail(p.size() - first_min).maxCoeff() < 1.0 - 1e-2);
}

TEST_CASE("heom: the Ishizaki-Tanimura correction accounts for omitted Matsubara modes") {
    const SystemSpec s = fixture::fmo4(150.0);
    HeomConfig reference = short_run(3, 3);
    reference.terminator = Terminator::markovian_closure;
    HeomConfig bare = short_run(3, 0);
    bare.terminator = Terminator::markovian_closure;
    const HeomConfig corrected = short_run(3, 0);
    const Trajectory ref = heom_propagate(s, reference, {0, 0});
    const double bare_error = max_population_difference(heom_propagate(s, bare, {0, 0}), ref);
    const double corrected_error = max_population_difference(heom_propagate(s, corrected, {0, 0}), ref);
    CHECK(corrected_error < bare_error);
}
