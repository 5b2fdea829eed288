#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../oracles/oracles.hpp"
#include "fixtures.hpp"
#include "gmemed/errors.hpp"
#include "gmemed/model.hpp"
#include "gmemed/units.hpp"

using namespace gmemed;

TEST_CASE("diagonalize_module: FMO module 1 against the closed-form 2x2 eigenpairs") {
    const ModuleSpec module = fixture::fmo4().modules[0];
    const Eigendecomposition eig = diagonalize_module(module);
    const double r = std::sqrt(60.0 * 60.0 + 87.0 * 87.0);
    CHECK(eig.eigenvalues(0) == doctest::Approx(12460.0 - r).epsilon(1e-14));
    CHECK(eig.eigenvalues(1) == doctest::Approx(12460.0 + r).epsilon(1e-14));
    CHECK(eig.eigenvalues(0) == doctest::Approx(12354.3).epsilon(1e-5));
    CHECK(eig.eigenvalues(1) == doctest::Approx(12565.7).epsilon(1e-5));

    const oracle::TwoLevel ref = oracle::two_level(12400.0, 12520.0, -87.0);
    for (Eigen::Index p = 0; p < 2; ++p) {
        // same eigenvector up to sign; the library fixes the sign
        CHECK(std::abs(std::abs(eig.transform.col(p).dot(ref.vectors.col(p))) - 1.0) < 1e-12);
        Eigen::Index largest = 0;
        eig.transform.col(p).cwiseAbs().maxCoeff(&largest);
        CHECK(eig.transform(largest, p) > 0.0);
    }
    const Eigen::MatrixXd h = module.hamiltonian();
    CHECK((h * eig.transform - eig.transform * eig.eigenvalues.asDiagonal()).norm() < 1e-9);
}

TEST_CASE("diagonalize_module: uncoupled and degenerate modules") {
    ModuleSpec m;
    m.site_energies = Eigen::Vector3d(12500.0, 12100.0, 12300.0);
    m.intra_couplings = Eigen::Matrix3d::Zero();
    Eigendecomposition eig = diagonalize_module(m);
    CHECK(eig.eigenvalues(0) == 12100.0);
    CHECK(eig.eigenvalues(1) == 12300.0);
    CHECK(eig.eigenvalues(2) == 12500.0);
    CHECK(eig.transform.cwiseAbs().colwise().sum().isApprox(Eigen::RowVector3d::Ones()));
    CHECK(eig.transform.minCoeff() >= 0.0);

    ModuleSpec d;
    d.site_energies = Eigen::Vector2d(12400.0, 12400.0);
    d.intra_couplings = Eigen::Matrix2d{{0.0, 40.0}, {40.0, 0.0}};
    eig = diagonalize_module(d);
    CHECK(eig.eigenvalues(0) == doctest::Approx(12360.0).epsilon(1e-14));
    CHECK(eig.eigenvalues(1) == doctest::Approx(12440.0).epsilon(1e-14));
    CHECK((eig.transform.cwiseAbs().array() - 1.0 / std::sqrt(2.0)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("diagonalize_module: invalid modules are rejected") {
    ModuleSpec m;
    m.site_energies = Eigen::Vector2d(1.0, 2.0);
    m.intra_couplings = Eigen::Matrix2d{{0.0, 1.0}, {2.0, 0.0}};
    CHECK_THROWS_AS(diagonalize_module(m), ValidationError);
    m.intra_couplings = Eigen::Matrix2d{{1.0, 1.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(diagonalize_module(m), ValidationError);
    m.intra_couplings = Eigen::Matrix3d::Zero();
    CHECK_THROWS_AS(diagonalize_module(m), ValidationError);
}

TEST_CASE("diagonalize_module: uniform energy shift moves eigenvalues by exactly the shift") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        ModuleSpec m = fixture::random_system(rng, 1, 3).modules[0];
        const Eigendecomposition a = diagonalize_module(m);
        m.site_energies.array() += 137.25;
        const Eigendecomposition b = diagonalize_module(m);
        CHECK(((b.eigenvalues.array() - 137.25) - a.eigenvalues.array()).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("SystemSpec validation gives a distinct diagnostic per violation") {
    SystemSpec s = fixture::fmo4();
    CHECK_NOTHROW(s.validate());

    SystemSpec empty = s;
    empty.modules.clear();
    empty.inter_couplings.clear();
    CHECK_THROWS_WITH_AS(empty.validate(), doctest::Contains("module"), ValidationError);

    SystemSpec same = s;
    same.inter_couplings.push_back({{0, 0}, {0, 1}, 3.0});
    CHECK_THROWS_WITH_AS(same.validate(), doctest::Contains("n = m"), ValidationError);

    SystemSpec missing = s;
    missing.inter_couplings.push_back({{0, 0}, {2, 0}, 3.0});
    CHECK_THROWS_AS(missing.validate(), ValidationError);
    SystemSpec missing_site = s;
    missing_site.inter_couplings.push_back({{0, 0}, {1, 5}, 3.0});
    CHECK_THROWS_AS(missing_site.validate(), ValidationError);

    SystemSpec asym = s;
    asym.inter_couplings.push_back({{1, 0}, {0, 0}, 6.0}); // reverse of the 5 cm^-1 entry
    CHECK_THROWS_AS(asym.validate(), ValidationError);

    SystemSpec bath = s;
    bath.bath.temperature = 0.0;
    CHECK_THROWS_AS(bath.validate(), ValidationError);
}

TEST_CASE("SystemSpec: coupling blocks, global indices and the site Hamiltonian") {
    const SystemSpec s = fixture::fmo4();
    CHECK(s.site_count() == 4);
    CHECK(s.global_index({1, 1}) == 3);
    const Eigen::MatrixXd j = s.coupling_block(0, 1);
    CHECK(j(0, 0) == 5.0);
    CHECK(j(0, 1) == -5.0);
    CHECK(j(1, 0) == 30.0);
    CHECK(j(1, 1) == 8.0);
    CHECK(s.coupling_block(1, 0).isApprox(j.transpose()));
    const Eigen::MatrixXd h = s.site_hamiltonian();
    CHECK((h - h.transpose()).norm() == 0.0);
    CHECK(h(1, 2) == 30.0);
    CHECK(h(0, 1) == -87.0);
    CHECK(h(3, 3) == 12310.0);
}

TEST_CASE("build_exciton_basis: structural invariants on random systems") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const SystemSpec s = fixture::random_system(rng, 2 + trial % 3, 3);
        const ExcitonBasis basis = build_exciton_basis(s);
        const double lambda = s.bath.reorganization;
        for (const ModuleExcitons& m : basis.modules) {
            const auto n = m.transform.rows();
            CHECK((m.transform.transpose() * m.transform - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
            CHECK(std::abs(m.boltzmann_weights.sum() - 1.0) < 1e-12);
            CHECK(m.reorganization.maxCoeff() <= lambda * (1.0 + 1e-14));
            CHECK(m.reorganization.minCoeff() > 0.0);
            CHECK(m.reorganization.sum() <= static_cast<double>(n) * lambda * (1.0 + 1e-14));
            CHECK((m.shifted_energies - (m.energies - m.reorganization)).norm() == 0.0);
        }
        for (std::size_t a = 0; a < basis.module_count(); ++a) {
            for (std::size_t b = 0; b < basis.module_count(); ++b) {
                if (a == b) continue;
                const Eigen::MatrixXd back =
                    basis.modules[a].transform * basis.coupling(a, b) * basis.modules[b].transform.transpose();
                CHECK((back - s.coupling_block(a, b)).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
}

TEST_CASE("build_exciton_basis: single-site and degenerate modules") {
    SystemSpec s = fixture::dimer(12400.0, 12300.0, 10.0);
    ExcitonBasis basis = build_exciton_basis(s);
    CHECK(basis.modules[0].reorganization(0) == 35.0);
    CHECK(basis.modules[0].shifted_energies(0) == 12400.0 - 35.0);
    CHECK(basis.modules[0].boltzmann_weights(0) == 1.0);
    CHECK(basis.coupling(0, 1)(0, 0) == 10.0);

    ModuleSpec d;
    d.label = "deg";
    d.site_energies = Eigen::Vector2d(12400.0, 12400.0);
    d.intra_couplings = Eigen::Matrix2d{{0.0, -50.0}, {-50.0, 0.0}};
    s.modules[0] = d;
    s.inter_couplings = {{{0, 1}, {1, 0}, 10.0}};
    basis = build_exciton_basis(s);
    CHECK(basis.modules[0].reorganization(0) == doctest::Approx(17.5).epsilon(1e-14));
    CHECK(basis.modules[0].reorganization(1) == doctest::Approx(17.5).epsilon(1e-14));
}

TEST_CASE("build_exciton_basis: FMO module 1 Boltzmann weights at 300 K") {
    const ExcitonBasis basis = build_exciton_basis(fixture::fmo4(300.0));
    const ModuleExcitons& m = basis.modules[0];
    CHECK(m.shifted_energies(0) < m.shifted_energies(1));
    CHECK(m.boltzmann_weights(0) > m.boltzmann_weights(1));
    // direct evaluation with k_B * 300 K
    const double kt = units::thermal_energy_wavenumber(300.0);
    CHECK(kt == doctest::Approx(208.5).epsilon(1e-3));
    const double ratio = std::exp(-(m.shifted_energies(1) - m.shifted_energies(0)) / kt);
    CHECK(m.boltzmann_weights(1) / m.boltzmann_weights(0) == doctest::Approx(ratio).epsilon(1e-12));
    // lambda_p = lambda * sum_j U_jp^4
    const oracle::TwoLevel ref = oracle::two_level(12400.0, 12520.0, -87.0);
    for (Eigen::Index p = 0; p < 2; ++p) {
        const double expected = 35.0 * ref.vectors.col(p).array().pow(4).sum();
        CHECK(m.reorganization(p) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("build_exciton_basis: Boltzmann weights survive very low temperature") {
    SystemSpec s = fixture::fmo4(0.5);
    const ExcitonBasis basis = build_exciton_basis(s);
    CHECK(basis.modules[0].boltzmann_weights(0) == doctest::Approx(1.0));
    CHECK(std::isfinite(basis.modules[0].boltzmann_weights(1)));
}

TEST_CASE("normalize: canonical ordering of inter-couplings") {
    SystemSpec s = fixture::fmo4();
    SystemSpec reversed = s;
    for (auto& c : reversed.inter_couplings) std::swap(c.from, c.to);
    std::reverse(reversed.inter_couplings.begin(), reversed.inter_couplings.end());
    CHECK(normalize(reversed) == normalize(s));
}

TEST_CASE("units: conversions") {
    CHECK(units::to_angular(1.0) == doctest::Approx(0.188365157).epsilon(1e-9));
    CHECK(units::to_wavenumber(units::to_angular(123.0)) == doctest::Approx(123.0).epsilon(1e-15));
    CHECK(units::thermal_energy_wavenumber(1.0) == doctest::Approx(0.695035).epsilon(1e-6));
    CHECK(units::fs_to_ps(1.0) == 1e-3);
}
