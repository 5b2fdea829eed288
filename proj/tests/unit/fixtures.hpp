// fixtures.hpp — shared test systems.
#pragma once

#include <random>

#include "gmemed/model.hpp"

namespace fixture {

// BChl 1-4 of FMO as two modules (cm^-1).
inline gmemed::SystemSpec fmo4(double temperature = 300.0) {
    using namespace gmemed;
    SystemSpec s;
    ModuleSpec a;
    a.label = "1";
    a.site_energies = Eigen::Vector2d(12400.0, 12520.0);
    a.intra_couplings = Eigen::Matrix2d{{0.0, -87.0}, {-87.0, 0.0}};
    ModuleSpec b;
    b.label = "2";
    b.site_energies = Eigen::Vector2d(12200.0, 12310.0);
    b.intra_couplings = Eigen::Matrix2d{{0.0, -53.0}, {-53.0, 0.0}};
    s.modules = {a, b};
    s.inter_couplings = {{{0, 0}, {1, 0}, 5.0}, {{0, 0}, {1, 1}, -5.0}, {{0, 1}, {1, 0}, 30.0}, {{0, 1}, {1, 1}, 8.0}};
    s.bath = {35.0, 106.0, temperature};
    return s;
}

inline gmemed::ModuleSpec single_site(const std::string& label, double energy) {
    gmemed::ModuleSpec m;
    m.label = label;
    m.site_energies = Eigen::VectorXd::Constant(1, energy);
    m.intra_couplings = Eigen::MatrixXd::Zero(1, 1);
    return m;
}

// Donor/acceptor pair as two single-site modules.
inline gmemed::SystemSpec dimer(double donor, double acceptor, double coupling, double temperature = 300.0) {
    gmemed::SystemSpec s;
    s.modules = {single_site("D", donor), single_site("A", acceptor)};
    s.inter_couplings = {{{0, 0}, {1, 0}, coupling}};
    s.bath = {35.0, 106.0, temperature};
    return s;
}

// Random system: `modules` modules of 1..max_sites sites, energies around
// 12300 cm^-1, intra couplings up to 100 cm^-1, inter couplings up to 30 cm^-1.
inline gmemed::SystemSpec random_system(std::mt19937& rng, std::size_t modules, std::size_t max_sites) {
    using namespace gmemed;
    std::uniform_int_distribution<std::size_t> sites(1, max_sites);
    std::uniform_real_distribution<double> energy(12000.0, 12600.0);
    std::uniform_real_distribution<double> intra(-100.0, 100.0);
    std::uniform_real_distribution<double> inter(-30.0, 30.0);
    SystemSpec s;
    for (std::size_t n = 0; n < modules; ++n) {
        ModuleSpec m;
        m.label = std::to_string(n);
        const auto ns = static_cast<Eigen::Index>(sites(rng));
        m.site_energies.resize(ns);
        m.intra_couplings = Eigen::MatrixXd::Zero(ns, ns);
        for (Eigen::Index i = 0; i < ns; ++i) {
            m.site_energies(i) = energy(rng);
            for (Eigen::Index j = i + 1; j < ns; ++j) m.intra_couplings(i, j) = m.intra_couplings(j, i) = intra(rng);
        }
        s.modules.push_back(m);
    }
    for (std::size_t n = 0; n < modules; ++n) {
        for (std::size_t m = n + 1; m < modules; ++m) {
            for (std::size_t j = 0; j < s.modules[n].size(); ++j) {
                for (std::size_t k = 0; k < s.modules[m].size(); ++k) {
                    s.inter_couplings.push_back({{n, j}, {m, k}, inter(rng)});
                }
            }
        }
    }
    s.bath = {35.0, 106.0, 300.0};
    return s;
}

} // namespace fixture
