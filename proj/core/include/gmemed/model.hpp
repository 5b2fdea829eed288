// model.hpp — modular Frenkel exciton system and its per-module exciton basis
//
// A system is a list of modules (strongly coupled chromophore groups), the
// inter-module site couplings J_{j_n k_m}, and one Drude bath shared by every
// site (identical, site-local). All energies here are in cm^-1.

#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gmemed {

struct BathSpec {
    double reorganization{0.0}; // lambda, cm^-1
    double cutoff{0.0};         // hbar*omega_c, cm^-1
    double temperature{0.0};    // K

    void validate() const;
    bool operator==(const BathSpec&) const = default;
};

struct ModuleSpec {
    std::string label;
    Eigen::VectorXd site_energies;   // cm^-1
    Eigen::MatrixXd intra_couplings; // cm^-1, symmetric, zero diagonal

    std::size_t size() const noexcept { return static_cast<std::size_t>(site_energies.size()); }
    Eigen::MatrixXd hamiltonian() const;
    void validate() const;
};

bool operator==(const ModuleSpec& a, const ModuleSpec& b);

/// (module, site), both 0-based.
struct SiteRef {
    std::size_t module{0};
    std::size_t site{0};
    auto operator<=>(const SiteRef&) const = default;
};

struct InterCoupling {
    SiteRef from;
    SiteRef to;
    double value{0.0}; // cm^-1
    bool operator==(const InterCoupling&) const = default;
};

struct SystemSpec {
    std::vector<ModuleSpec> modules;
    std::vector<InterCoupling> inter_couplings; // each unordered pair at most once
    BathSpec bath;

    /// Throws ValidationError describing the first broken invariant.
    void validate() const;

    std::size_t module_count() const noexcept { return modules.size(); }
    std::size_t site_count() const noexcept;
    std::size_t global_index(SiteRef site) const;
    std::size_t module_offset(std::size_t module) const;

    /// J_{j_n k_m} as a (sites of n) x (sites of m) block; zero for n == m.
    Eigen::MatrixXd coupling_block(std::size_t n, std::size_t m) const;
    /// Full single-exciton site Hamiltonian H_0^e + H_c (cm^-1).
    Eigen::MatrixXd site_hamiltonian() const;
};

bool operator==(const SystemSpec& a, const SystemSpec& b);

/// Validates and brings couplings into canonical form: from < to, sorted,
/// mirrored duplicates (equal value, reversed order) merged.
SystemSpec normalize(SystemSpec system);

struct Eigendecomposition {
    Eigen::VectorXd eigenvalues; // ascending
    Eigen::MatrixXd transform;   // columns are eigenvectors, largest component positive
};

Eigendecomposition diagonalize_module(const ModuleSpec& module);

struct ModuleExcitons {
    Eigen::VectorXd energies;          // epsilon_p
    Eigen::MatrixXd transform;         // U_{j p}
    Eigen::VectorXd reorganization;    // lambda_p = lambda * sum_j |U_jp|^4
    Eigen::VectorXd shifted_energies;  // epsilon_p - lambda_p
    Eigen::VectorXd boltzmann_weights; // exp(-beta eps~_p) / Z_n
};

struct ExcitonBasis {
    std::vector<ModuleExcitons> modules;
    std::vector<Eigen::MatrixXd> effective_couplings; // row-major over (n, m): U_n^T J_nm U_m
    BathSpec bath;

    std::size_t module_count() const noexcept { return modules.size(); }
    const Eigen::MatrixXd& coupling(std::size_t n, std::size_t m) const {
        return effective_couplings[n * modules.size() + m];
    }
    /// -k_B T ln sum_p exp(-beta eps~_p), cm^-1.
    double free_energy(std::size_t n) const;
};

ExcitonBasis build_exciton_basis(const SystemSpec& system);

} // namespace gmemed
