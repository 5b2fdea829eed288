// heom.hpp — hierarchical equations of motion for the full site Hamiltonian
// with identical, site-local Drude-Lorentz baths.
//
// Correlation function of each site bath (hbar = 1):
//   C(t) = sum_k c_k exp(-nu_k t),
//   c_0 = lambda omega_c (cot(beta omega_c / 2) - i),   nu_0 = omega_c,
//   c_k = (4 lambda omega_c / beta) nu_k / (nu_k^2 - omega_c^2),   nu_k = 2 pi k / beta.
// Modes k <= K are kept explicitly. The hierarchy is propagated in the scaled
// form (ADO rho_n divided by sqrt(prod n_k! |c_k|^{n_k})) with a classical RK4
// integrator.

#pragma once

#include <cstddef>
#include <cstdint>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "gmemed/model.hpp"
#include "gmemed/propagators.hpp"

namespace gmemed {

enum class Terminator {
    // Modes beyond K are dropped; the deepest tier is closed with the adiabatic
    // (Markovian) estimate of the first omitted tier.
    markovian_closure,
    // As above, plus the Ishizaki-Tanimura white-noise correction
    // -delta [V_j, [V_j, .]] for the Matsubara modes beyond K.
    ishizaki_tanimura,
};

std::string to_string(Terminator t);
Terminator terminator_from_string(const std::string& name);

struct HeomConfig {
    int depth{8};      // L
    int matsubara{0};  // K
    Terminator terminator{Terminator::ishizaki_tanimura};
    double time_step{1e-3};   // ps, RK4 step; subdivided when the deepest tier requires it
    double horizon{2.0};      // ps
    double output_step{1e-3}; // ps, integer multiple of time_step
    std::size_t memory_budget{std::size_t{2} << 30}; // bytes

    void validate() const;
};

/// C(L + M, M) auxiliary density operators for M = sites * (K + 1) modes.
std::size_t heom_ado_count(std::size_t sites, int depth, int matsubara);
std::size_t heom_memory_estimate(std::size_t sites, const HeomConfig& config);

struct BathMode {
    double rate{0.0};                  // nu_k, rad/ps
    std::complex<double> coefficient;  // c_k, (rad/ps)^2
};

struct DrudeDecomposition {
    std::vector<BathMode> modes; // k = 0 .. K
    double residual{0.0};        // sum_{k > K} c_k / nu_k, rad/ps
};

/// lambda, omega_c in rad/ps; beta in ps.
DrudeDecomposition drude_decomposition(double reorganization, double cutoff, double beta, int matsubara);

// Index set of the hierarchy: all multi-indices n over `modes` with |n| <= depth,
// stored tier by tier, with neighbour tables for n +/- e_k.
class AdoHierarchy {
public:
    AdoHierarchy(std::size_t modes, int depth);

    std::size_t size() const noexcept { return tiers_.size(); }
    std::size_t modes() const noexcept { return modes_; }
    int depth() const noexcept { return depth_; }

    std::span<const std::uint8_t> index(std::size_t ado) const {
        return {indices_.data() + ado * modes_, modes_};
    }
    int tier(std::size_t ado) const { return tiers_[ado]; }
    /// ADO with n + e_k, or -1 above the truncation depth.
    std::int64_t up(std::size_t ado, std::size_t mode) const { return up_[ado * modes_ + mode]; }
    /// ADO with n - e_k, or -1 when n_k = 0.
    std::int64_t down(std::size_t ado, std::size_t mode) const { return down_[ado * modes_ + mode]; }
    /// log of the scaling constant prod_k n_k! |c_k|^{n_k} / 2 for mode magnitudes |c|.
    double log_normalization(std::size_t ado, std::span<const double> magnitudes) const;

private:
    std::size_t modes_;
    int depth_;
    std::vector<std::uint8_t> indices_;
    std::vector<int> tiers_;
    std::vector<std::int64_t> up_;
    std::vector<std::int64_t> down_;
};

/// Site populations and module sums of the reduced density matrix, starting
/// from the site excitation `initial_site` with the bath in its ground-state
/// equilibrium. Invariant violations are reported in the trajectory metadata.
Trajectory heom_propagate(const SystemSpec& system, const HeomConfig& config, SiteRef initial_site);

struct ConvergenceOptions {
    double tolerance{1e-3}; // max |delta MED| over time between successive levels
    int max_depth{24};
    int max_matsubara{3};
};

struct HeomConvergence {
    HeomConfig config;
    double last_delta{0.0};
    Trajectory trajectory; // at `config`
    std::vector<std::string> log;
};

/// Raises L (then K) from `base` until successive levels agree on every MED
/// to the tolerance. Throws NumericalError when the depth, Matsubara or
/// memory limits are exhausted first.
HeomConvergence heom_converge(const SystemSpec& system, const HeomConfig& base, SiteRef initial_site,
                              ConvergenceOptions options = {});

/// max over time and modules of |a - b|; both on the same time grid.
double max_population_difference(const Trajectory& a, const Trajectory& b);

} // namespace gmemed
