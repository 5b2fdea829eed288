// kernels.hpp — MED transfer kernels K_{n->m}(t), Markovian rates and the
// frequency-domain (donor emission x acceptor absorption overlap) rate route.
//
// The kernel uses the exciton-diagonal cumulant approximation:
//
//   K_{n->m}(t) = 2 Re sum_{p in n, q in m} w_p |J~_pq|^2
//                 exp[-g_{lambda_p}(t) - g_{lambda_q}(t) + i (eps~_p - eps~_q) t]
//
// with g_{lambda_p} = (lambda_p / lambda) g_lambda. Kernel values are in ps^-2,
// rates in ps^-1.

#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gmemed/lineshape.hpp"
#include "gmemed/model.hpp"
#include "gmemed/time_grid.hpp"

namespace gmemed {

class KernelTable {
public:
    KernelTable(UniformGrid grid, std::size_t modules);

    const UniformGrid& grid() const noexcept { return grid_; }
    std::size_t module_count() const noexcept { return modules_; }

    /// K_{n->m} sampled on grid(); identically zero for n == m.
    const Eigen::VectorXd& operator()(std::size_t n, std::size_t m) const {
        return values_[n * modules_ + m];
    }
    Eigen::VectorXd& operator()(std::size_t n, std::size_t m) { return values_[n * modules_ + m]; }

private:
    UniformGrid grid_;
    std::size_t modules_;
    std::vector<Eigen::VectorXd> values_;
};

struct RateMatrix {
    Eigen::MatrixXd rates; // rates(n, m) = K~_{n->m}, ps^-1, zero diagonal

    std::size_t module_count() const noexcept { return static_cast<std::size_t>(rates.rows()); }
    /// W with dp/dt = W p: W(n, m) = K~_{m->n} (n != m), W(n, n) = -sum_m K~_{n->m}.
    Eigen::MatrixXd generator() const;
};

struct KernelOptions {
    bool allow_coarse_grid{false};
    double min_points_per_period{10.0};
};

KernelTable kernel_med1(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                        const UniformGrid& grid, KernelOptions options = {});

/// Trapezoid quadrature of every kernel over the table's grid. Throws
/// NumericalError when a kernel has not decayed to 1e-6 of its peak by the
/// grid end.
RateMatrix markovian_rates(const KernelTable& table);

struct OverlapOptions {
    double time_step{0.5e-3};         // ps, for the half-Fourier transforms
    double decay_threshold{1e-3};     // envelope level that defines the decay length
    double padding_factor{8.0};       // transform horizon = padding_factor * decay length
    double normalization_tolerance{0.01};
};

/// Frequency grid covering [min eps~ - span, max eps~ + span] (all in cm^-1),
/// returned in rad/ps.
FrequencyGrid default_frequency_grid(const ExcitonBasis& basis, double span_wavenumber = 3000.0,
                                     double step_wavenumber = 1.0);

struct ExcitonSpectra {
    FrequencyGrid frequencies;
    std::vector<Eigen::VectorXd> absorption; // I_p(w), one per exciton, module-major order
    std::vector<Eigen::VectorXd> emission;   // E_p(w)
};

/// Per-exciton absorption I_q(w) = 2 Re int_0^inf dt e^{iwt} exp(-i eps~_q t - g_q(t))
/// and emission E_p(w) = 2 Re int_0^inf dt e^{-iwt} exp(i eps~_p t - g_p(t)).
/// Both integrate to 2 pi over w.
ExcitonSpectra exciton_spectra(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                               const FrequencyGrid& frequencies, OverlapOptions options = {});

/// K~_{n->m} = (1/2pi) sum_{p,q} w_p |J~_pq|^2 int dw E_p(w) I_q(w). Throws
/// NumericalError when a lineshape area misses 2 pi by more than the tolerance.
RateMatrix mcfret_rates_frequency(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                                  const FrequencyGrid& frequencies, OverlapOptions options = {});

struct DetailedBalanceEntry {
    std::size_t from{0};
    std::size_t to{0};
    double ratio{0.0};    // K~_{n->m} / K~_{m->n}
    double expected{0.0}; // exp(-beta (F~_m - F~_n))
    bool flagged{false};  // off by more than 20 %
};

std::vector<DetailedBalanceEntry> detailed_balance_report(const RateMatrix& rates,
                                                          const ExcitonBasis& basis);

/// Latest time at which any |K_{n->m}| is still above fraction * its peak.
double kernel_decay_time(const KernelTable& table, double fraction = 1e-4);

} // namespace gmemed
