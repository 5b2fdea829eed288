// propagators.hpp — time evolution of modular exciton densities p_n(t)
//
//   convolution:  dp_n/dt = sum_m int_0^t [K_{m->n}(t-s) p_m(s) - K_{n->m}(t-s) p_n(s)] ds
//   time-local:   dp_n/dt = sum_m [R_{m->n}(t) p_m(t) - R_{n->m}(t) p_n(t)],  R = int_0^t K
//   Pauli:        dp_n/dt = sum_m [K~_{m->n} p_m - K~_{n->m} p_n]
//
// Populations are never clamped here; writers clamp at output time.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmemed/kernels.hpp"
#include "gmemed/time_grid.hpp"

namespace gmemed {

struct Trajectory {
    std::vector<double> times;        // ps
    Eigen::MatrixXd populations;      // rows: times, cols: modules (MED)
    Eigen::MatrixXd site_populations; // rows: times, cols: sites (HEOM only, else empty)
    std::string method;
    std::string initial_condition;
    double max_negative_excursion{0.0}; // min(0, smallest population seen)
    bool converged{true};
    std::string notes;

    std::size_t size() const noexcept { return times.size(); }
};

Trajectory propagate_convolution(const KernelTable& table, const Eigen::VectorXd& p0,
                                 const UniformGrid& grid);

Trajectory propagate_time_local(const KernelTable& table, const Eigen::VectorXd& p0,
                                const UniformGrid& grid);

Trajectory propagate_pauli(const RateMatrix& rates, const Eigen::VectorXd& p0, const UniformGrid& grid);

/// R(n, m) = int_0^t K_{n->m}(s) ds from a cumulative trapezoid on the kernel
/// grid, linearly interpolated in t.
Eigen::MatrixXd instantaneous_rates(const KernelTable& table, double t);

/// exp(W t) for a rate generator W (non-negative off-diagonal, zero column
/// sums) by uniformization; the result is entrywise non-negative.
Eigen::MatrixXd rate_propagator(const Eigen::MatrixXd& generator, double t);

/// Population in module n with p0 = e_n.
Eigen::VectorXd localized_initial(std::size_t modules, std::size_t n);

} // namespace gmemed
