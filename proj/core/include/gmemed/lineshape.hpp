// lineshape.hpp — Drude-Lorentz (overdamped Brownian) lineshape function g(t)
//
//   g(t) = 2 lambda t / (beta omega_c)
//        + (lambda/omega_c) cot(beta omega_c / 2) (exp(-omega_c t) - 1)
//        + (4 lambda omega_c / beta) sum_l (exp(-nu_l t) - 1) / (nu_l (nu_l^2 - omega_c^2))
//        + i (lambda/omega_c) (1 - exp(-omega_c t)),      nu_l = 2 pi l / beta
//
// This is the cumulant lineshape of J(w) = 2 lambda w omega_c / (w^2 + omega_c^2)
// with the linear reorganization phase -i lambda t removed; that phase is
// carried by the shifted energies eps~ = eps - lambda instead.
//
// Units are internal: lambda and omega_c in rad/ps, beta and t in ps.

#pragma once

#include <complex>
#include <span>
#include <vector>

#include "gmemed/model.hpp"
#include "gmemed/time_grid.hpp"

namespace gmemed {

struct LineshapeOptions {
    int matsubara_terms{64};     // L_max
    double tail_tolerance{1e-10}; // bound on the neglected Matsubara remainder
};

class DrudeLineshape {
public:
    DrudeLineshape(double reorganization, double cutoff, double beta, LineshapeOptions options = {});

    static DrudeLineshape from_bath(const BathSpec& bath, LineshapeOptions options = {});

    /// g(t) for t >= 0; throws std::domain_error for negative t.
    std::complex<double> operator()(double t) const;

    /// Pointwise identical to operator() on every sample.
    std::vector<std::complex<double>> evaluate(std::span<const double> times) const;
    std::vector<std::complex<double>> evaluate(const UniformGrid& grid) const;

    /// Number of explicit Matsubara terms summed at time t.
    int matsubara_terms_used(double t) const;

    double reorganization() const noexcept { return lambda_; }
    double cutoff() const noexcept { return cutoff_; }
    double beta() const noexcept { return beta_; }
    const LineshapeOptions& options() const noexcept { return options_; }

    /// d Re g / dt as t -> infinity.
    double long_time_slope() const noexcept { return 2.0 * lambda_ / (beta_ * cutoff_); }
    /// Im g(t -> infinity).
    double imaginary_limit() const noexcept { return lambda_ / cutoff_; }

private:
    double matsubara_part(double t, int* terms_used) const;

    double lambda_;
    double cutoff_;
    double beta_;
    LineshapeOptions options_;

    double cot_half_;    // cot(beta omega_c / 2)
    double prefactor_;   // 4 lambda omega_c / beta
    double tail_start_;  // nu at l = L_max + 1/2
    std::vector<double> nu_;      // nu_l, l = 1..L_max
    std::vector<double> weight_;  // 1 / (nu_l (nu_l^2 - omega_c^2))
    std::vector<double> suffix_;  // suffix_[L] = sum_{l > L} weight_l, including the continuation
};

} // namespace gmemed
