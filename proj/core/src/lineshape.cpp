#include "gmemed/lineshape.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gmemed/errors.hpp"
#include "gmemed/units.hpp"

namespace gmemed {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Generalized exponential integral E_n(z) = int_1^inf exp(-z s) s^-n ds, n >= 2.
double expint_n(int n, double z) {
    if (z == 0.0) return 1.0 / (n - 1);
    if (z > 700.0) return 0.0;
    const double ez = std::exp(-z);
    double e = -std::expint(-z); // E_1
    for (int k = 1; k < n; ++k) e = (ez - z * e) / k;
    return e;
}

// Integral continuation of sum_{l > L_max} weight(nu_l) (exp(-nu_l t) - 1), using
// 1/(x (x^2 - c^2)) = sum_n c^{2n} / x^{2n+3} for x > c and
// int_a^inf exp(-x t) x^-m dx = a^{1-m} E_m(a t).
double continuation(double a, double cutoff, double beta, double t) {
    const double ratio = (cutoff / a) * (cutoff / a);
    double scale = 1.0 / (a * a);
    double sum = 0.0;
    for (int n = 0; n < 64; ++n) {
        const int m = 2 * n + 3;
        const double term = scale * (t == 0.0 ? -1.0 / (m - 1) : expint_n(m, a * t) - 1.0 / (m - 1));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
        scale *= ratio;
    }
    return beta / two_pi * sum;
}

} // namespace

DrudeLineshape::DrudeLineshape(double reorganization, double cutoff, double beta,
                               LineshapeOptions options)
    : lambda_(reorganization), cutoff_(cutoff), beta_(beta), options_(options) {
    if (!(lambda_ > 0.0) || !(cutoff_ > 0.0) || !(beta_ > 0.0) || !std::isfinite(lambda_) ||
        !std::isfinite(cutoff_) || !std::isfinite(beta_)) {
        throw ValidationError("lineshape: lambda, omega_c and beta must be positive and finite");
    }
    if (options_.matsubara_terms < 1 || !(options_.tail_tolerance > 0.0)) {
        throw ValidationError("lineshape: matsubara_terms must be >= 1 and tail_tolerance > 0");
    }
    const double x = beta_ * cutoff_;
    const double k = std::round(x / two_pi);
    if (k >= 1.0 && std::abs(x - two_pi * k) < 1e-9) {
        throw ValidationError("lineshape: beta*omega_c = " + std::to_string(x) +
                              " coincides with a Matsubara frequency (cot pole); shift the temperature "
                              "or cutoff by more than the Matsubara reformulation tolerance 1e-9");
    }
    cot_half_ = 1.0 / std::tan(0.5 * x);
    prefactor_ = 4.0 * lambda_ * cutoff_ / beta_;

    const int terms = options_.matsubara_terms;
    tail_start_ = two_pi * (terms + 0.5) / beta_;
    if (tail_start_ < 1.2 * cutoff_) {
        throw ValidationError("lineshape: matsubara_terms too small for the tail continuation at this "
                              "temperature (need 2 pi (L_max + 1/2) / beta > 1.2 omega_c)");
    }
    nu_.resize(static_cast<std::size_t>(terms));
    weight_.resize(nu_.size());
    for (int l = 1; l <= terms; ++l) {
        const double nu = two_pi * l / beta_;
        nu_[static_cast<std::size_t>(l - 1)] = nu;
        weight_[static_cast<std::size_t>(l - 1)] = 1.0 / (nu * (nu * nu - cutoff_ * cutoff_));
    }
    suffix_.assign(nu_.size() + 1, 0.0);
    suffix_[nu_.size()] = -continuation(tail_start_, cutoff_, beta_, 0.0);
    for (std::size_t l = nu_.size(); l-- > 0;) suffix_[l] = suffix_[l + 1] + weight_[l];
}

DrudeLineshape DrudeLineshape::from_bath(const BathSpec& bath, LineshapeOptions options) {
    bath.validate();
    return DrudeLineshape(units::to_angular(bath.reorganization), units::to_angular(bath.cutoff),
                          units::beta_ps(bath.temperature), options);
}

double DrudeLineshape::matsubara_part(double t, int* terms_used) const {
    const std::size_t lmax = nu_.size();
    const double ratio = std::exp(-nu_[0] * t);
    double sum = 0.0;
    std::size_t l = 0;
    for (; l < lmax; ++l) {
        sum += weight_[l] * std::expm1(-nu_[l] * t);
        // Geometric bound on sum_{l' > l} weight_l' exp(-nu_l' t); weights decrease
        // once nu exceeds omega_c.
        if (l + 1 < lmax && nu_[l + 1] > cutoff_ && ratio < 1.0) {
            const double bound = weight_[l + 1] * std::exp(-nu_[l + 1] * t) / (1.0 - ratio);
            if (prefactor_ * bound < options_.tail_tolerance) {
                ++l;
                break;
            }
        }
    }
    if (terms_used) *terms_used = static_cast<int>(l);
    if (l == lmax) return sum + continuation(tail_start_, cutoff_, beta_, t);
    return sum - suffix_[l];
}

std::complex<double> DrudeLineshape::operator()(double t) const {
    if (!(t >= 0.0)) throw std::domain_error("lineshape: g(t) requires t >= 0");
    if (t == 0.0) return {0.0, 0.0};
    const double decay = std::expm1(-cutoff_ * t); // exp(-omega_c t) - 1
    const double re = 2.0 * lambda_ * t / (beta_ * cutoff_) +
                      lambda_ / cutoff_ * cot_half_ * decay +
                      prefactor_ * matsubara_part(t, nullptr);
    const double im = -lambda_ / cutoff_ * decay;
    return {re, im};
}

int DrudeLineshape::matsubara_terms_used(double t) const {
    if (!(t >= 0.0)) throw std::domain_error("lineshape: g(t) requires t >= 0");
    if (t == 0.0) return 0;
    int used = 0;
    matsubara_part(t, &used);
    return used;
}

std::vector<std::complex<double>> DrudeLineshape::evaluate(std::span<const double> times) const {
    std::vector<std::complex<double>> out(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw ValidationError("lineshape: time grid must be strictly increasing");
        }
        out[k] = (*this)(times[k]);
    }
    return out;
}

std::vector<std::complex<double>> DrudeLineshape::evaluate(const UniformGrid& grid) const {
    grid.validate();
    const auto times = grid.points();
    return evaluate(std::span<const double>(times));
}

} // namespace gmemed
