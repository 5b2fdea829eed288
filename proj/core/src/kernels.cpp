#include "gmemed/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "gmemed/errors.hpp"
#include "gmemed/units.hpp"

namespace gmemed {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void check_compatible(const ExcitonBasis& basis, const DrudeLineshape& lineshape) {
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); };
    if (!close(lineshape.reorganization(), units::to_angular(basis.bath.reorganization)) ||
        !close(lineshape.cutoff(), units::to_angular(basis.bath.cutoff)) ||
        !close(lineshape.beta(), units::beta_ps(basis.bath.temperature))) {
        throw ValidationError("lineshape parameters do not match the exciton basis bath");
    }
}

// Offset of module n's excitons in a module-major exciton list.
std::vector<std::size_t> exciton_offsets(const ExcitonBasis& basis) {
    std::vector<std::size_t> off(basis.module_count() + 1, 0);
    for (std::size_t n = 0; n < basis.module_count(); ++n) {
        off[n + 1] = off[n] + static_cast<std::size_t>(basis.modules[n].energies.size());
    }
    return off;
}

double trapezoid(const Eigen::VectorXd& v, double step) {
    if (v.size() < 2) return 0.0;
    return step * (v.sum() - 0.5 * (v(0) + v(v.size() - 1)));
}

} // namespace

KernelTable::KernelTable(UniformGrid grid, std::size_t modules)
    : grid_(grid), modules_(modules),
      values_(modules * modules, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.count))) {}

Eigen::MatrixXd RateMatrix::generator() const {
    Eigen::MatrixXd w = rates.transpose();
    w.diagonal() = -rates.rowwise().sum();
    // rates has a zero diagonal, so the transpose contributes nothing there
    return w;
}

KernelTable kernel_med1(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                        const UniformGrid& grid, KernelOptions options) {
    grid.validate();
    check_compatible(basis, lineshape);
    const std::size_t nm = basis.module_count();
    const double lambda = basis.bath.reorganization;

    double max_detuning = 0.0;
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const auto& jt = basis.coupling(n, m);
            for (Eigen::Index p = 0; p < jt.rows(); ++p) {
                for (Eigen::Index q = 0; q < jt.cols(); ++q) {
                    if (jt(p, q) == 0.0) continue;
                    max_detuning = std::max(max_detuning,
                                            std::abs(basis.modules[n].shifted_energies(p) -
                                                     basis.modules[m].shifted_energies(q)));
                }
            }
        }
    }
    if (max_detuning > 0.0 && !options.allow_coarse_grid) {
        const double period = two_pi / units::to_angular(max_detuning);
        if (period / grid.step < options.min_points_per_period) {
            std::ostringstream os;
            os << "kernel: time step " << grid.step << " ps resolves the largest exciton detuning ("
               << max_detuning << " cm^-1) with only " << period / grid.step
               << " points per period; need " << options.min_points_per_period;
            throw ValidationError(os.str());
        }
    }

    const auto g = lineshape.evaluate(grid);
    KernelTable table(grid, nm);
    for (std::size_t n = 0; n < nm; ++n) {
        const auto& donor = basis.modules[n];
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const auto& acceptor = basis.modules[m];
            const auto& jt = basis.coupling(n, m);
            Eigen::VectorXd& k = table(n, m);
            for (Eigen::Index p = 0; p < jt.rows(); ++p) {
                for (Eigen::Index q = 0; q < jt.cols(); ++q) {
                    const double coupling = units::to_angular(jt(p, q));
                    const double amplitude = 2.0 * donor.boltzmann_weights(p) * coupling * coupling;
                    if (amplitude == 0.0) continue;
                    const double scale = (donor.reorganization(p) + acceptor.reorganization(q)) / lambda;
                    const double detuning = units::to_angular(donor.shifted_energies(p) -
                                                              acceptor.shifted_energies(q));
                    for (std::size_t i = 0; i < grid.count; ++i) {
                        const double t = grid[i];
                        k(static_cast<Eigen::Index>(i)) +=
                            amplitude * std::exp(-scale * g[i].real()) *
                            std::cos(detuning * t - scale * g[i].imag());
                    }
                }
            }
        }
    }
    return table;
}

RateMatrix markovian_rates(const KernelTable& table) {
    const std::size_t nm = table.module_count();
    RateMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(nm))};
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const Eigen::VectorXd& k = table(n, m);
            const double peak = k.cwiseAbs().maxCoeff();
            if (peak == 0.0) continue;
            const double tail = std::abs(k(k.size() - 1));
            if (tail >= 1e-6 * peak) {
                std::ostringstream os;
                os << "markovian_rates: kernel " << n << "->" << m << " has not decayed at t = "
                   << table.grid().horizon() << " ps (|K(T_max)|/max|K| = " << tail / peak
                   << "); increase the kernel horizon T_max";
                throw NumericalError(os.str());
            }
            double rate = trapezoid(k, table.grid().step);
            const double scale = trapezoid(k.cwiseAbs(), table.grid().step);
            if (rate < 0.0) {
                if (rate < -1e-12 * scale) {
                    throw NumericalError("markovian_rates: negative integrated kernel " +
                                         std::to_string(n) + "->" + std::to_string(m));
                }
                rate = 0.0;
            }
            out.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = rate;
        }
    }
    return out;
}

FrequencyGrid default_frequency_grid(const ExcitonBasis& basis, double span_wavenumber,
                                     double step_wavenumber) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& m : basis.modules) {
        lo = std::min(lo, m.shifted_energies.minCoeff());
        hi = std::max(hi, m.shifted_energies.maxCoeff());
    }
    lo -= span_wavenumber;
    hi += span_wavenumber;
    const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step_wavenumber)) + 1;
    return FrequencyGrid{units::to_angular(lo), units::to_angular(step_wavenumber), count};
}

ExcitonSpectra exciton_spectra(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                               const FrequencyGrid& frequencies, OverlapOptions options) {
    check_compatible(basis, lineshape);
    if (frequencies.count < 2 || !(frequencies.step > 0.0)) {
        throw ValidationError("frequency grid needs at least two points and a positive step");
    }
    if (!(options.time_step > 0.0) || !(options.padding_factor >= 1.0) ||
        !(options.decay_threshold > 0.0 && options.decay_threshold < 1.0)) {
        throw ValidationError("overlap options out of range");
    }
    const double lambda = basis.bath.reorganization;

    double smallest_scale = std::numeric_limits<double>::infinity();
    for (const auto& m : basis.modules) {
        smallest_scale = std::min(smallest_scale, m.reorganization.minCoeff() / lambda);
    }
    // Decay length of the slowest envelope exp(-s Re g(t)); Re g grows at least linearly.
    const double target = -std::log(options.decay_threshold) / smallest_scale;
    double decay = 1.0 / lineshape.cutoff();
    while (lineshape(decay).real() < target) decay *= 1.25;
    const double horizon = options.padding_factor * decay;
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / options.time_step));
    const UniformGrid times{options.time_step, steps + 1};
    const auto g = lineshape.evaluate(times);

    ExcitonSpectra out;
    out.frequencies = frequencies;
    const auto nw = static_cast<Eigen::Index>(frequencies.count);
    const double dt = times.step;

    for (std::size_t n = 0; n < basis.module_count(); ++n) {
        const auto& mod = basis.modules[n];
        for (Eigen::Index p = 0; p < mod.energies.size(); ++p) {
            const double scale = mod.reorganization(p) / lambda;
            const double center = units::to_angular(mod.shifted_energies(p));
            std::vector<std::complex<double>> envelope(times.count);
            for (std::size_t k = 0; k < times.count; ++k) {
                envelope[k] = std::exp(-scale * g[k]) * (k == 0 || k + 1 == times.count ? 0.5 : 1.0);
            }
            Eigen::VectorXd absorption(nw);
            Eigen::VectorXd emission(nw);
            for (Eigen::Index j = 0; j < nw; ++j) {
                const double detuning = frequencies[static_cast<std::size_t>(j)] - center;
                // exp(i detuning t_k) by rotation, reseeded to bound drift
                const std::complex<double> rot = std::polar(1.0, detuning * dt);
                std::complex<double> phase{1.0, 0.0};
                std::complex<double> acc_abs{0.0, 0.0};
                std::complex<double> acc_em{0.0, 0.0};
                for (std::size_t k = 0; k < times.count; ++k) {
                    if (k % 256 == 0) phase = std::polar(1.0, detuning * times[k]);
                    acc_abs += phase * envelope[k];
                    acc_em += phase * std::conj(envelope[k]);
                    phase *= rot;
                }
                // Re[e^{-ix} e^{-g}] = Re[e^{ix} e^{-g*}]
                absorption(j) = 2.0 * dt * acc_abs.real();
                emission(j) = 2.0 * dt * acc_em.real();
            }
            out.absorption.push_back(std::move(absorption));
            out.emission.push_back(std::move(emission));
        }
    }
    return out;
}

RateMatrix mcfret_rates_frequency(const ExcitonBasis& basis, const DrudeLineshape& lineshape,
                                  const FrequencyGrid& frequencies, OverlapOptions options) {
    const auto spectra = exciton_spectra(basis, lineshape, frequencies, options);
    const auto offsets = exciton_offsets(basis);
    const double dw = frequencies.step;

    for (std::size_t i = 0; i < spectra.absorption.size(); ++i) {
        for (const auto* shape : {&spectra.absorption[i], &spectra.emission[i]}) {
            const double area = trapezoid(*shape, dw);
            if (std::abs(area - two_pi) > options.normalization_tolerance * two_pi) {
                std::ostringstream os;
                os << "mcfret_rates_frequency: lineshape " << i << " integrates to " << area
                   << " instead of 2 pi; widen the frequency grid or check the transform convention";
                throw NumericalError(os.str());
            }
        }
    }

    const std::size_t nm = basis.module_count();
    RateMatrix out{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(nm))};
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const auto& jt = basis.coupling(n, m);
            double rate = 0.0;
            for (Eigen::Index p = 0; p < jt.rows(); ++p) {
                for (Eigen::Index q = 0; q < jt.cols(); ++q) {
                    const double coupling = units::to_angular(jt(p, q));
                    const double weight = basis.modules[n].boltzmann_weights(p) * coupling * coupling;
                    if (weight == 0.0) continue;
                    const auto& e = spectra.emission[offsets[n] + static_cast<std::size_t>(p)];
                    const auto& a = spectra.absorption[offsets[m] + static_cast<std::size_t>(q)];
                    rate += weight * trapezoid(e.cwiseProduct(a), dw);
                }
            }
            out.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
                std::max(0.0, rate / two_pi);
        }
    }
    return out;
}

std::vector<DetailedBalanceEntry> detailed_balance_report(const RateMatrix& rates,
                                                          const ExcitonBasis& basis) {
    std::vector<DetailedBalanceEntry> out;
    const double beta = units::beta_wavenumber(basis.bath.temperature);
    const std::size_t nm = rates.module_count();
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = n + 1; m < nm; ++m) {
            const double fwd = rates.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            const double bwd = rates.rates(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
            if (fwd <= 0.0 || bwd <= 0.0) continue;
            DetailedBalanceEntry e;
            e.from = n;
            e.to = m;
            e.ratio = fwd / bwd;
            e.expected = std::exp(-beta * (basis.free_energy(m) - basis.free_energy(n)));
            e.flagged = std::abs(e.ratio / e.expected - 1.0) > 0.2;
            out.push_back(e);
        }
    }
    return out;
}

double kernel_decay_time(const KernelTable& table, double fraction) {
    double latest = 0.0;
    for (std::size_t n = 0; n < table.module_count(); ++n) {
        for (std::size_t m = 0; m < table.module_count(); ++m) {
            if (n == m) continue;
            const Eigen::VectorXd& k = table(n, m);
            const double peak = k.cwiseAbs().maxCoeff();
            if (peak == 0.0) continue;
            Eigen::Index last = k.size() - 1;
            while (last > 0 && std::abs(k(last)) < fraction * peak) --last;
            const auto next = std::min<std::size_t>(static_cast<std::size_t>(last) + 1, table.grid().count - 1);
            latest = std::max(latest, table.grid()[next]);
        }
    }
    return latest;
}

} // namespace gmemed
