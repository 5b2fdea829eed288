#include "gmemed/heom.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "gmemed/errors.hpp"
#include "gmemed/parallel.hpp"
#include "gmemed/units.hpp"

namespace gmemed {

namespace {

using cplx = std::complex<double>;
constexpr double two_pi = 2.0 * std::numbers::pi;

std::string format_config(const HeomConfig& c) {
    std::ostringstream os;
    os << "L=" << c.depth << " K=" << c.matsubara << " " << to_string(c.terminator);
    return os.str();
}

// Right-hand side of the scaled hierarchy for a fixed system.
class HeomRhs {
public:
    HeomRhs(const Eigen::MatrixXd& hamiltonian, const DrudeDecomposition& bath, const AdoHierarchy& hierarchy,
            Terminator terminator)
        : sites_(static_cast<std::size_t>(hamiltonian.rows())), bath_(bath), hierarchy_(hierarchy),
          dephasing_(terminator == Terminator::ishizaki_tanimura ? bath.residual : 0.0) {
        h_.resize(sites_ * sites_);
        for (std::size_t a = 0; a < sites_; ++a) {
            for (std::size_t b = 0; b < sites_; ++b) {
                h_[a * sites_ + b] = hamiltonian(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
        const std::size_t per_site = bath.modes.size();
        const std::size_t nado = hierarchy.size();
        gamma_.resize(nado);
        for (std::size_t i = 0; i < nado; ++i) {
            const auto n = hierarchy.index(i);
            double g = 0.0;
            for (std::size_t k = 0; k < n.size(); ++k) g += n[k] * bath.modes[k % per_site].rate;
            gamma_[i] = g;
        }
        magnitude_.resize(per_site);
        for (std::size_t b = 0; b < per_site; ++b) magnitude_[b] = std::abs(bath.modes[b].coefficient);
    }

    void operator()(const std::vector<cplx>& in, std::vector<cplx>& out) const {
        parallel_for(hierarchy_.size(), [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) apply(i, in, out);
        });
    }

private:
    void apply(std::size_t i, const std::vector<cplx>& in, std::vector<cplx>& out) const {
        const std::size_t ns = sites_;
        const std::size_t block = ns * ns;
        const cplx* x = in.data() + i * block;
        cplx* d = out.data() + i * block;
        const double gamma = gamma_[i];
        const cplx minus_i{0.0, -1.0};

        for (std::size_t a = 0; a < ns; ++a) {
            for (std::size_t b = 0; b < ns; ++b) {
                cplx comm{0.0, 0.0};
                for (std::size_t c = 0; c < ns; ++c) {
                    comm += h_[a * ns + c] * x[c * ns + b] - x[a * ns + c] * h_[c * ns + b];
                }
                d[a * ns + b] = minus_i * comm - gamma * x[a * ns + b];
                if (a != b && dephasing_ != 0.0) d[a * ns + b] -= 2.0 * dephasing_ * x[a * ns + b];
            }
        }

        const auto n = hierarchy_.index(i);
        const std::size_t per_site = bath_.modes.size();
        const bool deepest = hierarchy_.tier(i) == hierarchy_.depth();
        for (std::size_t k = 0; k < hierarchy_.modes(); ++k) {
            const std::size_t j = k / per_site;
            const BathMode& mode = bath_.modes[k % per_site];
            const double mag = magnitude_[k % per_site];
            const cplx c = mode.coefficient;

            const std::int64_t up = hierarchy_.up(i, k);
            if (up >= 0) {
                // -i sqrt((n_k + 1)|c|) [V_j, rho_{n+e_k}]
                const cplx s = minus_i * std::sqrt((n[k] + 1.0) * mag);
                const cplx* y = in.data() + static_cast<std::size_t>(up) * block;
                for (std::size_t b = 0; b < ns; ++b) d[j * ns + b] += s * y[j * ns + b];
                for (std::size_t a = 0; a < ns; ++a) d[a * ns + j] -= s * y[a * ns + j];
            } else if (deepest) {
                // rho_{n+e_k} ~ -i (n_k + 1)(c V rho_n - c* rho_n V) / (gamma_n + nu_k)
                const double f = (n[k] + 1.0) / (gamma + mode.rate);
                for (std::size_t b = 0; b < ns; ++b) {
                    if (b != j) d[j * ns + b] -= f * c * x[j * ns + b];
                }
                for (std::size_t a = 0; a < ns; ++a) {
                    if (a != j) d[a * ns + j] -= f * std::conj(c) * x[a * ns + j];
                }
            }

            const std::int64_t down = hierarchy_.down(i, k);
            if (down >= 0) {
                // -i sqrt(n_k / |c|) (c V_j rho_{n-e_k} - c* rho_{n-e_k} V_j)
                const double s = std::sqrt(n[k] / mag);
                const cplx* y = in.data() + static_cast<std::size_t>(down) * block;
                const cplx left = minus_i * s * c;
                const cplx right = cplx{0.0, 1.0} * s * std::conj(c);
                for (std::size_t b = 0; b < ns; ++b) d[j * ns + b] += left * y[j * ns + b];
                for (std::size_t a = 0; a < ns; ++a) d[a * ns + j] += right * y[a * ns + j];
            }
        }
    }

    std::size_t sites_;
    const DrudeDecomposition& bath_;
    const AdoHierarchy& hierarchy_;
    double dephasing_;
    std::vector<double> h_;
    std::vector<double> gamma_;
    std::vector<double> magnitude_;
};

} // namespace

std::string to_string(Terminator t) {
    switch (t) {
    case Terminator::markovian_closure: return "markovian_closure";
    case Terminator::ishizaki_tanimura: return "ishizaki_tanimura";
    }
    return "unknown";
}

Terminator terminator_from_string(const std::string& name) {
    if (name == "markovian_closure") return Terminator::markovian_closure;
    if (name == "ishizaki_tanimura") return Terminator::ishizaki_tanimura;
    throw ValidationError("unknown terminator '" + name + "' (markovian_closure | ishizaki_tanimura)");
}

void HeomConfig::validate() const {
    if (depth < 1 || depth > 255) throw ValidationError("heom: hierarchy depth must be in [1, 255]");
    if (matsubara < 0) throw ValidationError("heom: matsubara count must be non-negative");
    if (!(time_step > 0.0) || !(horizon >= 0.0) || !(output_step > 0.0)) {
        throw ValidationError("heom: time_step and output_step must be positive, horizon non-negative");
    }
    const double ratio = output_step / time_step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
        throw ValidationError("heom: output_step must be an integer multiple of time_step");
    }
}

std::size_t heom_ado_count(std::size_t sites, int depth, int matsubara) {
    const std::size_t modes = sites * static_cast<std::size_t>(matsubara + 1);
    // C(L + M, L) accumulated exactly; saturates on overflow
    double count = 1.0;
    for (int i = 1; i <= depth; ++i) count = count * static_cast<double>(modes + static_cast<std::size_t>(i)) / i;
    if (count > 1e18) return std::numeric_limits<std::size_t>::max();
    return static_cast<std::size_t>(std::llround(count));
}

std::size_t heom_memory_estimate(std::size_t sites, const HeomConfig& config) {
    const std::size_t ados = heom_ado_count(sites, config.depth, config.matsubara);
    const std::size_t per_ado = sites * sites * sizeof(std::complex<double>) * 4;
    if (ados > std::numeric_limits<std::size_t>::max() / per_ado) return std::numeric_limits<std::size_t>::max();
    return ados * per_ado;
}

DrudeDecomposition drude_decomposition(double reorganization, double cutoff, double beta, int matsubara) {
    const double x = beta * cutoff;
    const double k = std::round(x / two_pi);
    if (k >= 1.0 && std::abs(x - two_pi * k) < 1e-9) {
        throw ValidationError("heom: beta*omega_c coincides with a Matsubara frequency");
    }
    const double cot_half = 1.0 / std::tan(0.5 * x);
    DrudeDecomposition out;
    out.modes.push_back({cutoff, {reorganization * cutoff * cot_half, -reorganization * cutoff}});
    // sum_{k >= 1} c_k / nu_k in closed form
    double residual = 2.0 * reorganization / (beta * cutoff) - reorganization * cot_half;
    for (int l = 1; l <= matsubara; ++l) {
        const double nu = two_pi * l / beta;
        const double c = 4.0 * reorganization * cutoff / beta * nu / (nu * nu - cutoff * cutoff);
        out.modes.push_back({nu, {c, 0.0}});
        residual -= c / nu;
    }
    out.residual = residual;
    return out;
}

AdoHierarchy::AdoHierarchy(std::size_t modes, int depth) : modes_(modes), depth_(depth) {
    if (modes == 0 || depth < 0 || depth > 255) throw ValidationError("AdoHierarchy: bad dimensions");
    std::unordered_map<std::string, std::size_t> lookup;
    std::vector<std::uint8_t> current(modes, 0);

    // Tier by tier: each ADO of tier t + 1 is reached from tier t by raising
    // one index at or after the last non-zero position (unique generation).
    std::vector<std::size_t> frontier;
    const auto add = [&](const std::vector<std::uint8_t>& n, int tier) {
        const std::string key(n.begin(), n.end());
        lookup.emplace(key, tiers_.size());
        indices_.insert(indices_.end(), n.begin(), n.end());
        tiers_.push_back(tier);
    };
    add(current, 0);
    std::size_t tier_begin = 0;
    for (int t = 0; t < depth; ++t) {
        const std::size_t tier_end = tiers_.size();
        for (std::size_t i = tier_begin; i < tier_end; ++i) {
            std::vector<std::uint8_t> n(indices_.begin() + static_cast<std::ptrdiff_t>(i * modes),
                                        indices_.begin() + static_cast<std::ptrdiff_t>((i + 1) * modes));
            std::size_t last = 0;
            for (std::size_t k = 0; k < modes; ++k) {
                if (n[k] != 0) last = k;
            }
            for (std::size_t k = last; k < modes; ++k) {
                ++n[k];
                add(n, t + 1);
                --n[k];
            }
        }
        tier_begin = tier_end;
    }

    up_.assign(tiers_.size() * modes, -1);
    down_.assign(tiers_.size() * modes, -1);
    for (std::size_t i = 0; i < tiers_.size(); ++i) {
        std::string key(indices_.begin() + static_cast<std::ptrdiff_t>(i * modes),
                        indices_.begin() + static_cast<std::ptrdiff_t>((i + 1) * modes));
        for (std::size_t k = 0; k < modes; ++k) {
            if (tiers_[i] < depth) {
                ++key[k];
                up_[i * modes + k] = static_cast<std::int64_t>(lookup.at(key));
                --key[k];
            }
            if (key[k] != 0) {
                --key[k];
                down_[i * modes + k] = static_cast<std::int64_t>(lookup.at(key));
                ++key[k];
            }
        }
    }
}

double AdoHierarchy::log_normalization(std::size_t ado, std::span<const double> magnitudes) const {
    const auto n = index(ado);
    double out = 0.0;
    for (std::size_t k = 0; k < modes_; ++k) {
        out += 0.5 * (std::lgamma(n[k] + 1.0) + n[k] * std::log(magnitudes[k % magnitudes.size()]));
    }
    return out;
}

Trajectory heom_propagate(const SystemSpec& system, const HeomConfig& config, SiteRef initial_site) {
    system.validate();
    config.validate();
    const std::size_t ns = system.site_count();
    const std::size_t start = system.global_index(initial_site);
    const std::size_t need = heom_memory_estimate(ns, config);
    if (need > config.memory_budget) {
        std::ostringstream os;
        os << "heom: " << format_config(config) << " needs ~" << need / (1 << 20) << " MiB, above the "
           << config.memory_budget / (1 << 20) << " MiB budget";
        throw ValidationError(os.str());
    }

    Eigen::MatrixXd h = system.site_hamiltonian();
    h.diagonal().array() -= h.diagonal().mean();
    h *= units::angular_per_wavenumber;

    const auto& bath = system.bath;
    const DrudeDecomposition decomposition =
        drude_decomposition(units::to_angular(bath.reorganization), units::to_angular(bath.cutoff),
                            units::beta_ps(bath.temperature), config.matsubara);
    const AdoHierarchy hierarchy(ns * decomposition.modes.size(), config.depth);
    const HeomRhs rhs(h, decomposition, hierarchy, config.terminator);

    const std::size_t block = ns * ns;
    std::vector<cplx> y(hierarchy.size() * block, cplx{0.0, 0.0});
    y[start * ns + start] = 1.0;
    std::vector<cplx> acc(y.size()), tmp(y.size()), k(y.size());

    const auto steps = static_cast<std::size_t>(std::llround(config.horizon / config.time_step));
    const auto stride = static_cast<std::size_t>(std::llround(config.output_step / config.time_step));
    const std::size_t outputs = steps / stride + 1;

    Trajectory traj;
    traj.method = "heom";
    traj.initial_condition = "site " + std::to_string(initial_site.module) + ":" + std::to_string(initial_site.site);
    traj.populations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs),
                                             static_cast<Eigen::Index>(system.module_count()));
    traj.site_populations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(ns));
    traj.times.reserve(outputs);

    double trace_error = 0.0;
    double hermiticity_error = 0.0;
    const auto record = [&](std::size_t row, double t) {
        traj.times.push_back(t);
        cplx trace{0.0, 0.0};
        for (std::size_t a = 0; a < ns; ++a) {
            trace += y[a * ns + a];
            traj.site_populations(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(a)) = y[a * ns + a].real();
            for (std::size_t b = 0; b < ns; ++b) {
                hermiticity_error = std::max(hermiticity_error, std::abs(y[a * ns + b] - std::conj(y[b * ns + a])));
            }
        }
        trace_error = std::max(trace_error, std::abs(trace - 1.0));
        for (std::size_t m = 0; m < system.module_count(); ++m) {
            const std::size_t off = system.module_offset(m);
            double sum = 0.0;
            for (std::size_t s = 0; s < system.modules[m].size(); ++s) sum += y[(off + s) * ns + off + s].real();
            traj.populations(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(m)) = sum;
        }
    };

    record(0, 0.0);
    // RK4 is stable for real eigenvalues down to about -2.78 / h; the deepest
    // tier decays at up to L * max(nu), so the step is subdivided when needed.
    double fastest = 0.0;
    for (const BathMode& mode : decomposition.modes) fastest = std::max(fastest, mode.rate);
    const auto substeps =
        static_cast<std::size_t>(std::max(1.0, std::ceil(config.time_step * config.depth * fastest / 2.0)));
    const double dt = config.time_step / static_cast<double>(substeps);
    for (std::size_t step = 1; step <= steps * substeps; ++step) {
        rhs(y, k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            acc[i] = y[i] + (dt / 6.0) * k[i];
            tmp[i] = y[i] + (0.5 * dt) * k[i];
        }
        rhs(tmp, k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            acc[i] += (dt / 3.0) * k[i];
            tmp[i] = y[i] + (0.5 * dt) * k[i];
        }
        rhs(tmp, k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            acc[i] += (dt / 3.0) * k[i];
            tmp[i] = y[i] + dt * k[i];
        }
        rhs(tmp, k);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = acc[i] + (dt / 6.0) * k[i];

        if (step % (stride * substeps) == 0) {
            const std::size_t outer = step / substeps;
            if (!std::isfinite(std::abs(y[start * ns + start]))) {
                throw NumericalError("heom: integration diverged at t = " +
                                     std::to_string(static_cast<double>(outer) * config.time_step) +
                                     " ps; reduce time_step");
            }
            record(outer / stride, static_cast<double>(outer) * config.time_step);
        }
    }
    traj.max_negative_excursion = std::min(0.0, traj.site_populations.minCoeff());
    std::ostringstream notes;
    notes << format_config(config) << "; ados=" << hierarchy.size() << "; rk4 substeps=" << substeps << "; max|Tr rho - 1|=" << trace_error
          << "; max hermiticity error=" << hermiticity_error;
    traj.notes = notes.str();
    traj.converged = trace_error <= 1e-8 && hermiticity_error <= 1e-10;
    return traj;
}

double max_population_difference(const Trajectory& a, const Trajectory& b) {
    if (a.populations.rows() != b.populations.rows() || a.populations.cols() != b.populations.cols()) {
        throw ValidationError("trajectories are sampled on different grids");
    }
    if (a.populations.size() == 0) return 0.0;
    return (a.populations - b.populations).cwiseAbs().maxCoeff();
}

HeomConvergence heom_converge(const SystemSpec& system, const HeomConfig& base, SiteRef initial_site,
                              ConvergenceOptions options) {
    base.validate();
    const std::size_t ns = system.site_count();
    HeomConvergence out;
    HeomConfig current = base;
    Trajectory reference = heom_propagate(system, current, initial_site);
    out.log.push_back(format_config(current) + ": reference");
    double last_delta = std::numeric_limits<double>::infinity();

    const auto exhausted = [&](const std::string& why) {
        std::ostringstream os;
        os << "heom_converge: " << why << " before reaching tolerance " << options.tolerance
           << " (last delta " << last_delta << " at " << format_config(current) << ")";
        return NumericalError(os.str());
    };
    const auto affordable = [&](const HeomConfig& c) {
        return heom_memory_estimate(ns, c) <= c.memory_budget;
    };

    while (true) {
        HeomConfig deeper = current;
        ++deeper.depth;
        if (deeper.depth > options.max_depth) throw exhausted("depth limit reached");
        if (!affordable(deeper)) throw exhausted("memory budget exhausted");
        Trajectory next = heom_propagate(system, deeper, initial_site);
        const double delta = max_population_difference(reference, next);
        out.log.push_back(format_config(deeper) + ": delta " + std::to_string(delta));
        if (delta >= options.tolerance) {
            current = deeper;
            reference = std::move(next);
            last_delta = delta;
            continue;
        }
        last_delta = delta;
        if (current.matsubara < options.max_matsubara) {
            HeomConfig wider = current;
            ++wider.matsubara;
            if (affordable(wider)) {
                Trajectory alt = heom_propagate(system, wider, initial_site);
                const double dk = max_population_difference(reference, alt);
                out.log.push_back(format_config(wider) + ": delta " + std::to_string(dk));
                if (dk >= options.tolerance) {
                    current = wider;
                    reference = std::move(alt);
                    last_delta = dk;
                    continue;
                }
                last_delta = std::max(last_delta, dk);
            }
        }
        out.config = current;
        out.last_delta = last_delta;
        out.trajectory = std::move(reference);
        return out;
    }
}

} // namespace gmemed
