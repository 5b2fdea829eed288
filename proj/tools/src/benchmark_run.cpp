#include "gmemed_app/benchmark_run.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <iomanip>
#include <limits>
#include <sstream>

#include "gmemed/errors.hpp"
#include "gmemed/kernels.hpp"
#include "gmemed/lineshape.hpp"
#include "gmemed/parallel.hpp"
#include "gmemed/units.hpp"
#include "gmemed_app/csv.hpp"

namespace gmemed::app {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string run_tag(double temperature, SiteRef site) {
    std::ostringstream os;
    os << "T" << temperature << "_site" << site.module << "_" << site.site;
    return os.str();
}

void add_failure(ComparisonEntry& entry, const std::string& what, const std::exception& e) {
    const std::string marker = what + " failed: " + e.what();
    entry.status = entry.ok() ? marker : entry.status + "; " + marker;
}

std::vector<ComparisonEntry> run_temperature(const RunConfig& config, double temperature,
                                             const std::filesystem::path& out_dir) {
    SystemSpec system = config.system;
    system.bath.temperature = temperature;
    const std::size_t first = 0;
    const std::size_t sites = system.modules[first].size();

    std::vector<ComparisonEntry> entries(sites);
    for (std::size_t s = 0; s < sites; ++s) {
        entries[s].temperature = temperature;
        entries[s].initial_site = {first, s};
        entries[s].max_deviation = entries[s].end_deviation = nan;
        entries[s].pauli_max_deviation = entries[s].pauli_end_deviation = nan;
        entries[s].kernel_decay_time = entries[s].heom_delta = nan;
        entries[s].heom_config.depth = 0;
    }

    const double dt = units::fs_to_ps(config.numerics.time_step_fs);
    const UniformGrid grid = UniformGrid::from_horizon(config.numerics.horizon_ps, dt);
    const Eigen::VectorXd p0 = localized_initial(system.module_count(), first);

    // GME-MED-1 and Pauli do not depend on the site within the first module.
    Trajectory gme;
    Trajectory pauli;
    try {
        const ExcitonBasis basis = build_exciton_basis(system);
        const DrudeLineshape lineshape = DrudeLineshape::from_bath(system.bath);
        const UniformGrid kernel_grid = UniformGrid::from_horizon(config.numerics.kernel_horizon(), dt);
        const KernelTable table = kernel_med1(basis, lineshape, kernel_grid);
        const RateMatrix rates = markovian_rates(table);
        const double decay = kernel_decay_time(table);
        gme = propagate_time_local(table, p0, grid);
        pauli = propagate_pauli(rates, p0, grid);
        for (auto& e : entries) {
            e.rates = rates.rates;
            e.kernel_decay_time = decay;
        }
    } catch (const std::exception& e) {
        for (auto& entry : entries) add_failure(entry, "gme-med", e);
    }

    HeomConfig base;
    base.depth = config.heom.depth;
    base.matsubara = config.heom.matsubara;
    base.terminator = config.heom.terminator;
    base.time_step = units::fs_to_ps(config.heom.time_step_fs);
    base.horizon = config.numerics.horizon_ps;
    base.output_step = dt;
    ConvergenceOptions conv;
    conv.tolerance = config.heom.tolerance;
    conv.max_depth = config.heom.max_depth;
    conv.max_matsubara = config.heom.max_matsubara;

    std::optional<HeomConfig> converged;
    double delta = nan;
    for (std::size_t s = 0; s < sites; ++s) {
        ComparisonEntry& entry = entries[s];
        try {
            if (!converged) {
                HeomConvergence result = heom_converge(system, base, entry.initial_site, conv);
                converged = result.config;
                delta = result.last_delta;
                entry.heom = std::move(result.trajectory);
            } else {
                entry.heom = heom_propagate(system, *converged, entry.initial_site);
            }
            entry.heom_config = *converged;
            entry.heom_delta = delta;
            if (!entry.heom.converged) entry.status = "heom invariants violated: " + entry.heom.notes;
        } catch (const std::exception& e) {
            add_failure(entry, "heom", e);
            // later sites would repeat the same failed convergence
            if (!converged) {
                for (std::size_t r = s + 1; r < sites; ++r) add_failure(entries[r], "heom", e);
                break;
            }
        }
    }

    for (ComparisonEntry& entry : entries) {
        entry.gme = gme;
        entry.pauli = pauli;
        entry.gme.initial_condition = entry.pauli.initial_condition = entry.heom.initial_condition;
        if (entry.heom.size() > 0 && gme.size() > 0) {
            const Trajectory heom = resample(entry.heom, grid.points());
            std::tie(entry.max_deviation, entry.end_deviation) = population_deviation(gme, heom);
            std::tie(entry.pauli_max_deviation, entry.pauli_end_deviation) = population_deviation(pauli, heom);
        }
        if (!out_dir.empty()) {
            const std::string tag = run_tag(temperature, entry.initial_site);
            if (entry.heom.size() > 0) write_trajectory(out_dir / (tag + "_heom.csv"), entry.heom, system);
            if (gme.size() > 0) write_trajectory(out_dir / (tag + "_gme_timelocal.csv"), gme, system);
            if (pauli.size() > 0) write_trajectory(out_dir / (tag + "_pauli.csv"), pauli, system);
        }
    }
    return entries;
}

} // namespace

bool ComparisonReport::complete() const {
    for (const auto& e : entries) {
        if (!e.ok()) return false;
    }
    return true;
}

Trajectory resample(const Trajectory& traj, const std::vector<double>& times) {
    if (traj.size() == 0) throw ValidationError("resample: empty trajectory");
    Trajectory out = traj;
    out.times = times;
    const auto rows = static_cast<Eigen::Index>(times.size());
    out.populations.resize(rows, traj.populations.cols());
    out.site_populations.resize(traj.site_populations.size() > 0 ? rows : 0, traj.site_populations.cols());
    const double tol = 1e-9 * std::max(1.0, traj.times.back());
    std::size_t j = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double t = times[static_cast<std::size_t>(i)];
        if (t < traj.times.front() - tol || t > traj.times.back() + tol) {
            throw ValidationError("resample: time outside the trajectory");
        }
        while (j + 2 < traj.size() && traj.times[j + 1] < t) ++j;
        Eigen::Index a = static_cast<Eigen::Index>(j);
        double w = 0.0;
        if (traj.size() > 1) {
            const double span = traj.times[j + 1] - traj.times[j];
            w = std::clamp((t - traj.times[j]) / span, 0.0, 1.0);
        }
        const Eigen::Index b = traj.size() > 1 ? a + 1 : a;
        out.populations.row(i) = (1.0 - w) * traj.populations.row(a) + w * traj.populations.row(b);
        if (out.site_populations.size() > 0) {
            out.site_populations.row(i) = (1.0 - w) * traj.site_populations.row(a) + w * traj.site_populations.row(b);
        }
    }
    return out;
}

std::pair<double, double> population_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || a.populations.cols() != b.populations.cols() || a.size() == 0) {
        throw ValidationError("population_deviation: trajectories are not on a shared grid");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.times[i] - b.times[i]) > 1e-9) {
            throw ValidationError("population_deviation: trajectories are not on a shared grid");
        }
    }
    const Eigen::MatrixXd diff = (a.populations - b.populations).cwiseAbs();
    return {diff.maxCoeff(), diff.row(diff.rows() - 1).maxCoeff()};
}

ComparisonReport run_benchmark(const RunConfig& config, const BenchmarkOptions& options) {
    config.system.validate();
    std::vector<double> temperatures = options.temperatures;
    if (temperatures.empty()) temperatures.push_back(config.system.bath.temperature);
    for (double t : temperatures) {
        if (!(t > 0.0)) throw ValidationError("benchmark: temperatures must be positive");
    }
    if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

    std::vector<std::vector<ComparisonEntry>> per_temperature(temperatures.size());
    parallel_for(
        temperatures.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                per_temperature[i] = run_temperature(config, temperatures[i], options.out_dir);
            }
        },
        1);

    ComparisonReport report;
    for (auto& list : per_temperature) {
        for (auto& e : list) report.entries.push_back(std::move(e));
    }
    if (!options.out_dir.empty()) write_report(options.out_dir / "report.csv", report);
    return report;
}

void write_report(const std::filesystem::path& path, const ComparisonReport& report) {
    std::size_t modules = 0;
    for (const auto& e : report.entries) modules = std::max(modules, static_cast<std::size_t>(e.rates.rows()));
    std::vector<std::string> header{"temperature_K",        "initial_site",       "max_dev_gme_heom",
                                    "end_dev_gme_heom",     "max_dev_pauli_heom", "end_dev_pauli_heom",
                                    "kernel_decay_time_ps", "heom_depth",         "heom_matsubara",
                                    "heom_terminator",      "heom_last_delta"};
    for (std::size_t n = 0; n < modules; ++n) {
        for (std::size_t m = 0; m < modules; ++m) {
            if (n != m) header.push_back("rate_" + std::to_string(n + 1) + "_" + std::to_string(m + 1) + "_ps-1");
        }
    }
    header.push_back("status");
    CsvWriter csv(path, header);
    for (const auto& e : report.entries) {
        csv << e.temperature
            << std::to_string(e.initial_site.module) + ":" + std::to_string(e.initial_site.site)
            << e.max_deviation << e.end_deviation << e.pauli_max_deviation << e.pauli_end_deviation
            << e.kernel_decay_time << static_cast<double>(e.heom_config.depth)
            << static_cast<double>(e.heom_config.matsubara) << to_string(e.heom_config.terminator) << e.heom_delta;
        for (std::size_t n = 0; n < modules; ++n) {
            for (std::size_t m = 0; m < modules; ++m) {
                if (n == m) continue;
                const bool have = static_cast<std::size_t>(e.rates.rows()) == modules;
                csv << (have ? e.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) : nan);
            }
        }
        csv << e.status;
        csv.end_row();
    }
}

} // namespace gmemed::app
