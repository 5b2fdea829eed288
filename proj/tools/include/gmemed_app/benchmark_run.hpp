// benchmark_run.hpp — GME-MED vs HEOM comparison over temperatures and initial sites.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmemed/heom.hpp"
#include "gmemed/propagators.hpp"
#include "gmemed_app/config_io.hpp"

namespace gmemed::app {

struct BenchmarkOptions {
    std::vector<double> temperatures; // K; empty: the configured temperature
    std::filesystem::path out_dir;    // empty: no files written
};

struct ComparisonEntry {
    double temperature{0.0};
    SiteRef initial_site;
    // time-local GME-MED-1 against HEOM, max over modules, on the shared grid
    double max_deviation{0.0};
    double end_deviation{0.0};
    double pauli_max_deviation{0.0};
    double pauli_end_deviation{0.0};
    double kernel_decay_time{0.0}; // ps
    Eigen::MatrixXd rates;         // Markovian rates, ps^-1
    HeomConfig heom_config;
    double heom_delta{0.0};
    std::string status{"ok"};

    Trajectory heom;
    Trajectory gme;
    Trajectory pauli;

    bool ok() const { return status == "ok"; }
};

struct ComparisonReport {
    std::vector<ComparisonEntry> entries;
    bool complete() const;
};

/// For every temperature and every site of the first module: converged HEOM
/// (convergence is established once per temperature, from the first site),
/// time-local GME-MED-1 and the Pauli equation. Sub-run failures are recorded
/// in the entry status instead of aborting the report.
ComparisonReport run_benchmark(const RunConfig& config, const BenchmarkOptions& options);

/// Linear interpolation of every column of `traj` onto `times`.
Trajectory resample(const Trajectory& traj, const std::vector<double>& times);

/// max_t max_n |a - b| and the same at the last sample; a and b share a grid.
std::pair<double, double> population_deviation(const Trajectory& a, const Trajectory& b);

void write_report(const std::filesystem::path& path, const ComparisonReport& report);

} // namespace gmemed::app
