// main.cpp — gmemed command-line front end.
//
// Exit status: 0 success, 1 invalid input or I/O, 2 numerical failure.

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gmemed/errors.hpp"
#include "gmemed/heom.hpp"
#include "gmemed/kernels.hpp"
#include "gmemed/lineshape.hpp"
#include "gmemed/propagators.hpp"
#include "gmemed/units.hpp"
#include "gmemed_app/benchmark_run.hpp"
#include "gmemed_app/config_io.hpp"
#include "gmemed_app/csv.hpp"

namespace fs = std::filesystem;
using namespace gmemed;
using namespace gmemed::app;

namespace {

struct Common {
    std::string config;
    std::vector<double> temperatures;
    std::optional<double> dt_fs;
    std::optional<double> horizon_ps;
    std::string out{"."};
};

void add_common(CLI::App* cmd, Common& c, bool many_temperatures) {
    cmd->add_option("--config", c.config, "YAML system configuration")->required();
    auto* t = cmd->add_option("--temperature", c.temperatures, "temperature override, K");
    if (!many_temperatures) t->expected(1);
    cmd->add_option("--dt", c.dt_fs, "time step, fs");
    cmd->add_option("--horizon", c.horizon_ps, "propagation horizon, ps");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
}

RunConfig load(const Common& c) {
    RunConfig config = parse_config(c.config);
    if (!c.temperatures.empty()) {
        if (!(c.temperatures.front() > 0.0)) throw ValidationError("--temperature must be positive");
        config.system.bath.temperature = c.temperatures.front();
    }
    if (c.dt_fs) {
        if (!(*c.dt_fs > 0.0)) throw ValidationError("--dt must be positive");
        config.numerics.time_step_fs = *c.dt_fs;
        config.heom.time_step_fs = std::min(config.heom.time_step_fs, *c.dt_fs);
    }
    if (c.horizon_ps) {
        if (!(*c.horizon_ps > 0.0)) throw ValidationError("--horizon must be positive");
        config.numerics.horizon_ps = *c.horizon_ps;
    }
    fs::create_directories(c.out);
    return config;
}

UniformGrid time_grid(const RunConfig& config, double horizon) {
    return UniformGrid::from_horizon(horizon, units::fs_to_ps(config.numerics.time_step_fs));
}

KernelTable kernels(const RunConfig& config) {
    const ExcitonBasis basis = build_exciton_basis(config.system);
    const DrudeLineshape lineshape = DrudeLineshape::from_bath(config.system.bath);
    return kernel_med1(basis, lineshape, time_grid(config, config.numerics.kernel_horizon()));
}

SiteRef parse_site(const std::string& text, const SystemSpec& system) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) throw std::invalid_argument(text);
        const int m = std::stoi(text.substr(0, colon));
        const int s = std::stoi(text.substr(colon + 1));
        if (m < 0 || s < 0) throw std::invalid_argument(text);
        const SiteRef site{static_cast<std::size_t>(m), static_cast<std::size_t>(s)};
        system.global_index(site);
        return site;
    } catch (const std::invalid_argument&) {
        throw ValidationError("--site expects MODULE:SITE (0-based), got '" + text + "'");
    } catch (const std::out_of_range&) {
        throw ValidationError("--site " + text + " does not exist in the configuration");
    }
}

void report(const fs::path& path) { std::cout << "wrote " << path.string() << '\n'; }

int cmd_lineshape(const Common& c) {
    const RunConfig config = load(c);
    const DrudeLineshape g = DrudeLineshape::from_bath(config.system.bath);
    const UniformGrid grid = time_grid(config, config.numerics.horizon_ps);
    const auto values = g.evaluate(grid);
    const fs::path path = fs::path(c.out) / "lineshape.csv";
    CsvWriter csv(path, {"t_ps", "re_g", "im_g", "matsubara_terms"});
    for (std::size_t i = 0; i < grid.count; ++i) {
        csv << grid[i] << values[i].real() << values[i].imag() << static_cast<double>(g.matsubara_terms_used(grid[i]));
        csv.end_row();
    }
    report(path);
    return 0;
}

int cmd_kernel(const Common& c) {
    const RunConfig config = load(c);
    const KernelTable table = kernels(config);
    const fs::path path = fs::path(c.out) / "kernel.csv";
    write_kernels(path, table);
    report(path);
    return 0;
}

int cmd_rates(const Common& c) {
    const RunConfig config = load(c);
    const ExcitonBasis basis = build_exciton_basis(config.system);
    const DrudeLineshape lineshape = DrudeLineshape::from_bath(config.system.bath);
    const RateMatrix time_domain = markovian_rates(kernels(config));
    const RateMatrix frequency_domain =
        mcfret_rates_frequency(basis, lineshape, default_frequency_grid(basis));
    const auto balance = detailed_balance_report(time_domain, basis);

    const fs::path path = fs::path(c.out) / "rates.csv";
    CsvWriter csv(path, {"from", "to", "rate_time_ps-1", "rate_frequency_ps-1", "relative_difference",
                         "balance_ratio", "balance_expected", "balance_flagged"});
    const std::size_t nm = time_domain.module_count();
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const double kt = time_domain.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            const double kf = frequency_domain.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            csv << config.system.modules[n].label << config.system.modules[m].label << kt << kf
                << (kf != 0.0 ? (kt - kf) / kf : 0.0);
            // balance entries are stored once per unordered pair
            const auto it = std::find_if(balance.begin(), balance.end(), [&](const DetailedBalanceEntry& e) {
                return e.from == std::min(n, m) && e.to == std::max(n, m);
            });
            if (it == balance.end()) {
                csv << std::numeric_limits<double>::quiet_NaN() << std::numeric_limits<double>::quiet_NaN()
                    << std::string("n/a");
            } else {
                const bool forward = it->from == n;
                csv << (forward ? it->ratio : 1.0 / it->ratio) << (forward ? it->expected : 1.0 / it->expected)
                    << std::string(it->flagged ? "yes" : "no");
                if (it->flagged && forward) {
                    std::cerr << "warning: detailed balance off by more than 20% for modules "
                              << config.system.modules[n].label << " <-> " << config.system.modules[m].label << '\n';
                }
            }
            csv.end_row();
        }
    }
    report(path);

    const fs::path matrix_path = fs::path(c.out) / "rate_matrix.csv";
    std::vector<std::string> header{"from\\to"};
    for (std::size_t m = 0; m < nm; ++m) header.push_back(config.system.modules[m].label);
    CsvWriter matrix(matrix_path, header);
    for (std::size_t n = 0; n < nm; ++n) {
        matrix << config.system.modules[n].label;
        for (std::size_t m = 0; m < nm; ++m) {
            matrix << time_domain.rates(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        }
        matrix.end_row();
    }
    report(matrix_path);
    return 0;
}

int cmd_propagate(const Common& c, const std::string& method, int initial_module) {
    const RunConfig config = load(c);
    if (initial_module < 0 || static_cast<std::size_t>(initial_module) >= config.system.module_count()) {
        throw ValidationError("--initial must name a module between 0 and " +
                              std::to_string(config.system.module_count() - 1));
    }
    const KernelTable table = kernels(config);
    const UniformGrid grid = time_grid(config, config.numerics.horizon_ps);
    const Eigen::VectorXd p0 =
        localized_initial(config.system.module_count(), static_cast<std::size_t>(initial_module));
    Trajectory traj;
    if (method == "timelocal") {
        traj = propagate_time_local(table, p0, grid);
    } else if (method == "convolution") {
        traj = propagate_convolution(table, p0, grid);
    } else {
        traj = propagate_pauli(markovian_rates(table), p0, grid);
    }
    const fs::path path = fs::path(c.out) / ("propagate_" + method + ".csv");
    write_trajectory(path, traj, config.system);
    report(path);
    return 0;
}

struct HeomFlags {
    std::string site{"0:0"};
    std::optional<int> depth;
    std::optional<int> matsubara;
    std::optional<std::string> terminator;
    bool converge{false};
};

int cmd_heom(const Common& c, const HeomFlags& f) {
    RunConfig config = load(c);
    const SiteRef site = parse_site(f.site, config.system);
    if (f.depth) config.heom.depth = *f.depth;
    if (f.matsubara) config.heom.matsubara = *f.matsubara;
    if (f.terminator) config.heom.terminator = terminator_from_string(*f.terminator);

    HeomConfig hc;
    hc.depth = config.heom.depth;
    hc.matsubara = config.heom.matsubara;
    hc.terminator = config.heom.terminator;
    hc.time_step = units::fs_to_ps(config.heom.time_step_fs);
    hc.horizon = config.numerics.horizon_ps;
    hc.output_step = units::fs_to_ps(config.numerics.time_step_fs);

    Trajectory traj;
    if (f.converge) {
        ConvergenceOptions opts;
        opts.tolerance = config.heom.tolerance;
        opts.max_depth = config.heom.max_depth;
        opts.max_matsubara = config.heom.max_matsubara;
        HeomConvergence result = heom_converge(config.system, hc, site, opts);
        for (const auto& line : result.log) std::cout << "  " << line << '\n';
        traj = std::move(result.trajectory);
    } else {
        traj = heom_propagate(config.system, hc, site);
    }
    std::cout << traj.notes << '\n';
    if (!traj.converged) std::cerr << "warning: HEOM invariants violated; see notes above\n";
    const fs::path path = fs::path(c.out) / "heom.csv";
    write_trajectory(path, traj, config.system);
    report(path);
    return 0;
}

int cmd_benchmark(const Common& c) {
    Common single = c;
    single.temperatures.clear();
    const RunConfig config = load(single);
    BenchmarkOptions options;
    options.temperatures = c.temperatures;
    options.out_dir = c.out;
    const ComparisonReport result = run_benchmark(config, options);
    std::cout << std::setprecision(4);
    for (const auto& e : result.entries) {
        std::cout << "T=" << e.temperature << " K, site " << e.initial_site.module << ":"
                  << e.initial_site.site << ": max|GME-HEOM| " << e.max_deviation << ", end "
                  << e.end_deviation << " [" << e.status << "]\n";
    }
    report(fs::path(c.out) / "report.csv");
    return result.complete() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modular exciton density transfer: GME-MED kernels, propagators and HEOM reference"};
    app.require_subcommand(1);

    Common common;
    auto* lineshape = app.add_subcommand("lineshape", "Drude lineshape g(t) on the time grid");
    add_common(lineshape, common, false);
    auto* kernel = app.add_subcommand("kernel", "GME-MED-1 transfer kernels K_{n->m}(t)");
    add_common(kernel, common, false);
    auto* rates = app.add_subcommand("rates", "Markovian rates, time- and frequency-domain");
    add_common(rates, common, false);

    auto* propagate = app.add_subcommand("propagate", "Modular populations from a GME-MED propagator");
    add_common(propagate, common, false);
    std::string method{"timelocal"};
    int initial_module = 0;
    propagate->add_option("--method", method, "timelocal | convolution | pauli")
        ->check(CLI::IsMember({"timelocal", "convolution", "pauli"}))
        ->capture_default_str();
    propagate->add_option("--initial", initial_module, "initially excited module (0-based)")->capture_default_str();

    auto* heom = app.add_subcommand("heom", "HEOM reference dynamics from a localized site excitation");
    add_common(heom, common, false);
    HeomFlags heom_flags;
    heom->add_option("--site", heom_flags.site, "initial site MODULE:SITE (0-based)")->capture_default_str();
    heom->add_option("--depth", heom_flags.depth, "hierarchy depth L");
    heom->add_option("--matsubara", heom_flags.matsubara, "explicit Matsubara terms K");
    heom->add_option("--terminator", heom_flags.terminator, "markovian_closure | ishizaki_tanimura");
    heom->add_flag("--converge", heom_flags.converge, "raise L and K until the populations converge");

    auto* benchmark = app.add_subcommand("benchmark", "GME-MED vs HEOM comparison report");
    add_common(benchmark, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*lineshape) return cmd_lineshape(common);
        if (*kernel) return cmd_kernel(common);
        if (*rates) return cmd_rates(common);
        if (*propagate) return cmd_propagate(common, method, initial_module);
        if (*heom) return cmd_heom(common, heom_flags);
        if (*benchmark) return cmd_benchmark(common);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
