// config_io.hpp — YAML run configuration: system definition plus numerical settings.
//
//   bath: {lambda: 35, omega_c: 106, temperature: 300}            # cm^-1, cm^-1, K
//   modules:
//     - label: "1"
//       site_energies: [12400, 12520]                             # cm^-1
//       intra_couplings: [[0, -87], [-87, 0]]                     # cm^-1
//   inter_couplings:
//     - {from: [0, 0], to: [1, 0], value: 5}                      # [module, site], 0-based
//   numerics: {time_step_fs: 1, horizon_ps: 2, kernel_horizon_ps: 2}
//   heom: {depth: 4, matsubara: 0, terminator: ishizaki_tanimura, time_step_fs: 1, tolerance: 1e-3}
//
// `numerics`, `heom` and a module's `intra_couplings` are optional; every field
// inside `numerics` and `heom` is optional.

#pragma once

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "gmemed/errors.hpp"
#include "gmemed/heom.hpp"
#include "gmemed/model.hpp"

namespace gmemed::app {

// Configuration error with the offending file and line (1-based; 0 when the
// problem is not tied to a line).
class ConfigError : public ValidationError {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct NumericsSettings {
    double time_step_fs{1.0};
    double horizon_ps{2.0};
    double kernel_horizon_ps{0.0}; // 0: max(horizon, 2 ps)

    double kernel_horizon() const { return kernel_horizon_ps > 0.0 ? kernel_horizon_ps : std::max(horizon_ps, 2.0); }
    bool operator==(const NumericsSettings&) const = default;
};

struct HeomSettings {
    int depth{4};
    int matsubara{0};
    Terminator terminator{Terminator::ishizaki_tanimura};
    double time_step_fs{1.0};
    double tolerance{1e-3};
    int max_depth{24};
    int max_matsubara{3};
    bool operator==(const HeomSettings&) const = default;
};

struct RunConfig {
    SystemSpec system;
    NumericsSettings numerics;
    HeomSettings heom;
};

RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);
SystemSpec parse_system(const std::filesystem::path& path);

/// YAML text that parses back to an identical configuration.
std::string serialize_config(const RunConfig& config);

} // namespace gmemed::app
