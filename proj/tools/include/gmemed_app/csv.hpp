// csv.hpp — CSV output with fixed column order and 9 significant digits.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gmemed/kernels.hpp"
#include "gmemed/propagators.hpp"

namespace gmemed::app {

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double value);
    CsvWriter& operator<<(const std::string& value);
    void end_row();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    bool first_{true};
};

/// t_ps[,s_<module>_<site>...],p_1..p_N with 0-based site indices; populations
/// are clamped at zero on output.
void write_trajectory(const std::filesystem::path& path, const Trajectory& traj, const SystemSpec& system);

/// t_ps,K_<n>_<m> for every ordered pair n != m (1-based), ps^-2.
void write_kernels(const std::filesystem::path& path, const KernelTable& table);

} // namespace gmemed::app
