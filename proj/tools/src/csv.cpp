#include "gmemed_app/csv.hpp"

#include <algorithm>
#include <iomanip>

#include "gmemed/errors.hpp"

namespace gmemed::app {

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), path_(path) {
    if (!out_) throw ValidationError("cannot write " + path.string());
    out_ << std::setprecision(9);
    for (const auto& column : header) *this << column;
    end_row();
}

CsvWriter& CsvWriter::operator<<(double value) {
    if (!first_) out_ << ',';
    out_ << value;
    first_ = false;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& value) {
    if (!first_) out_ << ',';
    if (value.find_first_of(",\"\n") == std::string::npos) {
        out_ << value;
    } else {
        out_ << '"';
        for (char c : value) {
            if (c == '"') out_ << '"';
            out_ << c;
        }
        out_ << '"';
    }
    first_ = false;
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    first_ = true;
    if (!out_) throw ValidationError("write failed: " + path_.string());
}

void write_trajectory(const std::filesystem::path& path, const Trajectory& traj, const SystemSpec& system) {
    std::vector<std::string> header{"t_ps"};
    const bool sites = traj.site_populations.size() > 0;
    if (sites) {
        for (std::size_t m = 0; m < system.module_count(); ++m) {
            for (std::size_t s = 0; s < system.modules[m].size(); ++s) {
                header.push_back("s_" + std::to_string(m) + "_" + std::to_string(s));
            }
        }
    }
    for (Eigen::Index m = 0; m < traj.populations.cols(); ++m) header.push_back("p_" + std::to_string(m + 1));
    CsvWriter csv(path, header);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        csv << traj.times[i];
        // tiny negative excursions are clamped here only; the trajectory keeps them
        if (sites) {
            for (Eigen::Index s = 0; s < traj.site_populations.cols(); ++s) {
                csv << std::max(0.0, traj.site_populations(row, s));
            }
        }
        for (Eigen::Index m = 0; m < traj.populations.cols(); ++m) csv << std::max(0.0, traj.populations(row, m));
        csv.end_row();
    }
}

void write_kernels(const std::filesystem::path& path, const KernelTable& table) {
    const std::size_t nm = table.module_count();
    std::vector<std::string> header{"t_ps"};
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n != m) header.push_back("K_" + std::to_string(n + 1) + "_" + std::to_string(m + 1));
        }
    }
    CsvWriter csv(path, header);
    for (std::size_t i = 0; i < table.grid().count; ++i) {
        csv << table.grid()[i];
        for (std::size_t n = 0; n < nm; ++n) {
            for (std::size_t m = 0; m < nm; ++m) {
                if (n != m) csv << table(n, m)(static_cast<Eigen::Index>(i));
            }
        }
        csv.end_row();
    }
}

} // namespace gmemed::app
