// time_grid.hpp — uniform sampling grids in time (ps) and angular frequency (rad/ps)

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gmemed/errors.hpp"

namespace gmemed {

// Points t_k = k * step, k = 0 .. count-1.
struct UniformGrid {
    double step{0.0};
    std::size_t count{0};

    static UniformGrid from_horizon(double horizon, double step) {
        if (!(step > 0.0) || !(horizon >= 0.0)) {
            throw ValidationError("UniformGrid: step must be positive and horizon non-negative");
        }
        const double n = horizon / step;
        const auto intervals = static_cast<std::size_t>(std::llround(n));
        if (std::abs(n - static_cast<double>(intervals)) > 1e-9 * std::max(1.0, n)) {
            throw ValidationError("UniformGrid: horizon must be an integer multiple of the step");
        }
        return UniformGrid{step, intervals + 1};
    }

    double operator[](std::size_t k) const noexcept { return step * static_cast<double>(k); }
    double horizon() const noexcept { return count == 0 ? 0.0 : (*this)[count - 1]; }

    std::vector<double> points() const {
        std::vector<double> out(count);
        for (std::size_t k = 0; k < count; ++k) out[k] = (*this)[k];
        return out;
    }

    void validate() const {
        if (!(step > 0.0) || !std::isfinite(step)) {
            throw ValidationError("UniformGrid: step must be positive and finite");
        }
        if (count == 0) throw ValidationError("UniformGrid: grid is empty");
    }
};

// Points w_k = start + k * step.
struct FrequencyGrid {
    double start{0.0};
    double step{0.0};
    std::size_t count{0};

    double operator[](std::size_t k) const noexcept {
        return start + step * static_cast<double>(k);
    }
    double stop() const noexcept { return (*this)[count == 0 ? 0 : count - 1]; }
};

} // namespace gmemed
