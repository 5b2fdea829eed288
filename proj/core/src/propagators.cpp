#include "gmemed/propagators.hpp"

#include <cmath>
#include <sstream>

#include "gmemed/errors.hpp"

namespace gmemed {

namespace {

void check_initial(const Eigen::VectorXd& p0, std::size_t modules) {
    if (static_cast<std::size_t>(p0.size()) != modules) {
        throw ValidationError("initial populations: expected " + std::to_string(modules) + " entries, got " +
                              std::to_string(p0.size()));
    }
    if (!p0.allFinite() || p0.minCoeff() < 0.0) {
        throw ValidationError("initial populations must be finite and non-negative");
    }
    if (std::abs(p0.sum() - 1.0) > 1e-12) throw ValidationError("initial populations must sum to 1");
}

// Kernel samples per propagation step; checks the propagation horizon.
std::size_t kernel_stride(const KernelTable& table, const UniformGrid& grid) {
    grid.validate();
    const double ratio = grid.step / table.grid().step;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
        throw ValidationError("propagation step must be an integer multiple of the kernel grid step");
    }
    if (grid.horizon() > table.grid().horizon() * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "kernel grid (" << table.grid().horizon() << " ps) is shorter than the propagation horizon ("
           << grid.horizon() << " ps)";
        throw ValidationError(os.str());
    }
    return stride;
}

Trajectory start(const UniformGrid& grid, std::size_t modules, std::string method) {
    Trajectory traj;
    traj.times = grid.points();
    traj.populations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.count),
                                             static_cast<Eigen::Index>(modules));
    traj.method = std::move(method);
    return traj;
}

void finish(Trajectory& traj) {
    traj.max_negative_excursion = std::min(0.0, traj.populations.minCoeff());
}

// Generator built from a rate-like matrix r(n, m) for n -> m.
Eigen::MatrixXd generator_from(const Eigen::MatrixXd& r) {
    Eigen::MatrixXd w = r.transpose();
    w.diagonal() = -r.rowwise().sum() + r.diagonal();
    return w;
}

} // namespace

Eigen::VectorXd localized_initial(std::size_t modules, std::size_t n) {
    if (n >= modules) throw ValidationError("initial module index out of range");
    Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(modules));
    p(static_cast<Eigen::Index>(n)) = 1.0;
    return p;
}

Trajectory propagate_convolution(const KernelTable& table, const Eigen::VectorXd& p0,
                                 const UniformGrid& grid) {
    const std::size_t nm = table.module_count();
    check_initial(p0, nm);
    const std::size_t stride = kernel_stride(table, grid);
    const double h = grid.step;
    const auto dim = static_cast<Eigen::Index>(nm);

    // Memory generator M(t_j): M(n, m) = K_{m->n}, M(n, n) = -sum_m K_{n->m}.
    std::vector<Eigen::MatrixXd> memory(grid.count, Eigen::MatrixXd::Zero(dim, dim));
    for (std::size_t j = 0; j < grid.count; ++j) {
        Eigen::MatrixXd r(dim, dim);
        for (std::size_t n = 0; n < nm; ++n) {
            for (std::size_t m = 0; m < nm; ++m) {
                r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
                    n == m ? 0.0 : table(n, m)(static_cast<Eigen::Index>(j * stride));
            }
        }
        memory[j] = generator_from(r);
    }

    Trajectory traj = start(grid, nm, "convolution");
    std::vector<Eigen::VectorXd> p(grid.count);
    p[0] = p0;
    traj.populations.row(0) = p0.transpose();

    // Trapezoid in s for the convolution, trapezoid in t for the ODE; the
    // implicit M(0) p_{k+1} term is solved exactly.
    const Eigen::MatrixXd implicit =
        Eigen::MatrixXd::Identity(dim, dim) - 0.25 * h * h * memory[0];
    const Eigen::PartialPivLU<Eigen::MatrixXd> solver(implicit);
    Eigen::VectorXd force = Eigen::VectorXd::Zero(dim); // F_k
    for (std::size_t k = 0; k + 1 < grid.count; ++k) {
        Eigen::VectorXd history = 0.5 * memory[k + 1] * p[0];
        for (std::size_t j = 1; j <= k; ++j) history += memory[k + 1 - j] * p[j];
        history *= h;
        const Eigen::VectorXd rhs = p[k] + 0.5 * h * (force + history);
        p[k + 1] = solver.solve(rhs);
        force = history + 0.5 * h * memory[0] * p[k + 1];
        traj.populations.row(static_cast<Eigen::Index>(k + 1)) = p[k + 1].transpose();
    }
    finish(traj);
    return traj;
}

Eigen::MatrixXd instantaneous_rates(const KernelTable& table, double t) {
    const std::size_t nm = table.module_count();
    const auto& kg = table.grid();
    if (!(t >= 0.0) || t > kg.horizon() * (1.0 + 1e-12)) {
        throw ValidationError("instantaneous_rates: time outside the kernel grid");
    }
    const double x = std::min(t / kg.step, static_cast<double>(kg.count - 1));
    auto i = static_cast<std::size_t>(std::floor(x));
    if (i + 1 >= kg.count) i = kg.count >= 2 ? kg.count - 2 : 0;
    const double frac = kg.count >= 2 ? x - static_cast<double>(i) : 0.0;

    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nm), static_cast<Eigen::Index>(nm));
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            if (n == m) continue;
            const Eigen::VectorXd& k = table(n, m);
            // cumulative trapezoid up to i, then one more panel for i + 1
            double below = 0.0;
            for (std::size_t s = 1; s <= i; ++s) {
                below += 0.5 * kg.step * (k(static_cast<Eigen::Index>(s - 1)) + k(static_cast<Eigen::Index>(s)));
            }
            double above = below;
            if (kg.count >= 2) {
                above += 0.5 * kg.step * (k(static_cast<Eigen::Index>(i)) + k(static_cast<Eigen::Index>(i + 1)));
            }
            r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = below + frac * (above - below);
        }
    }
    return r;
}

Trajectory propagate_time_local(const KernelTable& table, const Eigen::VectorXd& p0,
                                const UniformGrid& grid) {
    const std::size_t nm = table.module_count();
    check_initial(p0, nm);
    kernel_stride(table, grid);
    const auto& kg = table.grid();
    const auto dim = static_cast<Eigen::Index>(nm);

    // Cumulative integrals of every kernel on the kernel grid.
    std::vector<Eigen::MatrixXd> cumulative(kg.count, Eigen::MatrixXd::Zero(dim, dim));
    for (std::size_t s = 1; s < kg.count; ++s) {
        cumulative[s] = cumulative[s - 1];
        for (std::size_t n = 0; n < nm; ++n) {
            for (std::size_t m = 0; m < nm; ++m) {
                if (n == m) continue;
                const Eigen::VectorXd& k = table(n, m);
                cumulative[s](static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) +=
                    0.5 * kg.step * (k(static_cast<Eigen::Index>(s - 1)) + k(static_cast<Eigen::Index>(s)));
            }
        }
    }
    const auto generator_at = [&](double t) {
        const double x = std::min(t / kg.step, static_cast<double>(kg.count - 1));
        auto i = static_cast<std::size_t>(std::floor(x));
        if (i + 1 >= kg.count) {
            return generator_from(cumulative[kg.count - 1]);
        }
        const double frac = x - static_cast<double>(i);
        return generator_from((1.0 - frac) * cumulative[i] + frac * cumulative[i + 1]);
    };

    Trajectory traj = start(grid, nm, "timelocal");
    Eigen::VectorXd p = p0;
    traj.populations.row(0) = p.transpose();
    const double h = grid.step;
    for (std::size_t k = 0; k + 1 < grid.count; ++k) {
        const double t = grid[k];
        const Eigen::MatrixXd g0 = generator_at(t);
        const Eigen::MatrixXd gh = generator_at(t + 0.5 * h);
        const Eigen::MatrixXd g1 = generator_at(t + h);
        const Eigen::VectorXd k1 = g0 * p;
        const Eigen::VectorXd k2 = gh * (p + 0.5 * h * k1);
        const Eigen::VectorXd k3 = gh * (p + 0.5 * h * k2);
        const Eigen::VectorXd k4 = g1 * (p + h * k3);
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj.populations.row(static_cast<Eigen::Index>(k + 1)) = p.transpose();
    }
    finish(traj);
    return traj;
}

Eigen::MatrixXd rate_propagator(const Eigen::MatrixXd& generator, double t) {
    const Eigen::Index n = generator.rows();
    const double q = (-generator.diagonal()).maxCoeff();
    if (!(q > 0.0) || t == 0.0) return Eigen::MatrixXd::Identity(n, n);

    // exp(W t) = (exp(W t / s))^s with q t / s <= 30 so that exp(-q t / s) stays
    // well inside double range.
    const auto pieces = static_cast<int>(std::ceil(q * t / 30.0));
    const double tau = t / pieces;
    const Eigen::MatrixXd jump = Eigen::MatrixXd::Identity(n, n) + generator / q;
    const double mean = q * tau;

    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    double poisson = std::exp(-mean);
    double mass = poisson;
    Eigen::MatrixXd piece = poisson * power;
    for (int k = 1; 1.0 - mass > 1e-17 && k < 10000; ++k) {
        power = jump * power;
        poisson *= mean / k;
        mass += poisson;
        piece += poisson * power;
    }
    Eigen::MatrixXd out = piece;
    for (int i = 1; i < pieces; ++i) out = piece * out;
    return out;
}

Trajectory propagate_pauli(const RateMatrix& rates, const Eigen::VectorXd& p0, const UniformGrid& grid) {
    grid.validate();
    const std::size_t nm = rates.module_count();
    check_initial(p0, nm);
    if (!rates.rates.allFinite() || rates.rates.minCoeff() < 0.0) {
        throw ValidationError("pauli: rates must be finite and non-negative");
    }
    const Eigen::MatrixXd step = rate_propagator(rates.generator(), grid.step);
    Trajectory traj = start(grid, nm, "pauli");
    Eigen::VectorXd p = p0;
    traj.populations.row(0) = p.transpose();
    for (std::size_t k = 1; k < grid.count; ++k) {
        p = step * p;
        traj.populations.row(static_cast<Eigen::Index>(k)) = p.transpose();
    }
    finish(traj);
    return traj;
}

} // namespace gmemed
