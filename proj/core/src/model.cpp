#include "gmemed/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gmemed/errors.hpp"
#include "gmemed/units.hpp"

namespace gmemed {

namespace {

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string describe(SiteRef s) {
    std::ostringstream os;
    os << "[" << s.module << ", " << s.site << "]";
    return os.str();
}

double symmetric_tolerance(const Eigen::MatrixXd& m) {
    return 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
}

} // namespace

void BathSpec::validate() const {
    if (!(reorganization > 0.0) || !std::isfinite(reorganization)) {
        throw ValidationError("bath: reorganization energy lambda must be positive");
    }
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) {
        throw ValidationError("bath: cutoff frequency omega_c must be positive");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw ValidationError("bath: temperature must be positive");
    }
}

Eigen::MatrixXd ModuleSpec::hamiltonian() const {
    Eigen::MatrixXd h = intra_couplings;
    h.diagonal() = site_energies;
    return h;
}

void ModuleSpec::validate() const {
    const auto n = site_energies.size();
    if (n == 0) throw ValidationError("module '" + label + "': no sites");
    if (!finite(site_energies)) throw ValidationError("module '" + label + "': non-finite site energy");
    if (intra_couplings.rows() != n || intra_couplings.cols() != n) {
        throw ValidationError("module '" + label + "': intra_couplings must be " + std::to_string(n) +
                              "x" + std::to_string(n));
    }
    if (!finite(intra_couplings)) {
        throw ValidationError("module '" + label + "': non-finite intra coupling");
    }
    const double tol = symmetric_tolerance(intra_couplings);
    if ((intra_couplings - intra_couplings.transpose()).cwiseAbs().maxCoeff() > tol) {
        throw ValidationError("module '" + label + "': intra_couplings is not symmetric");
    }
    if (intra_couplings.diagonal().cwiseAbs().maxCoeff() > 0.0) {
        throw ValidationError("module '" + label + "': intra_couplings must have a zero diagonal");
    }
}

bool operator==(const ModuleSpec& a, const ModuleSpec& b) {
    return a.label == b.label && a.site_energies.size() == b.site_energies.size() &&
           a.site_energies == b.site_energies &&
           a.intra_couplings.rows() == b.intra_couplings.rows() &&
           a.intra_couplings.cols() == b.intra_couplings.cols() &&
           a.intra_couplings == b.intra_couplings;
}

bool operator==(const SystemSpec& a, const SystemSpec& b) {
    return a.modules == b.modules && a.inter_couplings == b.inter_couplings && a.bath == b.bath;
}

std::size_t SystemSpec::site_count() const noexcept {
    std::size_t n = 0;
    for (const auto& m : modules) n += m.size();
    return n;
}

std::size_t SystemSpec::module_offset(std::size_t module) const {
    if (module >= modules.size()) throw ValidationError("module index out of range");
    std::size_t offset = 0;
    for (std::size_t i = 0; i < module; ++i) offset += modules[i].size();
    return offset;
}

std::size_t SystemSpec::global_index(SiteRef site) const {
    if (site.module >= modules.size() || site.site >= modules[site.module].size()) {
        throw ValidationError("site " + describe(site) + " does not exist");
    }
    return module_offset(site.module) + site.site;
}

void SystemSpec::validate() const {
    if (modules.empty()) throw ValidationError("system: modules list is empty");
    bath.validate();
    for (const auto& m : modules) m.validate();

    std::map<std::pair<SiteRef, SiteRef>, const InterCoupling*> seen;
    for (const auto& c : inter_couplings) {
        for (const SiteRef s : {c.from, c.to}) {
            if (s.module >= modules.size() || s.site >= modules[s.module].size()) {
                throw ValidationError("inter_couplings: site " + describe(s) + " does not exist");
            }
        }
        if (c.from.module == c.to.module) {
            throw ValidationError("inter_couplings: " + describe(c.from) + " and " + describe(c.to) +
                                  " belong to the same module; J_{j_n k_m} must vanish for n = m");
        }
        if (!std::isfinite(c.value)) throw ValidationError("inter_couplings: non-finite value");
        const auto key = std::minmax(c.from, c.to);
        const auto [it, inserted] = seen.emplace(std::pair{key.first, key.second}, &c);
        if (!inserted) {
            const InterCoupling& prev = *it->second;
            if (prev.value != c.value) {
                throw ValidationError("inter_couplings: asymmetric J between " + describe(c.from) +
                                      " and " + describe(c.to));
            }
            if (prev.from == c.from) {
                throw ValidationError("inter_couplings: duplicate entry " + describe(c.from) +
                                      " -> " + describe(c.to));
            }
        }
    }
}

SystemSpec normalize(SystemSpec system) {
    system.validate();
    std::map<std::pair<SiteRef, SiteRef>, double> unique;
    for (const auto& c : system.inter_couplings) {
        const auto key = std::minmax(c.from, c.to);
        unique[{key.first, key.second}] = c.value;
    }
    system.inter_couplings.clear();
    for (const auto& [key, value] : unique) {
        system.inter_couplings.push_back(InterCoupling{key.first, key.second, value});
    }
    return system;
}

Eigen::MatrixXd SystemSpec::coupling_block(std::size_t n, std::size_t m) const {
    if (n >= modules.size() || m >= modules.size()) throw ValidationError("module index out of range");
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(modules[n].size()),
                                                  static_cast<Eigen::Index>(modules[m].size()));
    if (n == m) return block;
    for (const auto& c : inter_couplings) {
        if (c.from.module == n && c.to.module == m) {
            block(static_cast<Eigen::Index>(c.from.site), static_cast<Eigen::Index>(c.to.site)) = c.value;
        } else if (c.from.module == m && c.to.module == n) {
            block(static_cast<Eigen::Index>(c.to.site), static_cast<Eigen::Index>(c.from.site)) = c.value;
        }
    }
    return block;
}

Eigen::MatrixXd SystemSpec::site_hamiltonian() const {
    const auto n = static_cast<Eigen::Index>(site_count());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < modules.size(); ++i) {
        const auto off = static_cast<Eigen::Index>(module_offset(i));
        const auto sz = static_cast<Eigen::Index>(modules[i].size());
        h.block(off, off, sz, sz) = modules[i].hamiltonian();
    }
    for (const auto& c : inter_couplings) {
        const auto a = static_cast<Eigen::Index>(global_index(c.from));
        const auto b = static_cast<Eigen::Index>(global_index(c.to));
        h(a, b) = c.value;
        h(b, a) = c.value;
    }
    return h;
}

Eigendecomposition diagonalize_module(const ModuleSpec& module) {
    module.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(module.hamiltonian());
    if (solver.info() != Eigen::Success) {
        throw NumericalError("module '" + module.label + "': eigendecomposition failed");
    }
    Eigendecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    // Sign convention: the largest-magnitude component of each eigenvector is
    // positive; ties go to the lowest site index.
    for (Eigen::Index p = 0; p < out.transform.cols(); ++p) {
        auto col = out.transform.col(p);
        const double peak = col.cwiseAbs().maxCoeff();
        Eigen::Index pick = 0;
        while (std::abs(col(pick)) < peak - 1e-12) ++pick;
        if (col(pick) < 0.0) col = -col;
    }
    return out;
}

double ExcitonBasis::free_energy(std::size_t n) const {
    const auto& eps = modules.at(n).shifted_energies;
    const double beta = units::beta_wavenumber(bath.temperature);
    const double floor = eps.minCoeff();
    double z = 0.0;
    for (Eigen::Index p = 0; p < eps.size(); ++p) z += std::exp(-beta * (eps(p) - floor));
    return floor - std::log(z) / beta;
}

ExcitonBasis build_exciton_basis(const SystemSpec& system) {
    system.validate();
    ExcitonBasis basis;
    basis.bath = system.bath;
    const double beta = units::beta_wavenumber(system.bath.temperature);

    for (const auto& module : system.modules) {
        auto eig = diagonalize_module(module);
        ModuleExcitons ex;
        ex.energies = std::move(eig.eigenvalues);
        ex.transform = std::move(eig.transform);
        ex.reorganization = system.bath.reorganization *
                            ex.transform.array().pow(4).colwise().sum().transpose().matrix();
        ex.shifted_energies = ex.energies - ex.reorganization;
        const double floor = ex.shifted_energies.minCoeff();
        ex.boltzmann_weights = (-beta * (ex.shifted_energies.array() - floor)).exp().matrix();
        ex.boltzmann_weights /= ex.boltzmann_weights.sum();
        basis.modules.push_back(std::move(ex));
    }

    const std::size_t nm = system.modules.size();
    basis.effective_couplings.resize(nm * nm);
    for (std::size_t n = 0; n < nm; ++n) {
        for (std::size_t m = 0; m < nm; ++m) {
            basis.effective_couplings[n * nm + m] = basis.modules[n].transform.transpose() *
                                                    system.coupling_block(n, m) *
                                                    basis.modules[m].transform;
        }
    }
    return basis;
}

} // namespace gmemed
