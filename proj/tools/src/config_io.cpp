#include "gmemed_app/config_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace gmemed::app {

namespace {

std::string anchored(const std::string& source, int line, const std::string& message) {
    if (line <= 0) return source + ": " + message;
    return source + ":" + std::to_string(line) + ": " + message;
}

int line_of(const YAML::Node& node) {
    const YAML::Mark mark = node.Mark();
    return mark.line < 0 ? 0 : mark.line + 1;
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
        throw ConfigError(source_, line_of(node), message);
    }

    YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& where) const {
        const YAML::Node node = parent[key];
        if (!node) fail(parent, "missing field '" + key + "' in " + where);
        return node;
    }

    double number(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be a number");
        try {
            const double value = node.as<double>();
            if (!std::isfinite(value)) fail(node, what + " must be finite");
            return value;
        } catch (const YAML::BadConversion&) {
            fail(node, what + " must be a number, got '" + node.Scalar() + "'");
        }
    }

    int integer(const YAML::Node& node, const std::string& what) const {
        if (!node.IsScalar()) fail(node, what + " must be an integer");
        try {
            return node.as<int>();
        } catch (const YAML::BadConversion&) {
            fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
        }
    }

    void sequence(const YAML::Node& node, const std::string& what) const {
        if (!node.IsSequence()) fail(node, what + " must be a list");
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

BathSpec read_bath(const Reader& r, const YAML::Node& root) {
    const YAML::Node node = r.require(root, "bath", "configuration");
    if (!node.IsMap()) r.fail(node, "bath must be a mapping");
    BathSpec bath;
    bath.reorganization = r.number(r.require(node, "lambda", "bath"), "bath.lambda");
    bath.cutoff = r.number(r.require(node, "omega_c", "bath"), "bath.omega_c");
    bath.temperature = r.number(r.require(node, "temperature", "bath"), "bath.temperature");
    if (!(bath.reorganization > 0.0)) r.fail(node["lambda"], "bath.lambda must be positive");
    if (!(bath.cutoff > 0.0)) r.fail(node["omega_c"], "bath.omega_c must be positive");
    if (!(bath.temperature > 0.0)) r.fail(node["temperature"], "bath.temperature must be positive");
    return bath;
}

ModuleSpec read_module(const Reader& r, const YAML::Node& node, std::size_t index) {
    const std::string where = "module " + std::to_string(index);
    if (!node.IsMap()) r.fail(node, where + " must be a mapping");
    ModuleSpec module;
    module.label = node["label"] ? node["label"].as<std::string>() : std::to_string(index);

    const YAML::Node energies = r.require(node, "site_energies", where);
    r.sequence(energies, where + " site_energies");
    if (energies.size() == 0) r.fail(energies, where + " has no sites");
    const auto n = static_cast<Eigen::Index>(energies.size());
    module.site_energies.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        module.site_energies(i) = r.number(energies[static_cast<std::size_t>(i)], where + " site energy");
    }

    module.intra_couplings = Eigen::MatrixXd::Zero(n, n);
    if (const YAML::Node couplings = node["intra_couplings"]) {
        r.sequence(couplings, where + " intra_couplings");
        if (static_cast<Eigen::Index>(couplings.size()) != n) {
            r.fail(couplings, where + " intra_couplings must be " + std::to_string(n) + "x" + std::to_string(n));
        }
        for (Eigen::Index a = 0; a < n; ++a) {
            const YAML::Node row = couplings[static_cast<std::size_t>(a)];
            r.sequence(row, where + " intra_couplings row");
            if (static_cast<Eigen::Index>(row.size()) != n) {
                r.fail(row, where + " intra_couplings must be " + std::to_string(n) + "x" + std::to_string(n));
            }
            for (Eigen::Index b = 0; b < n; ++b) {
                module.intra_couplings(a, b) = r.number(row[static_cast<std::size_t>(b)], where + " coupling");
            }
        }
        for (Eigen::Index a = 0; a < n; ++a) {
            const YAML::Node row = couplings[static_cast<std::size_t>(a)];
            if (module.intra_couplings(a, a) != 0.0) {
                r.fail(row[static_cast<std::size_t>(a)], where + " intra_couplings must have a zero diagonal "
                                                                  "(site energies carry the diagonal)");
            }
            for (Eigen::Index b = a + 1; b < n; ++b) {
                if (module.intra_couplings(a, b) != module.intra_couplings(b, a)) {
                    std::ostringstream os;
                    os << where << " couplings are not symmetric: J(" << a + 1 << "," << b + 1
                       << ") = " << module.intra_couplings(a, b) << " but J(" << b + 1 << "," << a + 1
                       << ") = " << module.intra_couplings(b, a);
                    r.fail(row[static_cast<std::size_t>(b)], os.str());
                }
            }
        }
    }
    return module;
}

SiteRef read_site(const Reader& r, const YAML::Node& node, const std::vector<ModuleSpec>& modules,
                  const std::string& what) {
    r.sequence(node, what);
    if (node.size() != 2) r.fail(node, what + " must be [module, site]");
    const int m = r.integer(node[0], what + " module");
    const int s = r.integer(node[1], what + " site");
    if (m < 0 || static_cast<std::size_t>(m) >= modules.size()) {
        r.fail(node, what + " refers to module " + std::to_string(m) + ", which does not exist");
    }
    if (s < 0 || static_cast<std::size_t>(s) >= modules[static_cast<std::size_t>(m)].size()) {
        r.fail(node, what + " refers to site " + std::to_string(s) + " of module " + std::to_string(m) +
                         ", which does not exist");
    }
    return {static_cast<std::size_t>(m), static_cast<std::size_t>(s)};
}

std::vector<InterCoupling> read_inter(const Reader& r, const YAML::Node& root, const std::vector<ModuleSpec>& modules) {
    std::vector<InterCoupling> out;
    const YAML::Node list = root["inter_couplings"];
    if (!list) return out;
    r.sequence(list, "inter_couplings");
    std::set<std::pair<SiteRef, SiteRef>> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const YAML::Node entry = list[i];
        const std::string where = "inter_couplings entry " + std::to_string(i + 1);
        if (!entry.IsMap()) r.fail(entry, where + " must be a mapping");
        InterCoupling c;
        c.from = read_site(r, r.require(entry, "from", where), modules, where + " 'from'");
        c.to = read_site(r, r.require(entry, "to", where), modules, where + " 'to'");
        c.value = r.number(r.require(entry, "value", where), where + " value");
        if (c.from.module == c.to.module) {
            r.fail(entry, where + " couples two sites of module " + std::to_string(c.from.module) +
                              "; inter-module couplings J_{j_n k_m} must vanish for n = m "
                              "(put intra-module couplings under the module's 'intra_couplings')");
        }
        const auto key = c.from < c.to ? std::pair{c.from, c.to} : std::pair{c.to, c.from};
        if (!seen.insert(key).second) r.fail(entry, where + " duplicates an earlier coupling of the same pair");
        out.push_back(c);
    }
    return out;
}

NumericsSettings read_numerics(const Reader& r, const YAML::Node& root) {
    NumericsSettings out;
    const YAML::Node node = root["numerics"];
    if (!node) return out;
    if (!node.IsMap()) r.fail(node, "numerics must be a mapping");
    if (node["time_step_fs"]) out.time_step_fs = r.number(node["time_step_fs"], "numerics.time_step_fs");
    if (node["horizon_ps"]) out.horizon_ps = r.number(node["horizon_ps"], "numerics.horizon_ps");
    if (node["kernel_horizon_ps"]) {
        out.kernel_horizon_ps = r.number(node["kernel_horizon_ps"], "numerics.kernel_horizon_ps");
    }
    if (!(out.time_step_fs > 0.0)) r.fail(node, "numerics.time_step_fs must be positive");
    if (!(out.horizon_ps > 0.0)) r.fail(node, "numerics.horizon_ps must be positive");
    if (out.kernel_horizon_ps < 0.0) r.fail(node, "numerics.kernel_horizon_ps must be non-negative");
    return out;
}

HeomSettings read_heom(const Reader& r, const YAML::Node& root) {
    HeomSettings out;
    const YAML::Node node = root["heom"];
    if (!node) return out;
    if (!node.IsMap()) r.fail(node, "heom must be a mapping");
    if (node["depth"]) out.depth = r.integer(node["depth"], "heom.depth");
    if (node["matsubara"]) out.matsubara = r.integer(node["matsubara"], "heom.matsubara");
    if (node["terminator"]) {
        try {
            out.terminator = terminator_from_string(node["terminator"].as<std::string>());
        } catch (const ValidationError& e) {
            r.fail(node["terminator"], e.what());
        }
    }
    if (node["time_step_fs"]) out.time_step_fs = r.number(node["time_step_fs"], "heom.time_step_fs");
    if (node["tolerance"]) out.tolerance = r.number(node["tolerance"], "heom.tolerance");
    if (node["max_depth"]) out.max_depth = r.integer(node["max_depth"], "heom.max_depth");
    if (node["max_matsubara"]) out.max_matsubara = r.integer(node["max_matsubara"], "heom.max_matsubara");
    if (out.depth < 1 || out.depth > out.max_depth) r.fail(node, "heom.depth must be in [1, max_depth]");
    if (out.matsubara < 0 || out.matsubara > out.max_matsubara) {
        r.fail(node, "heom.matsubara must be in [0, max_matsubara]");
    }
    if (!(out.time_step_fs > 0.0)) r.fail(node, "heom.time_step_fs must be positive");
    if (!(out.tolerance > 0.0)) r.fail(node, "heom.tolerance must be positive");
    return out;
}

} // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : ValidationError(anchored(source, line, message)), line_(line) {}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source, e.mark.line + 1, "malformed YAML: " + e.msg);
    }
    const Reader r(source);
    if (!root || !root.IsMap()) throw ConfigError(source, 0, "configuration must be a YAML mapping");

    RunConfig config;
    config.system.bath = read_bath(r, root);
    const YAML::Node modules = r.require(root, "modules", "configuration");
    r.sequence(modules, "modules");
    if (modules.size() == 0) r.fail(modules, "modules list is empty; at least one module is required");
    for (std::size_t i = 0; i < modules.size(); ++i) {
        config.system.modules.push_back(read_module(r, modules[i], i));
    }
    config.system.inter_couplings = read_inter(r, root, config.system.modules);
    config.numerics = read_numerics(r, root);
    config.heom = read_heom(r, root);
    try {
        config.system.validate();
    } catch (const ValidationError& e) {
        throw ConfigError(source, 0, e.what());
    }
    return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open configuration file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path.string());
}

SystemSpec parse_system(const std::filesystem::path& path) { return parse_config(path).system; }

std::string serialize_config(const RunConfig& config) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    const BathSpec& bath = config.system.bath;
    out << YAML::Key << "bath" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "lambda" << YAML::Value << bath.reorganization;
    out << YAML::Key << "omega_c" << YAML::Value << bath.cutoff;
    out << YAML::Key << "temperature" << YAML::Value << bath.temperature;
    out << YAML::EndMap;

    out << YAML::Key << "modules" << YAML::Value << YAML::BeginSeq;
    for (const ModuleSpec& module : config.system.modules) {
        out << YAML::BeginMap;
        out << YAML::Key << "label" << YAML::Value << YAML::DoubleQuoted << module.label;
        out << YAML::Key << "site_energies" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index i = 0; i < module.site_energies.size(); ++i) out << module.site_energies(i);
        out << YAML::EndSeq;
        out << YAML::Key << "intra_couplings" << YAML::Value << YAML::BeginSeq;
        for (Eigen::Index a = 0; a < module.intra_couplings.rows(); ++a) {
            out << YAML::Flow << YAML::BeginSeq;
            for (Eigen::Index b = 0; b < module.intra_couplings.cols(); ++b) out << module.intra_couplings(a, b);
            out << YAML::EndSeq;
        }
        out << YAML::EndSeq;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "inter_couplings" << YAML::Value << YAML::BeginSeq;
    for (const InterCoupling& c : config.system.inter_couplings) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "from" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.from.module << c.from.site
            << YAML::EndSeq;
        out << YAML::Key << "to" << YAML::Value << YAML::Flow << YAML::BeginSeq << c.to.module << c.to.site << YAML::EndSeq;
        out << YAML::Key << "value" << YAML::Value << c.value;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    const NumericsSettings& num = config.numerics;
    out << YAML::Key << "numerics" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "time_step_fs" << YAML::Value << num.time_step_fs;
    out << YAML::Key << "horizon_ps" << YAML::Value << num.horizon_ps;
    out << YAML::Key << "kernel_horizon_ps" << YAML::Value << num.kernel_horizon_ps;
    out << YAML::EndMap;

    const HeomSettings& h = config.heom;
    out << YAML::Key << "heom" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "depth" << YAML::Value << h.depth;
    out << YAML::Key << "matsubara" << YAML::Value << h.matsubara;
    out << YAML::Key << "terminator" << YAML::Value << to_string(h.terminator);
    out << YAML::Key << "time_step_fs" << YAML::Value << h.time_step_fs;
    out << YAML::Key << "tolerance" << YAML::Value << h.tolerance;
    out << YAML::Key << "max_depth" << YAML::Value << h.max_depth;
    out << YAML::Key << "max_matsubara" << YAML::Value << h.max_matsubara;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace gmemed::app
