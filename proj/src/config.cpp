#include "ppc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ppc {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

void check_keys(const ordered_json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) {
            fail(path.empty() ? key : path + "." + key, "unknown key");
        }
    }
}

const ordered_json& get_required(const ordered_json& obj, const std::string& path,
                                 const std::string& key) {
    if (!obj.contains(key)) {
        fail(path.empty() ? key : path + "." + key, "missing required key");
    }
    return obj.at(key);
}

double get_number(const ordered_json& node, const std::string& path) {
    if (!node.is_number()) {
        fail(path, "expected a number");
    }
    return node.get<double>();
}

int get_int(const ordered_json& node, const std::string& path) {
    if (!node.is_number_integer()) {
        fail(path, "expected an integer");
    }
    return node.get<int>();
}

std::string get_string(const ordered_json& node, const std::string& path) {
    if (!node.is_string()) {
        fail(path, "expected a string");
    }
    return node.get<std::string>();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

ModeLaw parse_law(const ordered_json& node, const std::string& path) {
    if (!node.is_object()) {
        fail(path, "expected an object");
    }
    const std::string type = get_string(get_required(node, path, "type"), path + ".type");
    if (type == "fixed") {
        check_keys(node, path, {"type", "omega"});
        return ModeLaw::fixed(get_number(get_required(node, path, "omega"), path + ".omega"));
    }
    if (type == "inverse") {
        check_keys(node, path, {"type", "a", "b"});
        return ModeLaw::inverse(get_number(get_required(node, path, "a"), path + ".a"),
                                get_number(get_required(node, path, "b"), path + ".b"));
    }
    fail(path + ".type", "expected \"fixed\" or \"inverse\"");
}

Complex parse_complex(const ordered_json& node, const std::string& path) {
    if (node.is_number()) {
        return Complex(node.get<double>(), 0.0);
    }
    if (node.is_array() && node.size() == 2 && node[0].is_number() && node[1].is_number()) {
        return Complex(node[0].get<double>(), node[1].get<double>());
    }
    fail(path, "expected a number or [re, im]");
}

ordered_json complex_to_json(const Complex& z) {
    if (z.imag() == 0.0) {
        return ordered_json(z.real());
    }
    return ordered_json::array({z.real(), z.imag()});
}

FitSpec parse_fit(const ordered_json& node, const std::string& path) {
    if (!node.is_object()) {
        fail(path, "expected an object");
    }
    check_keys(node, path, {"objective", "free", "fixed"});
    FitSpec spec;
    const std::string objective =
        get_string(get_required(node, path, "objective"), path + ".objective");
    if (objective == "trace") {
        spec.objective = FitObjective::TraceResidual;
    } else if (objective == "branch") {
        spec.objective = FitObjective::BranchResidual;
    } else {
        fail(path + ".objective", "expected \"trace\" or \"branch\"");
    }

    const ordered_json& free = get_required(node, path, "free");
    if (!free.is_array() || free.empty()) {
        fail(path + ".free", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < free.size(); ++i) {
        const std::string ppath = path + ".free[" + std::to_string(i) + "]";
        const ordered_json& pj = free[i];
        if (!pj.is_object()) {
            fail(ppath, "expected an object");
        }
        check_keys(pj, ppath, {"name", "initial", "lower", "upper"});
        FitParameter p;
        p.name = get_string(get_required(pj, ppath, "name"), ppath + ".name");
        p.initial = get_number(get_required(pj, ppath, "initial"), ppath + ".initial");
        p.lower = get_number(get_required(pj, ppath, "lower"), ppath + ".lower");
        p.upper = get_number(get_required(pj, ppath, "upper"), ppath + ".upper");
        if (!(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper)) {
            fail(ppath, "bounds must be finite with lower < upper");
        }
        if (!(p.initial >= p.lower && p.initial <= p.upper)) {
            fail(ppath + ".initial", "initial value outside bounds");
        }
        // Rates cannot go negative.
        if ((p.name == "gamma" || p.name.rfind("damping_", 0) == 0) && p.lower < 0.0) {
            fail(ppath + ".lower", "damping-like parameter '" + p.name + "' must have lower >= 0");
        }
        spec.free.push_back(std::move(p));
    }

    if (node.contains("fixed")) {
        const ordered_json& fixed = node.at("fixed");
        if (!fixed.is_object()) {
            fail(path + ".fixed", "expected an object of name: value");
        }
        for (const auto& [name, value] : fixed.items()) {
            spec.fixed.emplace_back(name, get_number(value, path + ".fixed." + name));
        }
    }

    std::set<std::string> seen;
    for (const FitParameter& p : spec.free) {
        if (!seen.insert(p.name).second) {
            fail(path, "parameter '" + p.name + "' declared twice");
        }
    }
    for (const auto& [name, value] : spec.fixed) {
        (void)value;
        if (!seen.insert(name).second) {
            fail(path, "parameter '" + name + "' declared twice");
        }
    }
    return spec;
}

ordered_json fit_to_json(const FitSpec& spec) {
    ordered_json node;
    node["objective"] = spec.objective == FitObjective::TraceResidual ? "trace" : "branch";
    node["free"] = ordered_json::array();
    for (const FitParameter& p : spec.free) {
        node["free"].push_back(
            {{"name", p.name}, {"initial", p.initial}, {"lower", p.lower}, {"upper", p.upper}});
    }
    ordered_json fixed = ordered_json::object();
    for (const auto& [name, value] : spec.fixed) {
        fixed[name] = value;
    }
    node["fixed"] = fixed;
    return node;
}

ProjectConfig config_from_json(const ordered_json& root);

ordered_json config_to_json_tree(const ProjectConfig& config) {
    ordered_json root;
    if (!config.preset.empty()) {
        root["preset"] = config.preset;
    }
    root["modes"] = ordered_json::array();
    for (const ModeConfig& mode : config.modes) {
        ordered_json law;
        if (mode.law.kind == ModeLaw::Kind::Fixed) {
            law = {{"type", "fixed"}, {"omega", mode.law.omega}};
        } else {
            law = {{"type", "inverse"}, {"a", mode.law.a}, {"b", mode.law.b}};
        }
        root["modes"].push_back({{"label", mode.label},
                                 {"intrinsic_damping", mode.intrinsic_damping},
                                 {"law", law}});
    }
    root["extrinsic_damping"] = config.extrinsic_damping;
    root["couplings"] = ordered_json::array();
    for (std::size_t i = 0; i < config.modes.size(); ++i) {
        for (std::size_t j = i + 1; j < config.modes.size(); ++j) {
            const Complex delta = config.coupling(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(j));
            root["couplings"].push_back({{"pair", {config.modes[i].label, config.modes[j].label}},
                                         {"real", delta.real()},
                                         {"imag", delta.imag()}});
        }
    }
    root["drive"] = ordered_json::array();
    for (Eigen::Index i = 0; i < config.drive.size(); ++i) {
        root["drive"].push_back(complex_to_json(config.drive[i]));
    }
    root["grid"] = {{"start", config.grid.start()},
                    {"stop", config.grid.stop()},
                    {"points", config.grid.points()}};
    if (!config.l_values.empty()) {
        root["sweep"] = {{"values", config.l_values}};
    }
    root["l_domain"] = {{"min", config.l_min}, {"max", config.l_max}};
    if (config.fit) {
        root["fit"] = fit_to_json(*config.fit);
    }
    return root;
}

ProjectConfig config_from_json(const ordered_json& root) {
    if (!root.is_object()) {
        fail("", "config root must be an object");
    }
    check_keys(root, "", {"preset", "modes", "extrinsic_damping", "couplings", "drive", "grid",
                          "sweep", "l_domain", "fit"});

    ProjectConfig config;
    if (root.contains("preset")) {
        config.preset = get_string(root.at("preset"), "preset");
    }

    const ordered_json& modes = get_required(root, "", "modes");
    if (!modes.is_array() || modes.size() < 2) {
        fail("modes", "expected an array of at least 2 modes");
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string mpath = "modes[" + std::to_string(i) + "]";
        const ordered_json& mj = modes[i];
        if (!mj.is_object()) {
            fail(mpath, "expected an object");
        }
        check_keys(mj, mpath, {"label", "intrinsic_damping", "law"});
        ModeConfig mode;
        mode.label = get_string(get_required(mj, mpath, "label"), mpath + ".label");
        mode.intrinsic_damping =
            get_number(get_required(mj, mpath, "intrinsic_damping"), mpath + ".intrinsic_damping");
        mode.law = parse_law(get_required(mj, mpath, "law"), mpath + ".law");
        config.modes.push_back(std::move(mode));
    }

    config.extrinsic_damping =
        get_number(get_required(root, "", "extrinsic_damping"), "extrinsic_damping");

    const std::size_t n = config.modes.size();
    config.coupling = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(n));
    const ordered_json& couplings = get_required(root, "", "couplings");
    if (!couplings.is_array()) {
        fail("couplings", "expected an array");
    }
    std::set<std::pair<int, int>> seen_pairs;
    for (std::size_t i = 0; i < couplings.size(); ++i) {
        const std::string cpath = "couplings[" + std::to_string(i) + "]";
        const ordered_json& cj = couplings[i];
        if (!cj.is_object()) {
            fail(cpath, "expected an object");
        }
        check_keys(cj, cpath, {"pair", "real", "imag"});
        const ordered_json& pair = get_required(cj, cpath, "pair");
        if (!pair.is_array() || pair.size() != 2) {
            fail(cpath + ".pair", "expected [labelA, labelB]");
        }
        const std::string la = get_string(pair[0], cpath + ".pair[0]");
        const std::string lb = get_string(pair[1], cpath + ".pair[1]");
        const int ia = config.mode_index(la);
        const int ib = config.mode_index(lb);
        if (ia < 0) {
            fail(cpath + ".pair[0]", "unknown mode label '" + la + "'");
        }
        if (ib < 0) {
            fail(cpath + ".pair[1]", "unknown mode label '" + lb + "'");
        }
        if (ia == ib) {
            fail(cpath + ".pair", "self-coupling is not allowed");
        }
        if (!seen_pairs.insert({std::min(ia, ib), std::max(ia, ib)}).second) {
            fail(cpath + ".pair", "coupling for this pair declared twice");
        }
        const double re = cj.contains("real") ? get_number(cj.at("real"), cpath + ".real") : 0.0;
        const double im = cj.contains("imag") ? get_number(cj.at("imag"), cpath + ".imag") : 0.0;
        config.coupling(ia, ib) = Complex(re, im);
        config.coupling(ib, ia) = Complex(re, im);
    }

    if (root.contains("drive")) {
        const ordered_json& drive = root.at("drive");
        if (!drive.is_array() || drive.size() != n) {
            fail("drive", "expected an array with one entry per mode");
        }
        config.drive.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            config.drive[static_cast<Eigen::Index>(i)] =
                parse_complex(drive[i], "drive[" + std::to_string(i) + "]");
        }
    } else {
        config.drive = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(n));
    }

    const ordered_json& grid = get_required(root, "", "grid");
    if (!grid.is_object()) {
        fail("grid", "expected an object");
    }
    check_keys(grid, "grid", {"start", "stop", "points"});
    try {
        config.grid = FrequencyGrid(get_number(get_required(grid, "grid", "start"), "grid.start"),
                                    get_number(get_required(grid, "grid", "stop"), "grid.stop"),
                                    get_int(get_required(grid, "grid", "points"), "grid.points"));
    } catch (const std::invalid_argument& e) {
        fail("grid", e.what());
    }

    if (root.contains("l_domain")) {
        const ordered_json& dom = root.at("l_domain");
        if (!dom.is_object()) {
            fail("l_domain", "expected an object");
        }
        check_keys(dom, "l_domain", {"min", "max"});
        config.l_min = get_number(get_required(dom, "l_domain", "min"), "l_domain.min");
        config.l_max = get_number(get_required(dom, "l_domain", "max"), "l_domain.max");
    }

    if (root.contains("sweep")) {
        const ordered_json& sweep = root.at("sweep");
        if (!sweep.is_object()) {
            fail("sweep", "expected an object");
        }
        if (sweep.contains("values")) {
            check_keys(sweep, "sweep", {"values"});
            const ordered_json& values = sweep.at("values");
            if (!values.is_array() || values.empty()) {
                fail("sweep.values", "expected a non-empty array");
            }
            for (std::size_t i = 0; i < values.size(); ++i) {
                config.l_values.push_back(
                    get_number(values[i], "sweep.values[" + std::to_string(i) + "]"));
            }
        } else {
            check_keys(sweep, "sweep", {"start", "stop", "step"});
            const double start = get_number(get_required(sweep, "sweep", "start"), "sweep.start");
            const double stop = get_number(get_required(sweep, "sweep", "stop"), "sweep.stop");
            const double step = get_number(get_required(sweep, "sweep", "step"), "sweep.step");
            if (!(step > 0.0 && stop >= start)) {
                fail("sweep", "need step > 0 and stop >= start");
            }
            const int count = static_cast<int>(std::floor((stop - start) / step + 0.5)) + 1;
            for (int i = 0; i < count; ++i) {
                config.l_values.push_back(start + step * i);
            }
        }
        for (std::size_t i = 1; i < config.l_values.size(); ++i) {
            if (!(config.l_values[i] > config.l_values[i - 1])) {
                fail("sweep.values", "L values must be strictly ascending");
            }
        }
    }

    if (root.contains("fit")) {
        config.fit = parse_fit(root.at("fit"), "fit");
    }

    config.validate();
    return config;
}

} // namespace

void ProjectConfig::validate() const {
    try {
        // Constructing the model types runs every model-level invariant.
        const GeometryMap gm = geometry();
        const double probe = 0.5 * (gm.l_min() + gm.l_max());
        const CoupledSystem sys = system_at(probe);
        (void)sys;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    std::set<std::string> labels;
    for (const ModeConfig& mode : modes) {
        if (mode.label.empty()) {
            throw ConfigError("invalid config: mode labels must be non-empty");
        }
        if (!labels.insert(lower(mode.label)).second) {
            throw ConfigError("invalid config: duplicate mode label '" + mode.label + "'");
        }
    }
    if (drive.size() != static_cast<Eigen::Index>(modes.size())) {
        throw ConfigError("invalid config: drive length must match mode count");
    }
    if (drive.norm() == 0.0) {
        throw ConfigError("invalid config: drive must be nonzero");
    }
    for (const double l : l_values) {
        if (l < l_min || l > l_max) {
            throw ConfigError("invalid config: sweep L = " + std::to_string(l) +
                              " outside l_domain");
        }
    }
}

GeometryMap ProjectConfig::geometry() const {
    std::vector<ModeLaw> laws;
    laws.reserve(modes.size());
    for (const ModeConfig& mode : modes) {
        laws.push_back(mode.law);
    }
    return GeometryMap(std::move(laws), l_min, l_max);
}

CoupledSystem ProjectConfig::system_at(double l, bool override_domain) const {
    const std::vector<double> freqs = map_geometry(geometry(), l, override_domain);
    std::vector<Mode> mode_list;
    mode_list.reserve(modes.size());
    for (std::size_t i = 0; i < modes.size(); ++i) {
        mode_list.emplace_back(modes[i].label, freqs[i], modes[i].intrinsic_damping);
    }
    return CoupledSystem(std::move(mode_list), extrinsic_damping, coupling);
}

int ProjectConfig::mode_index(const std::string& label) const {
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (lower(modes[i].label) == lower(label)) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

std::vector<std::string> preset_names() { return {"paper-fig4"}; }

ProjectConfig preset_config(const std::string& name) {
    if (name != "paper-fig4") {
        throw ConfigError("unknown preset '" + name + "'");
    }
    ProjectConfig config;
    config.preset = name;
    config.modes = {
        {"A", 0.02387, ModeLaw::fixed(5.0)},
        {"B", 0.03579, ModeLaw::inverse(14.0, 3.2)},
        {"C", 0.03290, ModeLaw::inverse(21.0, 3.55)},
    };
    config.extrinsic_damping = 0.012;
    config.coupling = Eigen::MatrixXcd::Zero(3, 3);
    config.coupling(0, 1) = config.coupling(1, 0) = Complex(0.18, 0.0);   // A-B: coherent
    config.coupling(1, 2) = config.coupling(2, 1) = Complex(0.02, 0.0);   // B-C: weak
    config.coupling(0, 2) = config.coupling(2, 0) = Complex(0.0, 0.025);  // A-C: dissipative
    config.drive = Eigen::VectorXcd(3);
    config.drive << Complex(1.0, 0.0), Complex(0.5, 0.0), Complex(0.6, 0.0);
    config.grid = FrequencyGrid(3.6, 9.2, 2001);
    config.l_min = 4.0;
    config.l_max = 18.0;
    for (int i = 0; i <= 70; ++i) {
        config.l_values.push_back(4.0 + 0.2 * i);
    }

    FitSpec fit;
    fit.objective = FitObjective::TraceResidual;
    fit.free = {
        {"delta_a_b_re", 0.15, 0.0, 0.5},
        {"delta_a_c_im", 0.02, 0.0, 0.2},
        {"delta_b_c_re", 0.02, 0.0, 0.3},
        {"gamma", 0.01, 1e-4, 0.1},
    };
    fit.fixed = {
        {"damping_a", 0.02387},
        {"damping_b", 0.03579},
        {"damping_c", 0.03290},
    };
    config.fit = fit;

    config.validate();
    return config;
}

ProjectConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    ordered_json root;
    try {
        root = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }

    if (root.is_object() && root.contains("preset")) {
        const std::string name = get_string(root.at("preset"), "preset");
        ordered_json merged = config_to_json_tree(preset_config(name));
        for (const auto& [key, value] : root.items()) {
            merged[key] = value;
        }
        return config_from_json(merged);
    }
    return config_from_json(root);
}

void save_config(const ProjectConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open for writing: " + path);
    }
    out << config_to_json(config) << "\n";
}

std::string config_to_json(const ProjectConfig& config) {
    return config_to_json_tree(config).dump(2);
}

} // namespace ppc
