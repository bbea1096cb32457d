#include "dsmp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace dsmp {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + " must be an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key " + path + "." + it.key());
}

double need_number(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing key " + path + "." + key);
    if (!j[key].is_number()) throw ConfigError(path + "." + key + " must be a number");
    return j[key].get<double>();
}

double opt_number(const json& j, const std::string& path, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) throw ConfigError(path + "." + key + " must be a number");
    return j[key].get<double>();
}

long long need_int(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing key " + path + "." + key);
    if (!j[key].is_number_integer()) throw ConfigError(path + "." + key + " must be an integer");
    return j[key].get<long long>();
}

std::string need_string(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing key " + path + "." + key);
    if (!j[key].is_string()) throw ConfigError(path + "." + key + " must be a string");
    return j[key].get<std::string>();
}

}  // namespace

RegularMeasure parse_measure(const json& decl, const std::string& path, double a, double b,
                             int default_density_nodes) {
    check_keys(decl, path, {"atoms", "density"});
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    if (decl.contains("atoms")) {
        if (!decl["atoms"].is_array()) throw ConfigError(path + ".atoms must be an array");
        for (const auto& pair : decl["atoms"]) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
                !pair[1].is_number())
                throw ConfigError(path + ".atoms entries must be [location, mass] pairs");
            mu.atoms.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
        std::sort(mu.atoms.begin(), mu.atoms.end(),
                  [](const Atom& x, const Atom& y) { return x.location < y.location; });
    }
    if (decl.contains("density") && !decl["density"].is_null()) {
        const json& dd = decl["density"];
        const std::string dpath = path + ".density";
        const std::string family = need_string(dd, dpath, "family");
        const int nodes = static_cast<int>(opt_number(dd, dpath, "nodes", default_density_nodes));
        if (family == "uniform") {
            check_keys(dd, dpath, {"family", "mass", "nodes"});
            const RegularMeasure u =
                uniform_density_measure(a, b, need_number(dd, dpath, "mass"), nodes);
            mu.density = u.density;
        } else if (family == "linear") {
            check_keys(dd, dpath, {"family", "value_lo", "value_hi", "nodes"});
            const RegularMeasure l = linear_density_measure(
                a, b, need_number(dd, dpath, "value_lo"), need_number(dd, dpath, "value_hi"),
                nodes);
            mu.density = l.density;
        } else if (family == "truncated_geometric") {
            check_keys(dd, dpath, {"family", "terms"});
            const RegularMeasure gm =
                truncated_geometric_measure(a, b, static_cast<int>(need_int(dd, dpath, "terms")));
            // a discrete family: it contributes atoms, merged with any
            // explicitly declared ones
            std::vector<Atom> atoms = mu.atoms;
            atoms.insert(atoms.end(), gm.atoms.begin(), gm.atoms.end());
            std::sort(atoms.begin(), atoms.end(),
                      [](const Atom& x, const Atom& y) { return x.location < y.location; });
            mu.atoms = std::move(atoms);
        } else {
            throw ConfigError(dpath + ".family must be uniform, linear or truncated_geometric");
        }
    }
    try {
        mu.validate();
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return mu;
}

ExperimentConfig parse_config(const json& doc) {
    check_keys(doc, "config",
               {"model", "grid", "coefficients", "measures", "control", "initial_history",
                "monte_carlo", "scenario", "output_dir"});
    ExperimentConfig cfg;
    cfg.raw = doc;

    const json& model = doc.contains("model") ? doc["model"] : json::object();
    check_keys(model, "model", {"kind", "modes", "a"});
    cfg.op.kind = operator_kind_from_string(need_string(model, "model", "kind"));
    cfg.op.modes = static_cast<int>(opt_number(model, "model", "modes", 1));
    cfg.op.scalar_a = opt_number(model, "model", "a", 0.0);
    try {
        cfg.op.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    if (!doc.contains("grid")) throw ConfigError("missing key config.grid");
    const json& grid = doc["grid"];
    check_keys(grid, "grid", {"dt", "T", "delay"});
    try {
        cfg.grid = TimeGrid::make(need_number(grid, "grid", "dt"), need_number(grid, "grid", "T"),
                                  need_number(grid, "grid", "delay"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }

    const json& co = doc.contains("coefficients") ? doc["coefficients"] : json::object();
    check_keys(co, "coefficients", {"drift", "running_cost", "terminal_cost", "diffusion"});
    if (co.contains("drift")) {
        const json& f = co["drift"];
        const std::string fp = "coefficients.drift";
        const std::string family = need_string(f, fp, "family");
        if (family == "linear") {
            check_keys(f, fp, {"family", "b", "c"});
            cfg.coeffs.f.b = opt_number(f, fp, "b", 0.0);
            cfg.coeffs.f.c = opt_number(f, fp, "c", 0.0);
        } else if (family == "tanh") {
            check_keys(f, fp, {"family", "alpha", "beta", "c"});
            cfg.coeffs.f.alpha = opt_number(f, fp, "alpha", 1.0);
            cfg.coeffs.f.beta = opt_number(f, fp, "beta", 1.0);
            cfg.coeffs.f.c = opt_number(f, fp, "c", 0.0);
        } else if (family == "constant") {
            check_keys(f, fp, {"family", "k0", "c"});
            cfg.coeffs.f.k0 = opt_number(f, fp, "k0", 0.0);
            cfg.coeffs.f.c = opt_number(f, fp, "c", 0.0);
        } else if (family == "zero") {
            check_keys(f, fp, {"family"});
        } else {
            throw ConfigError(fp + ".family must be linear, tanh, constant or zero");
        }
    }
    if (co.contains("running_cost")) {
        const json& l = co["running_cost"];
        check_keys(l, "coefficients.running_cost", {"q", "r"});
        cfg.coeffs.l.q = opt_number(l, "coefficients.running_cost", "q", 0.0);
        cfg.coeffs.l.r = opt_number(l, "coefficients.running_cost", "r", 0.0);
    }
    if (co.contains("terminal_cost")) {
        const json& h = co["terminal_cost"];
        check_keys(h, "coefficients.terminal_cost", {"m", "m_lin"});
        cfg.coeffs.h.m = opt_number(h, "coefficients.terminal_cost", "m", 0.0);
        cfg.coeffs.h.m_lin = opt_number(h, "coefficients.terminal_cost", "m_lin", 0.0);
    }
    if (co.contains("diffusion")) {
        const json& gg = co["diffusion"];
        check_keys(gg, "coefficients.diffusion", {"sigma0", "sigma1", "freq"});
        cfg.coeffs.g.sigma0 = opt_number(gg, "coefficients.diffusion", "sigma0", 0.0);
        cfg.coeffs.g.sigma1 = opt_number(gg, "coefficients.diffusion", "sigma1", 0.0);
        cfg.coeffs.g.freq = opt_number(gg, "coefficients.diffusion", "freq", 0.0);
    }

    const double d = cfg.grid.delay(), T = cfg.grid.T();
    const int dens_nodes = 2 * cfg.grid.L + 1;  // 2x the solver grid over a delay window
    const json& ms = doc.contains("measures") ? doc["measures"] : json::object();
    check_keys(ms, "measures", {"mu_f", "mu_l", "mu_h"});
    cfg.mu_f = ms.contains("mu_f") ? parse_measure(ms["mu_f"], "measures.mu_f", -d, 0.0, dens_nodes)
                                   : dirac_measure(-d, 0.0, 0.0);
    cfg.mu_l = ms.contains("mu_l") ? parse_measure(ms["mu_l"], "measures.mu_l", -d, 0.0, dens_nodes)
                                   : dirac_measure(-d, 0.0, 0.0);
    cfg.mu_h = ms.contains("mu_h")
                   ? parse_measure(ms["mu_h"], "measures.mu_h", T - d, T, dens_nodes)
                   : dirac_measure(T - d, T, T);

    const json& ctrl = doc.contains("control") ? doc["control"] : json::object();
    check_keys(ctrl, "control", {"u_min", "u_max", "initial"});
    cfg.box.lo = opt_number(ctrl, "control", "u_min", -1e30);
    cfg.box.hi = opt_number(ctrl, "control", "u_max", 1e30);
    if (!(cfg.box.lo <= cfg.box.hi)) throw ConfigError("control.u_min must be <= control.u_max");
    cfg.u_initial = opt_number(ctrl, "control", "initial", 0.0);
    if (cfg.u_initial < cfg.box.lo || cfg.u_initial > cfg.box.hi)
        throw ConfigError("control.initial lies outside [control.u_min, control.u_max]");

    const json& ih = doc.contains("initial_history") ? doc["initial_history"] : json::object();
    check_keys(ih, "initial_history", {"value", "modes", "slope"});
    const int dim = cfg.op.state_dim();
    cfg.initial.base.assign(dim, 0.0);
    if (ih.contains("modes")) {
        if (!ih["modes"].is_array() || static_cast<int>(ih["modes"].size()) > dim)
            throw ConfigError("initial_history.modes must be an array of at most state_dim numbers");
        int k = 0;
        for (const auto& v : ih["modes"]) cfg.initial.base[k++] = v.get<double>();
    } else {
        cfg.initial.base[0] = opt_number(ih, "initial_history", "value", 1.0);
    }
    const double slope = opt_number(ih, "initial_history", "slope", 0.0);
    if (slope != 0.0) {
        cfg.initial.slope = cfg.initial.base;
        for (double& v : cfg.initial.slope) v *= slope;
    }

    const json& mc = doc.contains("monte_carlo") ? doc["monte_carlo"] : json::object();
    check_keys(mc, "monte_carlo", {"paths", "seed"});
    cfg.paths = static_cast<int>(opt_number(mc, "monte_carlo", "paths", 1));
    if (cfg.paths < 1) throw ConfigError("monte_carlo.paths must be >= 1");
    cfg.seed = static_cast<uint64_t>(opt_number(mc, "monte_carlo", "seed", 0));

    if (!doc.contains("scenario")) throw ConfigError("missing key config.scenario");
    const json& sc = doc["scenario"];
    require_object(sc, "scenario");
    if (!sc.contains("name")) throw ConfigError("missing key scenario.name");
    cfg.scenario = sc["name"].get<std::string>();
    cfg.scenario_params = sc;

    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string keypath = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json* node = &doc;
    size_t pos = 0;
    while (true) {
        const size_t dot = keypath.find('.', pos);
        const std::string key = keypath.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw ConfigError("bad override key: " + keypath);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

uint64_t config_hash(const json& doc) {
    const std::string s = doc.dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

NoiseEnsemble ExperimentConfig::make_noise(int substeps) const {
    NoiseEnsemble n;
    n.seed = seed;
    n.paths = paths;
    n.steps = grid.K;
    n.modes = op.noise_dim();
    n.dt = grid.dt;
    n.substeps = substeps;
    return n;
}

ControlProcess ExperimentConfig::make_initial_control() const {
    return ControlProcess::constant(grid.K, op.control_dim(), u_initial, box);
}

}  // namespace dsmp
