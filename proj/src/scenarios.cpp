#include "dsmp/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "dsmp/absde.hpp"
#include "dsmp/rng.hpp"
#include "dsmp/smp.hpp"
#include "dsmp/variation.hpp"
#include "dsmp/version.hpp"

namespace dsmp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string iso_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Collects the scenario's outputs and seals results.json + manifest.json.
class Outputs {
public:
    Outputs(const ExperimentConfig& cfg) : cfg_(cfg), started_(iso_now()) {
        dir_ = cfg.output_dir;
        fs::create_directories(dir_);
    }

    void csv(const std::string& name, const std::vector<std::string>& cols,
             const std::vector<std::vector<double>>& rows) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        for (size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
        out << "\n";
        for (const auto& row : rows) {
            for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt17(row[c]);
            out << "\n";
        }
        files_.push_back(name);
    }

    json& metrics() { return metrics_; }

    json finalize() {
        json results;
        results["schema_version"] = kResultsSchemaVersion;
        results["scenario"] = cfg_.scenario;
        results["metrics"] = metrics_;
        {
            std::ofstream out(dir_ / "results.json", std::ios::binary);
            out << results.dump(2) << "\n";
        }
        files_.push_back("results.json");
        json manifest;
        char hash[20];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(config_hash(cfg_.raw)));
        manifest["config_hash"] = hash;
        manifest["tool_version"] = kVersion;
        manifest["seed"] = cfg_.seed;
        manifest["started_at"] = started_;
        manifest["finished_at"] = iso_now();
        manifest["files"] = files_;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << "\n";
        return results;
    }

private:
    const ExperimentConfig& cfg_;
    fs::path dir_;
    std::vector<std::string> files_;
    json metrics_;
    std::string started_;
};

void check_scenario_keys(const ExperimentConfig& cfg, const std::set<std::string>& allowed) {
    for (auto it = cfg.scenario_params.begin(); it != cfg.scenario_params.end(); ++it)
        if (it.key() != "name" && !allowed.count(it.key()))
            throw ConfigError("unknown key scenario." + it.key());
}

std::vector<double> param_list(const ExperimentConfig& cfg, const std::string& key,
                               std::vector<double> dflt) {
    if (!cfg.scenario_params.contains(key)) return dflt;
    const json& arr = cfg.scenario_params[key];
    if (!arr.is_array() || arr.empty()) throw ConfigError("scenario." + key + " must be an array");
    std::vector<double> out;
    for (const auto& v : arr) out.push_back(v.get<double>());
    return out;
}

double param(const ExperimentConfig& cfg, const std::string& key, double dflt) {
    if (!cfg.scenario_params.contains(key)) return dflt;
    return cfg.scenario_params[key].get<double>();
}

std::string param_str(const ExperimentConfig& cfg, const std::string& key,
                      const std::string& dflt) {
    if (!cfg.scenario_params.contains(key)) return dflt;
    return cfg.scenario_params[key].get<std::string>();
}

// Probe controls for directions v = w - u_bar. Constant in time so that
// refinement studies see a dt-independent direction.
ControlProcess make_probe_control(const ExperimentConfig& cfg, const TimeGrid& g,
                                  const std::string& kind, uint64_t seed) {
    const int dim = cfg.op.control_dim();
    double lo = cfg.box.lo, hi = cfg.box.hi;
    if (lo < -1e29 || hi > 1e29) {  // unbounded box: probe around the initial value
        lo = cfg.u_initial - 1.0;
        hi = cfg.u_initial + 1.0;
    }
    ControlProcess w = ControlProcess::constant(g.K, dim, cfg.u_initial, cfg.box);
    if (kind == "corner_hi" || kind == "corner_lo") {
        const double v = kind == "corner_hi" ? hi : lo;
        for (double& x : w.values) x = cfg.box.clamp(v);
    } else if (kind == "cosine") {
        for (int n = 0; n < g.K; ++n) {
            const double c =
                cfg.u_initial + 0.45 * (hi - lo) * std::cos(2.0 * std::numbers::pi * g.time(n));
            for (auto& x : w.value(n)) x = cfg.box.clamp(c);
        }
    } else if (kind == "random_constant") {
        for (int k = 0; k < dim; ++k) {
            const double z = gaussian_draw(seed, 0, static_cast<uint32_t>(k), 7u);
            const double u01 = 1.0 / (1.0 + std::exp(-z));
            const double v = cfg.box.clamp(lo + (hi - lo) * u01);
            for (int n = 0; n < g.K; ++n) w.value(n)[k] = v;
        }
    } else {
        throw ConfigError("scenario.probe must be random_constant, cosine, corner_hi or corner_lo");
    }
    return w;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (ys[i] <= 0.0) continue;
        const double x = std::log(xs[i]), y = std::log(ys[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- scenarios

json run_gradient_check(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"rhos", "probe", "probe_seed"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();
    const ControlProcess w = make_probe_control(
        cfg, cfg.grid, param_str(cfg, "probe", "random_constant"),
        static_cast<uint64_t>(param(cfg, "probe_seed", 1)));
    const std::vector<double> rhos = param_list(cfg, "rhos", {0.1, 0.05});

    PathEnsemble ens = simulate_paths(model, u, cfg.initial, noise);
    AdjointEnsemble adj = solve_absde(model, ens, u, cfg.mu_l, cfg.mu_h, noise, {});
    const ControlDirection v = ControlDirection::difference(w, u);
    GateauxFD fd = cost_gateaux_fd(model, u, w, rhos, cfg.initial, noise, cfg.mu_l, cfg.mu_h);
    GateauxAdjoint ga = cost_gateaux_adjoint(model, ens, u, v, adj, cfg.mu_l);

    std::vector<std::vector<double>> rows;
    for (const auto& r : fd.table) rows.push_back({r.rho, r.estimate, r.stderr_});
    out.csv("gradient_table.csv", {"rho", "fd_estimate", "fd_stderr"}, rows);
    const double denom = std::max(std::abs(fd.estimate), 1e-300);
    out.metrics()["fd_derivative"] = fd.estimate;
    out.metrics()["fd_stderr"] = fd.stderr_;
    out.metrics()["adjoint_derivative"] = ga.estimate;
    out.metrics()["adjoint_stderr"] = ga.stderr_;
    out.metrics()["rel_error"] = std::abs(ga.estimate - fd.estimate) / denom;
    out.metrics()["regression_used"] = adj.regression_used;
    return out.finalize();
}

json run_duality_check(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"levels", "probe", "probe_seed"});
    Outputs out(cfg);
    const int levels = static_cast<int>(param(cfg, "levels", 2));
    if (levels < 1 || levels > 4) throw ConfigError("scenario.levels must be in [1,4]");

    std::vector<std::vector<double>> rows;
    std::vector<double> gaps, dts;
    double finest_rel = 0.0, finest_lhs = 0.0;
    for (int j = 0; j < levels; ++j) {
        const int refine = 1 << j;
        const TimeGrid g = TimeGrid::make(cfg.grid.dt / refine, cfg.grid.T(), cfg.grid.delay());
        const Model model(cfg.op, cfg.coeffs, g, cfg.mu_f);
        NoiseEnsemble noise = cfg.make_noise(1 << (levels - 1 - j));
        noise.steps = g.K;
        noise.dt = g.dt;
        ControlProcess u = ControlProcess::constant(g.K, cfg.op.control_dim(), cfg.u_initial,
                                                    cfg.box);
        ControlProcess w = make_probe_control(cfg, g, param_str(cfg, "probe", "random_constant"),
                                              static_cast<uint64_t>(param(cfg, "probe_seed", 1)));
        PathEnsemble ens = simulate_paths(model, u, cfg.initial, noise);
        const ControlDirection v = ControlDirection::difference(w, u);
        PathEnsemble Y = solve_first_variation(model, ens, u, v);
        AdjointEnsemble adj = solve_absde(model, ens, u, cfg.mu_l, cfg.mu_h, noise, {});
        DualityResult d = duality_gap(model, ens, u, v, Y, adj, cfg.mu_l, cfg.mu_h);
        rows.push_back({g.dt, d.lhs, d.rhs, d.gap, d.rel_gap});
        gaps.push_back(d.gap);
        dts.push_back(g.dt);
        finest_rel = d.rel_gap;
        finest_lhs = d.lhs;
    }
    out.csv("duality.csv", {"dt", "lhs", "rhs", "gap", "rel_gap"}, rows);
    out.metrics()["rel_gap"] = finest_rel;
    out.metrics()["lhs"] = finest_lhs;
    if (levels > 1) out.metrics()["slope"] = fit_slope(dts, gaps);
    return out.finalize();
}

json run_contraction_study(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"tol", "max_iter"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();
    const double tol = param(cfg, "tol", 1e-12);
    const int max_iter = static_cast<int>(param(cfg, "max_iter", 40));

    PicardResult pr = picard_solve(model, u, cfg.initial, noise, 0, tol, max_iter);
    if (!pr.converged)
        throw std::runtime_error("picard iteration did not reach tol; see contraction.csv");

    // a-priori geometric factor from the Lipschitz constant, total variation
    // of mu_f, the horizon and the semigroup bound
    const auto [M, omega] = cfg.op.growth_bound();
    const double rho_hat = model.coeffs.f.lipschitz_x() * total_variation(cfg.mu_f) *
                           cfg.grid.T() * M * std::exp(std::max(omega, 0.0) * cfg.grid.T());

    std::vector<std::vector<double>> rows;
    double max_ratio = 0.0;
    for (size_t i = 0; i < pr.residuals.size(); ++i) {
        const double ratio = i + 1 < pr.residuals.size() && pr.residuals[i] > 0.0
                                 ? pr.residuals[i + 1] / pr.residuals[i]
                                 : 0.0;
        if (i + 1 < pr.residuals.size()) max_ratio = std::max(max_ratio, ratio);
        rows.push_back({static_cast<double>(i), pr.residuals[i], ratio});
    }
    out.csv("contraction.csv", {"iter", "residual", "ratio"}, rows);

    // cross-check the fixed point against the stepping solver
    NoiseEnsemble single = noise;
    single.paths = 1;
    PathEnsemble stepped = simulate_paths(model, u, cfg.initial, single);
    double diff = 0.0;
    for (int n = 0; n <= cfg.grid.K; ++n) {
        Vec d(stepped.dim);
        const auto a = pr.trajectory.state(0, n);
        const auto b = stepped.state(0, n);
        for (int k = 0; k < stepped.dim; ++k) d[k] = a[k] - b[k];
        diff = std::max(diff, norm2(d));
    }

    out.metrics()["rho_hat"] = rho_hat;
    out.metrics()["max_ratio"] = max_ratio;
    out.metrics()["ratio_over_prediction"] = rho_hat > 0.0 ? max_ratio / rho_hat : 0.0;
    out.metrics()["iterations"] = static_cast<int>(pr.residuals.size());
    out.metrics()["fixed_point_vs_stepper"] = diff;
    return out.finalize();
}

json run_measure_approx(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"n_values", "target"});
    Outputs out(cfg);
    const std::string target = param_str(cfg, "target", "mu_h");
    const RegularMeasure* mu = &cfg.mu_h;
    if (target == "mu_f") mu = &cfg.mu_f;
    else if (target == "mu_l") mu = &cfg.mu_l;
    else if (target != "mu_h") throw ConfigError("scenario.target must be mu_f, mu_l or mu_h");

    auto [bar, mass_T] = split_endpoint(*mu, mu->b);
    const std::vector<std::function<double(double)>> tests = {
        [](double) { return 1.0; }, [](double s) { return s; }, [](double s) { return s * s; },
        [](double s) { return std::sin(s); }};

    std::vector<double> ns = param_list(cfg, "n_values", {4, 8, 16, 32, 64, 128, 256});
    std::vector<std::vector<double>> rows;
    std::vector<double> errs;
    for (double nf : ns) {
        const int n = static_cast<int>(nf);
        RegularMeasure approx = mollify_approximation(bar, n);
        const double err = weak_star_error(bar, approx, tests);
        rows.push_back({nf, mollifier_width(bar, n), err,
                        total_variation(approx), total_variation(bar)});
        errs.push_back(err);
    }
    out.csv("measure_approx.csv", {"n", "epsilon", "weak_star_error", "tv_approx", "tv_base"},
            rows);

    bool tail_ok = true;
    for (size_t i = ns.size() / 2; i + 1 < ns.size(); ++i)
        if (errs[i + 1] > errs[i] + 1e-15) tail_ok = false;
    out.metrics()["final_error"] = errs.back();
    out.metrics()["tail_nonincreasing"] = tail_ok;
    out.metrics()["endpoint_atom_mass"] = mass_T;
    out.metrics()["total_variation"] = total_variation(*mu);
    return out.finalize();
}

json run_absde_convergence(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"n_values"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();

    PathEnsemble ens = simulate_paths(model, u, cfg.initial, noise);
    AdjointEnsemble direct = solve_absde(model, ens, u, cfg.mu_l, cfg.mu_h, noise, {});
    const double ref_norm = std::max(direct.weighted_p_norm(0.0), 1e-300);

    auto [bar, mass_T] = split_endpoint(cfg.mu_h, cfg.grid.T());
    const std::vector<std::function<double(double)>> tests = {
        [](double) { return 1.0; }, [](double s) { return s; }, [](double s) { return s * s; },
        [](double s) { return std::sin(s); }};

    std::vector<double> ns = param_list(cfg, "n_values", {4, 8, 16, 32, 64, 128});
    std::vector<std::vector<double>> rows;
    std::vector<double> rels;
    for (double nf : ns) {
        const int n = static_cast<int>(nf);
        AdjointEnsemble pn = solve_absde_approx(model, ens, u, cfg.mu_l, cfg.mu_h, n, noise, {});
        const double dist = adjoint_l2_distance(pn, direct);
        RegularMeasure approx = mollify_approximation(bar, n);
        rows.push_back({nf, dist, dist / ref_norm, weak_star_error(bar, approx, tests)});
        rels.push_back(dist / ref_norm);
    }
    out.csv("absde_convergence.csv", {"n", "l2_distance", "rel_distance", "measure_error"}, rows);

    bool monotone = true;
    for (size_t i = ns.size() >= 2 ? 1 : 0; i + 1 < ns.size(); ++i)
        if (rels[i + 1] > rels[i] + 1e-14) monotone = false;
    out.metrics()["final_rel_distance"] = rels.back();
    out.metrics()["monotone_tail"] = monotone;
    out.metrics()["direct_norm"] = ref_norm;
    out.metrics()["apriori_constant"] = direct.apriori_constant;
    out.metrics()["min_future_read"] = direct.min_future_read;
    return out.finalize();
}

json run_optimize(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"iters", "step0", "grad_tol", "vi_check"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    ControlProcess u = cfg.make_initial_control();

    OptimizeOptions opts;
    opts.max_iters = static_cast<int>(param(cfg, "iters", 200));
    opts.step0 = param(cfg, "step0", 1.0);
    opts.grad_tol = param(cfg, "grad_tol", 0.0);
    OptimizationReport rep =
        projected_gradient_descent(model, u, cfg.initial, noise, cfg.mu_l, cfg.mu_h, opts);

    std::vector<std::vector<double>> rows;
    bool monotone = true;
    double lastJ = 0.0;
    bool first = true;
    for (const auto& it : rep.history) {
        rows.push_back({static_cast<double>(it.iter), it.J, it.grad_norm, it.step,
                        it.accepted ? 1.0 : 0.0});
        if (it.accepted) {
            if (!first && it.J > lastJ + 1e-12) monotone = false;
            lastJ = it.J;
            first = false;
        }
    }
    out.csv("optimize_history.csv", {"iter", "J", "grad_norm", "step", "accepted"}, rows);

    {
        std::vector<std::vector<double>> crows;
        for (int n = 0; n < cfg.grid.K; ++n) {
            std::vector<double> row{cfg.grid.time(n)};
            for (double v : u.value(n)) row.push_back(v);
            crows.push_back(std::move(row));
        }
        std::vector<std::string> cols{"t"};
        for (int k = 0; k < cfg.op.control_dim(); ++k) cols.push_back("u_" + std::to_string(k + 1));
        out.csv("control.csv", cols, crows);
    }

    out.metrics()["final_J"] = rep.final_J;
    out.metrics()["final_grad_norm"] = rep.final_grad_norm;
    out.metrics()["stalled"] = rep.stalled;
    out.metrics()["stationary"] = rep.stationary;
    out.metrics()["monotone_descent"] = monotone;
    out.metrics()["iterations"] = static_cast<int>(rep.history.size());

    if (param(cfg, "vi_check", 1.0) != 0.0) {
        PathEnsemble ens = simulate_paths(model, u, cfg.initial, noise);
        AdjointEnsemble adj = solve_absde(model, ens, u, cfg.mu_l, cfg.mu_h, noise, {});
        VIProbeResult vi = variational_inequality_check(model, ens, adj, u, cfg.mu_l);
        out.metrics()["vi_margin"] = vi.margin;
        out.metrics()["vi_margin_per_time"] = vi.margin_per_time;
        out.metrics()["vi_probes"] = vi.probes;
    }
    return out.finalize();
}

json run_remainder_study(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"rhos", "probe", "probe_seed"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();
    const ControlProcess w = make_probe_control(
        cfg, cfg.grid, param_str(cfg, "probe", "corner_hi"),
        static_cast<uint64_t>(param(cfg, "probe_seed", 1)));
    const std::vector<double> rhos = param_list(cfg, "rhos", {0.2, 0.1, 0.05, 0.025});

    std::vector<ConvergenceRow> rows =
        remainder_diagnostic(model, u, w, rhos, cfg.initial, noise);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows) csv.push_back({r.rho, r.value, r.stderr_});
    out.csv("remainder.csv", {"rho", "ratio", "mc_stderr"}, csv);
    out.metrics()["slope"] = loglog_slope(rows);
    out.metrics()["max_ratio"] = rows.front().value;
    out.metrics()["min_ratio"] = rows.back().value;
    return out.finalize();
}

json run_simulate(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"dump_trajectories"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();
    PathEnsemble ens = simulate_paths(model, u, cfg.initial, noise);
    out.metrics()["sup_moment_p2"] = sup_moment(ens, 2);
    out.metrics()["sup_moment_p4"] = sup_moment(ens, 4);
    if (param(cfg, "dump_trajectories", 0.0) != 0.0) {
        std::vector<std::string> cols{"path", "t"};
        for (int k = 0; k < ens.dim; ++k) cols.push_back("mode_" + std::to_string(k + 1));
        std::vector<std::vector<double>> rows;
        for (int i = 0; i < ens.paths; ++i)
            for (int n = -cfg.grid.L; n <= cfg.grid.K; ++n) {
                std::vector<double> row{static_cast<double>(i), cfg.grid.time(n)};
                for (double v : ens.state(i, n)) row.push_back(v);
                rows.push_back(std::move(row));
            }
        out.csv("trajectories.csv", cols, rows);
    }
    return out.finalize();
}

json run_state_convergence(const ExperimentConfig& cfg) {
    check_scenario_keys(cfg, {"rhos", "probe", "probe_seed"});
    Outputs out(cfg);
    const Model model = cfg.make_model();
    const NoiseEnsemble noise = cfg.make_noise();
    const ControlProcess u = cfg.make_initial_control();
    const ControlProcess w = make_probe_control(
        cfg, cfg.grid, param_str(cfg, "probe", "corner_hi"),
        static_cast<uint64_t>(param(cfg, "probe_seed", 1)));
    const std::vector<double> rhos = param_list(cfg, "rhos", {0.4, 0.2, 0.1, 0.05});

    std::vector<ConvergenceRow> rows =
        control_convergence_diagnostic(model, u, w, rhos, cfg.initial, noise);
    std::vector<std::vector<double>> csv;
    for (const auto& r : rows) csv.push_back({r.rho, r.value, r.stderr_});
    out.csv("state_convergence.csv", {"rho", "sup_gap_sq", "mc_stderr"}, csv);
    out.metrics()["slope"] = loglog_slope(rows);
    bool nonincreasing = true;
    for (size_t i = 0; i + 1 < rows.size(); ++i)
        if (rows[i + 1].value > rows[i].value + 2.0 * (rows[i].stderr_ + rows[i + 1].stderr_))
            nonincreasing = false;
    out.metrics()["nonincreasing"] = nonincreasing;
    return out.finalize();
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry() {
    static const std::vector<ScenarioInfo> reg = {
        {"absde_convergence",
         "distance between the mollified-measure backward solves and the direct one",
         "measures.mu_h, monte_carlo; scenario.n_values"},
        {"contraction_study", "Picard iteration of the mild map with residual ratios",
         "coefficients.drift; scenario.tol, scenario.max_iter"},
        {"duality_check", "both sides of the duality identity under grid refinement",
         "measures, control; scenario.levels, scenario.probe"},
        {"gradient_check", "finite-difference vs adjoint Gateaux derivative of the cost",
         "measures, control; scenario.rhos, scenario.probe"},
        {"measure_approx", "weak-* error of the mollifier sequence on a declared measure",
         "measures; scenario.n_values, scenario.target"},
        {"optimize", "projected gradient descent with the variational-inequality certificate",
         "control bounds; scenario.iters, scenario.step0, scenario.grad_tol"},
        {"remainder_study", "first-order expansion remainder ratios over rho",
         "scenario.rhos, scenario.probe"},
        {"simulate", "forward ensemble with moment estimates and optional trajectory dump",
         "monte_carlo; scenario.dump_trajectories"},
        {"state_convergence", "E sup |X^rho - X|^2 as the control perturbation shrinks",
         "scenario.rhos, scenario.probe"},
    };
    return reg;
}

json run_scenario(const ExperimentConfig& cfg) {
    if (cfg.scenario == "absde_convergence") return run_absde_convergence(cfg);
    if (cfg.scenario == "contraction_study") return run_contraction_study(cfg);
    if (cfg.scenario == "duality_check") return run_duality_check(cfg);
    if (cfg.scenario == "gradient_check") return run_gradient_check(cfg);
    if (cfg.scenario == "measure_approx") return run_measure_approx(cfg);
    if (cfg.scenario == "optimize") return run_optimize(cfg);
    if (cfg.scenario == "remainder_study") return run_remainder_study(cfg);
    if (cfg.scenario == "simulate") return run_simulate(cfg);
    if (cfg.scenario == "state_convergence") return run_state_convergence(cfg);
    throw ConfigError("unknown scenario.name '" + cfg.scenario +
                      "'; run list-scenarios for the registry");
}

}  // namespace dsmp
