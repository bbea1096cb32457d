#include "dsmp/forward.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "dsmp/exec.hpp"

namespace dsmp {

namespace {

Vec& scratch(int which, int n) {
    static thread_local Vec bufs[6];
    bufs[which].resize(n);
    return bufs[which];
}

// Noise insertion per model kind; dW has op.noise_dim() entries.
void add_noise(const OperatorSpec& op, double g_t, std::span<const double> dW,
               std::span<double> acc) {
    if (g_t == 0.0) return;
    if (op.kind == OperatorKind::wave) {
        for (int k = 1; k <= op.modes; ++k)
            acc[2 * (k - 1) + 1] += g_t * dW[k - 1] / (k * std::numbers::pi);
    } else {
        for (int k = 0; k < op.modes; ++k) acc[k] += g_t * dW[k];
    }
}

}  // namespace

Model::Model(OperatorSpec op_, CoefficientSpec coeffs_, TimeGrid grid_, RegularMeasure mu_f_)
    : op(op_), coeffs(coeffs_), grid(grid_), mu_f(std::move(mu_f_)), basis(op_) {
    op.validate();
    mu_f.validate();
    const double tol = 1e-9 * grid.dt;
    if (mu_f.a < -grid.delay() - tol || mu_f.b > tol)
        throw std::invalid_argument("mu_f support must lie inside [-d, 0]");
}

ControlProcess ControlProcess::constant(int steps, int dim, double value, ControlBox box) {
    ControlProcess u;
    u.steps = steps;
    u.dim = dim;
    u.box = box;
    u.values.assign(static_cast<size_t>(steps) * dim, value);
    u.validate_in_box();
    return u;
}

std::span<const double> ControlProcess::at_time(double t, double dt) const {
    int n = static_cast<int>(std::floor(t / dt + 1e-9));
    if (n < 0) n = 0;
    if (n > steps - 1) n = steps - 1;
    return value(n);
}

void ControlProcess::validate_in_box() const {
    for (double v : values)
        if (v < box.lo - 1e-12 || v > box.hi + 1e-12)
            throw std::invalid_argument("control value outside the admissible box");
}

double ControlProcess::squared_norm(const Basis& basis, double dt) const {
    double acc = 0.0;
    for (int n = 0; n < steps; ++n) {
        const auto u = value(n);
        acc += dt * basis.field_inner(u, u);
    }
    return acc;
}

ControlProcess perturb_control(const ControlProcess& u_bar, const ControlProcess& w, double rho) {
    if (rho < 0.0 || rho > 1.0) throw std::domain_error("perturb_control: rho must be in [0,1]");
    if (u_bar.steps != w.steps || u_bar.dim != w.dim)
        throw std::invalid_argument("perturb_control: dimension mismatch");
    ControlProcess out = u_bar;
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = u_bar.values[i] + rho * (w.values[i] - u_bar.values[i]);
    out.validate_in_box();
    return out;
}

void InitialHistory::evaluate(double theta, std::span<double> out) const {
    for (size_t k = 0; k < base.size(); ++k) {
        out[k] = base[k];
        if (!slope.empty()) out[k] += theta * slope[k];
    }
}

PathEnsemble::PathEnsemble(TimeGrid g, int dim_, int paths_) : grid(g), dim(dim_), paths(paths_) {
    data.assign(static_cast<size_t>(paths) * grid.nodes() * dim, 0.0);
}

std::span<double> PathEnsemble::state(int path, int n) {
    const size_t off =
        (static_cast<size_t>(path) * grid.nodes() + static_cast<size_t>(n + grid.L)) * dim;
    return {data.data() + off, static_cast<size_t>(dim)};
}

std::span<const double> PathEnsemble::state(int path, int n) const {
    const size_t off =
        (static_cast<size_t>(path) * grid.nodes() + static_cast<size_t>(n + grid.L)) * dim;
    return {data.data() + off, static_cast<size_t>(dim)};
}

void PathEnsemble::interp_state(int path, double t, std::span<double> out) const {
    // Node units relative to t_{-L}; snap to exact nodes so grid-aligned
    // measure atoms read stored values bitwise.
    const double s = t / grid.dt + grid.L;
    int i0 = static_cast<int>(std::floor(s + 1e-9));
    double w = s - i0;
    if (w < 1e-9) w = 0.0;
    if (i0 < 0) { i0 = 0; w = 0.0; }
    if (i0 >= grid.nodes() - 1) { i0 = grid.nodes() - 1; w = 0.0; }
    const auto x0 = state(path, i0 - grid.L);
    if (w == 0.0) {
        std::memcpy(out.data(), x0.data(), sizeof(double) * dim);
        return;
    }
    const auto x1 = state(path, i0 - grid.L + 1);
    for (int k = 0; k < dim; ++k) out[k] = (1.0 - w) * x0[k] + w * x1[k];
}

double PathEnsemble::sup_norm(int path) const {
    double worst = 0.0;
    for (int n = -grid.L; n <= grid.K; ++n) worst = std::max(worst, norm2(state(path, n)));
    return worst;
}

void delay_integral(const Model& model, const PathEnsemble& ens, int path, int n,
                    std::span<const double> u_n, std::span<double> out) {
    const int dim = ens.dim;
    Vec& xq = scratch(0, dim);
    Vec& fq = scratch(1, dim);
    for (int k = 0; k < dim; ++k) out[k] = 0.0;
    const double t_n = model.grid.time(n);
    model.mu_f.for_each_quadrature([&](double theta, double w) {
        ens.interp_state(path, t_n + theta, xq);
        nemytskii_drift(model.basis, model.coeffs, xq, u_n, fq);
        axpy(w, fq, out);
    });
}

void step_exponential_euler(const Model& model, PathEnsemble& ens, int path, int n,
                            std::span<const double> u_n, std::span<const double> dW) {
    const int dim = ens.dim;
    Vec& F = scratch(2, dim);
    Vec& acc = scratch(3, dim);
    delay_integral(model, ens, path, n, u_n, F);
    const auto xn = ens.state(path, n);
    for (int k = 0; k < dim; ++k) acc[k] = xn[k] + model.grid.dt * F[k];
    if (!dW.empty()) add_noise(model.op, model.coeffs.g.value(model.grid.time(n)), dW, acc);
    semigroup_apply(model.op, model.grid.dt, acc, ens.state(path, n + 1));
}

PathEnsemble simulate_paths(const Model& model, const ControlProcess& u,
                            const InitialHistory& init, const NoiseEnsemble& noise,
                            const SimulateOptions& opts) {
    const TimeGrid& g = model.grid;
    if (u.steps != g.K) throw std::invalid_argument("control steps inconsistent with grid");
    if (u.dim != model.op.control_dim())
        throw std::invalid_argument("control dimension inconsistent with model");
    if (static_cast<int>(init.base.size()) != model.op.state_dim())
        throw std::invalid_argument("initial history dimension inconsistent with model");

    PathEnsemble ens(g, model.op.state_dim(), noise.paths);
    std::atomic<long long> bad{-1};  // packs (path, step) of the first failure seen
    const int nm = model.op.noise_dim();
    const bool noisy = model.coeffs.g.bound() > 0.0;

    exec::parallel_for(noise.paths, [&](int i) {
        for (int n = -g.L; n <= 0; ++n) init.evaluate(g.time(n), ens.state(i, n));
        Vec dW(nm, 0.0);
        for (int n = 0; n < g.K; ++n) {
            if (noisy)
                for (int k = 0; k < nm; ++k) dW[k] = noise.increment(i, n, k);
            step_exponential_euler(model, ens, i, n, u.value(n), noisy ? std::span<const double>(dW)
                                                                       : std::span<const double>());
            if (opts.check_finite) {
                double s = 0.0;
                for (double v : ens.state(i, n + 1)) s += v;
                if (!std::isfinite(s)) {
                    long long want = -1;
                    bad.compare_exchange_strong(want,
                                                (static_cast<long long>(i) << 20) | (n + 1));
                    break;
                }
            }
        }
    });
    if (bad.load() >= 0) {
        const long long v = bad.load();
        throw std::runtime_error("simulate_paths: non-finite state at path " +
                                 std::to_string(v >> 20) + ", step " +
                                 std::to_string(v & 0xFFFFF));
    }
    return ens;
}

double sup_moment(const PathEnsemble& ens, int p) {
    double acc = 0.0;
    for (int i = 0; i < ens.paths; ++i) acc += std::pow(ens.sup_norm(i), p);
    return acc / ens.paths;
}

PicardResult picard_solve(const Model& model, const ControlProcess& u,
                          const InitialHistory& init, const NoiseEnsemble& noise, int path_index,
                          double tol, int max_iter, const PathEnsemble* start) {
    const TimeGrid& g = model.grid;
    const int dim = model.op.state_dim();
    const int nm = model.op.noise_dim();

    // Frozen stochastic convolution increments for the chosen path.
    std::vector<double> dW(static_cast<size_t>(g.K) * nm, 0.0);
    const bool noisy = model.coeffs.g.bound() > 0.0;
    if (noisy)
        for (int n = 0; n < g.K; ++n)
            for (int k = 0; k < nm; ++k) dW[static_cast<size_t>(n) * nm + k] =
                noise.increment(path_index, n, k);

    PathEnsemble cur(g, dim, 1);
    for (int n = -g.L; n <= 0; ++n) init.evaluate(g.time(n), cur.state(0, n));
    if (start) {
        if (start->dim != dim || start->grid.nodes() != g.nodes())
            throw std::invalid_argument("picard_solve: start iterate has wrong shape");
        cur.data = start->data;
    }

    PicardResult result;
    Vec F(dim), acc(dim);
    for (int it = 0; it < max_iter; ++it) {
        PathEnsemble next(g, dim, 1);
        for (int n = -g.L; n <= 0; ++n) init.evaluate(g.time(n), next.state(0, n));
        for (int n = 0; n < g.K; ++n) {
            delay_integral(model, cur, 0, n, u.value(n), F);  // drift from the old iterate
            const auto zn = next.state(0, n);
            for (int k = 0; k < dim; ++k) acc[k] = zn[k] + g.dt * F[k];
            if (noisy)
                add_noise(model.op, model.coeffs.g.value(g.time(n)),
                          {dW.data() + static_cast<size_t>(n) * nm, static_cast<size_t>(nm)}, acc);
            semigroup_apply(model.op, g.dt, acc, next.state(0, n + 1));
        }
        double res = 0.0;
        for (int n = 0; n <= g.K; ++n) {
            Vec diff(dim);
            const auto a = next.state(0, n);
            const auto b = cur.state(0, n);
            for (int k = 0; k < dim; ++k) diff[k] = a[k] - b[k];
            res = std::max(res, norm2(diff));
        }
        result.residuals.push_back(res);
        cur.data = next.data;
        if (res < tol) {
            result.converged = true;
            break;
        }
    }
    result.trajectory = std::move(cur);
    return result;
}

std::vector<ConvergenceRow> control_convergence_diagnostic(
    const Model& model, const ControlProcess& u_bar, const ControlProcess& w,
    const std::vector<double>& rhos, const InitialHistory& init, const NoiseEnsemble& noise) {
    PathEnsemble base = simulate_paths(model, u_bar, init, noise);
    std::vector<ConvergenceRow> table;
    for (double rho : rhos) {
        ControlProcess u_rho = perturb_control(u_bar, w, rho);
        PathEnsemble pert = simulate_paths(model, u_rho, init, noise);
        // per-path sup_t |X^rho - X_bar|^2, then mean and stderr
        std::vector<double> vals(noise.paths, 0.0);
        exec::parallel_for(noise.paths, [&](int i) {
            double worst = 0.0;
            Vec diff(base.dim);
            for (int n = 0; n <= model.grid.K; ++n) {
                const auto a = pert.state(i, n);
                const auto b = base.state(i, n);
                for (int k = 0; k < base.dim; ++k) diff[k] = a[k] - b[k];
                worst = std::max(worst, dot(diff, diff));
            }
            vals[i] = worst;
        });
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= noise.paths;
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var = noise.paths > 1 ? var / (noise.paths - 1) : 0.0;
        table.push_back({rho, mean, std::sqrt(var / noise.paths)});
    }
    return table;
}

}  // namespace dsmp
