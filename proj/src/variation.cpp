#include "dsmp/variation.hpp"

#include <cmath>
#include <stdexcept>

#include "dsmp/exec.hpp"

namespace dsmp {

ControlDirection ControlDirection::difference(const ControlProcess& w,
                                              const ControlProcess& u_bar) {
    if (w.steps != u_bar.steps || w.dim != u_bar.dim)
        throw std::invalid_argument("control direction: dimension mismatch");
    ControlDirection v;
    v.steps = w.steps;
    v.dim = w.dim;
    v.values.resize(w.values.size());
    for (size_t i = 0; i < v.values.size(); ++i) v.values[i] = w.values[i] - u_bar.values[i];
    return v;
}

std::span<const double> ControlDirection::at_time(double t, double dt) const {
    int n = static_cast<int>(std::floor(t / dt + 1e-9));
    if (n < 0) n = 0;
    if (n > steps - 1) n = steps - 1;
    return value(n);
}

PathEnsemble solve_first_variation(const Model& model, const PathEnsemble& states,
                                   const ControlProcess& u_bar, const ControlDirection& v) {
    const TimeGrid& g = model.grid;
    const int dim = model.op.state_dim();
    if (states.dim != dim) throw std::invalid_argument("first variation: state dim mismatch");
    if (v.steps != g.K || v.dim != model.op.control_dim())
        throw std::invalid_argument("first variation: direction shape mismatch");

    (void)u_bar;  // the gradient families are control-independent in x-slope
    PathEnsemble Y(g, dim, states.paths);  // zero initial segment by construction
    exec::parallel_for(states.paths, [&](int i) {
        Vec xq(dim), yq(dim), term(dim), F(dim), acc(dim);
        for (int n = 0; n < g.K; ++n) {
            const double t_n = g.time(n);
            for (int k = 0; k < dim; ++k) F[k] = 0.0;
            model.mu_f.for_each_quadrature([&](double theta, double wq) {
                states.interp_state(i, t_n + theta, xq);
                Y.interp_state(i, t_n + theta, yq);
                nemytskii_dx_apply(model.basis, model.coeffs, xq, yq, term);
                axpy(wq, term, F);
                nemytskii_du_apply(model.basis, model.coeffs, xq, v.value(n), term);
                axpy(wq, term, F);
            });
            const auto yn = Y.state(i, n);
            for (int k = 0; k < dim; ++k) acc[k] = yn[k] + g.dt * F[k];
            semigroup_apply(model.op, g.dt, acc, Y.state(i, n + 1));
        }
    });
    return Y;
}

std::vector<ConvergenceRow> remainder_diagnostic(const Model& model, const ControlProcess& u_bar,
                                                 const ControlProcess& w,
                                                 const std::vector<double>& rhos,
                                                 const InitialHistory& init,
                                                 const NoiseEnsemble& noise) {
    PathEnsemble base = simulate_paths(model, u_bar, init, noise);
    const ControlDirection v = ControlDirection::difference(w, u_bar);
    PathEnsemble Y = solve_first_variation(model, base, u_bar, v);

    std::vector<ConvergenceRow> table;
    for (double rho : rhos) {
        if (rho <= 0.0) throw std::domain_error("remainder_diagnostic: rho must be positive");
        ControlProcess u_rho = perturb_control(u_bar, w, rho);
        PathEnsemble pert = simulate_paths(model, u_rho, init, noise);
        std::vector<double> vals(noise.paths, 0.0);
        exec::parallel_for(noise.paths, [&](int i) {
            double worst = 0.0;
            Vec diff(base.dim);
            for (int n = 0; n <= model.grid.K; ++n) {
                const auto xr = pert.state(i, n);
                const auto xb = base.state(i, n);
                const auto y = Y.state(i, n);
                for (int k = 0; k < base.dim; ++k) diff[k] = xr[k] - xb[k] - rho * y[k];
                worst = std::max(worst, dot(diff, diff));
            }
            vals[i] = worst / (rho * rho);
        });
        double mean = 0.0;
        for (double x : vals) mean += x;
        mean /= noise.paths;
        double var = 0.0;
        for (double x : vals) var += (x - mean) * (x - mean);
        var = noise.paths > 1 ? var / (noise.paths - 1) : 0.0;
        table.push_back({rho, mean, std::sqrt(var / noise.paths)});
    }
    return table;
}

double loglog_slope(const std::vector<ConvergenceRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : rows) {
        if (r.value <= 0.0) continue;
        const double x = std::log(r.rho), y = std::log(r.value);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dsmp
