#include "dsmp/absde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dsmp/exec.hpp"

namespace dsmp {

namespace {

Vec& scratch(int which, int n) {
    static thread_local Vec bufs[8];
    bufs[which].resize(n);
    return bufs[which];
}

// A x = b for SPD A (row-major F x F), multiple right-hand sides solved
// against one factorization. Returns false if the factorization breaks down.
class Cholesky {
public:
    bool factor(std::vector<double> A, int F) {
        n_ = F;
        a_ = std::move(A);
        for (int j = 0; j < n_; ++j) {
            double diag = a_[j * n_ + j];
            for (int k = 0; k < j; ++k) diag -= a_[j * n_ + k] * a_[j * n_ + k];
            if (!(diag > 0.0)) return false;
            const double s = std::sqrt(diag);
            a_[j * n_ + j] = s;
            for (int i = j + 1; i < n_; ++i) {
                double v = a_[i * n_ + j];
                for (int k = 0; k < j; ++k) v -= a_[i * n_ + k] * a_[j * n_ + k];
                a_[i * n_ + j] = v / s;
            }
        }
        return true;
    }

    void solve(std::span<const double> b, std::span<double> x) const {
        for (int i = 0; i < n_; ++i) {
            double v = b[i];
            for (int k = 0; k < i; ++k) v -= a_[i * n_ + k] * x[k];
            x[i] = v / a_[i * n_ + i];
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double v = x[i];
            for (int k = i + 1; k < n_; ++k) v -= a_[k * n_ + i] * x[k];
            x[i] = v / a_[i * n_ + i];
        }
    }

private:
    int n_ = 0;
    std::vector<double> a_;
};

}  // namespace

int RegressionBasis::feature_count(int state_dim) const {
    const int h = std::min(head_modes, state_dim);
    int f = 1 + h;
    if (quadratic) f += h;
    f += h * static_cast<int>(delay_offsets.size());
    return f;
}

std::span<double> AdjointEnsemble::p_at(int path, int n) {
    const size_t off = (static_cast<size_t>(path) * (grid.K + grid.L + 1) + n) * dim;
    return {p.data() + off, static_cast<size_t>(dim)};
}

std::span<const double> AdjointEnsemble::p_at(int path, int n) const {
    const size_t off = (static_cast<size_t>(path) * (grid.K + grid.L + 1) + n) * dim;
    return {p.data() + off, static_cast<size_t>(dim)};
}

void AdjointEnsemble::interp_p(int path, double t, std::span<double> out) const {
    const double s = t / grid.dt;
    int i0 = static_cast<int>(std::floor(s + 1e-9));
    double w = s - i0;
    if (w < 1e-9) w = 0.0;
    const int last = grid.K + grid.L;
    if (i0 < 0) { i0 = 0; w = 0.0; }
    if (i0 >= last) { i0 = last; w = 0.0; }
    const auto p0 = p_at(path, i0);
    if (w == 0.0) {
        std::memcpy(out.data(), p0.data(), sizeof(double) * dim);
        return;
    }
    const auto p1 = p_at(path, i0 + 1);
    for (int k = 0; k < dim; ++k) out[k] = (1.0 - w) * p0[k] + w * p1[k];
}

std::span<const double> AdjointEnsemble::q_at(int n) const {
    if (q.empty()) return {};
    const size_t sz = static_cast<size_t>(dim) * noise_dim;
    return {q.data() + n * sz, sz};
}

double AdjointEnsemble::weighted_p_norm(double beta_weight) const {
    double acc = 0.0;
    for (int n = 0; n <= grid.K + grid.L; ++n) {
        double s = 0.0;
        for (int i = 0; i < paths; ++i) {
            const auto pn = p_at(i, n);
            s += dot(pn, pn);
        }
        acc += grid.dt * std::exp(beta_weight * grid.time(n)) * s / paths;
    }
    return std::sqrt(acc);
}

void terminal_history_term(const Model& model, const PathEnsemble& states, int path, double t,
                           const RegularMeasure& mu_h_part, std::span<double> out) {
    if (!model.op.self_adjoint())
        throw std::logic_error("terminal_history_term: adjoint machinery needs a self-adjoint generator");
    const int dim = model.op.state_dim();
    for (int k = 0; k < dim; ++k) out[k] = 0.0;
    if (t >= model.grid.T()) return;
    Vec& xq = scratch(0, dim);
    Vec& dh = scratch(1, dim);
    Vec& tr = scratch(2, dim);
    mu_h_part.for_each_quadrature([&](double s, double w) {
        if (s <= t + 1e-12) return;  // strictly future mass only
        states.interp_state(path, s, xq);
        lift_terminal_cost_dx(model.basis, model.coeffs.h, xq, dh);
        adjoint_semigroup_apply(model.op, s - t, dh, tr);
        axpy(w, tr, out);
    });
}

namespace {

struct SweepSetup {
    RegularMeasure bar_mu;
    double mass_T = 0.0;
    RegressionBasis basis;
    bool use_regression = false;
    int features = 0;
};

SweepSetup prepare(const Model& model, const PathEnsemble& states, const ControlProcess& u,
                   const RegularMeasure& mu_l, const RegularMeasure& mu_h,
                   const AdjointOptions& opts) {
    if (!model.op.self_adjoint())
        throw std::logic_error("solve_absde: adjoint machinery needs a self-adjoint generator");
    const TimeGrid& g = model.grid;
    if (u.steps != g.K) throw std::invalid_argument("solve_absde: control grid mismatch");
    if (states.dim != model.op.state_dim())
        throw std::invalid_argument("solve_absde: state dimension mismatch");
    const double tol = 1e-9 * std::max(1.0, g.T());
    if (std::abs(mu_h.a - (g.T() - g.delay())) > tol || std::abs(mu_h.b - g.T()) > tol)
        throw std::invalid_argument("mu_h support must be [T-d, T]");
    if (mu_l.a < -g.delay() - tol || mu_l.b > tol)
        throw std::invalid_argument("mu_l support must lie inside [-d, 0]");

    SweepSetup s;
    auto [bar, mT] = split_endpoint(mu_h, g.T());
    s.bar_mu = std::move(bar);
    s.mass_T = mT;
    s.basis = opts.basis;
    if (s.basis.delay_offsets.empty()) {
        for (const Atom& at : model.mu_f.atoms)
            if (at.location < -1e-12) s.basis.delay_offsets.push_back(at.location);
    }
    s.use_regression = model.coeffs.g.bound() > 0.0 && states.paths > 1;
    s.features = s.basis.feature_count(states.dim);
    if (s.use_regression && states.paths < 10 * s.features)
        throw std::invalid_argument("solve_absde: need at least 10 paths per regression feature");
    return s;
}

void build_features(const PathEnsemble& states, int path, int n, const RegressionBasis& rb,
                    std::span<double> out) {
    const int h = std::min(rb.head_modes, states.dim);
    int c = 0;
    out[c++] = 1.0;
    const auto x = states.state(path, n);
    for (int k = 0; k < h; ++k) out[c++] = x[k];
    if (rb.quadratic)
        for (int k = 0; k < h; ++k) out[c++] = x[k] * x[k];
    if (!rb.delay_offsets.empty()) {
        Vec& xq = scratch(3, states.dim);
        const double t_n = states.grid.time(n);
        for (double theta : rb.delay_offsets) {
            states.interp_state(path, t_n + theta, xq);
            for (int k = 0; k < h; ++k) out[c++] = xq[k];
        }
    }
}

// The full backward sweep. When `frozen` is set the anticipated term reads
// the previous iterate instead of the values already computed in this sweep
// (fixed-point mode of the delta_T theorem).
AdjointEnsemble sweep(const Model& model, const PathEnsemble& states, const ControlProcess& u,
                      const RegularMeasure& mu_l, const RegularMeasure& mu_h,
                      const NoiseEnsemble& noise, const AdjointOptions& opts,
                      const AdjointEnsemble* frozen) {
    const TimeGrid& g = model.grid;
    const int dim = states.dim;
    const int paths = states.paths;
    const int K = g.K, L = g.L;
    SweepSetup setup = prepare(model, states, u, mu_l, mu_h, opts);

    AdjointEnsemble adj;
    adj.grid = g;
    adj.dim = dim;
    adj.paths = paths;
    adj.noise_dim = model.op.noise_dim();
    adj.beta = opts.beta;
    adj.p.assign(static_cast<size_t>(paths) * (K + L + 1) * dim, 0.0);
    adj.regression_used = setup.use_regression;
    const bool want_q = opts.estimate_q && setup.use_regression;
    if (want_q) adj.q.assign(static_cast<size_t>(K + 1) * dim * adj.noise_dim, 0.0);

    // mu_h mass without the T atom, assigned to the nodes the cost quadrature
    // touches: node window [K-L, K].
    const int W = L + 1;
    std::vector<double> gh(static_cast<size_t>(paths) * W * dim, 0.0);
    auto gh_at = [&](int path, int n) -> double* {
        return gh.data() + (static_cast<size_t>(path) * W + (n - (K - L))) * dim;
    };
    exec::parallel_for(paths, [&](int i) {
        Vec& xq = scratch(0, dim);
        Vec& dh = scratch(1, dim);
        setup.bar_mu.for_each_quadrature([&](double s, double w) {
            const double r = s / g.dt;
            int i0 = static_cast<int>(std::floor(r + 1e-9));
            double wg = r - i0;
            if (wg < 1e-9) wg = 0.0;
            if (wg > 1.0 - 1e-9) { ++i0; wg = 0.0; }
            states.interp_state(i, s, xq);
            lift_terminal_cost_dx(model.basis, model.coeffs.h, xq, dh);
            if (i0 >= K - L && i0 <= K)
                axpy(w * (1.0 - wg), dh, {gh_at(i, i0), static_cast<size_t>(dim)});
            if (wg > 0.0 && i0 + 1 >= K - L && i0 + 1 <= K)
                axpy(w * wg, dh, {gh_at(i, i0 + 1), static_cast<size_t>(dim)});
        });
    });

    // Terminal value: the T atom plus the node-K share of the rest.
    exec::parallel_for(paths, [&](int i) {
        Vec& dh = scratch(1, dim);
        lift_terminal_cost_dx(model.basis, model.coeffs.h, states.state(i, K), dh);
        auto pK = adj.p_at(i, K);
        for (int k = 0; k < dim; ++k) pK[k] = setup.mass_T * dh[k] + gh_at(i, K)[k];
    });

    std::vector<double> targetA(static_cast<size_t>(paths) * dim, 0.0);
    std::vector<double> lterm(static_cast<size_t>(paths) * dim, 0.0);
    std::vector<double> feats;
    std::vector<double> comp_targets(paths), fitted(paths);
    adj.regression_rss.assign(K, 0.0);

    for (int n = K - 1; n >= 0; --n) {
        const bool has_drift = (n + 1) <= K - 1;  // drivers live on [0, T)
        const double t_next = g.time(n + 1);

        if (has_drift) {
            // Index audit for the anticipated lookups: every read must be at
            // or beyond the node just written (n+1).
            model.mu_f.for_each_quadrature([&](double theta, double) {
                const double tq = t_next - theta;
                const int src = static_cast<int>(std::floor(tq / g.dt + 1e-9));
                adj.min_future_read = std::min(adj.min_future_read, src - (n + 1));
            });

            exec::parallel_for(paths, [&](int i) {
                Vec& pq = scratch(0, dim);
                Vec& term = scratch(1, dim);
                Vec& xq = scratch(2, dim);
                double* A = targetA.data() + static_cast<size_t>(i) * dim;
                double* lt = lterm.data() + static_cast<size_t>(i) * dim;
                std::fill(A, A + dim, 0.0);
                std::fill(lt, lt + dim, 0.0);
                const auto x_next = states.state(i, n + 1);
                model.mu_f.for_each_quadrature([&](double theta, double w) {
                    const AdjointEnsemble& source = frozen ? *frozen : adj;
                    source.interp_p(i, t_next - theta, pq);
                    nemytskii_dx_apply(model.basis, model.coeffs, x_next, pq, term);
                    axpy(w, term, {A, static_cast<size_t>(dim)});
                });
                mu_l.for_each_quadrature([&](double theta, double w) {
                    states.interp_state(i, t_next + theta, xq);
                    lift_running_cost_dx(model.basis, model.coeffs.l, xq, u.value(n + 1), term);
                    axpy(w, term, {lt, static_cast<size_t>(dim)});
                });
            });

            if (setup.use_regression && !frozen) {
                // Project the anticipated contribution on F_{t_n} features;
                // everything else in the recursion is adapted already.
                const int F = setup.features;
                feats.resize(static_cast<size_t>(paths) * F);
                exec::parallel_for(paths, [&](int i) {
                    build_features(states, i, n, setup.basis,
                                   {feats.data() + static_cast<size_t>(i) * F,
                                    static_cast<size_t>(F)});
                });
                std::vector<double> gram(static_cast<size_t>(F) * F, 0.0);
                for (int i = 0; i < paths; ++i) {  // serial, in path order
                    const double* fi = feats.data() + static_cast<size_t>(i) * F;
                    for (int a = 0; a < F; ++a)
                        for (int b = a; b < F; ++b) gram[a * F + b] += fi[a] * fi[b];
                }
                for (int a = 0; a < F; ++a) {
                    for (int b = 0; b < a; ++b) gram[a * F + b] = gram[b * F + a];
                    gram[a * F + a] += setup.basis.ridge;
                }
                Cholesky chol;
                if (!chol.factor(gram, F))
                    throw std::runtime_error("solve_absde: regression system singular; "
                                             "increase ridge or reduce features");
                std::vector<double> rhs(F), beta(F);
                for (int k = 0; k < dim; ++k) {
                    std::fill(rhs.begin(), rhs.end(), 0.0);
                    for (int i = 0; i < paths; ++i) {
                        const double* fi = feats.data() + static_cast<size_t>(i) * F;
                        const double y = targetA[static_cast<size_t>(i) * dim + k];
                        for (int a = 0; a < F; ++a) rhs[a] += fi[a] * y;
                    }
                    chol.solve(rhs, beta);
                    double rss = 0.0;
                    for (int i = 0; i < paths; ++i) {
                        const double* fi = feats.data() + static_cast<size_t>(i) * F;
                        double yhat = 0.0;
                        for (int a = 0; a < F; ++a) yhat += beta[a] * fi[a];
                        const double res = targetA[static_cast<size_t>(i) * dim + k] - yhat;
                        rss += res * res;
                        targetA[static_cast<size_t>(i) * dim + k] = yhat;
                    }
                    adj.regression_rss[n] += rss / paths;
                }
            }
        }

        exec::parallel_for(paths, [&](int i) {
            Vec& acc = scratch(0, dim);
            const auto pn1 = adj.p_at(i, n + 1);
            for (int k = 0; k < dim; ++k) acc[k] = pn1[k];
            if (n + 1 < K && n + 1 >= K - L)
                axpy(1.0, {gh_at(i, n + 1), static_cast<size_t>(dim)}, acc);
            if (has_drift) {
                const double* A = targetA.data() + static_cast<size_t>(i) * dim;
                const double* lt = lterm.data() + static_cast<size_t>(i) * dim;
                for (int k = 0; k < dim; ++k) acc[k] += g.dt * (A[k] + lt[k]);
            }
            adjoint_semigroup_apply(model.op, g.dt, acc, adj.p_at(i, n));
        });

        if (want_q) {
            // One-step increment regression on dW/dt; per-step operator,
            // diagnostic only.
            const int nm = adj.noise_dim;
            double* qn = adj.q.data() + static_cast<size_t>(n) * dim * nm;
            Vec tr(dim);
            std::vector<double> acc(static_cast<size_t>(dim) * nm, 0.0);
            for (int i = 0; i < paths; ++i) {
                adjoint_semigroup_apply(model.op, g.dt, adj.p_at(i, n + 1), tr);
                for (int m = 0; m < nm; ++m) {
                    const double dw = noise.increment(i, n, m);
                    for (int k = 0; k < dim; ++k) acc[static_cast<size_t>(k) * nm + m] += tr[k] * dw;
                }
            }
            for (size_t j = 0; j < acc.size(); ++j) qn[j] = acc[j] / (paths * g.dt);
        }
    }

    // A-priori estimate shadow: beta-weighted norm of (p, q) against
    // 1 + E sup |X|^2 + ||u||^2.
    double wn = 0.0;
    for (int n = 0; n <= K + L; ++n) {
        double s = 0.0;
        for (int i = 0; i < paths; ++i) {
            const auto pn = adj.p_at(i, n);
            s += 0.5 * dot(pn, pn);
        }
        s /= paths;
        if (want_q && n <= K) {
            const auto qn = adj.q_at(n);
            s += dot(qn, qn);
        }
        wn += g.dt * std::exp(adj.beta * g.time(n)) * s;
    }
    adj.weighted_norm = wn;
    adj.apriori_rhs = 1.0 + sup_moment(states, 2) + u.squared_norm(model.basis, g.dt);
    adj.apriori_constant = adj.weighted_norm / adj.apriori_rhs;
    return adj;
}

}  // namespace

AdjointEnsemble solve_absde(const Model& model, const PathEnsemble& states,
                            const ControlProcess& u, const RegularMeasure& mu_l,
                            const RegularMeasure& mu_h, const NoiseEnsemble& noise,
                            const AdjointOptions& opts) {
    return sweep(model, states, u, mu_l, mu_h, noise, opts, nullptr);
}

AdjointEnsemble solve_absde_delta_T(const Model& model, const PathEnsemble& states,
                                    const ControlProcess& u, const RegularMeasure& mu_l,
                                    const NoiseEnsemble& noise, const AdjointOptions& opts) {
    const double T = model.grid.T();
    return solve_absde(model, states, u, mu_l, dirac_measure(T - model.grid.delay(), T, T), noise,
                       opts);
}

FixedPointReport solve_absde_delta_T_fixed_point(const Model& model, const PathEnsemble& states,
                                                 const ControlProcess& u,
                                                 const RegularMeasure& mu_l,
                                                 const NoiseEnsemble& noise, double beta,
                                                 double tol, int max_iter,
                                                 const AdjointOptions& opts) {
    const double T = model.grid.T();
    const RegularMeasure mu_h = dirac_measure(T - model.grid.delay(), T, T);

    AdjointOptions inner = opts;
    inner.estimate_q = false;
    inner.beta = beta;

    FixedPointReport rep;
    rep.beta = beta;
    AdjointEnsemble prev;
    prev.grid = model.grid;
    prev.dim = states.dim;
    prev.paths = states.paths;
    prev.p.assign(static_cast<size_t>(states.paths) * (model.grid.K + model.grid.L + 1) *
                      states.dim,
                  0.0);

    for (int it = 0; it < max_iter; ++it) {
        AdjointEnsemble next = sweep(model, states, u, mu_l, mu_h, noise, inner, &prev);
        double acc = 0.0;
        for (int n = 0; n <= model.grid.K + model.grid.L; ++n) {
            double s = 0.0;
            for (int i = 0; i < states.paths; ++i) {
                const auto a = next.p_at(i, n);
                const auto b = prev.p_at(i, n);
                for (int k = 0; k < states.dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
            }
            acc += model.grid.dt * std::exp(beta * model.grid.time(n)) * s / states.paths;
        }
        const double res = std::sqrt(acc);
        rep.residuals.push_back(res);
        prev = std::move(next);
        if (res < tol) {
            rep.converged = true;
            break;
        }
    }
    for (size_t i = 0; i + 1 < rep.residuals.size(); ++i)
        if (rep.residuals[i] > 0.0) rep.ratios.push_back(rep.residuals[i + 1] / rep.residuals[i]);
    rep.result = std::move(prev);
    return rep;
}

double find_beta(const Model& model, const PathEnsemble& states, const ControlProcess& u,
                 const RegularMeasure& mu_l, const NoiseEnsemble& noise,
                 const AdjointOptions& opts) {
    for (double beta = 1.0; beta <= (1 << 20); beta *= 2.0) {
        FixedPointReport rep =
            solve_absde_delta_T_fixed_point(model, states, u, mu_l, noise, beta, 0.0, 3, opts);
        if (rep.residuals.size() < 2 || rep.residuals[0] == 0.0) return beta;
        const double ratio = rep.residuals[1] / rep.residuals[0];
        if (ratio < 0.5) return beta;
    }
    throw std::runtime_error("find_beta: doubling search failed to contract");
}

AdjointEnsemble solve_absde_approx(const Model& model, const PathEnsemble& states,
                                   const ControlProcess& u, const RegularMeasure& mu_l,
                                   const RegularMeasure& mu_h, int n, const NoiseEnsemble& noise,
                                   const AdjointOptions& opts) {
    auto [bar, mass_T] = split_endpoint(mu_h, model.grid.T());
    RegularMeasure approx = mollify_approximation(bar, n);
    if (mass_T != 0.0) approx.atoms.push_back({model.grid.T(), mass_T});
    approx.validate();
    return solve_absde(model, states, u, mu_l, approx, noise, opts);
}

double adjoint_l2_distance(const AdjointEnsemble& x, const AdjointEnsemble& y) {
    if (x.paths != y.paths || x.dim != y.dim || x.p.size() != y.p.size())
        throw std::invalid_argument("adjoint_l2_distance: shape mismatch");
    double acc = 0.0;
    for (int n = 0; n <= x.grid.K + x.grid.L; ++n) {
        double s = 0.0;
        for (int i = 0; i < x.paths; ++i) {
            const auto a = x.p_at(i, n);
            const auto b = y.p_at(i, n);
            for (int k = 0; k < x.dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        }
        acc += x.grid.dt * s / x.paths;
    }
    return std::sqrt(acc);
}

FitResult conditional_expectation_fit(const std::vector<double>& targets,
                                      const std::vector<double>& features, int F, double ridge) {
    const int M = static_cast<int>(targets.size());
    if (F < 1 || static_cast<int>(features.size()) != M * F)
        throw std::invalid_argument("conditional_expectation_fit: shape mismatch");
    std::vector<double> gram(static_cast<size_t>(F) * F, 0.0), rhs(F, 0.0), beta(F);
    for (int i = 0; i < M; ++i) {
        const double* fi = features.data() + static_cast<size_t>(i) * F;
        for (int a = 0; a < F; ++a) {
            rhs[a] += fi[a] * targets[i];
            for (int b = a; b < F; ++b) gram[a * F + b] += fi[a] * fi[b];
        }
    }
    for (int a = 0; a < F; ++a) {
        for (int b = 0; b < a; ++b) gram[a * F + b] = gram[b * F + a];
        gram[a * F + a] += ridge;
    }
    Cholesky chol;
    if (!chol.factor(gram, F))
        throw std::runtime_error("conditional_expectation_fit: degenerate features");
    chol.solve(rhs, beta);
    FitResult out;
    out.fitted.resize(M);
    for (int i = 0; i < M; ++i) {
        const double* fi = features.data() + static_cast<size_t>(i) * F;
        double yhat = 0.0;
        for (int a = 0; a < F; ++a) yhat += beta[a] * fi[a];
        out.fitted[i] = yhat;
        const double r = targets[i] - yhat;
        out.rss += r * r;
    }
    return out;
}

}  // namespace dsmp
