#pragma once

#include <vector>

#include "dsmp/absde.hpp"
#include "dsmp/forward.hpp"
#include "dsmp/variation.hpp"

namespace dsmp {

struct CostResult {
    double value = 0.0;
    double stderr_ = 0.0;
    std::vector<double> per_path;
};

/// J(u) = E [ sum_n dt int l(X(t_n+theta), u_n) mu_l + int h(X(s)) mu_h(ds) ].
CostResult cost(const Model& model, const PathEnsemble& states, const ControlProcess& u,
                const RegularMeasure& mu_l, const RegularMeasure& mu_h);

/// H(t, x_seg, u, p) = <F(x_seg, u), p> + L(t, x_seg, u).
double hamiltonian(const Model& model, const PathEnsemble& states, int path, int n,
                   std::span<const double> u, std::span<const double> p,
                   const RegularMeasure& mu_l);

/// d_u H as a field over the control grid:
/// (int D_u f(X(t+theta), u) mu_f)' p + int D_u l(X(t+theta), u) mu_l.
void hamiltonian_du(const Model& model, const PathEnsemble& states, int path, int n,
                    std::span<const double> u, std::span<const double> p,
                    const RegularMeasure& mu_l, std::span<double> out_field);

struct GateauxRow {
    double rho = 0.0;
    double estimate = 0.0;
    double stderr_ = 0.0;
};

struct GateauxFD {
    double estimate = 0.0;  // Richardson-extrapolated
    double stderr_ = 0.0;
    std::vector<GateauxRow> table;
};

/// Forward differences (J(u + rho v) - J(u)) / rho over the rho sequence with
/// common random numbers, Richardson-extrapolated from the two finest rows.
GateauxFD cost_gateaux_fd(const Model& model, const ControlProcess& u_bar,
                          const ControlProcess& w, const std::vector<double>& rhos,
                          const InitialHistory& init, const NoiseEnsemble& noise,
                          const RegularMeasure& mu_l, const RegularMeasure& mu_h);

struct GateauxAdjoint {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

/// Adjoint representation E sum_n dt <d_u H(t_n, X, u_n, p(t_n)), v(t_n)>.
GateauxAdjoint cost_gateaux_adjoint(const Model& model, const PathEnsemble& states,
                                    const ControlProcess& u_bar, const ControlDirection& v,
                                    const AdjointEnsemble& adjoint, const RegularMeasure& mu_l);

struct DualityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    double rel_gap = 0.0;
};

// Both sides of the duality identity on the same ensemble:
//   LHS = E int <Y, D_x h(X)> mu_h + E int int <D_x l(X(t+.)), Y(t+.)> mu_l dt
//   RHS = E int int <D_u f(X(t+.), u(t))' p(t), v(t)> mu_f dt.
DualityResult duality_gap(const Model& model, const PathEnsemble& states,
                          const ControlProcess& u, const ControlDirection& v,
                          const PathEnsemble& Y, const AdjointEnsemble& adjoint,
                          const RegularMeasure& mu_l, const RegularMeasure& mu_h);

struct OptimizeOptions {
    int max_iters = 100;
    double step0 = 1.0;
    double armijo_c1 = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 20;
    double grad_tol = 0.0;  // stop when the gradient norm falls below
};

struct OptimizeIterate {
    int iter = 0;
    double J = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
    bool accepted = false;
};

struct OptimizationReport {
    std::vector<OptimizeIterate> history;
    double final_J = 0.0;
    double final_grad_norm = 0.0;
    bool stalled = false;
    bool stationary = false;
};

/// Projected gradient on the box with Armijo backtracking at a fixed seed.
OptimizationReport projected_gradient_descent(const Model& model, ControlProcess& u,
                                              const InitialHistory& init,
                                              const NoiseEnsemble& noise,
                                              const RegularMeasure& mu_l,
                                              const RegularMeasure& mu_h,
                                              const OptimizeOptions& opts);

struct VIProbeResult {
    double margin = 0.0;           // min over probes of the dt x probability weighted pairing
    double margin_per_time = 0.0;  // min over probes and grid times
    int probes = 0;
};

/// Probe-set certificate of <d_u H, w - u_bar> >= 0: box corners (2^min(dim,6),
/// seeded subset when the control dimension is large) plus 32 interior samples.
VIProbeResult variational_inequality_check(const Model& model, const PathEnsemble& states,
                                           const AdjointEnsemble& adjoint,
                                           const ControlProcess& u_bar,
                                           const RegularMeasure& mu_l, uint64_t probe_seed = 2024);

/// Time-aggregated mean gradient field; also used by the optimizer.
void mean_hamiltonian_gradient(const Model& model, const PathEnsemble& states,
                               const ControlProcess& u, const AdjointEnsemble& adjoint,
                               const RegularMeasure& mu_l, std::vector<double>& out);

}  // namespace dsmp
