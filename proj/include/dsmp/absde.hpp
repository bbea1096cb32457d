#pragma once

#include <limits>
#include <vector>

#include "dsmp/forward.hpp"

namespace dsmp {

// Feature map for the numerical conditional expectation: affine + quadratic
// in the leading modes of the current state, plus the delayed snapshots at
// the mu_f atom locations. Offsets are filled from mu_f automatically.
struct RegressionBasis {
    int head_modes = 3;
    bool quadratic = true;
    std::vector<double> delay_offsets;
    double ridge = 1e-8;

    int feature_count(int state_dim) const;
};

struct AdjointOptions {
    RegressionBasis basis;
    bool estimate_q = true;   // per-step operator estimate via increment regression
    double beta = 8.0;        // weight of the norm diagnostics
};

// Solution pair of the backward sweep. p is stored per path on the grid
// covering [0, T+d] and vanishes identically beyond T. q is a per-step
// Hilbert-Schmidt operator estimate (state_dim x noise_dim), a diagnostic
// only: the Hamiltonian never reads it.
struct AdjointEnsemble {
    TimeGrid grid;
    int dim = 1;
    int paths = 1;
    int noise_dim = 0;
    std::vector<double> p;  // paths x (K+L+1) x dim, node index n in [0, K+L]
    std::vector<double> q;  // (K+1) x dim x noise_dim when estimated, else empty

    // Diagnostics of the run.
    double beta = 0.0;
    double weighted_norm = 0.0;   // int_0^{T+d} e^{beta t} (|p|^2/2 + |q|^2) dt estimate
    double apriori_rhs = 0.0;     // 1 + E sup |X|^2 + int |u|^2 (the estimate's right side)
    double apriori_constant = 0.0;
    std::vector<double> regression_rss;  // per backward step, in-sample
    int min_future_read = std::numeric_limits<int>::max();  // anticipated-lookup index audit
    bool regression_used = false;

    std::span<double> p_at(int path, int n);
    std::span<const double> p_at(int path, int n) const;
    void interp_p(int path, double t, std::span<double> out) const;
    std::span<const double> q_at(int n) const;

    /// sqrt of the mean over paths of sum_n dt e^{beta t_n} |p|^2.
    double weighted_p_norm(double beta_weight) const;
};

/// The mild history term: integral over {s > t} of S(s-t)' D_x h(X(s)) mu_h_part(ds).
void terminal_history_term(const Model& model, const PathEnsemble& states, int path, double t,
                           const RegularMeasure& mu_h_part, std::span<double> out);

// Backward solve of the anticipated equation in one-step mild form. The mass
// mu_h({T}) enters the terminal value exactly; the rest of mu_h is assigned
// to grid nodes with the same interpolation weights the cost quadrature uses,
// which makes the sweep the exact discrete adjoint of the forward scheme.
// Only the anticipated drift contribution is regressed (deterministic runs
// pass it through unchanged).
AdjointEnsemble solve_absde(const Model& model, const PathEnsemble& states,
                            const ControlProcess& u, const RegularMeasure& mu_l,
                            const RegularMeasure& mu_h, const NoiseEnsemble& noise,
                            const AdjointOptions& opts = {});

/// Convenience wrapper with mu_h = delta_T.
AdjointEnsemble solve_absde_delta_T(const Model& model, const PathEnsemble& states,
                                    const ControlProcess& u, const RegularMeasure& mu_l,
                                    const NoiseEnsemble& noise, const AdjointOptions& opts = {});

struct FixedPointReport {
    AdjointEnsemble result;
    std::vector<double> residuals;  // beta-weighted norm of successive differences
    std::vector<double> ratios;
    double beta = 0.0;
    bool converged = false;
};

// Contraction mode for the delta_T theorem: iterates the mild map with the
// anticipated term frozen at the previous iterate and reports the geometric
// residual decay in the beta-weighted norm.
FixedPointReport solve_absde_delta_T_fixed_point(const Model& model, const PathEnsemble& states,
                                                 const ControlProcess& u,
                                                 const RegularMeasure& mu_l,
                                                 const NoiseEnsemble& noise, double beta,
                                                 double tol, int max_iter,
                                                 const AdjointOptions& opts = {});

/// Smallest beta = 2^j making the fixed-point contraction factor < 1/2.
double find_beta(const Model& model, const PathEnsemble& states, const ControlProcess& u,
                 const RegularMeasure& mu_l, const NoiseEnsemble& noise,
                 const AdjointOptions& opts = {});

/// Approximating equation: mu_h is replaced by split_endpoint + mollify(n),
/// keeping the S(T-t)' D_xh(X(T)) mu_h({T}) part exact.
AdjointEnsemble solve_absde_approx(const Model& model, const PathEnsemble& states,
                                   const ControlProcess& u, const RegularMeasure& mu_l,
                                   const RegularMeasure& mu_h, int n, const NoiseEnsemble& noise,
                                   const AdjointOptions& opts = {});

/// L2(Omega x [0, T+d]) distance between two adjoint ensembles (same shape).
double adjoint_l2_distance(const AdjointEnsemble& x, const AdjointEnsemble& y);

struct FitResult {
    std::vector<double> fitted;
    double rss = 0.0;
};

/// Ridge least-squares projection of targets on features (row-major M x F).
FitResult conditional_expectation_fit(const std::vector<double>& targets,
                                      const std::vector<double>& features, int F, double ridge);

}  // namespace dsmp
