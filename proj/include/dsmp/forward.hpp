#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dsmp/grid.hpp"
#include "dsmp/measures.hpp"
#include "dsmp/rng.hpp"
#include "dsmp/spectral.hpp"

namespace dsmp {

// Dynamics bundle: generator, coefficient families, grid and the delay
// measure of the drift. Immutable; shared across concurrent path work.
struct Model {
    OperatorSpec op;
    CoefficientSpec coeffs;
    TimeGrid grid;
    RegularMeasure mu_f;
    Basis basis;

    Model(OperatorSpec op_, CoefficientSpec coeffs_, TimeGrid grid_, RegularMeasure mu_f_);
};

struct ControlBox {
    double lo = -1e30;
    double hi = 1e30;
    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// Control values on the grid nodes t_0..t_{K-1}, one field value per physical
// control point, constrained to a box. u(t) is piecewise constant on steps
// and extends left-constant past t_{K-1}.
struct ControlProcess {
    int steps = 0;
    int dim = 1;
    ControlBox box;
    std::vector<double> values;  // steps x dim

    static ControlProcess constant(int steps, int dim, double value, ControlBox box);

    std::span<double> value(int n) { return {values.data() + static_cast<size_t>(n) * dim,
                                             static_cast<size_t>(dim)}; }
    std::span<const double> value(int n) const {
        return {values.data() + static_cast<size_t>(n) * dim, static_cast<size_t>(dim)};
    }
    /// Value at time t (left-constant extension beyond the last step).
    std::span<const double> at_time(double t, double dt) const;

    void validate_in_box() const;
    /// Squared grid L2 norm sum_n dt |u_n|^2 (trapezoid field inner for PDE kinds).
    double squared_norm(const Basis& basis, double dt) const;
};

/// u_bar + rho (w - u_bar); stays in the box by convexity. rho in [0,1].
ControlProcess perturb_control(const ControlProcess& u_bar, const ControlProcess& w, double rho);

// Initial history segment x(theta) = base + theta * slope, theta in [-d, 0].
struct InitialHistory {
    Vec base;
    Vec slope;  // empty = constant history
    void evaluate(double theta, std::span<double> out) const;
};

// Trajectory ensemble on the grid nodes n in {-L, ..., K}; storage is
// path-major, node index n + L.
struct PathEnsemble {
    TimeGrid grid;
    int dim = 1;
    int paths = 1;
    std::vector<double> data;

    PathEnsemble() = default;
    PathEnsemble(TimeGrid g, int dim_, int paths_);

    std::span<double> state(int path, int n);
    std::span<const double> state(int path, int n) const;
    /// Piecewise-linear interpolation at time t in [-d, T]; node-aligned
    /// queries are snapped and read exactly.
    void interp_state(int path, double t, std::span<double> out) const;

    double sup_norm(int path) const;
};

/// Delay drift F(t_n) = integral of f(X(t_n + theta), u_n) d mu_f(theta).
void delay_integral(const Model& model, const PathEnsemble& ens, int path, int n,
                    std::span<const double> u_n, std::span<double> out);

/// One exponential-Euler step: X_{n+1} = S(dt)[X_n + dt F_n + g(t_n) dW_n].
void step_exponential_euler(const Model& model, PathEnsemble& ens, int path, int n,
                            std::span<const double> u_n, std::span<const double> dW);

struct SimulateOptions {
    bool check_finite = true;
};

/// Simulates all paths of the ensemble (concurrently; bitwise deterministic).
PathEnsemble simulate_paths(const Model& model, const ControlProcess& u,
                            const InitialHistory& init, const NoiseEnsemble& noise,
                            const SimulateOptions& opts = {});

/// Monte Carlo estimator of E sup_{[-d,T]} |X|^p.
double sup_moment(const PathEnsemble& ens, int p);

struct PicardResult {
    PathEnsemble trajectory;  // single path
    std::vector<double> residuals;
    bool converged = false;
};

// Picard iteration of the discrete mild map Gamma on one fixed noise path;
// the stochastic convolution is frozen across iterations. Starts from zero
// on (0, T] unless a start iterate is supplied.
PicardResult picard_solve(const Model& model, const ControlProcess& u,
                          const InitialHistory& init, const NoiseEnsemble& noise, int path_index,
                          double tol, int max_iter,
                          const PathEnsemble* start = nullptr);

struct ConvergenceRow {
    double rho = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

/// E sup_t |X^rho - X_bar|^2 for each rho, common random numbers throughout.
std::vector<ConvergenceRow> control_convergence_diagnostic(
    const Model& model, const ControlProcess& u_bar, const ControlProcess& w,
    const std::vector<double>& rhos, const InitialHistory& init, const NoiseEnsemble& noise);

}  // namespace dsmp
