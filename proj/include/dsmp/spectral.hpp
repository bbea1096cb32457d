#pragma once

#include <span>
#include <string>
#include <vector>

namespace dsmp {

using Vec = std::vector<double>;

enum class OperatorKind { scalar, heat_dirichlet, heat_neumann, wave };

OperatorKind operator_kind_from_string(const std::string& s);
std::string to_string(OperatorKind k);

// Generator A in an explicit eigenbasis.
//   scalar         : H = R, A = a.
//   heat_dirichlet : e_k = sqrt(2) sin(k pi xi),      lambda_k = -(k pi)^2.
//   heat_neumann   : e_1 = 1, e_k = sqrt(2) cos((k-1) pi xi), lambda_k = -((k-1) pi)^2.
//   wave           : 2x2 rotation blocks with frequencies omega_k = k pi; state stored
//                    as (y_k, z_k / omega_k) so the H-norm is the Euclidean norm.
struct OperatorSpec {
    OperatorKind kind = OperatorKind::scalar;
    int modes = 1;
    double scalar_a = 0.0;

    bool self_adjoint() const { return kind != OperatorKind::wave; }
    bool field_valued() const { return kind != OperatorKind::scalar; }
    int state_dim() const { return kind == OperatorKind::wave ? 2 * modes : modes; }
    int noise_dim() const { return modes; }
    /// Physical quadrature points for the Nemytskii maps (4N+1 uniform on [0,1]).
    int grid_points() const { return field_valued() ? 4 * modes + 1 : 1; }
    int control_dim() const { return grid_points(); }

    std::vector<double> eigenvalues() const;  // heat/scalar: lambda_k; wave: omega_k
    /// (M, omega) with |S(t)| <= M exp(omega t); exact for the modal realization.
    std::pair<double, double> growth_bound() const;

    void validate() const;
};

/// v -> S(t) v, modewise exponentials / rotation blocks; exact in t.
void semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v,
                     std::span<double> out);
Vec semigroup_apply(const OperatorSpec& spec, double t, const Vec& v);

/// v -> S(t)' v. Equals semigroup_apply for self-adjoint specs; the wave
/// group is not supported here (forward-only model).
void adjoint_semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v,
                             std::span<double> out);
Vec adjoint_semigroup_apply(const OperatorSpec& spec, double t, const Vec& v);

// Coefficient families. Everything is a Nemytskii map built from scalar
// functions with certifiable bounds, so the standing hypotheses can be
// audited numerically:
//   drift      f(x, u) = k0 + b x + c u + alpha tanh(beta x)
//   running    l(x, u) = 0.5 q x^2 + 0.5 r u^2
//   terminal   h(x)    = 0.5 m x^2 + m_lin x
//   diffusion  g(t)    = sigma0 + sigma1 sin(freq t)   (pointwise multiplier)
struct DriftSpec {
    double k0 = 0.0, b = 0.0, c = 0.0, alpha = 0.0, beta = 1.0;
    double value(double x, double u) const;
    double dx(double x) const;
    double du() const { return c; }
    double lipschitz_x() const;  // C1 of (H2)/(H3)
    double bound_u() const;      // C2 of (H3)
};

struct RunningCostSpec {
    double q = 0.0, r = 0.0;
    double value(double x, double u) const { return 0.5 * q * x * x + 0.5 * r * u * u; }
    double dx(double x) const { return q * x; }
    double du(double u) const { return r * u; }
};

struct TerminalCostSpec {
    double m = 0.0, m_lin = 0.0;
    double value(double x) const { return 0.5 * m * x * x + m_lin * x; }
    double dx(double x) const { return m * x + m_lin; }
};

struct DiffusionSpec {
    double sigma0 = 0.0, sigma1 = 0.0, freq = 0.0;
    double value(double t) const;
    double bound() const;  // K of Hypothesis 2
};

struct CoefficientSpec {
    DriftSpec f;
    RunningCostSpec l;
    TerminalCostSpec h;
    DiffusionSpec g;
};

// Cached eigenbasis on the physical grid plus trapezoid weights; shared,
// immutable after construction.
class Basis {
public:
    explicit Basis(const OperatorSpec& spec);

    const OperatorSpec& spec() const { return spec_; }
    int points() const { return pts_; }

    /// Modal coefficients -> field values on the grid (wave: first component).
    void reconstruct(std::span<const double> coeffs, std::span<double> field) const;
    /// Field values on the grid -> modal coefficients (trapezoid projection).
    void project(std::span<const double> field, std::span<double> coeffs) const;

    /// L2(0,1) inner product of two grid fields.
    double field_inner(std::span<const double> x, std::span<const double> y) const;

private:
    OperatorSpec spec_;
    int pts_;
    std::vector<double> basis_;    // modes x pts
    std::vector<double> weights_;  // trapezoid weights
};

// Nemytskii drift: reconstruct, apply f pointwise with the control field,
// project back. For the scalar kind this is a direct evaluation; for the wave
// system the drift acts on the velocity component only.
void nemytskii_drift(const Basis& basis, const CoefficientSpec& coeffs,
                     std::span<const double> state, std::span<const double> control,
                     std::span<double> out);

// Gradient actions at (x, u): out = D_x f(x,u) h and out = D_u f(x,u) v,
// realized by pointwise multiplication on the physical grid. The multiplier
// is self-adjoint, so the same routine serves D_x f and its adjoint.
void nemytskii_dx_apply(const Basis& basis, const CoefficientSpec& coeffs,
                        std::span<const double> state, std::span<const double> h,
                        std::span<double> out);
void nemytskii_du_apply(const Basis& basis, const CoefficientSpec& coeffs,
                        std::span<const double> state, std::span<const double> v,
                        std::span<double> out);
/// U-valued adjoint action (D_u f)' p, a field over the physical grid.
void nemytskii_du_adjoint(const Basis& basis, const CoefficientSpec& coeffs,
                          std::span<const double> state, std::span<const double> p,
                          std::span<double> out_field);

// Scalar cost integrands lifted to H: l(x, u) and h(x) integrated over the
// physical domain, with their H-/U-valued gradients.
double lift_running_cost(const Basis& basis, const RunningCostSpec& l,
                         std::span<const double> state, std::span<const double> control);
void lift_running_cost_dx(const Basis& basis, const RunningCostSpec& l,
                          std::span<const double> state, std::span<const double> control,
                          std::span<double> out);
void lift_running_cost_du(const Basis& basis, const RunningCostSpec& l,
                          std::span<const double> state, std::span<const double> control,
                          std::span<double> out_field);
double lift_terminal_cost(const Basis& basis, const TerminalCostSpec& h,
                          std::span<const double> state);
void lift_terminal_cost_dx(const Basis& basis, const TerminalCostSpec& h,
                           std::span<const double> state, std::span<double> out);

// Small vector helpers used throughout the solvers.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);  // y += alpha x
void scal(double alpha, std::span<double> x);

}  // namespace dsmp
