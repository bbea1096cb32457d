#include "dsmp/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsmp {

namespace {
constexpr double kPi = std::numbers::pi;
}

OperatorKind operator_kind_from_string(const std::string& s) {
    if (s == "scalar") return OperatorKind::scalar;
    if (s == "heat_dirichlet") return OperatorKind::heat_dirichlet;
    if (s == "heat_neumann") return OperatorKind::heat_neumann;
    if (s == "wave") return OperatorKind::wave;
    throw std::invalid_argument("unknown model kind: " + s);
}

std::string to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::scalar: return "scalar";
        case OperatorKind::heat_dirichlet: return "heat_dirichlet";
        case OperatorKind::heat_neumann: return "heat_neumann";
        case OperatorKind::wave: return "wave";
    }
    return "?";
}

void OperatorSpec::validate() const {
    if (modes < 1) throw std::invalid_argument("model.modes must be >= 1");
    if (kind == OperatorKind::scalar && modes != 1)
        throw std::invalid_argument("scalar model has exactly one mode");
}

std::vector<double> OperatorSpec::eigenvalues() const {
    std::vector<double> ev(modes);
    for (int k = 1; k <= modes; ++k) {
        switch (kind) {
            case OperatorKind::scalar: ev[k - 1] = scalar_a; break;
            case OperatorKind::heat_dirichlet: ev[k - 1] = -(k * kPi) * (k * kPi); break;
            case OperatorKind::heat_neumann: ev[k - 1] = -((k - 1) * kPi) * ((k - 1) * kPi); break;
            case OperatorKind::wave: ev[k - 1] = k * kPi; break;  // rotation frequencies
        }
    }
    return ev;
}

std::pair<double, double> OperatorSpec::growth_bound() const {
    switch (kind) {
        case OperatorKind::scalar: return {1.0, scalar_a};
        case OperatorKind::wave: return {1.0, 0.0};
        default: return {1.0, 0.0};  // heat: all eigenvalues <= 0
    }
}

void semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v,
                     std::span<double> out) {
    if (t < 0.0) throw std::domain_error("semigroup_apply: t must be nonnegative");
    if (static_cast<int>(v.size()) != spec.state_dim() || v.size() != out.size())
        throw std::invalid_argument("semigroup_apply: dimension mismatch");
    if (spec.kind == OperatorKind::wave) {
        for (int k = 1; k <= spec.modes; ++k) {
            const double w = k * kPi;
            const double cs = std::cos(w * t), sn = std::sin(w * t);
            const double y = v[2 * (k - 1)], z = v[2 * (k - 1) + 1];
            out[2 * (k - 1)] = cs * y + sn * z;
            out[2 * (k - 1) + 1] = -sn * y + cs * z;
        }
        return;
    }
    const std::vector<double> ev = spec.eigenvalues();
    for (int k = 0; k < spec.modes; ++k) out[k] = std::exp(ev[k] * t) * v[k];
}

Vec semigroup_apply(const OperatorSpec& spec, double t, const Vec& v) {
    Vec out(v.size());
    semigroup_apply(spec, t, v, out);
    return out;
}

void adjoint_semigroup_apply(const OperatorSpec& spec, double t, std::span<const double> v,
                             std::span<double> out) {
    if (!spec.self_adjoint())
        throw std::logic_error("adjoint semigroup unsupported for the wave model");
    semigroup_apply(spec, t, v, out);
}

Vec adjoint_semigroup_apply(const OperatorSpec& spec, double t, const Vec& v) {
    Vec out(v.size());
    adjoint_semigroup_apply(spec, t, v, out);
    return out;
}

double DriftSpec::value(double x, double u) const {
    double f = k0 + b * x + c * u;
    if (alpha != 0.0) f += alpha * std::tanh(beta * x);
    return f;
}

double DriftSpec::dx(double x) const {
    double d = b;
    if (alpha != 0.0) {
        const double ch = std::cosh(beta * x);
        d += alpha * beta / (ch * ch);
    }
    return d;
}

double DriftSpec::lipschitz_x() const { return std::abs(b) + std::abs(alpha * beta); }
double DriftSpec::bound_u() const { return std::abs(c); }

double DiffusionSpec::value(double t) const { return sigma0 + sigma1 * std::sin(freq * t); }
double DiffusionSpec::bound() const { return std::abs(sigma0) + std::abs(sigma1); }

Basis::Basis(const OperatorSpec& spec) : spec_(spec), pts_(spec.grid_points()) {
    spec.validate();
    basis_.assign(static_cast<size_t>(spec.modes) * pts_, 0.0);
    weights_.assign(pts_, 1.0);
    if (!spec.field_valued()) return;

    const double h = 1.0 / (pts_ - 1);
    for (int i = 0; i < pts_; ++i) weights_[i] = (i == 0 || i == pts_ - 1) ? 0.5 * h : h;
    const double rt2 = std::sqrt(2.0);
    for (int k = 1; k <= spec.modes; ++k) {
        for (int i = 0; i < pts_; ++i) {
            const double xi = i * h;
            double e;
            if (spec.kind == OperatorKind::heat_neumann)
                e = (k == 1) ? 1.0 : rt2 * std::cos((k - 1) * kPi * xi);
            else
                e = rt2 * std::sin(k * kPi * xi);  // Dirichlet sines; also the wave y-basis
            basis_[(k - 1) * static_cast<size_t>(pts_) + i] = e;
        }
    }
}

void Basis::reconstruct(std::span<const double> coeffs, std::span<double> field) const {
    if (!spec_.field_valued()) {
        field[0] = coeffs[0];
        return;
    }
    const int stride = spec_.kind == OperatorKind::wave ? 2 : 1;
    for (int i = 0; i < pts_; ++i) field[i] = 0.0;
    for (int k = 0; k < spec_.modes; ++k) {
        const double ck = coeffs[k * stride];
        const double* row = &basis_[k * static_cast<size_t>(pts_)];
        for (int i = 0; i < pts_; ++i) field[i] += ck * row[i];
    }
}

void Basis::project(std::span<const double> field, std::span<double> coeffs) const {
    if (!spec_.field_valued()) {
        coeffs[0] = field[0];
        return;
    }
    for (int k = 0; k < spec_.modes; ++k) {
        const double* row = &basis_[k * static_cast<size_t>(pts_)];
        double acc = 0.0;
        for (int i = 0; i < pts_; ++i) acc += weights_[i] * field[i] * row[i];
        coeffs[k] = acc;
    }
}

double Basis::field_inner(std::span<const double> x, std::span<const double> y) const {
    double acc = 0.0;
    for (int i = 0; i < pts_; ++i) acc += weights_[i] * x[i] * y[i];
    return acc;
}

namespace {

// Per-thread scratch for the grid-sized temporaries in the Nemytskii kernels.
Vec& scratch(int which, int n) {
    static thread_local Vec bufs[4];
    bufs[which].resize(n);
    return bufs[which];
}

// Write N modal coefficients into the state layout (wave: velocity slots,
// scaled by 1/omega_k to match the stored coordinates).
void place_modes(const OperatorSpec& spec, std::span<const double> proj, std::span<double> out) {
    if (spec.kind == OperatorKind::wave) {
        for (int k = 1; k <= spec.modes; ++k) {
            out[2 * (k - 1)] = 0.0;
            out[2 * (k - 1) + 1] = proj[k - 1] / (k * kPi);
        }
    } else {
        for (int k = 0; k < spec.modes; ++k) out[k] = proj[k];
    }
}

}  // namespace

void nemytskii_drift(const Basis& basis, const CoefficientSpec& coeffs,
                     std::span<const double> state, std::span<const double> control,
                     std::span<double> out) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) {
        out[0] = coeffs.f.value(state[0], control[0]);
        return;
    }
    const int n = basis.points();
    Vec& field = scratch(0, n);
    Vec& fval = scratch(1, n);
    basis.reconstruct(state, field);
    for (int i = 0; i < n; ++i) fval[i] = coeffs.f.value(field[i], control[i]);
    Vec& proj = scratch(2, spec.modes);
    basis.project(fval, proj);
    place_modes(spec, proj, out);
}

void nemytskii_dx_apply(const Basis& basis, const CoefficientSpec& coeffs,
                        std::span<const double> state, std::span<const double> h,
                        std::span<double> out) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) {
        out[0] = coeffs.f.dx(state[0]) * h[0];
        return;
    }
    const int n = basis.points();
    Vec& field = scratch(0, n);
    Vec& hfield = scratch(1, n);
    basis.reconstruct(state, field);
    basis.reconstruct(h, hfield);
    Vec& prod = scratch(3, n);
    for (int i = 0; i < n; ++i) prod[i] = coeffs.f.dx(field[i]) * hfield[i];
    Vec& proj = scratch(2, spec.modes);
    basis.project(prod, proj);
    place_modes(spec, proj, out);
}

void nemytskii_du_apply(const Basis& basis, const CoefficientSpec& coeffs,
                        std::span<const double> state, std::span<const double> v,
                        std::span<double> out) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) {
        out[0] = coeffs.f.du() * v[0];
        return;
    }
    const int n = basis.points();
    Vec& prod = scratch(1, n);
    for (int i = 0; i < n; ++i) prod[i] = coeffs.f.du() * v[i];
    Vec& proj = scratch(2, spec.modes);
    basis.project(prod, proj);
    place_modes(spec, proj, out);
    (void)state;
}

void nemytskii_du_adjoint(const Basis& basis, const CoefficientSpec& coeffs,
                          std::span<const double> state, std::span<const double> p,
                          std::span<double> out_field) {
    const OperatorSpec& spec = basis.spec();
    if (spec.kind == OperatorKind::wave)
        throw std::logic_error("adjoint machinery unsupported for the wave model");
    if (!spec.field_valued()) {
        out_field[0] = coeffs.f.du() * p[0];
        return;
    }
    const int n = basis.points();
    Vec& pfield = scratch(0, n);
    basis.reconstruct(p, pfield);
    for (int i = 0; i < n; ++i) out_field[i] = coeffs.f.du() * pfield[i];
    (void)state;
}

double lift_running_cost(const Basis& basis, const RunningCostSpec& l,
                         std::span<const double> state, std::span<const double> control) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) return l.value(state[0], control[0]);
    const int n = basis.points();
    Vec& field = scratch(0, n);
    basis.reconstruct(state, field);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += w * l.value(field[i], control[i]);
    }
    return acc / (n - 1);
}

void lift_running_cost_dx(const Basis& basis, const RunningCostSpec& l,
                          std::span<const double> state, std::span<const double> control,
                          std::span<double> out) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) {
        out[0] = l.dx(state[0]);
        return;
    }
    const int n = basis.points();
    Vec& field = scratch(0, n);
    basis.reconstruct(state, field);
    Vec& grad = scratch(1, n);
    for (int i = 0; i < n; ++i) grad[i] = l.dx(field[i]);
    Vec& proj = scratch(2, spec.modes);
    basis.project(grad, proj);
    if (spec.kind == OperatorKind::wave) {
        for (int k = 0; k < spec.modes; ++k) {
            out[2 * k] = proj[k];
            out[2 * k + 1] = 0.0;
        }
    } else {
        for (int k = 0; k < spec.modes; ++k) out[k] = proj[k];
    }
    (void)control;
}

void lift_running_cost_du(const Basis& basis, const RunningCostSpec& l,
                          std::span<const double> state, std::span<const double> control,
                          std::span<double> out_field) {
    const int n = basis.points();
    for (int i = 0; i < n; ++i) out_field[i] = l.du(control[i]);
    (void)state;
}

double lift_terminal_cost(const Basis& basis, const TerminalCostSpec& h,
                          std::span<const double> state) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) return h.value(state[0]);
    const int n = basis.points();
    Vec& field = scratch(0, n);
    basis.reconstruct(state, field);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += w * h.value(field[i]);
    }
    return acc / (n - 1);
}

void lift_terminal_cost_dx(const Basis& basis, const TerminalCostSpec& h,
                           std::span<const double> state, std::span<double> out) {
    const OperatorSpec& spec = basis.spec();
    if (!spec.field_valued()) {
        out[0] = h.dx(state[0]);
        return;
    }
    const int n = basis.points();
    Vec& field = scratch(0, n);
    basis.reconstruct(state, field);
    Vec& grad = scratch(1, n);
    for (int i = 0; i < n; ++i) grad[i] = h.dx(field[i]);
    Vec& proj = scratch(2, spec.modes);
    basis.project(grad, proj);
    if (spec.kind == OperatorKind::wave) {
        for (int k = 0; k < spec.modes; ++k) {
            out[2 * k] = proj[k];
            out[2 * k + 1] = 0.0;
        }
    } else {
        for (int k = 0; k < spec.modes; ++k) out[k] = proj[k];
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scal(double alpha, std::span<double> x) {
    for (double& v : x) v *= alpha;
}

}  // namespace dsmp
