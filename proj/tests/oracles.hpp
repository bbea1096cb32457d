#pragma once

// Test-only oracles, independent of the solver implementations they check.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracles {

// Method of steps for the scalar delay ODE
//   X'(t) = b X(t - d) + c u(t) + k0,  X(theta) = x0 on [-d, 0].
// Integrates segment by segment: on [k d, (k+1) d] the delayed argument is
// known from the previous segment, so each segment is plain quadrature of a
// known right-hand side, done here with RK4 on a fine aligned grid.
struct DelaySteps {
    double d, dt_fine;
    std::vector<double> values;  // on the fine grid covering [-d, T]

    DelaySteps(double b, double c, double k0, const std::function<double(double)>& u,
               double x0, double d_, double T, int fine_per_delay = 4096)
        : d(d_), dt_fine(d_ / fine_per_delay) {
        const int Lf = fine_per_delay;
        const int Nf = static_cast<int>(std::llround(T / dt_fine));
        values.assign(Nf + Lf + 1, x0);
        auto delayed = [&](int i) { return values[i]; };  // i indexes t - d exactly
        for (int i = 0; i < Nf; ++i) {
            const double t = i * dt_fine;
            // RHS is known in t (delayed value interpolated on the fine grid;
            // time s - d sits at fine index s / dt_fine)
            auto rhs = [&](double s) {
                const double sd = s / dt_fine;
                const int j = static_cast<int>(std::floor(sd + 1e-9));
                const double w = sd - j;
                const double xd = w < 1e-9 || j + 1 >= static_cast<int>(values.size())
                                      ? delayed(j)
                                      : (1 - w) * values[j] + w * values[j + 1];
                return b * xd + c * u(s) + k0;
            };
            // Simpson step of the pure integral (RHS independent of X)
            values[i + Lf + 1] =
                values[i + Lf] +
                dt_fine / 6.0 * (rhs(t) + 4.0 * rhs(t + 0.5 * dt_fine) + rhs(t + dt_fine));
        }
    }

    double at(double t) const {
        const double s = (t + d) / dt_fine;
        const int j = static_cast<int>(std::floor(s + 1e-9));
        const double w = s - j;
        if (j + 1 >= static_cast<int>(values.size())) return values.back();
        return w < 1e-9 ? values[j] : (1 - w) * values[j] + w * values[j + 1];
    }
};

// Finite-horizon scalar Riccati oracle for
//   X' = a_eff X + c u + noise,  cost 0.5 q x^2 + 0.5 r u^2, terminal 0.5 m x^2.
// Backward RK4 for P, then the optimal open-loop pair along the mean path.
struct Riccati {
    std::vector<double> P;  // fine grid over [0, T]
    std::vector<double> xstar, ustar;
    double dt_fine, J = 0.0;

    Riccati(double a_eff, double c, double q, double r, double m, double x0, double T,
            int n_fine = 65536) {
        dt_fine = T / n_fine;
        P.assign(n_fine + 1, 0.0);
        P[n_fine] = m;
        auto f = [&](double p) { return -(2.0 * a_eff * p - c * c / r * p * p + q); };
        for (int i = n_fine; i > 0; --i) {
            const double k1 = f(P[i]);
            const double k2 = f(P[i] + 0.5 * dt_fine * -k1);
            const double k3 = f(P[i] + 0.5 * dt_fine * -k2);
            const double k4 = f(P[i] + dt_fine * -k3);
            P[i - 1] = P[i] - dt_fine * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
        }
        xstar.assign(n_fine + 1, x0);
        ustar.assign(n_fine + 1, 0.0);
        for (int i = 0; i < n_fine; ++i) {
            auto fx = [&](double x, double p) { return (a_eff - c * c / r * p) * x; };
            const double k1 = fx(xstar[i], P[i]);
            const double k2 = fx(xstar[i] + 0.5 * dt_fine * k1, 0.5 * (P[i] + P[i + 1]));
            const double k3 = fx(xstar[i] + 0.5 * dt_fine * k2, 0.5 * (P[i] + P[i + 1]));
            const double k4 = fx(xstar[i] + dt_fine * k3, P[i + 1]);
            xstar[i + 1] = xstar[i] + dt_fine * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
            ustar[i] = -c / r * P[i] * xstar[i];
            J += dt_fine * 0.5 * (q * xstar[i] * xstar[i] + r * ustar[i] * ustar[i]);
        }
        ustar[n_fine] = -c / r * P[n_fine] * xstar[n_fine];
        J += 0.5 * m * xstar[n_fine] * xstar[n_fine];
    }

    double P_at(double t) const { return interp(P, t); }
    double u_at(double t) const { return interp(ustar, t); }
    double x_at(double t) const { return interp(xstar, t); }

private:
    double interp(const std::vector<double>& v, double t) const {
        const double s = t / dt_fine;
        const int j = std::min(static_cast<int>(std::floor(s + 1e-9)),
                               static_cast<int>(v.size()) - 2);
        const double w = s - j;
        return w < 1e-9 ? v[j] : (1 - w) * v[j] + w * v[j + 1];
    }
};

}  // namespace oracles
