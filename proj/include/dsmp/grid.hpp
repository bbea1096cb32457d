#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsmp {

// Uniform grid covering [-d, T] with t_n = n*dt for n in {-L, ..., K}.
// d and T must be exact integer multiples of dt; anything else is a
// configuration error, not something to round silently.
struct TimeGrid {
    double dt = 0.0;
    int K = 0;  // T = K*dt
    int L = 0;  // d = L*dt

    static TimeGrid make(double dt, double T, double d) {
        if (!(dt > 0.0)) throw std::invalid_argument("grid.dt must be positive");
        const double kf = T / dt;
        const double lf = d / dt;
        const double kr = std::round(kf);
        const double lr = std::round(lf);
        if (std::abs(kf - kr) > 1e-9 * std::max(1.0, kf) || kr < 1.0)
            throw std::invalid_argument("grid.T is not an integer multiple of grid.dt");
        if (std::abs(lf - lr) > 1e-9 * std::max(1.0, lf) || lr < 1.0)
            throw std::invalid_argument("grid.delay is not an integer multiple of grid.dt");
        TimeGrid g;
        g.dt = dt;
        g.K = static_cast<int>(kr);
        g.L = static_cast<int>(lr);
        return g;
    }

    double T() const { return K * dt; }
    double delay() const { return L * dt; }
    double time(int n) const { return n * dt; }  // n in [-L, K] (forward), [0, K+L] (adjoint)
    int nodes() const { return K + L + 1; }      // forward storage, index n+L
};

}  // namespace dsmp
