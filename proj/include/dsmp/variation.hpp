#pragma once

#include <vector>

#include "dsmp/forward.hpp"

namespace dsmp {

// Direction in control space, v = w - u_bar; unlike controls it is not box
// constrained.
struct ControlDirection {
    int steps = 0;
    int dim = 1;
    std::vector<double> values;

    static ControlDirection difference(const ControlProcess& w, const ControlProcess& u_bar);

    std::span<const double> value(int n) const {
        return {values.data() + static_cast<size_t>(n) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> at_time(double t, double dt) const;
};

// First-variation ensemble: the linear delayed equation, driven by the stored
// state paths; zero on [-d, 0], no noise term.
PathEnsemble solve_first_variation(const Model& model, const PathEnsemble& states,
                                   const ControlProcess& u_bar, const ControlDirection& v);

/// Rows of E sup_t |X^rho - X_bar - rho Y|^2 / rho^2 under common random numbers.
std::vector<ConvergenceRow> remainder_diagnostic(const Model& model, const ControlProcess& u_bar,
                                                 const ControlProcess& w,
                                                 const std::vector<double>& rhos,
                                                 const InitialHistory& init,
                                                 const NoiseEnsemble& noise);

/// Least-squares slope of log(value) against log(rho), ignoring zero rows.
double loglog_slope(const std::vector<ConvergenceRow>& rows);

}  // namespace dsmp
