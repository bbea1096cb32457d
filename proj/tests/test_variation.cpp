#include <doctest.h>

#include <cmath>

#include "dsmp/variation.hpp"

using namespace dsmp;

namespace {

Model scalar_model(double a, DriftSpec f, TimeGrid g, RegularMeasure mu_f,
                   DiffusionSpec gg = {}) {
    CoefficientSpec co;
    co.f = f;
    co.g = gg;
    return Model(OperatorSpec{OperatorKind::scalar, 1, a}, co, g, std::move(mu_f));
}

InitialHistory const_history(double v) {
    InitialHistory h;
    h.base = {v};
    return h;
}

ControlDirection const_direction(int K, double v) {
    ControlDirection d;
    d.steps = K;
    d.dim = 1;
    d.values.assign(K, v);
    return d;
}

}  // namespace

TEST_CASE("first variation basics") {
    TimeGrid g = TimeGrid::make(0.005, 1.0, 0.25);
    const double d = g.delay();
    Model m = scalar_model(-0.2, {0.0, 0.5, 1.0, 0.0, 1.0}, g, dirac_measure(-d, 0.0, -d));
    NoiseEnsemble noise{1, 2, g.K, 1, g.dt, 1};
    ControlProcess u = ControlProcess::constant(g.K, 1, 0.3, {-2, 2});
    PathEnsemble X = simulate_paths(m, u, const_history(1.0), noise);

    SUBCASE("zero direction gives zero variation") {
        PathEnsemble Y = solve_first_variation(m, X, u, const_direction(g.K, 0.0));
        for (int n = -g.L; n <= g.K; ++n) CHECK(Y.state(0, n)[0] == 0.0);
    }
    SUBCASE("initial segment of Y is identically zero") {
        PathEnsemble Y = solve_first_variation(m, X, u, const_direction(g.K, 1.0));
        for (int n = -g.L; n <= 0; ++n) CHECK(Y.state(1, n)[0] == 0.0);
    }
    SUBCASE("linearity in the direction, machine precision") {
        ControlDirection v1 = const_direction(g.K, 0.7), v2 = const_direction(g.K, -0.2);
        ControlDirection sum = v1;
        for (size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += v2.values[i];
        PathEnsemble Y1 = solve_first_variation(m, X, u, v1);
        PathEnsemble Y2 = solve_first_variation(m, X, u, v2);
        PathEnsemble Ys = solve_first_variation(m, X, u, sum);
        for (int n = 0; n <= g.K; n += 13)
            CHECK(Ys.state(0, n)[0] ==
                  doctest::Approx(Y1.state(0, n)[0] + Y2.state(0, n)[0]).epsilon(1e-13));
        ControlDirection av = v1;
        for (double& x : av.values) x *= 3.5;
        PathEnsemble Ya = solve_first_variation(m, X, u, av);
        for (int n = 0; n <= g.K; n += 13)
            CHECK(Ya.state(0, n)[0] == doctest::Approx(3.5 * Y1.state(0, n)[0]).epsilon(1e-13));
    }
}

TEST_CASE("first variation with drift depending on u only: quadrature oracle") {
    // D_x f = 0: Y(t) = int_0^t S(t-s) (int D_u f dmu_f) v(s) ds with constant v
    TimeGrid g = TimeGrid::make(0.002, 1.0, 0.25);
    const double a = -0.4, c = 1.3, v0 = 0.8;
    Model m = scalar_model(a, {0.0, 0.0, c, 0.0, 1.0}, g,
                           atomic_measure(-g.delay(), 0.0, {{-g.delay(), 0.25}, {0.0, 0.5}}));
    NoiseEnsemble noise{1, 1, g.K, 1, g.dt, 1};
    ControlProcess u = ControlProcess::constant(g.K, 1, 0.0, {});
    PathEnsemble X = simulate_paths(m, u, const_history(1.0), noise);
    PathEnsemble Y = solve_first_variation(m, X, u, const_direction(g.K, v0));
    const double mass = 0.75;
    for (int n = 0; n <= g.K; n += 50) {
        const double t = g.time(n);
        const double exact = c * mass * v0 * (std::exp(a * t) - 1.0) / a;
        CHECK(Y.state(0, n)[0] == doctest::Approx(exact).epsilon(2e-3));
    }
}

TEST_CASE("first variation matches variation of constants for the no-delay linear model") {
    TimeGrid g = TimeGrid::make(0.001, 1.0, 0.25);
    const double a = -0.3, b = 0.6, c = 1.0, v0 = 1.0;
    Model m = scalar_model(a, {0.0, b, c, 0.0, 1.0}, g, dirac_measure(-g.delay(), 0.0, 0.0));
    NoiseEnsemble noise{1, 1, g.K, 1, g.dt, 1};
    ControlProcess u = ControlProcess::constant(g.K, 1, 0.1, {-2, 2});
    PathEnsemble X = simulate_paths(m, u, const_history(1.0), noise);
    PathEnsemble Y = solve_first_variation(m, X, u, const_direction(g.K, v0));
    const double ab = a + b;
    double err = 0.0;
    for (int n = 0; n <= g.K; ++n) {
        const double t = g.time(n);
        const double exact = c * v0 * (std::exp(ab * t) - 1.0) / ab;
        err = std::max(err, std::abs(Y.state(0, n)[0] - exact));
    }
    CHECK(err < 5.0 * g.dt);  // order-1 in dt
}

TEST_CASE("remainder diagnostic") {
    TimeGrid g = TimeGrid::make(0.005, 1.0, 0.25);
    const double d = g.delay();
    ControlBox box{-2.0, 2.0};
    InitialHistory init = const_history(1.0);

    SUBCASE("linear dynamics: remainder is zero to machine precision") {
        Model m = scalar_model(0.0, {0.0, -0.8, 1.0, 0.0, 1.0}, g, dirac_measure(-d, 0.0, -d));
        NoiseEnsemble noise{31, 2, g.K, 1, g.dt, 1};
        ControlProcess u = ControlProcess::constant(g.K, 1, 0.2, box);
        ControlProcess w = ControlProcess::constant(g.K, 1, 1.5, box);
        auto rows = remainder_diagnostic(m, u, w, {0.2, 0.1, 0.05}, init, noise);
        for (const auto& r : rows) CHECK(r.value <= 1e-10);
    }
    SUBCASE("same control: remainder is exactly zero") {
        Model m = scalar_model(0.0, {0.0, 0.4, 1.0, 0.3, 1.0}, g, dirac_measure(-d, 0.0, -d));
        NoiseEnsemble noise{31, 2, g.K, 1, g.dt, 1};
        ControlProcess u = ControlProcess::constant(g.K, 1, 0.2, box);
        auto rows = remainder_diagnostic(m, u, u, {0.2, 0.1}, init, noise);
        for (const auto& r : rows) CHECK(r.value == 0.0);
    }
    SUBCASE("tanh drift: ratios decay at slope two") {
        Model m = scalar_model(0.0, {0.0, 0.0, 1.0, 0.8, 1.2}, g, dirac_measure(-d, 0.0, -d));
        NoiseEnsemble noise{31, 1, g.K, 1, g.dt, 1};
        ControlProcess u = ControlProcess::constant(g.K, 1, 0.2, box);
        ControlProcess w = ControlProcess::constant(g.K, 1, 2.0, box);
        auto rows = remainder_diagnostic(m, u, w, {0.2, 0.1, 0.05, 0.025}, init, noise);
        for (size_t i = 0; i + 1 < rows.size(); ++i) CHECK(rows[i + 1].value < rows[i].value);
        CHECK(loglog_slope(rows) == doctest::Approx(2.0).epsilon(0.15));
    }
}
