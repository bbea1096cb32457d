#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dsmp/forward.hpp"
#include "dsmp/variation.hpp"
#include "oracles.hpp"

using namespace dsmp;

namespace {

Model scalar_model(double a, DriftSpec f, TimeGrid g, RegularMeasure mu_f,
                   DiffusionSpec gg = {}) {
    CoefficientSpec co;
    co.f = f;
    co.g = gg;
    return Model(OperatorSpec{OperatorKind::scalar, 1, a}, co, g, std::move(mu_f));
}

InitialHistory const_history(int dim, double v) {
    InitialHistory h;
    h.base.assign(dim, v);
    return h;
}

}  // namespace

TEST_CASE("grid validation") {
    CHECK_NOTHROW(TimeGrid::make(1e-3, 1.0, 0.25));
    CHECK_THROWS_AS(TimeGrid::make(1e-3, 1.0, 0.2501), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(0.3, 1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid::make(-0.1, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("delay integral reductions") {
    TimeGrid g = TimeGrid::make(0.01, 1.0, 0.25);
    const double d = g.delay();

    SUBCASE("dirac at zero reduces to the pointwise drift, bitwise") {
        Model m = scalar_model(0.0, {0.0, -0.7, 1.0, 0.4, 2.0}, g, dirac_measure(-d, 0.0, 0.0));
        PathEnsemble ens(g, 1, 1);
        for (int n = -g.L; n <= 0; ++n) ens.state(0, n)[0] = 1.0;
        ens.state(0, 0)[0] = 0.83;
        Vec u{0.37}, out(1), direct(1);
        delay_integral(m, ens, 0, 0, u, out);
        nemytskii_drift(m.basis, m.coeffs, ens.state(0, 0), u, direct);
        CHECK(out[0] == direct[0]);
    }
    SUBCASE("zero drift integrates to zero") {
        Model m = scalar_model(0.0, {}, g, uniform_density_measure(-d, 0.0, 1.0, 11));
        PathEnsemble ens(g, 1, 1);
        Vec u{0.0}, out(1);
        delay_integral(m, ens, 0, 0, u, out);
        CHECK(out[0] == 0.0);
    }
    SUBCASE("two atoms on a linear drift: hand arithmetic") {
        Model m = scalar_model(0.0, {0.0, 1.0, 0.0, 0.0, 1.0}, g,
                               atomic_measure(-d, 0.0, {{-d, 0.5}, {0.0, 0.5}}));
        PathEnsemble ens(g, 1, 1);
        for (int n = -g.L; n <= g.K; ++n) ens.state(0, n)[0] = 2.0 + 0.1 * n;
        Vec u{0.0}, out(1);
        const int n0 = 10;
        delay_integral(m, ens, 0, n0, u, out);
        const double expect = 0.5 * ens.state(0, n0 - g.L)[0] + 0.5 * ens.state(0, n0)[0];
        CHECK(out[0] == doctest::Approx(expect).epsilon(1e-15));
    }
    SUBCASE("mu_f outside [-d, 0] is rejected") {
        CHECK_THROWS_AS(scalar_model(0.0, {}, g, dirac_measure(-2 * d, 0.0, -2 * d)),
                        std::invalid_argument);
    }
}

TEST_CASE("exponential Euler stepping") {
    TimeGrid g = TimeGrid::make(0.01, 1.0, 0.25);
    const double d = g.delay();

    SUBCASE("pure semigroup flow") {
        Model m = scalar_model(-1.3, {}, g, dirac_measure(-d, 0.0, 0.0));
        NoiseEnsemble noise{1, 1, g.K, 1, g.dt, 1};
        PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                          const_history(1, 2.0), noise);
        for (int n = 0; n <= g.K; n += 17)
            CHECK(ens.state(0, n)[0] ==
                  doctest::Approx(2.0 * std::exp(-1.3 * g.time(n))).epsilon(1e-12));
    }
    SUBCASE("constant drift accumulates mass(mu_f) c t") {
        Model m = scalar_model(0.0, {0.7, 0.0, 0.0, 0.0, 1.0}, g,
                               atomic_measure(-d, 0.0, {{-d, 0.25}, {0.0, 0.5}}));
        NoiseEnsemble noise{1, 1, g.K, 1, g.dt, 1};
        PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                          const_history(1, 1.0), noise);
        CHECK(ens.state(0, g.K)[0] ==
              doctest::Approx(1.0 + 0.7 * 0.75 * g.T()).epsilon(1e-12));
    }
    SUBCASE("additive noise enters one step as S(dt) sigma dW") {
        const double a = -0.4, sigma = 0.3;
        Model m = scalar_model(a, {}, g, dirac_measure(-d, 0.0, 0.0), {sigma, 0.0, 0.0});
        NoiseEnsemble noise{77, 1, g.K, 1, g.dt, 1};
        PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                          const_history(1, 1.0), noise);
        const double det = std::exp(a * g.dt) * 1.0;
        const double dW = noise.increment(0, 0, 0);
        CHECK(ens.state(0, 1)[0] - det ==
              doctest::Approx(std::exp(a * g.dt) * sigma * dW).epsilon(1e-13));
    }
}

TEST_CASE("simulate_paths against the method-of-steps oracle") {
    // linear scalar delay model: a = 0, f = b x(t-d), deterministic
    const double b = -0.8, d = 0.25, T = 1.0;
    oracles::DelaySteps oracle(b, 0.0, 0.0, [](double) { return 0.0; }, 1.0, d, T);

    double prev_err = 0.0;
    for (double dt : {1e-2, 5e-3}) {
        TimeGrid g = TimeGrid::make(dt, T, d);
        Model m = scalar_model(0.0, {0.0, b, 0.0, 0.0, 1.0}, g, dirac_measure(-d, 0.0, -d));
        NoiseEnsemble noise{1, 1, g.K, 1, g.dt, 1};
        PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                          const_history(1, 1.0), noise);
        double err = 0.0;
        for (int n = 0; n <= g.K; ++n)
            err = std::max(err, std::abs(ens.state(0, n)[0] - oracle.at(g.time(n))));
        if (prev_err > 0.0) CHECK(err < 0.7 * prev_err);  // order-1 refinement
        CHECK(err < 5.0 * dt);
        prev_err = err;
    }
}

TEST_CASE("noise ensemble contracts") {
    TimeGrid g = TimeGrid::make(0.01, 0.5, 0.25);
    Model m = scalar_model(-0.2, {0.0, 0.3, 0.0, 0.0, 1.0}, g,
                           dirac_measure(-g.delay(), 0.0, 0.0), {0.4, 0.0, 0.0});
    ControlProcess u = ControlProcess::constant(g.K, 1, 0.0, {});
    InitialHistory init = const_history(1, 1.0);

    NoiseEnsemble small{42, 8, g.K, 1, g.dt, 1};
    NoiseEnsemble big{42, 16, g.K, 1, g.dt, 1};
    PathEnsemble e1 = simulate_paths(m, u, init, small);
    PathEnsemble e2 = simulate_paths(m, u, init, big);
    for (int i = 0; i < 8; ++i)
        for (int n = -g.L; n <= g.K; ++n) CHECK(e1.state(i, n)[0] == e2.state(i, n)[0]);

    // refinement consistency: one coarse step equals the sum of two fine draws
    NoiseEnsemble coarse{42, 2, g.K, 1, g.dt, 2};
    NoiseEnsemble fine{42, 2, 2 * g.K, 1, g.dt / 2, 1};
    const double lhs = coarse.increment(1, 3, 0);
    const double rhs = fine.increment(1, 6, 0) + fine.increment(1, 7, 0);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-15));
}

TEST_CASE("initial segment is preserved exactly") {
    TimeGrid g = TimeGrid::make(0.01, 0.5, 0.25);
    Model m = scalar_model(0.3, {0.0, 0.5, 0.0, 0.0, 1.0}, g, dirac_measure(-g.delay(), 0.0, -0.1));
    InitialHistory init;
    init.base = {1.5};
    init.slope = {0.6};
    NoiseEnsemble noise{5, 3, g.K, 1, g.dt, 1};
    PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}), init, noise);
    for (int i = 0; i < 3; ++i)
        for (int n = -g.L; n <= 0; ++n)
            CHECK(ens.state(i, n)[0] == 1.5 + g.time(n) * 0.6);
}

TEST_CASE("moment estimator is finite on the catalog models") {
    TimeGrid g = TimeGrid::make(0.01, 0.5, 0.25);
    Model m = scalar_model(-0.5, {0.0, 0.4, 0.0, 0.2, 1.0}, g,
                           uniform_density_measure(-g.delay(), 0.0, 1.0, 2 * g.L + 1),
                           {0.3, 0.1, 2.0});
    NoiseEnsemble noise{9, 64, g.K, 1, g.dt, 1};
    PathEnsemble ens = simulate_paths(m, ControlProcess::constant(g.K, 1, 0.1, {-1, 1}),
                                      const_history(1, 1.0), noise);
    const double m2 = sup_moment(ens, 2), m4 = sup_moment(ens, 4);
    CHECK(std::isfinite(m2));
    CHECK(std::isfinite(m4));
    CHECK(m4 >= m2 * m2 * 0.999);  // Jensen
}

TEST_CASE("divergent coefficients abort with a step index") {
    TimeGrid g = TimeGrid::make(0.01, 1.0, 0.25);
    Model m = scalar_model(40.0, {0.0, 40.0, 0.0, 0.0, 1.0}, g, dirac_measure(-0.25, 0.0, 0.0));
    NoiseEnsemble noise{3, 1, g.K, 1, g.dt, 1};
    CHECK_THROWS_WITH_AS(simulate_paths(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                        const_history(1, 1e300), noise),
                         doctest::Contains("step"), std::runtime_error);
}

TEST_CASE("perturb_control convexity") {
    ControlBox box{-2.0, 2.0};
    ControlProcess u = ControlProcess::constant(10, 1, -1.0, box);
    ControlProcess w = ControlProcess::constant(10, 1, 2.0, box);
    CHECK(perturb_control(u, w, 0.0).values[0] == -1.0);
    CHECK(perturb_control(u, w, 1.0).values[0] == 2.0);
    CHECK(perturb_control(u, w, 0.5).values[0] == doctest::Approx(0.5));
    CHECK_THROWS_AS(perturb_control(u, w, 1.5), std::domain_error);
    CHECK_THROWS_AS(perturb_control(u, w, -0.1), std::domain_error);
}

TEST_CASE("picard iteration of the mild map") {
    TimeGrid g = TimeGrid::make(0.005, 1.0, 0.25);
    const double d = g.delay();

    SUBCASE("drift-free map converges in one iteration") {
        Model m = scalar_model(-0.3, {}, g, dirac_measure(-d, 0.0, 0.0), {0.2, 0.0, 0.0});
        NoiseEnsemble noise{11, 1, g.K, 1, g.dt, 1};
        PicardResult pr = picard_solve(m, ControlProcess::constant(g.K, 1, 0.0, {}),
                                       const_history(1, 1.0), noise, 0, 1e-12, 10);
        CHECK(pr.converged);
        CHECK(pr.residuals.size() == 2);
        CHECK(pr.residuals[1] == 0.0);
    }
    SUBCASE("linear contraction: fixed point matches the stepping solver") {
        Model m = scalar_model(0.0, {0.0, 0.5, 0.0, 0.0, 1.0}, g,
                               atomic_measure(-d, 0.0, {{-d, 0.5}, {0.0, 0.5}}));
        NoiseEnsemble noise{11, 1, g.K, 1, g.dt, 1};
        ControlProcess u = ControlProcess::constant(g.K, 1, 0.0, {});
        const double tol = 1e-12;
        PicardResult pr = picard_solve(m, u, const_history(1, 1.0), noise, 0, tol, 60);
        CHECK(pr.converged);
        for (size_t i = 0; i + 1 < pr.residuals.size(); ++i)
            if (pr.residuals[i] > 0) CHECK(pr.residuals[i + 1] / pr.residuals[i] < 1.0);
        PathEnsemble stepped = simulate_paths(m, u, const_history(1, 1.0), noise);
        double diff = 0.0;
        for (int n = 0; n <= g.K; ++n)
            diff = std::max(diff, std::abs(pr.trajectory.state(0, n)[0] - stepped.state(0, n)[0]));
        CHECK(diff <= 10.0 * tol);
    }
    SUBCASE("starting at the fixed point stops immediately") {
        Model m = scalar_model(0.0, {0.0, 0.5, 0.0, 0.0, 1.0}, g, dirac_measure(-d, 0.0, -d));
        NoiseEnsemble noise{11, 1, g.K, 1, g.dt, 1};
        ControlProcess u = ControlProcess::constant(g.K, 1, 0.0, {});
        PathEnsemble fixed = simulate_paths(m, u, const_history(1, 1.0), noise);
        PicardResult pr = picard_solve(m, u, const_history(1, 1.0), noise, 0, 1e-10, 5, &fixed);
        CHECK(pr.converged);
        CHECK(pr.residuals.front() <= 1e-10);
    }
}

TEST_CASE("state convergence diagnostic under control perturbations") {
    TimeGrid g = TimeGrid::make(0.005, 1.0, 0.25);
    const double d = g.delay();
    Model m = scalar_model(0.0, {0.0, -0.6, 1.0, 0.0, 1.0}, g, dirac_measure(-d, 0.0, -d));
    ControlBox box{-2.0, 2.0};
    ControlProcess u = ControlProcess::constant(g.K, 1, 0.2, box);
    ControlProcess w = ControlProcess::constant(g.K, 1, 1.2, box);
    NoiseEnsemble noise{21, 4, g.K, 1, g.dt, 1};

    SUBCASE("zero perturbation gives exactly zero") {
        auto rows = control_convergence_diagnostic(m, u, u, {0.5, 0.25}, const_history(1, 1.0),
                                                   noise);
        for (const auto& r : rows) CHECK(r.value == 0.0);
    }
    SUBCASE("linear model: quadratic decay in rho") {
        auto rows = control_convergence_diagnostic(m, u, w, {0.4, 0.2, 0.1, 0.05},
                                                   const_history(1, 1.0), noise);
        for (size_t i = 0; i + 1 < rows.size(); ++i) CHECK(rows[i + 1].value < rows[i].value);
        CHECK(loglog_slope(rows) == doctest::Approx(2.0).epsilon(0.1));
    }
}
