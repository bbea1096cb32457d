#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <functional>

#include "dsmp/measures.hpp"
#include "dsmp/rng.hpp"

using namespace dsmp;

namespace {

// quadrature oracle for density parts, independent of the measure code:
// composite Simpson on a fine grid
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * (b - a) / n) * (i % 2 ? 4.0 : 2.0);
    return acc * (b - a) / (3.0 * n);
}

const std::vector<std::function<double(double)>> kTests = {
    [](double) { return 1.0; },
    [](double s) { return s; },
    [](double s) { return s * s; },
    [](double s) { return std::sin(s); },
};

}  // namespace

TEST_CASE("total variation of atomic measures") {
    const double d = 0.25;
    CHECK(total_variation(atomic_measure(-d, 0.0, {{-d, 0.5}, {0.0, 0.5}})) == 1.0);
    CHECK(total_variation(atomic_measure(-d, 0.0, {{-d, 1.0}, {0.0, -1.0}})) == 2.0);
}

TEST_CASE("total variation of a signed linear density") {
    // w(theta) = theta + 1 on [-1, 0]: integral of |w| is 0.5 (oracle below)
    RegularMeasure mu = linear_density_measure(-1.0, 0.0, 0.0, 1.0, 11);
    const double oracle = simpson([](double s) { return std::abs(s + 1.0); }, -1.0, 0.0);
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(total_variation(mu) == doctest::Approx(0.5).epsilon(1e-12));

    // sign-changing density: |w| integral splits at the root
    RegularMeasure s = linear_density_measure(-1.0, 0.0, -1.0, 1.0, 2);
    const double o2 = simpson([](double x) { return std::abs(-1.0 + 2.0 * (x + 1.0)); }, -1.0, 0.0);
    CHECK(total_variation(s) == doctest::Approx(o2).epsilon(1e-6));
}

TEST_CASE("integrate against atoms and densities") {
    const double d = 0.5;
    RegularMeasure dir = dirac_measure(-d, 0.0, -0.3);
    CHECK(integrate(dir, [](double s) { return std::cos(s); }) == std::cos(-0.3));

    RegularMeasure uni = uniform_density_measure(-d, 0.0, 1.0, 33);
    CHECK(integrate(uni, [](double) { return 4.2; }) == doctest::Approx(4.2).epsilon(1e-13));

    // 0.3 delta_{-d} + 0.7 delta_{-d/2} against theta^2 = 0.3 d^2 + 0.175 d^2
    RegularMeasure two = atomic_measure(-d, 0.0, {{-d, 0.3}, {-d / 2, 0.7}});
    const double expect = 0.3 * d * d + 0.175 * d * d;
    CHECK(integrate(two, [](double s) { return s * s; }) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("validation rejects malformed measures") {
    RegularMeasure bad;
    bad.a = -1.0;
    bad.b = 0.0;
    bad.atoms.push_back({0.5, 1.0});  // outside support
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    RegularMeasure dup;
    dup.a = -1.0;
    dup.b = 0.0;
    dup.atoms = {{-0.5, 1.0}, {-0.5, 2.0}};
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
}

TEST_CASE("split_endpoint bookkeeping") {
    const double T = 1.0, d = 0.25;
    auto [z, m1] = split_endpoint(dirac_measure(T - d, T, T), T);
    CHECK(m1 == 1.0);
    CHECK(z.atoms.empty());

    RegularMeasure uni = uniform_density_measure(T - d, T, 1.0, 9);
    auto [u2, m2] = split_endpoint(uni, T);
    CHECK(m2 == 0.0);
    CHECK(total_variation(u2) == doctest::Approx(1.0));

    RegularMeasure mix = atomic_measure(T - d, T, {{T - d / 2, 0.4}, {T, 0.6}});
    auto [bar, m3] = split_endpoint(mix, T);
    CHECK(m3 == 0.6);
    REQUIRE(bar.atoms.size() == 1);
    CHECK(bar.atoms[0].location == T - d / 2);

    // recombination reproduces the original against a fixed test set
    RegularMeasure recomb = bar;
    recomb.atoms.push_back({T, m3});
    for (const auto& phi : kTests)
        CHECK(integrate(recomb, phi) == doctest::Approx(integrate(mix, phi)).epsilon(1e-15));
}

TEST_CASE("mollify_approximation basics") {
    const double T = 1.0, d = 0.25;

    SUBCASE("no atoms: returned unchanged for every n") {
        RegularMeasure uni = uniform_density_measure(T - d, T, 0.7, 17);
        for (int n : {1, 7, 64}) {
            RegularMeasure ap = mollify_approximation(uni, n);
            CHECK(weak_star_error(uni, ap, kTests) == 0.0);
        }
    }

    SUBCASE("mass is conserved exactly") {
        RegularMeasure atom = dirac_measure(T - d, T, T - d);
        for (int n : {4, 64, 1024}) {
            RegularMeasure ap = mollify_approximation(atom, n);
            CHECK(ap.atoms.empty());
            CHECK(integrate(ap, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
        }
    }

    SUBCASE("first-moment gap bounded by the mollifier width") {
        RegularMeasure atom = dirac_measure(T - d, T, T - d / 2);
        for (int n : {4, 16, 64}) {
            RegularMeasure ap = mollify_approximation(atom, n);
            const double eps = mollifier_width(atom, n);
            const double gap = std::abs(integrate(ap, [](double s) { return s; }) - (T - d / 2));
            CHECK(gap <= eps + 1e-15);          // modulus-of-continuity bound
            CHECK(gap == doctest::Approx(eps / 2).epsilon(1e-10));  // box midpoint
        }
    }

    SUBCASE("atom near the right endpoint shrinks its box") {
        RegularMeasure atom = dirac_measure(T - d, T, T - 1e-4);
        RegularMeasure ap = mollify_approximation(atom, 4);
        CHECK(ap.density.back().hi <= T + 1e-15);
        CHECK(integrate(ap, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("atom at the right endpoint is rejected") {
        RegularMeasure atom = dirac_measure(T - d, T, T);
        CHECK_THROWS_AS(mollify_approximation(atom, 4), std::invalid_argument);
    }
}

TEST_CASE("weak_star_error") {
    const double T = 1.0, d = 0.25;
    RegularMeasure mu = atomic_measure(T - d, T, {{T - d, 0.5}, {T - d / 2, 0.5}});
    CHECK(weak_star_error(mu, mu, kTests) == 0.0);

    RegularMeasure ap = mollify_approximation(mu, 16);
    std::vector<std::function<double(double)>> ones = {[](double) { return 1.0; }};
    CHECK(weak_star_error(mu, ap, ones) <= 1e-14);

    // lipschitz bound against the hand quadrature oracle
    const double eps = mollifier_width(mu, 16);
    std::vector<std::function<double(double)>> poly = {[](double s) { return s; },
                                                       [](double s) { return s * s; }};
    const double lip = 2.0 * T;  // max |phi'| of the tests on [T-d, T]
    CHECK(weak_star_error(mu, ap, poly) <= lip * eps + 1e-14);
    // hand quadrature oracle: the box is sampled at its two stored nodes, so
    // its trapezoid value is m (phi(x) + phi(x+eps)) / 2
    double oracle = 0.0;
    for (const auto& phi : poly) {
        double gap = 0.0;
        for (const Atom& at : mu.atoms)
            gap += at.mass *
                   (0.5 * (phi(at.location) + phi(at.location + eps)) - phi(at.location));
        oracle = std::max(oracle, std::abs(gap));
    }
    CHECK(weak_star_error(mu, ap, poly) == doctest::Approx(oracle).epsilon(1e-10));
    // and the Simpson oracle agrees to the box quadrature order
    double exact = 0.0;
    for (const auto& phi : poly) {
        double gap = 0.0;
        for (const Atom& at : mu.atoms)
            gap += at.mass *
                   (simpson(phi, at.location, at.location + eps) / eps - phi(at.location));
        exact = std::max(exact, std::abs(gap));
    }
    CHECK(weak_star_error(mu, ap, poly) == doctest::Approx(exact).epsilon(2.0 * eps));
}

TEST_CASE("weak-* convergence is nonincreasing once 1/n binds") {
    const double T = 1.0, d = 0.25;
    RegularMeasure mu = truncated_geometric_measure(T - d, T, 12);
    double prev = 1e300;
    bool binding = false;
    for (int n = 2; n <= 512; n *= 2) {
        RegularMeasure ap = mollify_approximation(mu, n);
        const double err = weak_star_error(mu, ap, kTests);
        if (binding) CHECK(err <= prev + 1e-15);
        if (mollifier_width(mu, n) == doctest::Approx((d) / n)) binding = true;
        prev = err;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("jordan decomposition and invariants on random measures") {
    for (int rep = 0; rep < 25; ++rep) {
        RegularMeasure mu;
        mu.a = -1.0;
        mu.b = 0.0;
        const int na = 1 + static_cast<int>(std::abs(gaussian_draw(11, rep, 0, 0)) * 2) % 4;
        double loc = -0.95;
        for (int k = 0; k < na; ++k) {
            mu.atoms.push_back({loc, gaussian_draw(12, rep, k, 0)});
            loc += 0.2;
        }
        std::vector<double> vals(7);
        for (int j = 0; j < 7; ++j) vals[j] = gaussian_draw(13, rep, j, 0);
        mu.density.push_back({-1.0, 0.0, vals});
        mu.validate();

        auto [plus, minus] = jordan_decomposition(mu);
        // both parts are nonnegative measures
        CHECK(mass(plus) >= -1e-12);
        CHECK(mass(minus) >= -1e-12);
        CHECK(mass(plus) == doctest::Approx(total_variation(plus)).epsilon(1e-10));
        CHECK(mass(minus) == doctest::Approx(total_variation(minus)).epsilon(1e-10));
        // mu = plus - minus: exact for the mass, trapezoid-accurate for curved
        // integrands (the split inserts nodes at sign changes)
        CHECK(mass(mu) == doctest::Approx(mass(plus) - mass(minus)).epsilon(1e-12));
        const double h2 = 1.0 / 36.0;  // (grid step)^2 of the 7-node density
        for (const auto& phi : kTests)
            CHECK(std::abs(integrate(mu, phi) -
                           (integrate(plus, phi) - integrate(minus, phi))) <= h2);
        CHECK(total_variation(mu) == doctest::Approx(mass(plus) + mass(minus)).epsilon(1e-9));
        // integrate(mu, 1) = mu(support), dominated by the total variation
        CHECK(std::abs(mass(mu)) <= total_variation(mu) + 1e-12);

        // mollified total variation never exceeds the base
        auto [bar, mT] = split_endpoint(mu, 0.0);
        for (int n : {3, 17}) {
            RegularMeasure ap = mollify_approximation(bar, n);
            CHECK(total_variation(ap) <= total_variation(bar) + 1e-10);
        }
    }
}

TEST_CASE("truncated geometric family") {
    RegularMeasure mu = truncated_geometric_measure(-0.5, 0.0, 20);
    CHECK(mu.atoms.size() == 20);
    CHECK(geometric_tail_mass(20) == std::pow(2.0, -20));
    CHECK(mass(mu) == doctest::Approx(1.0 - std::pow(2.0, -20)).epsilon(1e-14));
    CHECK(mu.atoms.front().location == doctest::Approx(-0.5));  // b - (b-a)/1
}
