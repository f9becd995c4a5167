#include <cmath>

#include "bubblelab/quadrature.hpp"
#include "doctest.h"

using namespace bubblelab;
using namespace bubblelab::quad;

TEST_CASE("gauss-kronrod panel integrates smooth functions") {
    const auto e = gauss_kronrod15([](double x) { return std::exp(x); }, 0.0, 1.0);
    CHECK(e.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
    CHECK(e.abs_error < 1e-12);
}

TEST_CASE("adaptive integration handles an integrable endpoint singularity") {
    const auto e = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
    CHECK(e.value == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("gauss-legendre weights sum to 2 and integrate monomials") {
    for (int n : {1, 2, 5, 12}) {
        const auto& gl = gauss_legendre(n);
        double w = 0.0, x2 = 0.0;
        for (int i = 0; i < n; ++i) {
            w += gl.weights[i];
            x2 += gl.weights[i] * gl.nodes[i] * gl.nodes[i];
        }
        CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
        if (n >= 2) CHECK(x2 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("angular rules reproduce S^3 moments") {
    // E[x1^2] = 1/4 and E[x1^2 x3^2] = 1/24 on the unit 3-sphere.
    for (const auto& rule : {AngularRule::product(6), AngularRule::stratified(6)}) {
        std::vector<Point4> dirs;
        rule.directions(17, dirs);
        REQUIRE(dirs.size() == rule.size());
        std::vector<double> a, b;
        for (const auto& d : dirs) {
            CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-14));
            a.push_back(d[0] * d[0]);
            b.push_back(d[0] * d[0] * d[2] * d[2]);
        }
        const auto ma = rule.reduce(a), mb = rule.reduce(b);
        if (rule.kind() == AngularRule::Kind::Product) {
            CHECK(std::abs(ma.mean - 0.25) < 1e-13);
            CHECK(std::abs(mb.mean - 1.0 / 24.0) < 1e-13);
        } else {
            // Monte Carlo: within four reported standard errors.
            CHECK(std::abs(ma.mean - 0.25) < 4.0 * std::sqrt(ma.variance));
            CHECK(std::abs(mb.mean - 1.0 / 24.0) < 4.0 * std::sqrt(mb.variance));
        }
    }
}

TEST_CASE("stratified rule is deterministic per seed and antithetic") {
    const auto rule = AngularRule::stratified(3);
    std::vector<Point4> d1, d2, d3;
    rule.directions(42, d1);
    rule.directions(42, d2);
    rule.directions(43, d3);
    CHECK(d1 == d2);
    CHECK(d1 != d3);
    CHECK(d1[0] == -d1[1]);
}

TEST_CASE("shell integration of unit integrand gives the ball volume") {
    ShellOptions o;
    const auto e = integrate_shells(Point4{}, 0.0, 2.0, 1.0, [](const Point4&) { return 1.0; }, o);
    CHECK(e.value == doctest::Approx(constants::unit_ball_volume * 16.0).epsilon(1e-13));
}

TEST_CASE("off-centre shells with a clipped indicator approximate a ball volume") {
    ShellOptions o;
    o.strata = 6;
    const Point4 c{0.3, 0.0, 0.0, 0.0};
    const double bp[] = {0.7};
    const auto e = integrate_shells(c, 0.0, 1.3, 1.0,
                                    [](const Point4& x) { return x.norm2() < 1.0 ? 1.0 : 0.0; }, o, bp);
    CHECK(e.abs_error > 0.0);
    CHECK(std::abs(e.value - constants::unit_ball_volume) < 2.0 * e.abs_error);
    CHECK(std::abs(e.value - constants::unit_ball_volume) < 1e-2);
}
