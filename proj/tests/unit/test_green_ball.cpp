#include <cmath>
#include <random>

#include "bubblelab/errors.hpp"
#include "bubblelab/green_ball.hpp"
#include "doctest.h"

using namespace bubblelab;
using constants::pi2;

namespace {

Point4 random_in_ball(std::mt19937_64& rng, const BallSpec& b, double max_frac = 0.95) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point4 p(g(rng), g(rng), g(rng), g(rng));
    return b.center + p * (max_frac * b.radius * std::pow(u(rng), 0.25) / p.norm());
}

// Centre row of the Navier kernel from the radial Poisson formula applied to G(c, .).
double navier_center(double s, double R) {
    return std::log(R / s) / (8.0 * pi2) + (s * s - R * R) / (32.0 * pi2 * R * R);
}

double bubble_source(double r) { return std::exp(4.0 * bubble_profile(r)); }

}  // namespace

TEST_CASE("Dirichlet kernel anchors") {
    const BallSpec unit(Point4{}, 1.0);
    CHECK(green_dirichlet(Point4{}, Point4::axis(1, 0.5), unit) == doctest::Approx(3.0 / (4.0 * pi2)).epsilon(1e-14));
    CHECK(green_dirichlet(Point4{}, Point4::axis(1, 0.5), unit) == doctest::Approx(0.0759909).epsilon(1e-6));
    CHECK_THROWS_AS(green_dirichlet(Point4{}, Point4{}, unit), NumericalError);
    CHECK_THROWS_AS(green_dirichlet(Point4{}, Point4::axis(0, 1.0), unit), DomainError);
    CHECK_THROWS_AS(green_dirichlet(Point4::axis(0, 2.0), Point4{}, unit), DomainError);
    CHECK_THROWS_AS(BallSpec(Point4{}, 0.0), ConfigError);
}

TEST_CASE("Dirichlet kernel vanishes at the boundary and is symmetric") {
    const BallSpec b(Point4(0.3, -0.1, 0.2, 0.0), 1.7);
    std::mt19937_64 rng(11);
    double worst_bdry = 0.0, worst_sym = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Point4 x = random_in_ball(rng, b);
        const Point4 y = random_in_ball(rng, b);
        const Point4 d = y - b.center;
        const Point4 yb = b.center + d * ((1.0 - 1e-15) * b.radius / d.norm());
        worst_bdry = std::max(worst_bdry, std::abs(green_dirichlet(x, yb, b)));
        const double gxy = green_dirichlet(x, y, b), gyx = green_dirichlet(y, x, b);
        worst_sym = std::max(worst_sym, std::abs(gxy - gyx) / std::max(1.0, std::abs(gxy)));
    }
    CHECK(worst_bdry < 1e-12);
    CHECK(worst_sym < 1e-12);
}

TEST_CASE("Dirichlet kernel scaling and centre limit") {
    const BallSpec unit(Point4{}, 1.0), big(Point4{}, 3.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const Point4 x = random_in_ball(rng, big), y = random_in_ball(rng, big);
        CHECK(green_dirichlet(x, y, big) ==
              doctest::Approx(green_dirichlet(x * (1.0 / 3.0), y * (1.0 / 3.0), unit) / 9.0).epsilon(1e-12));
    }
    const Point4 y(0.2, 0.1, -0.3, 0.4);
    const double s = y.norm();
    CHECK(green_dirichlet(Point4{}, y, unit) == doctest::Approx((1.0 / (s * s) - 1.0) / (4.0 * pi2)).epsilon(1e-14));
}

TEST_CASE("Dirichlet kernel is harmonic away from the pole") {
    const BallSpec unit(Point4{}, 1.0);
    const Point4 x(0.2, 0.1, 0.0, -0.1);
    ScalarField g = [&](const Point4& y) { return green_dirichlet(x, y, unit); };
    for (const Point4& y : {Point4(-0.4, 0.2, 0.1, 0.3), Point4(0.5, 0.5, 0.0, 0.2), Point4(0.0, -0.6, 0.0, 0.0)}) {
        const double scale = 1.0 / (4.0 * pi2 * std::pow(distance(x, y), 4));
        CHECK(std::abs(fd_laplacian(g, y, 1e-3)) < 1e-6 * scale * 1e2);
    }
}

TEST_CASE("radial Navier solve") {
    const BallSpec unit(Point4{}, 1.0);
    SUBCASE("zero source") {
        const auto s = navier_solve_radial([](double) { return 0.0; }, unit);
        for (double r : {0.0, 0.3, 1.0}) {
            CHECK(s.w(r) == 0.0);
            CHECK(s.lap(r) == 0.0);
        }
    }
    SUBCASE("constant source against the polynomial solution") {
        // Delta^2 w = 1 with w = Delta w = 0 at r = 1: psi = (1 - r^2)/8, w = (r^4 - 3 r^2 + 2)/192.
        const auto s = navier_solve_radial([](double) { return 1.0; }, unit);
        for (double r : {0.0, 0.25, 0.7, 0.99}) {
            CHECK(s.lap(r) == doctest::Approx((1.0 - r * r) / 8.0).epsilon(1e-13));
            CHECK(s.w(r) == doctest::Approx((r * r * r * r - 3.0 * r * r + 2.0) / 192.0).epsilon(1e-13));
        }
    }
    SUBCASE("bubble source residual and boundary values") {
        const auto s = navier_solve_radial(bubble_source, unit);
        CHECK(std::abs(s.w(1.0)) < 1e-10);
        CHECK(std::abs(s.lap(1.0)) < 1e-10);
        double worst = 0.0;
        const double h = 1e-3;
        for (double r = 0.05; r < 0.95; r += 0.05) {
            auto lap = [&](double q) { return s.lap(q); };
            auto w = [&](double q) { return s.w(q); };
            auto radial_lap = [&](auto f, double q) {
                return -(f(q + h) - 2.0 * f(q) + f(q - h)) / (h * h) - 3.0 * (f(q + h) - f(q - h)) / (2.0 * h * q);
            };
            worst = std::max(worst, std::abs(radial_lap(lap, r) - bubble_source(r)) / bubble_source(r));
            CHECK(radial_lap(w, r) == doctest::Approx(s.lap(r)).epsilon(1e-5));
        }
        CHECK(worst < 1e-6);
    }
    CHECK_THROWS_AS(navier_solve_radial([](double r) { return 1.0 / (r - 0.5); }, unit), NumericalError);
}

TEST_CASE("Dirichlet kernel reproduces the radial Poisson solve") {
    // int G(x,y) f(y) dy against psi from the radial solver. Probes stay in |x| <= 0.4 so
    // that the compact partition never clips shells at the boundary; the angular product
    // rule limits agreement to a few 1e-6.
    const BallSpec unit(Point4{}, 1.0);
    const auto s = navier_solve_radial(bubble_source, unit);
    quad::ShellOptions o;
    o.product_rule = true;
    o.product_n = 12;
    o.panels_per_decade = 12;
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Point4 x = random_in_ball(rng, unit, 0.4);
        const FieldOracle carrier("probe", bubble, bubble, unit.ball(), {{x, 0.5}});
        MassOptions mo;
        mo.shells = o;
        mo.compact_partition = true;
        const auto e = integrate_region(
            carrier, unit.ball(),
            [&](const Point4& y) { return y == x ? 0.0 : green_dirichlet(x, y, unit) * bubble_source(y.norm()); }, mo);
        worst = std::max(worst, std::abs(e.value - s.lap(x.norm())) / s.lap(x.norm()));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("iterated kernel identity for the radial Navier solve") {
    // w(x) = int G(x,z) psi(z) dz, psi = Delta w.
    const BallSpec unit(Point4{}, 1.0);
    const auto s = navier_solve_radial(bubble_source, unit);
    quad::ShellOptions o;
    o.product_rule = true;
    o.product_n = 12;
    for (const Point4& x : {Point4{}, Point4(0.3, 0.2, 0.0, 0.1), Point4(0.0, 0.0, -0.4, 0.0)}) {
        const FieldOracle carrier("probe", bubble, bubble, unit.ball(), {{x, 0.5}});
        MassOptions mo;
        mo.shells = o;
        mo.compact_partition = true;
        const auto e = integrate_region(
            carrier, unit.ball(),
            [&](const Point4& z) { return z == x ? 0.0 : green_dirichlet(x, z, unit) * s.lap(z.norm()); }, mo);
        CHECK(e.value == doctest::Approx(s.w(x.norm())).epsilon(1e-6));
    }
}

TEST_CASE("Navier kernel") {
    const BallSpec unit(Point4{}, 1.0);
    SUBCASE("centre row against the closed form") {
        for (double r : {1e-3, 0.1, 0.5, 0.9}) {
            const auto H = green_navier(Point4{}, Point4::axis(0, r), unit);
            CHECK(H.value == doctest::Approx(navier_center(r, 1.0)).epsilon(2e-3));
            CHECK(std::abs(H.value - navier_center(r, 1.0)) <= H.abs_error);
        }
        quad::ShellOptions o;
        o.product_rule = true;
        o.product_n = 12;
        const BallSpec b(Point4(1, 2, 3, 4), 2.0);
        const auto H = green_navier(b.center, b.center + Point4(0.0, 0.3, 0.0, 0.4), b, o);
        CHECK(H.value == doctest::Approx(navier_center(0.5, 2.0)).epsilon(1e-6));
    }
    SUBCASE("positive at random pairs") {
        std::mt19937_64 rng(17);
        quad::ShellOptions cheap;
        for (int i = 0; i < 100; ++i) {
            const Point4 x = random_in_ball(rng, unit), y = random_in_ball(rng, unit);
            CHECK(green_navier(x, y, unit, cheap).value > 0.0);
        }
    }
    SUBCASE("symmetric within quadrature error") {
        const Point4 x(0.3, 0.1, -0.2, 0.1), y(-0.1, 0.4, 0.2, 0.3);
        const auto a = green_navier(x, y, unit), b = green_navier(y, x, unit);
        CHECK(std::abs(a.value - b.value) <= a.abs_error + b.abs_error);
        CHECK(a.value == doctest::Approx(b.value).epsilon(2e-3));
    }
    CHECK_THROWS_AS(green_navier(Point4{}, Point4{}, unit), NumericalError);
}

TEST_CASE("logarithmic lower bound of the Navier kernel") {
    const BallSpec unit(Point4{}, 1.0);
    const auto rep = navier_log_bound(unit, 8);
    // Exact deviation on the unit ball is (s^2 - 1)/(32 pi^2).
    CHECK(rep.inf > -1.0 / (32.0 * pi2) - 1e-4);
    CHECK(rep.sup < -0.75 / (32.0 * pi2) + 1e-4);
    auto doubled = kernel_shells();
    doubled.strata = 10;
    doubled.panels_per_decade = 12;
    const auto rep2 = navier_log_bound(unit, 8, doubled);
    const double spread = rep.sup - rep.inf, spread2 = rep2.sup - rep2.inf;
    CHECK(std::abs(spread - spread2) < 0.1 * spread2);
}

TEST_CASE("decompose") {
    const BallSpec unit(Point4{}, 1.0);
    SUBCASE("exact solution gives a biharmonic remainder") {
        const auto d = decompose(gen_fk(0.1, 2.0), unit);
        CHECK(d.radial);
        CHECK(d.residual_biharmonic < 1e-3);
        const Point4 x(0.1, 0.2, 0.3, 0.1);
        CHECK(d.w.u(x) + d.h.u(x) == doctest::Approx(gen_fk(0.1, 2.0).u(x)).epsilon(1e-12));
        CHECK(std::abs(d.w.u(Point4::axis(0, 1.0))) < 1e-10);
    }
    SUBCASE("constant field") {
        const FieldOracle c("const", [](const Point4&) { return 0.25; }, [](const Point4&) { return 0.0; },
                            Ball{{}, 1.0});
        const auto d = decompose(c, unit);
        const double e = std::exp(1.0);
        // w solves Delta^2 w = e with Navier data, so w(0) = 2e/192. A constant is not a
        // solution, and Delta^2 h = -e exactly.
        CHECK(d.w.u(Point4{}) == doctest::Approx(2.0 * e / 192.0).epsilon(1e-12));
        CHECK(d.residual_biharmonic == doctest::Approx(e).epsilon(1e-6));
    }
    SUBCASE("multibubble is reported, not asserted") {
        const std::vector<Point4> c{Point4(0.2, 0, 0, 0), Point4(-0.3, 0, 0, 0)};
        const std::vector<double> mu{0.1, 0.2};
        const auto d = decompose(gen_multibubble(c, mu, 2.0, LaplacianMode::Analytic), unit);
        CHECK_FALSE(d.radial);
        CHECK(std::isfinite(d.residual_biharmonic));
    }
    CHECK_THROWS_AS(decompose(gen_fk(0.1, 0.5), unit), DomainError);
}

TEST_CASE("exponential integrability") {
    const BallSpec b(Point4{}, 1.5);
    CHECK(brezis_merle_check([](double) { return 0.0; }, b, 2.0).value ==
          doctest::Approx(pi2 * std::pow(1.5, 4) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(brezis_merle_check([](double) { return 0.0; }, b, 1.0), ConfigError);

    const BallSpec unit(Point4{}, 1.0);
    auto source = [](double alpha) {
        return [alpha](double r) {
            const double mu = 0.05, a = constants::sqrt96;
            return alpha / constants::quantum * std::pow(a * mu / (a * mu * mu + r * r), 4);
        };
    };
    const auto w1 = navier_solve_radial(source(4.0 * pi2), unit);
    RadialSolveOptions fine;
    fine.panels = 800;
    const auto w2 = navier_solve_radial(source(4.0 * pi2), unit, fine);
    const auto i1 = brezis_merle_check([&](double r) { return w1.w(r); }, unit, 1.5);
    const auto i2 = brezis_merle_check([&](double r) { return w2.w(r); }, unit, 1.5);
    CHECK(std::isfinite(i1.value));
    CHECK(i1.value == doctest::Approx(i2.value).epsilon(1e-8));
    CHECK_THROWS_AS(brezis_merle_check([](double r) { return 1e3 / (1.0 + r); }, unit, 2.0), NumericalError);
}

TEST_CASE("kernel table") {
    const BallSpec unit(Point4{}, 1.0);
    const KernelProbe probes[] = {{0.0, 0.5, 0.0}, {0.3, 0.4, 1.0}};
    quad::ShellOptions cheap;
    const auto csv = kernel_table_csv(unit, probes, cheap);
    CHECK(csv.rfind("r_x,r_y,angle,G,H\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
