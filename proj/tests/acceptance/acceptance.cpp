// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bubblelab/bubble_detector.hpp"
#include "bubblelab/field_model.hpp"
#include "bubblelab/format.hpp"
#include "bubblelab/green_ball.hpp"
#include "bubblelab/quantizer.hpp"
#include "bubblelab/radial_engine.hpp"

using namespace bubblelab;

namespace {

constexpr double pi = 3.14159265358979323846;
constexpr double pi2 = pi * pi;
constexpr double Q = 16.0 * pi2;
const double a96 = std::sqrt(96.0);

// Closed forms derived by hand for U0 = ln(a/(a + r^2)), a = sqrt96.
double U0(double r) { return std::log(a96 / (a96 + r * r)); }
double lapU0(double r) { return (8.0 * a96 + 4.0 * r * r) / ((a96 + r * r) * (a96 + r * r)); }
// Mass of e^{4 U0} on B_R: 16 pi^2 T^2 (T + 3)/(1 + T)^3, T = R^2/a.
double mass_ball(double R) {
    const double T = R * R / a96;
    return Q * T * T * (T + 3.0) / ((1.0 + T) * (1.0 + T) * (1.0 + T));
}
// int_{B_2 \ B_1} |Delta f_mu| dx by the divergence theorem with -d/dr f_mu = 2r/(a mu^2 + r^2).
double lap_l1_annulus(double mu) {
    const double b = a96 * mu * mu;
    return 4.0 * pi2 * (16.0 / (b + 4.0) - 1.0 / (b + 1.0));
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0: no runtime limit
    std::function<Outcome()> run;
};

Outcome bubble_mass_total() {
    const double m = mass(bubble_field(1e4), Ball{Point4{}, 1e4}).value;
    // The mass outside B_{1e4} is below 1e-13 relative.
    const double rel = std::abs(m - Q) / Q;
    return {rel < 1e-6, "mass " + num(m) + " vs 16pi^2, rel " + num(rel)};
}

Outcome half_mass_radius() {
    const double R = std::pow(96.0, 0.25);
    const double m = mass(bubble_field(1e4), Ball{Point4{}, R}).value;
    const double rel = std::abs(m - 8.0 * pi2) / (8.0 * pi2);
    const double oracle = std::abs(mass_ball(R) - 8.0 * pi2) / (8.0 * pi2);
    return {rel < 1e-6 && oracle < 1e-14, "mass " + num(m) + " vs 8pi^2, rel " + num(rel)};
}

Outcome bubble_pde_residual() {
    // Radial bi-Laplacian as the FD radial Laplacian of the closed-form Laplacian.
    const double h = 1e-3;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double r = 0.01 * i;
        double fd;
        if (r < h)
            fd = -8.0 * (lapU0(h) - lapU0(0.0)) / (h * h);
        else
            fd = -(lapU0(r + h) - 2.0 * lapU0(r) + lapU0(r - h)) / (h * h) -
                 3.0 * (lapU0(r + h) - lapU0(r - h)) / (2.0 * h * r);
        const double rhs = std::exp(4.0 * U0(r));
        worst = std::max(worst, std::abs(fd - rhs) / rhs);
    }
    // The library's Laplacian must agree with the hand-derived one.
    double lib = 0.0;
    for (int i = 0; i <= 100; ++i) lib = std::max(lib, std::abs(bubble_laplacian(0.1 * i) - lapU0(0.1 * i)));
    return {worst < 1e-4 && lib < 1e-14, "max rel residual " + num(worst)};
}

Outcome shooting_identity() {
    const auto sol = shoot(2.0 / std::sqrt(6.0), 1e4, 1e-10);
    double err = 0.0;
    for (int i = 0; i <= 20000; ++i) err = std::max(err, std::abs(sol.u(1e-3 * i) - U0(1e-3 * i)));
    return {err < 1e-5 && sol.classification() == Classification::EntireIntegrable, "sup error " + num(err)};
}

Outcome chang_chen_regime() {
    constexpr double pinned = 16.8044208132052;
    const auto sol = shoot(4.0 / std::sqrt(6.0), 1e4, 1e-10);
    const bool entire = sol.classification() == Classification::EntireIntegrable;
    const double e = entire ? energy_total(sol).value : std::nan("");
    const double lmin = laplacian_min(sol);
    const bool ok = entire && e > 0.0 && e < Q && lmin > 0.0 && std::abs(e - pinned) < 1e-7 * pinned;
    return {ok, "energy " + format_double(e) + " (pinned " + num(pinned) + "), min lap " + num(lmin)};
}

Outcome quantized_family() {
    FamilySpec spec;
    spec.type = "fk";
    spec.domain_radius = 4.0;
    spec.mu0 = 1.0;
    spec.ratio = 0.5;
    for (int k = 0; k <= 10; ++k) spec.k_values.push_back(k);
    const auto rep = quantize(build_family(spec), Annulus{Point4{}, 1.0, 2.0});
    const auto& L = rep.lap_l1_omega0;
    const double lo = *std::min_element(L.begin(), L.end()), hi = *std::max_element(L.begin(), L.end());
    const double variation = (hi - lo) / hi;
    double oracle = 0.0;
    for (std::size_t j = 0; j < L.size(); ++j)
        oracle = std::max(oracle, std::abs(L[j] - lap_l1_annulus(std::pow(0.5, j))) / L[j]);
    const bool structural = rep.detection.points.size() == 1 && rep.verdict == std::vector<int>{1} &&
                            rep.deviation[0] < 0.02 && rep.regime == Regime::TheoremApplies;
    std::ostringstream os;
    os << "points " << rep.detection.points.size() << ", n " << (rep.verdict.empty() ? -1 : rep.verdict[0])
       << ", deviation " << num(rep.deviation.empty() ? 1.0 : rep.deviation[0]) << ", regime "
       << to_string(rep.regime) << ", L1(omega0) from " << num(L.front()) << " to " << num(L.back())
       << " (variation " << num(variation) << ", closed-form agreement " << num(oracle) << ")";
    return {structural && variation < 0.10, os.str()};
}

Outcome non_quantized_family() {
    FamilySpec spec;
    spec.type = "gk";
    spec.alpha = 4.0 * pi2;
    spec.domain_radius = 4.0;
    spec.k_values = {1, 2, 4, 8, 16, 32};
    QuantizeConfig cfg;
    cfg.probe_ball = Ball{Point4{}, 1.0};
    const auto rep = quantize(build_family(spec), Annulus{Point4{}, 1.0, 2.0}, cfg);
    const double m = rep.probe_mass ? rep.probe_mass->value : std::nan("");
    const double rel = std::abs(m - 4.0 * pi2) / (4.0 * pi2);
    const double growth = rep.lap_l1_omega0.back() / rep.lap_l1_omega0.front();
    std::ostringstream os;
    os << "mass in B_1 at k=32 " << num(m) << " (rel " << num(rel) << "), regime " << to_string(rep.regime)
       << ", L1 growth x" << num(growth);
    return {rel < 0.05 && rep.regime == Regime::HypothesisViolated && growth > 4.0, os.str()};
}

Outcome multi_bubble_ledger() {
    FamilySpec spec;
    spec.type = "multibubble";
    spec.domain_radius = 1.0;
    spec.centers = {Point4{}, Point4::axis(0, 1e-3), Point4::axis(1, 0.1)};
    spec.scales = {1e-6, 1e-6, 1e-6};
    spec.laplacian = LaplacianMode::Analytic;
    spec.k_values = {0, 1, 2};
    const auto rep = quantize(build_family(spec), Annulus{Point4::axis(2, 0.5), 0.1, 0.2});
    double total = 0.0;
    for (const auto& c : rep.per_cluster_mass) total += c.value;
    double neck = 0.0;
    for (const auto& e : rep.neck_energies) neck = std::max(neck, e.value);
    const double rel = std::abs(total - 3.0 * Q) / (3.0 * Q);
    std::ostringstream os;
    os << "verdict sum " << rep.total_verdict() << ", total mass rel error " << num(rel) << ", "
       << rep.neck_energies.size() << " necks, max neck energy " << num(neck / Q) << " quanta";
    return {rep.total_verdict() == 3 && rel < 0.01 && !rep.neck_energies.empty() && neck < 0.01 * Q, os.str()};
}

ConcentrationPoint point_at(const Point4& x, double mu) {
    ConcentrationPoint p;
    p.location = x;
    p.mu = mu;
    p.peak_value = -std::log(mu);
    return p;
}

Outcome clustering() {
    // Hand construction: root at 0; r_1 = d; I_1 = points within 10 d.
    const double d = 1e-3;
    const std::vector<ConcentrationPoint> far{point_at(Point4{}, 1e-7), point_at(Point4::axis(0, d), 1e-7),
                                              point_at(Point4::axis(1, 100 * d), 1e-7)};
    const std::vector<ConcentrationPoint> near{point_at(Point4{}, 1e-7), point_at(Point4::axis(0, d), 1e-7),
                                               point_at(Point4::axis(1, 2 * d), 1e-7)};
    const auto t1 = cluster_scales(far, 10.0);
    const auto t2 = cluster_scales(near, 10.0);
    const bool two = t1.levels() == 2 && t1.root_index == 0 && std::abs(t1.scales[0] - d) < 1e-15 &&
                     std::abs(t1.scales[1] - 100 * d) < 1e-13 && t1.groups[0] == std::vector<std::size_t>{1} &&
                     t1.groups[1] == std::vector<std::size_t>{2};
    const bool one = t2.levels() == 1 && t2.root_index == 0 && std::abs(t2.scales[0] - d) < 1e-15 &&
                     t2.groups[0] == std::vector<std::size_t>{1, 2};
    return {two && one, "ratio 100: " + std::to_string(t1.levels()) + " levels, ratio 2: " +
                            std::to_string(t2.levels()) + " level(s)"};
}

Outcome green_functions() {
    const BallSpec unit(Point4{}, 1.0);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto sample = [&] {
        Point4 p(g(rng), g(rng), g(rng), g(rng));
        return p * (0.95 * std::pow(u(rng), 0.25) / p.norm());
    };
    double bdry = 0.0, sym = 0.0;
    int positive = 0;
    const quad::ShellOptions cheap;
    for (int i = 0; i < 100; ++i) {
        const Point4 x = sample(), y = sample();
        const Point4 yb = y * ((1.0 - 1e-15) / y.norm());
        bdry = std::max(bdry, std::abs(green_dirichlet(x, yb, unit)));
        const double gxy = green_dirichlet(x, y, unit), gyx = green_dirichlet(y, x, unit);
        sym = std::max(sym, std::abs(gxy - gyx) / std::max(1.0, std::abs(gxy)));
        if (green_navier(x, y, unit, cheap).value > 0.0) ++positive;
    }
    const double anchor = std::abs(green_dirichlet(Point4{}, Point4::axis(1, 0.5), unit) - 3.0 / (4.0 * pi2));
    const auto lb = navier_log_bound(unit, 8);
    auto doubled = kernel_shells();
    doubled.strata = 10;
    doubled.panels_per_decade = 12;
    const auto lb2 = navier_log_bound(unit, 8, doubled);
    const double spread = lb.sup - lb.inf, spread2 = lb2.sup - lb2.inf;
    const double change = std::abs(spread - spread2) / spread2;
    std::ostringstream os;
    os << "boundary " << num(bdry) << ", symmetry " << num(sym) << ", anchor " << num(anchor) << ", H>0 "
       << positive << "/100, log deviation in [" << num(lb.inf) << ", " << num(lb.sup) << "] spread "
       << num(spread) << " change " << num(change);
    const bool ok = bdry < 1e-12 && sym < 1e-12 && anchor < 1e-14 && positive == 100 && std::isfinite(spread) &&
                    change < 0.10;
    return {ok, os.str()};
}

Outcome decomposition() {
    const auto d = decompose(gen_fk(0.1, 2.0), BallSpec(Point4{}, 1.0));
    return {d.residual_biharmonic < 1e-3, "biharmonic residual of h " + num(d.residual_biharmonic)};
}

Outcome neck_decay_and_energy() {
    const double mu = 1e-3;
    const auto f = gen_fk(mu, 4.0);
    const double slope = neck_decay(f, Point4{}, 10.0 * mu, 0.1);
    const double margin = -1.0 - slope;
    // Neck between the bubble scale and r = 1: B_4 minus B_{2 rho_k}, rho_k = mu_k^(1/4).
    std::vector<double> e;
    double oracle = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const double m = std::pow(0.5, k);
        const auto fk = gen_fk(m, 4.0);
        const std::vector<ConcentrationPoint> p{make_point(fk, Point4{})};
        const auto tree = cluster_scales(p, 10.0);
        NeckSpec s;
        s.r_scale = 1.0;
        s.R = 4.0;
        s.rho_inner = std::pow(m, 0.25);
        e.push_back(neck_energy(fk, tree, s).value);
        const double exact = mass_ball(4.0 / m) - mass_ball(2.0 * s.rho_inner / m);
        oracle = std::max(oracle, std::abs(e.back() - exact) / exact);
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < e.size(); ++i) decreasing = decreasing && e[i] < e[i - 1];
    std::ostringstream os;
    os << "log-slope " << num(slope) << " (margin " << num(margin) << "), neck energy " << num(e.front()) << " -> "
       << num(e.back()) << (decreasing ? " strictly decreasing" : " not monotone") << ", closed-form agreement "
       << num(oracle);
    return {margin > 0.5 && decreasing, os.str()};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "bubble mass", 1.0, bubble_mass_total},
        {2, "half-mass radius", 0.0, half_mass_radius},
        {3, "bubble PDE residual", 1.0, bubble_pde_residual},
        {4, "shooting identity", 1.0, shooting_identity},
        {5, "Chang-Chen regime", 0.0, chang_chen_regime},
        {6, "quantized family", 60.0, quantized_family},
        {7, "non-quantized family", 60.0, non_quantized_family},
        {8, "multi-bubble ledger", 120.0, multi_bubble_ledger},
        {9, "clustering", 0.0, clustering},
        {10, "Green's functions", 0.0, green_functions},
        {11, "decomposition", 0.0, decomposition},
        {12, "neck decay", 0.0, neck_decay_and_energy},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0.0 && dt >= c.limit_s) {
            o.pass = false;
            o.detail += "; runtime limit " + num(c.limit_s) + " s exceeded";
        }
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), dt);
        std::fflush(stdout);
    }
    return failures;
}
