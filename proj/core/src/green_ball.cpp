#include "bubblelab/green_ball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"
#include "hermite.hpp"

namespace bubblelab {

namespace {

constexpr double kInv4Pi2 = 1.0 / (4.0 * constants::pi2);

// Kernel without the interior checks; callers guarantee x != y.
double green_raw(const Point4& xp, const Point4& yp, double R) {
    const double d2 = (xp - yp).norm2();
    const double image = xp.norm2() * yp.norm2() / (R * R) - 2.0 * dot(xp, yp) + R * R;
    return kInv4Pi2 * (1.0 / d2 - 1.0 / image);
}

void require_interior(const Point4& x, const BallSpec& ball, const char* what) {
    if (!(distance(x, ball.center) < ball.radius))
        throw DomainError(std::string(what) + ": point is not strictly inside the ball");
}

std::vector<double> radial_grid(double R, const RadialSolveOptions& opts) {
    if (opts.panels < 1) throw ConfigError("radial solve needs at least one panel");
    std::vector<double> g;
    for (int i = 0; i <= opts.panels; ++i) g.push_back(R * i / opts.panels);
    if (opts.scale > 0.0) {
        const double lo = opts.scale / 100.0;
        const double step = std::pow(10.0, 1.0 / opts.panels_per_decade);
        for (double r = lo; r < R; r *= step) g.push_back(r);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(), [&](double a, double b) { return b - a <= 1e-14 * R; }),
            g.end());
    g.back() = R;
    return g;
}

struct Stage {
    std::vector<double> phi, dphi;
};

// phi(r) = int_r^R m(t) t^-3 dt with m(t) = int_0^t s(q) q^3 dq, at every grid node.
Stage poisson_stage(const RadialFunction& s, const std::vector<double>& grid) {
    const auto& gl = quad::gauss_legendre(10);
    const std::size_t n = grid.size();
    std::vector<double> m(n, 0.0);
    auto moment = [&](double a, double b) {
        double acc = 0.0;
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double t = mid + half * gl.nodes[q];
            acc += gl.weights[q] * s(t) * t * t * t;
        }
        return acc * half;
    };
    for (std::size_t i = 1; i < n; ++i) m[i] = m[i - 1] + moment(grid[i - 1], grid[i]);
    Stage out;
    out.phi.assign(n, 0.0);
    out.dphi.assign(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        const double a = grid[i], b = grid[i + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double acc = 0.0;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double t = mid + half * gl.nodes[q];
            acc += gl.weights[q] * (m[i] + moment(a, t)) / (t * t * t);
        }
        out.phi[i] = out.phi[i + 1] + acc * half;
    }
    for (std::size_t i = 1; i < n; ++i) out.dphi[i] = -m[i] / (grid[i] * grid[i] * grid[i]);
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(out.phi[i]) || !std::isfinite(out.dphi[i]))
            throw NumericalError("radial Poisson solve: non-finite value at r=" + format_double(grid[i]));
    return out;
}

// Second derivative implied by Delta phi = s: phi'' = -s - 3 phi'/r.
double second(double r, double dphi, double s) { return r == 0.0 ? -s / 4.0 : -s - 3.0 * dphi / r; }

}  // namespace

BallSpec::BallSpec(const Point4& c, double r) : center(c), radius(r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("ball radius must be positive");
    if (!c.finite()) throw ConfigError("ball center must be finite");
}

quad::ShellOptions kernel_shells() {
    quad::ShellOptions o;
    o.strata = 8;
    return o;
}

double green_dirichlet(const Point4& x, const Point4& y, const BallSpec& ball) {
    require_interior(x, ball, "green_dirichlet");
    require_interior(y, ball, "green_dirichlet");
    if (x == y) throw NumericalError("green_dirichlet: singular at x = y");
    return green_raw(x - ball.center, y - ball.center, ball.radius);
}

quad::Estimate green_navier(const Point4& x, const Point4& y, const BallSpec& ball,
                            const quad::ShellOptions& opts) {
    require_interior(x, ball, "green_navier");
    require_interior(y, ball, "green_navier");
    if (x == y) throw NumericalError("green_navier: singular at x = y");
    const Point4 xp = x - ball.center, yp = y - ball.center;
    const double R = ball.radius;
    const double sep = distance(x, y);
    // Only the hints matter here; the oracle is never evaluated.
    auto zero = [](const Point4&) { return 0.0; };
    const FieldOracle carrier("kernel", zero, zero, ball.ball(),
                              {{x, std::min(sep, R)}, {y, std::min(sep, R)}});
    auto integrand = [&](const Point4& z) {
        const Point4 zp = z - ball.center;
        if (zp == xp || zp == yp) return 0.0;
        return green_raw(xp, zp, R) * green_raw(zp, yp, R);
    };
    MassOptions mo;
    mo.shells = opts;
    const auto e = integrate_region(carrier, ball.ball(), integrand, mo);
    if (!std::isfinite(e.value))
        throw NumericalError("green_navier: quadrature failed (abs error " + format_double(e.abs_error) + ")");
    return {e.value, e.abs_error, e.samples};
}

RadialNavier::RadialNavier(BallSpec ball, std::vector<Node> nodes) : ball_(ball), nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw NumericalError("radial Navier solution needs at least two nodes");
}

std::size_t RadialNavier::panel(double r) const {
    if (!(r >= 0.0) || r > ball_.radius * (1.0 + 1e-12))
        throw DomainError("radial Navier solution evaluated at r=" + format_double(r) + " outside the ball");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), r, [](double v, const Node& n) { return v < n.r; });
    const std::size_t i = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min(i, nodes_.size() - 2);
}

double RadialNavier::w(double r) const {
    const std::size_t i = panel(r);
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    const double h = b.r - a.r;
    return detail::hermite5((r - a.r) / h, h, a.w, a.dw, second(a.r, a.dw, a.psi), b.w, b.dw,
                            second(b.r, b.dw, b.psi))
        .v;
}

double RadialNavier::dw(double r) const {
    const std::size_t i = panel(r);
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    const double h = b.r - a.r;
    return detail::hermite5((r - a.r) / h, h, a.w, a.dw, second(a.r, a.dw, a.psi), b.w, b.dw,
                            second(b.r, b.dw, b.psi))
        .d;
}

double RadialNavier::lap(double r) const {
    const std::size_t i = panel(r);
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    const double h = b.r - a.r;
    return detail::hermite5((r - a.r) / h, h, a.psi, a.dpsi, second(a.r, a.dpsi, a.f), b.psi, b.dpsi,
                            second(b.r, b.dpsi, b.f))
        .v;
}

double RadialNavier::dlap(double r) const {
    const std::size_t i = panel(r);
    const auto& a = nodes_[i];
    const auto& b = nodes_[i + 1];
    const double h = b.r - a.r;
    return detail::hermite5((r - a.r) / h, h, a.psi, a.dpsi, second(a.r, a.dpsi, a.f), b.psi, b.dpsi,
                            second(b.r, b.dpsi, b.f))
        .d;
}

RadialNavier navier_solve_radial(const RadialFunction& f, const BallSpec& ball, const RadialSolveOptions& opts) {
    const auto grid = radial_grid(ball.radius, opts);
    const std::size_t n = grid.size();
    std::vector<RadialNavier::Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].r = grid[i];
        nodes[i].f = f(grid[i]);
        if (!std::isfinite(nodes[i].f))
            throw NumericalError("navier_solve_radial: source is not finite at r=" + format_double(grid[i]));
    }
    const auto inner = poisson_stage(f, grid);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].psi = inner.phi[i];
        nodes[i].dpsi = inner.dphi[i];
    }
    // Second stage sources the interpolated psi; w slots are unused by lap().
    const RadialNavier partial(ball, nodes);
    const auto outer = poisson_stage([&](double r) { return partial.lap(r); }, grid);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].w = outer.phi[i];
        nodes[i].dw = outer.dphi[i];
    }
    return RadialNavier(ball, std::move(nodes));
}

NavierDecomposition decompose(const FieldOracle& field, const BallSpec& ball, const Potential* V,
                              const DecomposeOptions& opts) {
    if (!field.domain().encloses(ball.ball(), 1e-12))
        throw DomainError("decompose: ball escapes the field domain");
    const Point4 c = ball.center;
    const double R = ball.radius;
    auto source = [&field, V](const Point4& x) {
        const double e = std::exp(4.0 * field.u_unchecked(x));
        return V && *V ? (*V)(x) * e : e;
    };

    // Radiality test on a few spheres.
    bool radial = true;
    for (double frac : {0.1, 0.5, 0.9}) {
        const double rho = frac * R;
        const double ref = source(c + Point4::axis(0, rho));
        const Point4 dirs[] = {Point4::axis(1, 1.0), Point4::axis(2, 1.0), Point4::axis(3, 1.0),
                               Point4(-0.5, 0.5, -0.5, 0.5), Point4(0.5, 0.5, 0.5, -0.5)};
        for (const auto& d : dirs) {
            const double v = source(c + rho * d);
            if (std::abs(v - ref) > opts.radial_tol * std::max(1.0, std::abs(ref))) radial = false;
        }
    }

    const std::vector<ScaleHint> hints(field.hints().begin(), field.hints().end());
    std::vector<ScaleHint> inside;
    for (const auto& h : hints)
        if (ball.ball().contains(h.center)) inside.push_back(h);
    if (inside.empty()) inside.push_back({c, R});

    NavierDecomposition out{field, field, 0.0, radial};
    const double step = opts.fd_step * R;

    if (radial) {
        RadialSolveOptions ro = opts.radial;
        if (ro.scale == 0.0) {
            double s = R;
            for (const auto& h : inside)
                if (distance(h.center, c) <= 1e-12 * R) s = std::min(s, h.scale);
            if (s < R) ro.scale = s;
        }
        auto sol = std::make_shared<const RadialNavier>(
            navier_solve_radial([&](double r) { return source(c + Point4::axis(0, r)); }, ball, ro));
        auto w = [sol, c](const Point4& x) { return sol->w(distance(x, c)); };
        auto lw = [sol, c](const Point4& x) { return sol->lap(distance(x, c)); };
        out.w = FieldOracle("navier-w", w, lw, ball.ball(), inside);
        auto h = [field, sol, c](const Point4& x) { return field.u_unchecked(x) - sol->w(distance(x, c)); };
        auto lh = [field, sol, c](const Point4& x) { return field.lap_unchecked(x) - sol->lap(distance(x, c)); };
        out.h = FieldOracle("navier-h", h, lh, ball.ball(), inside, field.family_index(),
                            field.analytic_laplacian());
    } else {
        // Iterated Dirichlet kernels: w(x) = int G(x,z) psi(z) dz, psi(z) = int G(z,y) f(y) dy.
        const FieldOracle carrier = field.with_domain(ball.ball());
        const auto shells = opts.shells;
        auto psi = [carrier, ball, shells, source](const Point4& z) {
            if (!(distance(z, ball.center) < ball.radius)) return 0.0;
            MassOptions mo;
            mo.shells = shells;
            auto g = [&](const Point4& y) {
                if (y == z) return 0.0;
                return green_raw(z - ball.center, y - ball.center, ball.radius) * source(y);
            };
            return integrate_region(carrier, ball.ball(), g, mo).value;
        };
        auto w = [carrier, ball, shells, psi](const Point4& x) {
            MassOptions mo;
            mo.shells = shells;
            mo.shells.strata = std::max(2, shells.strata / 2);
            auto g = [&](const Point4& z) {
                if (z == x) return 0.0;
                return green_raw(x - ball.center, z - ball.center, ball.radius) * psi(z);
            };
            return integrate_region(carrier, ball.ball(), g, mo).value;
        };
        auto lw = [psi](const Point4& x) { return psi(x); };
        out.w = FieldOracle("navier-w-kernel", w, lw, ball.ball(), inside, {}, false);
        auto h = [field, w](const Point4& x) { return field.u_unchecked(x) - w(x); };
        auto lh = [field, psi](const Point4& x) { return field.lap_unchecked(x) - psi(x); };
        out.h = FieldOracle("navier-h-kernel", h, lh, ball.ball(), inside, field.family_index(), false);
    }

    // Probes on rays through the centre, kept a few FD steps away from the boundary.
    double worst = 0.0;
    ScalarField lap_u = [&field](const Point4& x) { return field.lap_unchecked(x); };
    ScalarField lap_h = [&out](const Point4& x) { return out.h.lap_unchecked(x); };
    const Point4 dirs[] = {Point4::axis(0, 1.0), Point4(0.5, -0.5, 0.5, 0.5), Point4::axis(2, -1.0),
                           Point4(0.0, 0.6, 0.0, -0.8)};
    for (int p = 0; p < opts.probes; ++p) {
        const double frac = 0.8 * (p / 4) / std::max(1, (opts.probes - 1) / 4);
        const Point4 x = c + frac * R * dirs[p % 4];
        double r;
        if (radial) {
            r = fd_laplacian(lap_h, x, step);
        } else {
            r = fd_laplacian(lap_u, x, step) - source(x);
        }
        worst = std::max(worst, std::abs(r));
    }
    out.residual_biharmonic = worst;
    return out;
}

quad::Estimate brezis_merle_check(const RadialFunction& w, const BallSpec& ball, double p) {
    if (!(p > 1.0)) throw ConfigError("brezis_merle_check: exponent p must exceed 1");
    const double R = ball.radius;
    constexpr int pieces = 64;
    quad::Estimate total;
    for (int i = 0; i < pieces; ++i) {
        const double a = R * i / pieces, b = R * (i + 1) / pieces;
        const auto e = quad::integrate_adaptive(
            [&](double r) { return 2.0 * constants::pi2 * std::exp(4.0 * p * std::abs(w(r))) * r * r * r; }, a,
            b, 1e-10);
        if (!std::isfinite(e.value))
            throw NumericalError("brezis_merle_check: integral overflows on [" + format_double(a) + ", " +
                                 format_double(b) + "]; partial sum " + format_double(total.value));
        total += e;
    }
    return total;
}

LogBoundReport navier_log_bound(const BallSpec& ball, int probes, const quad::ShellOptions& opts) {
    if (probes < 2) throw ConfigError("navier_log_bound: need at least two probes");
    LogBoundReport rep;
    rep.sup = -std::numeric_limits<double>::infinity();
    rep.inf = std::numeric_limits<double>::infinity();
    const double lo = 1e-3 * ball.radius, hi = 0.5 * ball.radius;
    for (int i = 0; i < probes; ++i) {
        const double s = lo * std::pow(hi / lo, static_cast<double>(i) / (probes - 1));
        const double H = green_navier(ball.center, ball.center + Point4::axis(0, s), ball, opts).value;
        const double dev = H - std::log(1.0 / s) / (8.0 * constants::pi2);
        rep.radii.push_back(s);
        rep.deviation.push_back(dev);
        rep.sup = std::max(rep.sup, dev);
        rep.inf = std::min(rep.inf, dev);
    }
    return rep;
}

std::string kernel_table_csv(const BallSpec& ball, std::span<const KernelProbe> probes,
                             const quad::ShellOptions& opts) {
    std::ostringstream os;
    os << "r_x,r_y,angle,G,H\n";
    for (const auto& p : probes) {
        const Point4 x = ball.center + Point4::axis(0, p.r_x);
        const Point4 y = ball.center + Point4(p.r_y * std::cos(p.angle), p.r_y * std::sin(p.angle), 0.0, 0.0);
        os << format_double(p.r_x) << ',' << format_double(p.r_y) << ',' << format_double(p.angle) << ','
           << format_double(green_dirichlet(x, y, ball)) << ','
           << format_double(green_navier(x, y, ball, opts).value) << '\n';
    }
    return os.str();
}

}  // namespace bubblelab
