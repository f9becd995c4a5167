#include "bubblelab/radial_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"
#include "bubblelab/point4.hpp"
#include "bubblelab/quadrature.hpp"
#include "hermite.hpp"

namespace bubblelab {

namespace {

using Vec4 = std::array<double, 4>;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

Vec4 rhs(double r, const Vec4& y) { return radial_rhs({r, y[0], y[1], y[2], y[3]}); }

Vec4 axpy(const Vec4& y, double h, std::initializer_list<std::pair<double, const Vec4*>> terms) {
    Vec4 out = y;
    for (const auto& [c, k] : terms)
        for (int i = 0; i < 4; ++i) out[i] += h * c * (*k)[i];
    return out;
}

// Second radial derivatives of u and w implied by the system.
std::pair<double, double> second_derivs(const RadialState& s, double beta) {
    if (s.r == 0.0) return {-beta / 4.0, -0.25};
    return {-s.w - 3.0 * s.du / s.r, -std::exp(4.0 * s.u) - 3.0 * s.dw / s.r};
}

double mass_on(const RadialSolution& sol, double a, double b, double* err) {
    // Composite Kronrod on each solver step intersecting [a, b].
    const auto& st = sol.states();
    double total = 0.0;
    double e = 0.0;
    auto it = std::upper_bound(st.begin(), st.end(), a,
                               [](double r, const RadialState& s) { return r < s.r; });
    std::size_t i = it == st.begin() ? 0 : static_cast<std::size_t>(it - st.begin()) - 1;
    for (; i + 1 < st.size() && st[i].r < b; ++i) {
        const double lo = std::max(a, st[i].r);
        const double hi = std::min(b, st[i + 1].r);
        if (hi <= lo) continue;
        auto q = quad::gauss_kronrod15(
            [&](double r) {
                const double u = sol.u(r);
                return std::exp(4.0 * u) * r * r * r;
            },
            lo, hi);
        total += q.value;
        e += q.abs_error;
    }
    if (err) *err = 2.0 * constants::pi2 * e;
    return 2.0 * constants::pi2 * total;
}

}  // namespace

std::array<double, 4> radial_rhs(const RadialState& s) {
    return {s.du, -s.w - 3.0 * s.du / s.r, s.dw, -std::exp(4.0 * s.u) - 3.0 * s.dw / s.r};
}

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::EntireIntegrable: return "entire-integrable";
        case Classification::FiniteRadiusBlowup: return "finite-radius-blowup";
        case Classification::NonIntegrable: return "non-integrable";
    }
    return "unknown";
}

Classification classification_from_string(std::string_view s) {
    if (s == "entire-integrable") return Classification::EntireIntegrable;
    if (s == "finite-radius-blowup") return Classification::FiniteRadiusBlowup;
    if (s == "non-integrable") return Classification::NonIntegrable;
    throw ConfigError("unknown classification: " + std::string(s));
}

RadialSolution::RadialSolution(double beta, std::vector<RadialState> states, Classification cls,
                               std::optional<double> blowup_radius, double tol)
    : beta_(beta), states_(std::move(states)), cls_(cls), blowup_radius_(blowup_radius), tol_(tol) {
    if (states_.size() < 2) throw NumericalError("radial solution needs at least two nodes");
}

RadialState RadialSolution::at(double r) const {
    if (!(r >= 0.0) || r > r_max() * (1.0 + 1e-14))
        throw DomainError("radial solution evaluated at r=" + format_double(r) +
                          " outside [0, " + format_double(r_max()) + "]");
    r = std::min(r, r_max());
    auto it = std::upper_bound(states_.begin(), states_.end(), r,
                               [](double x, const RadialState& s) { return x < s.r; });
    std::size_t i = it == states_.begin() ? 0 : static_cast<std::size_t>(it - states_.begin()) - 1;
    if (i + 1 >= states_.size()) return states_.back();
    const auto& s0 = states_[i];
    const auto& s1 = states_[i + 1];
    const double h = s1.r - s0.r;
    const double t = (r - s0.r) / h;
    const auto [u0dd, w0dd] = second_derivs(s0, beta_);
    const auto [u1dd, w1dd] = second_derivs(s1, beta_);
    const auto u = detail::hermite5(t, h, s0.u, s0.du, u0dd, s1.u, s1.du, u1dd);
    const auto w = detail::hermite5(t, h, s0.w, s0.dw, w0dd, s1.w, s1.dw, w1dd);
    return {r, u.v, u.d, w.v, w.d};
}

RadialSolution shoot(double beta, double r_max, double tol) {
    ShootOptions o;
    o.r_max = r_max;
    o.tol = tol;
    return shoot(beta, o);
}

RadialSolution shoot(double beta, const ShootOptions& opts) {
    if (!(opts.r_max > 0.0)) throw ConfigError("shoot: r_max must be positive");
    if (!(opts.tol > 0.0)) throw ConfigError("shoot: tol must be positive");
    if (!std::isfinite(beta)) throw ConfigError("shoot: beta must be finite");

    std::vector<RadialState> states;
    states.push_back({0.0, 0.0, 0.0, beta, 0.0});

    double r = std::min(opts.r_start, 0.5 * opts.r_max);
    Vec4 y{-beta * r * r / 8.0, -beta * r / 4.0, beta - r * r / 8.0, -r / 4.0};
    states.push_back({r, y[0], y[1], y[2], y[3]});

    const double rtol = opts.tol;
    const double atol = opts.tol * 1e-3;
    double h = opts.fixed_step.value_or(0.01 * r);
    Vec4 k1 = rhs(r, y);
    std::optional<double> blowup;

    while (r < opts.r_max) {
        if (r + h > opts.r_max) h = opts.r_max - r;
        const Vec4 k2 = rhs(r + c2 * h, axpy(y, h, {{a21, &k1}}));
        const Vec4 k3 = rhs(r + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        const Vec4 k4 = rhs(r + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Vec4 k5 =
            rhs(r + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Vec4 k6 = rhs(r + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4},
                                               {a65, &k5}}));
        const Vec4 ynew =
            axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const Vec4 k7 = rhs(r + h, ynew);

        double err = 0.0;
        bool finite = true;
        for (int i = 0; i < 4; ++i) {
            const double e =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
            finite = finite && std::isfinite(ynew[i]) && std::isfinite(k7[i]);
        }
        err = std::sqrt(err / 4.0);

        const bool fixed = opts.fixed_step.has_value();
        if (!finite || (!fixed && err > 1.0)) {
            h *= finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
            if (h < 1e-13 * std::max(r, 1e-300)) {
                blowup = r;
                break;
            }
            continue;
        }

        r += h;
        y = ynew;
        k1 = k7;
        states.push_back({r, y[0], y[1], y[2], y[3]});
        if (y[0] > opts.overflow_guard) {
            blowup = r;
            break;
        }
        if (!fixed) {
            const double fac = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
            h *= fac;
        }
    }

    if (blowup) {
        return RadialSolution(beta, std::move(states), Classification::FiniteRadiusBlowup, blowup,
                              opts.tol);
    }
    RadialSolution provisional(beta, std::move(states), Classification::NonIntegrable, std::nullopt);
    const double R = provisional.r_max();
    const double total = mass_on(provisional, 0.0, R, nullptr);
    const double tail = mass_on(provisional, R / 10.0, R, nullptr);
    const bool integrable = std::isfinite(total) && total > 0.0 && tail <= opts.tail_ratio * total;
    auto st = provisional.states();
    return RadialSolution(beta, std::move(st),
                          integrable ? Classification::EntireIntegrable : Classification::NonIntegrable,
                          std::nullopt, opts.tol);
}

EnergyValue energy_radial(const RadialSolution& sol, double R) {
    if (R > sol.r_max() * (1.0 + 1e-14))
        throw DomainError("energy_radial: R=" + format_double(R) + " exceeds r_max=" +
                          format_double(sol.r_max()));
    if (!(R > 0.0)) return {};
    EnergyValue e;
    e.value = mass_on(sol, 0.0, std::min(R, sol.r_max()), &e.abs_error);
    // Global integration error of the profile, empirically ~ tol relative.
    e.abs_error += 10.0 * sol.tol() * e.value;
    return e;
}

EnergyValue energy_total(const RadialSolution& sol) {
    EnergyValue e = energy_radial(sol, sol.r_max());
    const auto& last = sol.states().back();
    const double slope = last.r * last.du;  // local d u / d ln r
    if (!(slope < -1.0)) {
        e.value = std::numeric_limits<double>::infinity();
        e.abs_error = std::numeric_limits<double>::infinity();
        return e;
    }
    const double r4 = std::pow(last.r, 4);
    const double tail = 2.0 * constants::pi2 * std::exp(4.0 * last.u) * r4 / (-4.0 * slope - 4.0);
    e.value += tail;
    e.abs_error += tail;
    return e;
}

double find_beta_for_energy(double alpha, double beta_lo, double beta_hi, double mass_tol,
                            const BetaSearch& search) {
    if (!(alpha > 0.0)) throw ConfigError("find_beta_for_energy: alpha must be positive");
    if (alpha > constants::quantum * (1.0 + 1e-12))
        throw ConfigError("find_beta_for_energy: alpha exceeds 16 pi^2");
    if (!(beta_lo < beta_hi)) throw ConfigError("find_beta_for_energy: empty bracket");
    if (!(mass_tol > 0.0)) throw ConfigError("find_beta_for_energy: mass tolerance must be positive");

    const double inf = std::numeric_limits<double>::infinity();
    auto excess = [&](double beta) {
        ShootOptions o;
        o.r_max = search.r_max;
        o.tol = search.shoot_tol;
        const auto sol = shoot(beta, o);
        switch (sol.classification()) {
            case Classification::FiniteRadiusBlowup: return inf;
            case Classification::NonIntegrable:
                // Still climbing at r_max: the same branch as a blow-up beyond the grid.
                if (sol.states().back().du > 0.0) return inf;
                throw NumericalError("find_beta_for_energy: non-integrable solution at beta=" +
                                     format_double(beta));
            case Classification::EntireIntegrable: break;
        }
        return energy_radial(sol, std::min(search.r_cut, sol.r_max())).value - alpha;
    };

    double lo = beta_lo, hi = beta_hi;
    double flo = excess(lo), fhi = excess(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NumericalError("find_beta_for_energy: bracket [" + format_double(lo) + ", " +
                             format_double(hi) + "] does not straddle alpha");
    double mid = 0.5 * (lo + hi);
    double fmid = 0.0;
    for (int it = 0; it < search.max_iter; ++it) {
        mid = 0.5 * (lo + hi);
        if (hi - lo <= search.root_tol * std::max(1.0, std::abs(mid))) break;
        fmid = excess(mid);
        if (fmid == 0.0) return mid;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
    }
    // The excess on the integrable side of the final bracket is the achieved accuracy.
    const double achieved = std::isfinite(flo) ? (std::isfinite(fhi) ? std::min(std::abs(flo), std::abs(fhi))
                                                                      : std::abs(flo))
                                               : std::abs(fhi);
    if (achieved > mass_tol)
        throw NumericalError("find_beta_for_energy: converged bracket misses alpha by " +
                             format_double(achieved));
    return mid;
}

double laplacian_min(const RadialSolution& sol) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : sol.states()) m = std::min(m, s.w);
    return m;
}

double bubble_profile(double r) {
    const double a = constants::sqrt96;
    return std::log(a / (a + r * r));
}

double bubble_laplacian(double r) {
    const double a = constants::sqrt96;
    const double d = a + r * r;
    return (8.0 * a + 4.0 * r * r) / (d * d);
}

double bubble_mass(double R) {
    const double T = R * R / constants::sqrt96;
    if (std::isinf(T)) return constants::quantum;
    return constants::quantum * T * T * (T + 3.0) / ((1.0 + T) * (1.0 + T) * (1.0 + T));
}

std::string to_csv(const RadialSolution& sol) {
    std::ostringstream os;
    os << "r,u,du,w,dw\n";
    for (const auto& s : sol.states())
        os << format_double(s.r) << ',' << format_double(s.u) << ',' << format_double(s.du) << ','
           << format_double(s.w) << ',' << format_double(s.dw) << '\n';
    return os.str();
}

}  // namespace bubblelab
