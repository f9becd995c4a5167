#include "bubblelab/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"

namespace bubblelab {

namespace {

constexpr double kDomainSlack = 1e-12;

std::string point_text(const Point4& p) {
    std::ostringstream os;
    os << '(' << format_double(p[0]) << ';' << format_double(p[1]) << ';' << format_double(p[2])
       << ';' << format_double(p[3]) << ')';
    return os.str();
}

double fk_value(double mu, double r2) {
    const double a = constants::sqrt96;
    return std::log(a * mu / (a * mu * mu + r2));
}

double fk_laplacian(double mu, double r2) {
    const double a = constants::sqrt96;
    const double d = a * mu * mu + r2;
    return (8.0 * a * mu * mu + 4.0 * r2) / (d * d);
}

// Shepard weight of piece j among pieces with squared distances d2, exponent 10.
double shepard(std::span<const double> d2, std::size_t j) {
    if (d2[j] == 0.0) return 1.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < d2.size(); ++i) {
        if (d2[i] == 0.0) return 0.0;
        const double ratio = d2[j] / d2[i];
        if (ratio > 1e60) return 0.0;
        sum += std::pow(ratio, 5);
    }
    return 1.0 / sum;
}

void require_inside(const FieldOracle& field, const Ball& b, const char* what) {
    if (!field.domain().encloses(b, kDomainSlack))
        throw DomainError(std::string(what) + ": ball of radius " + format_double(b.radius) +
                          " at " + point_text(b.center) + " escapes the field domain");
}

// Smooth step: 1 on [0, 1/2], 0 from 1 on, C-infinity in between.
double bump(double t) {
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double s = 2.0 * t - 1.0;
    const double a = std::exp(-1.0 / (1.0 - s)), b = std::exp(-1.0 / s);
    return a / (a + b);
}

// Shepard partition over the pieces and the concentric piece. With `compact_partition`
// the off-centre weights are also cut off by a bump of radius equal to the distance to the
// boundary, so that only the concentric shells meet the boundary.
MassEstimate integrate_ball(const FieldOracle& field, const Ball& ball, const ScalarField& integrand,
                            const MassOptions& opts) {
    MassEstimate out;
    out.method = opts.shells.product_rule ? "shells-product" : "shells-stratified-mc";
    if (!(ball.radius > 0.0)) return out;
    require_inside(field, ball, "integrate");

    struct Piece {
        Point4 center;
        double scale;
        double support;
    };
    const double R = ball.radius;
    std::vector<Piece> pieces;
    double centre_scale = R;
    for (const auto& h : field.hints()) {
        const double offset = distance(h.center, ball.center);
        if (offset >= R) continue;
        if (offset <= 1e-9 * R) {
            centre_scale = std::min(centre_scale, h.scale);
            continue;
        }
        bool dup = false;
        for (auto& p : pieces)
            if (distance(p.center, h.center) <= 1e-12 * R) {
                p.scale = std::min(p.scale, h.scale);
                dup = true;
                break;
            }
        if (!dup) pieces.push_back({h.center, std::min(h.scale, R), R - offset});
    if (!opts.compact_partition)
        for (auto& p : pieces) p.support = std::numeric_limits<double>::infinity();
    }
    // Index n is the concentric piece.
    const std::size_t n = pieces.size();
    std::vector<double> d2(n + 1);
    auto raw_weight = [&](const Point4& x, std::size_t j) {
        const double t = distance(x, pieces[j].center) / pieces[j].support;
        if (t >= 1.0) return 0.0;
        for (std::size_t i = 0; i < n; ++i) d2[i] = (x - pieces[i].center).norm2();
        d2[n] = (x - ball.center).norm2();
        return bump(t) * shepard(d2, j);
    };
    auto inside = [&](const Point4& x) { return (x - ball.center).norm2() < R * R; };

    auto run = [&](const Point4& centre, double r_hi, double scale, std::span<const double> bps,
                   std::size_t index, const ScalarField& g) {
        quad::ShellOptions so = opts.shells;
        so.seed = quad::mix_seed(opts.shells.seed, index);
        const auto e = quad::integrate_shells(centre, 0.0, r_hi, scale, g, so, bps);
        out.value += e.value;
        out.abs_error += e.abs_error;
        out.samples += e.samples;
    };

    for (std::size_t j = 0; j < n; ++j) {
        const double rho = pieces[j].support;
        const double gap = R - distance(pieces[j].center, ball.center);
        if (std::isfinite(rho)) {
            const double bps[] = {0.5 * rho};
            run(pieces[j].center, rho, std::min(pieces[j].scale, rho), bps, j, [&](const Point4& x) {
                const double w = raw_weight(x, j);
                return w == 0.0 ? 0.0 : w * integrand(x);
            });
        } else {
            const double bps[] = {gap};
            run(pieces[j].center, 2.0 * R - gap, pieces[j].scale, bps, j, [&](const Point4& x) {
                if (!inside(x)) return 0.0;
                const double w = raw_weight(x, j);
                return w == 0.0 ? 0.0 : w * integrand(x);
            });
        }
    }
    run(ball.center, R, centre_scale, {}, n, [&](const Point4& x) {
        double w = 1.0;
        for (std::size_t j = 0; j < n; ++j) w -= raw_weight(x, j);
        if (w <= 0.0) return 0.0;
        return w * integrand(x);
    });
    return out;
}

}  // namespace

FieldOracle::FieldOracle(std::string kind, ScalarField u, ScalarField lap, Ball domain,
                         std::vector<ScaleHint> hints, std::optional<int> family_index,
                         bool analytic_laplacian)
    : kind_(std::move(kind)),
      u_(std::move(u)),
      lap_(std::move(lap)),
      domain_(domain),
      hints_(std::move(hints)),
      family_index_(family_index),
      analytic_(analytic_laplacian) {
    if (!(domain_.radius > 0.0)) throw ConfigError("field domain radius must be positive");
}

bool FieldOracle::in_domain(const Point4& x) const {
    return distance(x, domain_.center) <= domain_.radius * (1.0 + kDomainSlack);
}

double FieldOracle::u(const Point4& x) const {
    if (!in_domain(x)) throw DomainError(kind_ + ": u evaluated outside domain at " + point_text(x));
    return u_(x);
}

double FieldOracle::lap(const Point4& x) const {
    if (!in_domain(x))
        throw DomainError(kind_ + ": Laplacian evaluated outside domain at " + point_text(x));
    return lap_(x);
}

FieldOracle FieldOracle::with_family_index(int k) const {
    FieldOracle f = *this;
    f.family_index_ = k;
    return f;
}

FieldOracle FieldOracle::with_domain(const Ball& b) const {
    FieldOracle f = *this;
    f.domain_ = b;
    return f;
}

double bubble(const Point4& x) { return fk_value(1.0, x.norm2()); }

FieldOracle bubble_field(double domain_radius) {
    return FieldOracle(
        "bubble", [](const Point4& x) { return fk_value(1.0, x.norm2()); },
        [](const Point4& x) { return fk_laplacian(1.0, x.norm2()); }, Ball{{}, domain_radius},
        {{Point4{}, 1.0}});
}

FieldOracle rescale(const FieldOracle& field, const Point4& center, double mu) {
    if (!(mu > 0.0)) throw ConfigError("rescale: mu must be positive");
    if (!field.in_domain(center)) throw DomainError("rescale: center outside field domain");
    const double log_mu = std::log(mu);
    const double mu2 = mu * mu;
    Ball dom{(field.domain().center - center) * (1.0 / mu), field.domain().radius / mu};
    std::vector<ScaleHint> hints;
    for (const auto& h : field.hints()) hints.push_back({(h.center - center) * (1.0 / mu), h.scale / mu});
    // Oracles are immutable: capture by value.
    auto u = [field, center, mu, log_mu](const Point4& x) {
        return field.u_unchecked(center + mu * x) + log_mu;
    };
    auto lap = [field, center, mu, mu2](const Point4& x) {
        return mu2 * field.lap_unchecked(center + mu * x);
    };
    return FieldOracle(field.kind() + "-rescaled", u, lap, dom, std::move(hints), field.family_index(),
                       field.analytic_laplacian());
}

FieldOracle gen_fk(double mu, double domain_radius, const Point4& center) {
    if (!(mu > 0.0)) throw ConfigError("gen_fk: mu must be positive");
    return FieldOracle(
        "fk", [mu, center](const Point4& x) { return fk_value(mu, (x - center).norm2()); },
        [mu, center](const Point4& x) { return fk_laplacian(mu, (x - center).norm2()); },
        Ball{center, domain_radius}, {{center, mu}});
}

FieldOracle gen_gk(std::shared_ptr<const RadialSolution> v, int k) {
    if (!v) throw ConfigError("gen_gk: missing radial profile");
    if (v->classification() != Classification::EntireIntegrable)
        throw ConfigError("gen_gk: profile is not entire-integrable");
    if (k < 1) throw ConfigError("gen_gk: k must be >= 1");
    const double kd = static_cast<double>(k);
    const double log_k = std::log(kd);
    auto u = [v, kd, log_k](const Point4& x) { return v->u(kd * x.norm()) + log_k; };
    auto lap = [v, kd](const Point4& x) { return kd * kd * v->w(kd * x.norm()); };
    return FieldOracle("gk", u, lap, Ball{{}, v->r_max() / kd}, {{Point4{}, 1.0 / kd}}, k);
}

FieldOracle radial_field(std::shared_ptr<const RadialSolution> v, const Point4& center) {
    if (!v) throw ConfigError("radial_field: missing radial profile");
    auto u = [v, center](const Point4& x) { return v->u(distance(x, center)); };
    auto lap = [v, center](const Point4& x) { return v->w(distance(x, center)); };
    return FieldOracle("radial", u, lap, Ball{center, v->r_max()}, {{center, 1.0}});
}

double multibubble_laplacian(std::span<const Point4> centers, std::span<const double> scales,
                             const Point4& x) {
    const std::size_t n = centers.size();
    std::vector<double> e(n);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = 4.0 * fk_value(scales[i], (x - centers[i]).norm2());
        m = std::max(m, e[i]);
    }
    double s = 0.0;
    for (auto& v : e) s += (v = std::exp(v - m));
    Point4 gbar;
    double lap_mean = 0.0;
    double g2_mean = 0.0;
    const double a = constants::sqrt96;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = e[i] / s;
        const Point4 y = x - centers[i];
        const double d = a * scales[i] * scales[i] + y.norm2();
        const Point4 g = y * (-2.0 / d);
        gbar += p * g;
        g2_mean += p * g.norm2();
        lap_mean += p * fk_laplacian(scales[i], y.norm2());
    }
    return lap_mean - 4.0 * (g2_mean - gbar.norm2());
}

FieldOracle gen_multibubble(std::span<const Point4> centers, std::span<const double> scales,
                            double domain_radius, LaplacianMode mode) {
    if (centers.empty() || centers.size() != scales.size())
        throw ConfigError("gen_multibubble: centers and scales must be non-empty and of equal length");
    for (double s : scales)
        if (!(s > 0.0)) throw ConfigError("gen_multibubble: scales must be positive");
    std::vector<Point4> c(centers.begin(), centers.end());
    std::vector<double> mu(scales.begin(), scales.end());
    auto u = [c, mu](const Point4& x) {
        double m = -std::numeric_limits<double>::infinity();
        std::array<double, 16> small{};
        std::vector<double> big;
        double* e = small.data();
        if (c.size() > small.size()) {
            big.resize(c.size());
            e = big.data();
        }
        for (std::size_t i = 0; i < c.size(); ++i) {
            e[i] = 4.0 * fk_value(mu[i], (x - c[i]).norm2());
            m = std::max(m, e[i]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += std::exp(e[i] - m);
        return 0.25 * (m + std::log(s));
    };
    ScalarField lap;
    if (mode == LaplacianMode::Analytic) {
        lap = [c, mu](const Point4& x) { return multibubble_laplacian(c, mu, x); };
    } else {
        // Step tied to the local length scale sqrt(mu_i^2 + |x - c_i|^2) of the nearest piece.
        lap = [u, c, mu](const Point4& x) {
            double ell2 = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < c.size(); ++i) ell2 = std::min(ell2, mu[i] * mu[i] + (x - c[i]).norm2());
            return fd_laplacian(u, x, 2e-3 * std::sqrt(ell2));
        };
    }
    std::vector<ScaleHint> hints;
    for (std::size_t i = 0; i < c.size(); ++i) hints.push_back({c[i], mu[i]});
    return FieldOracle("multibubble", u, lap, Ball{{}, domain_radius}, std::move(hints), {},
                       mode == LaplacianMode::Analytic);
}

double fd_laplacian(const ScalarField& f, const Point4& x, double h) {
    const double f0 = f(x);
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const Point4 e = Point4::axis(i, h);
        sum += f(x + e) - 2.0 * f0 + f(x - e);
    }
    return -sum / (h * h);
}

std::string describe(const Region& region) {
    std::ostringstream os;
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Ball>) {
                os << "ball" << point_text(r.center) << "r=" << format_double(r.radius);
            } else if constexpr (std::is_same_v<T, Annulus>) {
                os << "annulus" << point_text(r.center) << "r=" << format_double(r.r_in) << ".."
                   << format_double(r.r_out);
            } else {
                os << "ball" << point_text(r.outer.center) << "r=" << format_double(r.outer.radius)
                   << "-minus-" << r.holes.size() << "-holes";
            }
        },
        region);
    return os.str();
}

void validate(const Region& region) {
    if (const auto* a = std::get_if<Annulus>(&region)) {
        if (!(a->r_in >= 0.0 && a->r_out >= a->r_in))
            throw GeometryError("annulus requires 0 <= r_in <= r_out");
        return;
    }
    if (const auto* b = std::get_if<BallMinusBalls>(&region)) {
        for (std::size_t i = 0; i < b->holes.size(); ++i) {
            const auto& h = b->holes[i];
            if (!(h.radius >= 0.0)) throw GeometryError("hole radius must be non-negative");
            if (!b->outer.encloses(h, 1e-12))
                throw GeometryError("hole " + std::to_string(i) + " is not inside the outer ball");
            for (std::size_t j = 0; j < i; ++j)
                if (distance(h.center, b->holes[j].center) < h.radius + b->holes[j].radius)
                    throw GeometryError("holes " + std::to_string(j) + " and " + std::to_string(i) +
                                        " overlap");
        }
        return;
    }
    if (!(std::get<Ball>(region).radius >= 0.0)) throw GeometryError("ball radius must be non-negative");
}

MassEstimate integrate_region(const FieldOracle& field, const Region& region,
                              const ScalarField& integrand, const MassOptions& opts) {
    validate(region);
    auto combine = [](MassEstimate acc, const MassEstimate& e, double sign) {
        acc.value += sign * e.value;
        acc.abs_error += e.abs_error;
        acc.samples += e.samples;
        if (acc.method.empty()) acc.method = e.method;
        return acc;
    };
    if (const auto* b = std::get_if<Ball>(&region)) return integrate_ball(field, *b, integrand, opts);
    if (const auto* a = std::get_if<Annulus>(&region)) {
        MassEstimate out = integrate_ball(field, Ball{a->center, a->r_out}, integrand, opts);
        return combine(out, integrate_ball(field, Ball{a->center, a->r_in}, integrand, opts), -1.0);
    }
    const auto& bmb = std::get<BallMinusBalls>(region);
    MassEstimate out = integrate_ball(field, bmb.outer, integrand, opts);
    for (const auto& h : bmb.holes) out = combine(out, integrate_ball(field, h, integrand, opts), -1.0);
    return out;
}

Potential cosine_potential(double eps, const Point4& a) {
    return [eps, a](const Point4& x) { return 1.0 + eps * std::cos(dot(a, x)); };
}

MassEstimate mass(const FieldOracle& field, const Region& region, const Potential* V,
                  const MassOptions& opts) {
    ScalarField integrand;
    if (V && *V) {
        integrand = [&field, V](const Point4& x) {
            return (*V)(x) * std::exp(4.0 * field.u_unchecked(x));
        };
    } else {
        integrand = [&field](const Point4& x) { return std::exp(4.0 * field.u_unchecked(x)); };
    }
    return integrate_region(field, region, integrand, opts);
}

MassEstimate laplacian_l1(const FieldOracle& field, const Region& region, LaplacianPart part,
                          const MassOptions& opts) {
    ScalarField integrand;
    if (part == LaplacianPart::Full)
        integrand = [&field](const Point4& x) { return std::abs(field.lap_unchecked(x)); };
    else
        integrand = [&field](const Point4& x) { return std::max(0.0, -field.lap_unchecked(x)); };
    return integrate_region(field, region, integrand, opts);
}

std::shared_ptr<const RadialSolution> family_profile(const FamilySpec& spec) {
    double beta = 0.0;
    if (spec.beta) {
        beta = *spec.beta;
    } else if (spec.alpha) {
        BetaSearch search;
        search.r_max = spec.r_max;
        double hi = 2.0 * constants::beta_star;
        for (int i = 0; i < 20; ++i) {
            const auto s = shoot(hi, spec.r_max, 1e-10);
            if (s.classification() == Classification::EntireIntegrable &&
                energy_radial(s, std::min(search.r_cut, s.r_max())).value < *spec.alpha)
                break;
            hi *= 2.0;
        }
        beta = find_beta_for_energy(*spec.alpha, constants::beta_star, hi, 1e-6, search);
    } else {
        throw ConfigError(spec.type + " family needs beta or alpha");
    }
    auto sol = std::make_shared<RadialSolution>(shoot(beta, spec.r_max, 1e-10));
    return sol;
}

FieldOracle build_member(const FamilySpec& spec, int k, std::shared_ptr<const RadialSolution> profile) {
    const double factor = std::pow(spec.ratio, k);
    if (spec.type == "fk") return gen_fk(spec.mu0 * factor, spec.domain_radius).with_family_index(k);
    if (spec.type == "multibubble") {
        std::vector<double> s(spec.scales);
        for (auto& v : s) v *= factor;
        return gen_multibubble(spec.centers, s, spec.domain_radius, spec.laplacian).with_family_index(k);
    }
    if (spec.type == "gk" || spec.type == "radial") {
        if (!profile) profile = family_profile(spec);
        if (spec.type == "radial") return radial_field(profile).with_family_index(k);
        auto f = gen_gk(profile, k);
        if (f.domain().radius > spec.domain_radius) f = f.with_domain(Ball{{}, spec.domain_radius});
        return f;
    }
    throw ConfigError("unknown family type: " + spec.type);
}

std::vector<FieldOracle> build_family(const FamilySpec& spec) {
    if (spec.k_values.empty()) throw ConfigError("family needs at least one k value");
    std::shared_ptr<const RadialSolution> profile;
    if (spec.type == "gk" || spec.type == "radial") profile = family_profile(spec);
    std::vector<FieldOracle> out;
    out.reserve(spec.k_values.size());
    for (int k : spec.k_values) out.push_back(build_member(spec, k, profile));
    return out;
}

}  // namespace bubblelab
