#include "bubblelab/bubble_detector.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"

namespace bubblelab {

namespace {

using Objective = std::function<double(const Point4&)>;

struct Cand {
    Point4 x;
    double v;
};

// Evaluates f on an n^4 grid of the cube centre +- half, keeping points inside `dom`.
void grid_eval(const Objective& f, const Point4& centre, double half, int n, const Ball& dom,
               std::vector<Cand>& out) {
    const double h = n > 1 ? 2.0 * half / (n - 1) : 0.0;
    const double r2 = dom.radius * dom.radius;
    Point4 x;
    for (int a = 0; a < n; ++a) {
        x[0] = centre[0] - half + a * h;
        for (int b = 0; b < n; ++b) {
            x[1] = centre[1] - half + b * h;
            for (int c = 0; c < n; ++c) {
                x[2] = centre[2] - half + c * h;
                for (int d = 0; d < n; ++d) {
                    x[3] = centre[3] - half + d * h;
                    if ((x - dom.center).norm2() > r2) continue;
                    const double v = f(x);
                    if (std::isfinite(v)) out.push_back({x, v});
                }
            }
        }
    }
}

// Best `m` candidates that are pairwise at least `min_dist` apart.
std::vector<Cand> top_distinct(std::vector<Cand> all, int m, double min_dist) {
    std::sort(all.begin(), all.end(), [](const Cand& a, const Cand& b) { return a.v > b.v; });
    std::vector<Cand> out;
    for (const auto& c : all) {
        if (static_cast<int>(out.size()) >= m) break;
        bool far = true;
        for (const auto& o : out)
            if (distance(o.x, c.x) < min_dist) {
                far = false;
                break;
            }
        if (far) out.push_back(c);
    }
    return out;
}

// Pattern search: 5^4 grid around the incumbent, recentre on improvement, halve otherwise.
Cand zoom(const Objective& f, Cand start, double half, const Ball& dom) {
    const double floor = 1e-15 * std::max(dom.radius, start.x.norm());
    std::vector<Cand> buf;
    for (int it = 0; it < 2000 && half > floor; ++it) {
        buf.clear();
        grid_eval(f, start.x, half, 5, dom, buf);
        Cand best = start;
        for (const auto& c : buf)
            if (c.v > best.v) best = c;
        if (best.v > start.v && distance(best.x, start.x) > 0.0) {
            start = best;
        } else {
            half *= 0.5;
        }
    }
    return start;
}

Cand maximize(const Objective& f, const Ball& dom, const DetectorConfig& cfg) {
    const int n = cfg.grid_per_axis;
    double half = dom.radius;
    double h = 2.0 * half / (n - 1);
    std::vector<Cand> all;
    grid_eval(f, dom.center, half, n, dom, all);
    if (all.empty()) throw NumericalError("detector: objective is not finite anywhere on the search grid");
    auto cands = top_distinct(std::move(all), cfg.multistart, h);
    for (int level = 1; level < cfg.refinement_levels; ++level) {
        std::vector<Cand> next;
        for (const auto& c : cands) {
            next.push_back(c);
            grid_eval(f, c.x, h, n, dom, next);
        }
        half = h;
        h = 2.0 * half / (n - 1);
        cands = top_distinct(std::move(next), cfg.multistart, h);
    }
    Cand best{cands.front().x, -std::numeric_limits<double>::infinity()};
    for (const auto& c : cands) {
        const Cand z = zoom(f, c, h, dom);
        if (z.v > best.v) best = z;
    }
    return best;
}

double min_dist(const Point4& x, const std::vector<ConcentrationPoint>& pts) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) d = std::min(d, distance(x, p.location));
    return d;
}

Point4 random_in(std::mt19937_64& rng, const Ball& b) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point4 p(g(rng), g(rng), g(rng), g(rng));
    return b.center + p * (b.radius * std::pow(u(rng), 0.25) / p.norm());
}

}  // namespace

ConcentrationPoint make_point(const FieldOracle& field, const Point4& location) {
    ConcentrationPoint p;
    p.location = location;
    p.peak_value = field.u(location);
    p.mu = std::exp(-p.peak_value);
    return p;
}

void DetectorConfig::validate() const {
    if (!(weighted_sup_threshold > 0.0)) throw ConfigError("weighted_sup_threshold must be positive");
    if (!(lap_threshold > 0.0)) throw ConfigError("lap_threshold must be positive");
    if (max_points < 1) throw ConfigError("max_points must be >= 1");
    if (refinement_levels < 1) throw ConfigError("refinement_levels must be >= 1");
    if (grid_per_axis < 3) throw ConfigError("grid_per_axis must be >= 3");
    if (multistart < 1) throw ConfigError("multistart must be >= 1");
    if (!(fit_radius > 0.0)) throw ConfigError("fit_radius must be positive");
    if (!(domain_shrink >= 0.0 && domain_shrink < 1.0)) throw ConfigError("domain_shrink must be in [0, 1)");
    if (soundness_probes < 0) throw ConfigError("soundness_probes must be >= 0");
}

DetectionReport find_peaks(const FieldOracle& field, const DetectorConfig& config) {
    config.validate();
    const Ball base = config.domain.value_or(field.domain());
    if (!field.domain().encloses(base, 1e-12)) throw DomainError("detector domain escapes the field domain");
    const Ball dom{base.center, base.radius * (1.0 - config.domain_shrink)};

    DetectionReport rep;
    rep.search_domain = dom;
    auto& pts = rep.points;

    const Objective u = [&field](const Point4& x) { return field.u_unchecked(x); };
    const Cand first = maximize(u, dom, config);
    pts.push_back(make_point(field, first.x));

    const Objective weighted = [&](const Point4& x) { return min_dist(x, pts) * std::exp(field.u_unchecked(x)); };
    double sup_w = 0.0;
    for (int iter = 0; iter < 2 * config.max_points; ++iter) {
        const Cand y = maximize(weighted, dom, config);
        sup_w = y.v;
        if (sup_w <= config.weighted_sup_threshold) break;
        if (static_cast<int>(pts.size()) >= config.max_points) {
            rep.complete = false;
            break;
        }
        // Next point: the local maximum of u next to the weighted-sup argmax.
        const double d = min_dist(y.x, pts);
        const Cand peak = zoom(u, {y.x, field.u_unchecked(y.x)}, 0.25 * d, dom);
        auto next = make_point(field, peak.x);
        bool merged = false;
        for (auto& p : pts) {
            if (distance(p.location, next.location) < 3.0 * (p.mu + next.mu)) {
                if (next.peak_value > p.peak_value) p = next;
                merged = true;
                ++rep.merged;
                break;
            }
        }
        if (!merged) pts.push_back(next);
        if (merged && iter + 1 == 2 * config.max_points) rep.complete = false;
    }
    if (sup_w > config.weighted_sup_threshold) rep.complete = false;

    const Objective weighted_lap = [&](const Point4& x) {
        const double d = min_dist(x, pts);
        return d * d * std::abs(field.lap_unchecked(x));
    };
    double sup_l = maximize(weighted_lap, dom, config).v;

    std::mt19937_64 rng(config.seed);
    for (int i = 0; i < config.soundness_probes; ++i) {
        const Point4 x = random_in(rng, dom);
        sup_w = std::max(sup_w, weighted(x));
        sup_l = std::max(sup_l, weighted_lap(x));
    }
    rep.sup_weighted_u = sup_w;
    rep.sup_weighted_lap = sup_l;
    if (sup_w > config.weighted_sup_threshold) rep.complete = false;

    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& p = pts[i];
        double rho = field.domain().radius - distance(p.location, field.domain().center);
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) rho = std::min(rho, 0.5 * distance(p.location, pts[j].location));
        p.mass_radius = rho * (1.0 - 1e-9);
        p.local_mass = mass(field, Ball{p.location, p.mass_radius}, nullptr, config.mass);
        p.bubble_residual = bubble_fit(field, p, config.fit_radius).residual;
    }
    rep.min_separation_ratio = separation(pts);
    return rep;
}

FitResult bubble_fit(const FieldOracle& field, const ConcentrationPoint& point, double fit_radius) {
    if (!(fit_radius > 0.0)) throw ConfigError("fit radius must be positive");
    FitResult res;
    const double room = field.domain().radius - distance(point.location, field.domain().center);
    if (!(room > 0.0)) throw DomainError("bubble_fit: point outside the field domain");
    res.fit_radius = fit_radius;
    if (fit_radius * point.mu > room) {
        res.fit_radius = room / point.mu * (1.0 - 1e-12);
        res.shrunk = true;
    }
    std::vector<Point4> dirs;
    for (std::size_t i = 0; i < 4; ++i) {
        dirs.push_back(Point4::axis(i, 1.0));
        dirs.push_back(Point4::axis(i, -1.0));
    }
    for (int s = 0; s < 16; ++s)
        dirs.push_back(Point4(s & 1 ? 0.5 : -0.5, s & 2 ? 0.5 : -0.5, s & 4 ? 0.5 : -0.5, s & 8 ? 0.5 : -0.5));
    const double log_mu = std::log(point.mu);
    const double u0 = field.u(point.location);
    constexpr int radii = 20;
    double worst = std::abs(u0 + log_mu);
    for (int j = 1; j <= radii; ++j) {
        const double t = res.fit_radius * j / radii;
        for (const auto& d : dirs) {
            const Point4 y = d * t;
            const double v = field.u_unchecked(point.location + point.mu * y) + log_mu;
            worst = std::max(worst, std::abs(v - bubble(y)));
        }
    }
    res.residual = worst;
    return res;
}

double separation(std::span<const ConcentrationPoint> points) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < points.size(); ++j)
            if (i != j) best = std::min(best, distance(points[i].location, points[j].location) / points[i].mu);
    return best;
}

S0Report s0_estimate(std::span<const FieldOracle> family, std::span<const double> radii,
                     std::span<const int> k_values, const DetectorConfig& config, std::span<const Point4> extra,
                     double tolerance) {
    if (family.empty() || family.size() != k_values.size())
        throw ConfigError("s0_estimate: family and k list must be non-empty and of equal length");
    if (radii.empty()) throw ConfigError("s0_estimate: need at least one radius");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] < radii[i - 1])) throw ConfigError("s0_estimate: radii must be decreasing");
    for (std::size_t i = 1; i < k_values.size(); ++i)
        if (!(k_values[i] > k_values[i - 1])) throw ConfigError("s0_estimate: k list must be increasing");

    S0Report rep;
    rep.radii.assign(radii.begin(), radii.end());
    rep.k_values.assign(k_values.begin(), k_values.end());
    const std::size_t half = k_values.size() / 2;
    rep.k_half = k_values[half];
    rep.tolerance = tolerance;

    std::vector<Point4> locations;
    for (const auto& p : find_peaks(family.back(), config).points) locations.push_back(p.location);
    locations.insert(locations.end(), extra.begin(), extra.end());

    for (const auto& x : locations) {
        S0Candidate c;
        c.location = x;
        c.proxy = std::numeric_limits<double>::infinity();
        for (double delta : radii) {
            std::vector<double> row;
            double row_min = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < family.size(); ++j) {
                const Ball b{x, delta};
                double m = std::numeric_limits<double>::quiet_NaN();
                if (family[j].domain().encloses(b, 1e-12)) m = mass(family[j], b, nullptr, config.mass).value;
                row.push_back(m);
                if (j >= half && std::isfinite(m)) row_min = std::min(row_min, m);
            }
            c.masses.push_back(std::move(row));
            if (std::isfinite(row_min)) c.proxy = std::min(c.proxy, row_min);
        }
        if (!std::isfinite(c.proxy)) c.proxy = std::numeric_limits<double>::quiet_NaN();
        c.in_s0 = c.proxy >= 8.0 * constants::pi2 * (1.0 - tolerance);
        rep.candidates.push_back(std::move(c));
    }
    return rep;
}

std::string points_csv(std::span<const ConcentrationPoint> points) {
    std::ostringstream os;
    os << "index,x1,x2,x3,x4,mu,peak,residual,mass\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        os << i;
        for (std::size_t a = 0; a < 4; ++a) os << ',' << format_double(p.location[a]);
        os << ',' << format_double(p.mu) << ',' << format_double(p.peak_value) << ','
           << format_double(p.bubble_residual) << ',' << format_double(p.local_mass.value) << '\n';
    }
    return os.str();
}

}  // namespace bubblelab
