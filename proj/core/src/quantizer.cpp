#include "bubblelab/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"

namespace bubblelab {

namespace {

std::vector<Point4> sphere_directions() {
    std::vector<Point4> dirs;
    quad::AngularRule::product(6).directions(0, dirs);
    return dirs;
}

// Satellite positions of `level` in units of that level's scale, relative to the root.
std::vector<Point4> scaled_satellites(const ClusterTree& tree, std::size_t level, double r) {
    std::vector<Point4> out;
    if (level == 0) return out;
    for (std::size_t i : tree.groups.at(level - 1)) out.push_back((tree.locations[i] - tree.root()) * (1.0 / r));
    return out;
}

double min_satellite_ratio(const std::vector<Point4>& sat) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sat.size(); ++i) {
        m = std::min(m, sat[i].norm());
        for (std::size_t j = 0; j < i; ++j) m = std::min(m, distance(sat[i], sat[j]));
    }
    return m;
}

double max_satellite_ratio(const std::vector<Point4>& sat) {
    double m = 0.0;
    for (const auto& s : sat) m = std::max(m, s.norm());
    return m;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ClusterTree cluster_scales(std::span<const ConcentrationPoint> points, double ratio_threshold) {
    if (points.empty()) throw ConfigError("cluster_scales: need at least one point");
    if (!(ratio_threshold > 1.0)) throw ConfigError("cluster_scales: ratio threshold must exceed 1");
    ClusterTree tree;
    tree.ratio_threshold = ratio_threshold;
    for (const auto& p : points) {
        tree.locations.push_back(p.location);
        tree.mus.push_back(p.mu);
    }
    const std::size_t n = points.size();
    if (n == 1) return tree;

    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = distance(points[i].location, points[j].location);
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    tree.root_index = points[bj].peak_value > points[bi].peak_value ? bj : bi;

    std::vector<bool> assigned(n, false);
    assigned[tree.root_index] = true;
    std::size_t left = n - 1;
    while (left > 0) {
        double r = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (!assigned[i]) r = std::min(r, distance(tree.root(), points[i].location));
        std::vector<std::size_t> group;
        for (std::size_t i = 0; i < n; ++i)
            if (!assigned[i] && distance(tree.root(), points[i].location) <= ratio_threshold * r) {
                group.push_back(i);
                assigned[i] = true;
                --left;
            }
        tree.scales.push_back(r);
        tree.groups.push_back(std::move(group));
    }
    return tree;
}

NeckSpec default_neck(const ClusterTree& tree, std::size_t level, double rho_inner, double outer_limit) {
    if (level > tree.levels()) throw ConfigError("default_neck: level beyond the tree");
    NeckSpec s;
    s.level = level;
    s.rho_inner = rho_inner;
    if (level == 0) {
        s.r_scale = 0.5 * outer_limit;
        s.R = 2.0;
        s.nu = 0.05;
        return s;
    }
    s.r_scale = tree.scales[level - 1];
    const auto sat = scaled_satellites(tree, level, s.r_scale);
    s.nu = min_satellite_ratio(sat) / 20.0;
    s.R = std::min(6.0 * max_satellite_ratio(sat), outer_limit / s.r_scale);
    return s;
}

void check_neck(const ClusterTree& tree, const NeckSpec& spec) {
    if (!(spec.r_scale > 0.0)) throw ConfigError("neck: r must be positive");
    if (!(spec.rho_inner >= 0.0)) throw ConfigError("neck: rho must be non-negative");
    const auto sat = scaled_satellites(tree, spec.level, spec.r_scale);
    if (sat.empty()) {
        if (!(spec.nu > 0.0)) throw ConfigError("neck: violates 0 < nu");
        if (!(spec.R > 0.0)) throw ConfigError("neck: violates R > 0");
    } else {
        const double lim = min_satellite_ratio(sat) / 10.0;
        if (!(spec.nu > 0.0 && spec.nu < lim))
            throw ConfigError("neck: violates 0 < nu < (1/10) min{|x_i|, |x_i - x_j|} = " + format_double(lim));
        const double need = 3.0 * max_satellite_ratio(sat);
        if (!(spec.R > need)) throw ConfigError("neck: violates 3 max |x_i| < R with 3 max |x_i| = " + format_double(need));
    }
    if (!(2.0 * spec.rho_inner < spec.R * spec.r_scale))
        throw ConfigError("neck: violates 2 rho < R r");
}

BallMinusBalls neck_region(const ClusterTree& tree, const NeckSpec& spec) {
    check_neck(tree, spec);
    BallMinusBalls region{Ball{tree.root(), spec.R * spec.r_scale}, {}};
    if (spec.rho_inner > 0.0) region.holes.push_back(Ball{tree.root(), 2.0 * spec.rho_inner});
    if (spec.level > 0)
        for (std::size_t i : tree.groups[spec.level - 1])
            region.holes.push_back(Ball{tree.locations[i], spec.nu * spec.r_scale});
    validate(region);
    return region;
}

MassEstimate neck_energy(const FieldOracle& field, const ClusterTree& tree, const NeckSpec& spec,
                         const MassOptions& opts) {
    return mass(field, neck_region(tree, spec), nullptr, opts);
}

double neck_decay(const FieldOracle& field, const Point4& center, double s_min, double s_max) {
    if (!(s_min > 0.0 && s_max > s_min)) throw ConfigError("neck_decay: need 0 < s_min < s_max");
    if (!field.domain().encloses(Ball{center, s_max}, 1e-12)) throw DomainError("neck_decay: annulus escapes the domain");
    std::vector<Point4> dirs;
    for (std::size_t i = 0; i < 4; ++i) {
        dirs.push_back(Point4::axis(i, 1.0));
        dirs.push_back(Point4::axis(i, -1.0));
    }
    for (int s = 0; s < 16; ++s)
        dirs.push_back(Point4(s & 1 ? 0.5 : -0.5, s & 2 ? 0.5 : -0.5, s & 4 ? 0.5 : -0.5, s & 8 ? 0.5 : -0.5));
    constexpr int n = 32;
    double total = 0.0;
    for (const auto& d : dirs) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int j = 0; j < n; ++j) {
            const double t = std::log(s_min) + (std::log(s_max) - std::log(s_min)) * j / (n - 1);
            const double y = field.u(center + std::exp(t) * d);
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
        }
        total += (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }
    return total / static_cast<double>(dirs.size());
}

HarnackResult harnack_ratio(const FieldOracle& field, const Point4& center, double r, std::span<const Ball> holes,
                            double C) {
    if (!(r > 0.0)) throw GeometryError("harnack_ratio: radius must be positive");
    const auto dirs = sphere_directions();
    auto in_hole = [&](const Point4& x, const Ball* skip) {
        for (const auto& h : holes)
            if (&h != skip && distance(x, h.center) < h.radius) return true;
        return false;
    };
    HarnackResult res;
    res.sup = -std::numeric_limits<double>::infinity();
    res.inf = std::numeric_limits<double>::infinity();
    auto take = [&](const Point4& x) {
        const double v = field.u(x);
        res.sup = std::max(res.sup, v);
        res.inf = std::min(res.inf, v);
        ++res.samples;
    };
    for (const auto& d : dirs) {
        const Point4 x = center + r * d;
        if (!in_hole(x, nullptr)) take(x);
    }
    for (const auto& h : holes) {
        for (const auto& d : dirs) {
            const Point4 x = h.center + h.radius * d;
            if (distance(x, center) < r && !in_hole(x, &h)) take(x);
        }
    }
    if (res.samples == 0) throw GeometryError("harnack_ratio: boundary set is empty");
    // beta (sup + ln r) <= inf + ln r + C, linear in beta.
    const double a = res.sup + std::log(r);
    const double b = res.inf + std::log(r) + C;
    const double slack = 1e-12 * std::max({std::abs(a), std::abs(b), 1.0});
    double beta;
    if (a <= b + slack) {
        beta = 1.0;
    } else if (a > 0.0) {
        beta = b / a;
    } else {
        beta = std::numeric_limits<double>::quiet_NaN();
    }
    res.beta = beta > 0.0 ? beta : std::numeric_limits<double>::quiet_NaN();
    return res;
}

TrendTest trend_test(std::span<const double> values) {
    TrendTest t;
    const std::size_t n = values.size();
    if (n == 0) return t;
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    if (scale <= 1e-9) {
        t.bounded = true;
        return t;
    }
    bool nondecreasing = true;
    for (std::size_t i = 1; i < n; ++i)
        if (values[i] < values[i - 1]) nondecreasing = false;
    t.divergent = n >= 2 && nondecreasing && values.back() > 4.0 * values.front();
    if (n < 3) {
        t.bounded = !t.divergent;
        return t;
    }
    const std::size_t third = n / 3;
    const std::size_t mid_lo = third, mid_hi = n - third;
    std::vector<double> middle(values.begin() + mid_lo, values.begin() + mid_hi);
    const double med = median(middle);
    t.bounded = true;
    for (std::size_t i = mid_hi; i < n; ++i)
        if (std::abs(values[i] - med) > 0.5 * std::abs(med) + 1e-9 * scale) t.bounded = false;
    return t;
}

std::string to_string(Regime r) {
    return r == Regime::TheoremApplies ? "theorem-applies" : "hypothesis-violated";
}

int QuantizationReport::total_verdict() const { return std::accumulate(verdict.begin(), verdict.end(), 0); }

QuantizationReport quantize(std::span<const FieldOracle> family, const Region& omega0, const QuantizeConfig& config) {
    if (family.empty()) throw ConfigError("quantize: empty family");
    validate(omega0);
    const double Q = constants::quantum;
    QuantizationReport rep;
    for (std::size_t j = 0; j < family.size(); ++j)
        rep.k_values.push_back(family[j].family_index().value_or(static_cast<int>(j)));

    const FieldOracle& last = family.back();
    rep.detection = find_peaks(last, config.detector);
    if (!rep.detection.complete) rep.warnings.push_back("detection incomplete: weighted sup bound still violated");
    const auto& pts = rep.detection.points;
    const std::size_t n = pts.size();

    // Limit-point clusters by single linkage.
    const double link = config.cluster_radius.value_or(0.25 * rep.detection.search_domain.radius);
    std::vector<std::size_t> label(n);
    std::iota(label.begin(), label.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
        return label[i] == i ? i : label[i] = find(label[i]);
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (distance(pts[i].location, pts[j].location) <= link) label[find(i)] = find(j);
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::size_t> seen;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        auto it = std::find(seen.begin(), seen.end(), r);
        if (it == seen.end()) {
            seen.push_back(r);
            clusters.push_back({i});
        } else {
            clusters[static_cast<std::size_t>(it - seen.begin())].push_back(i);
        }
    }

    for (const auto& members : clusters) {
        ClusterReport cr;
        cr.members = members;
        std::vector<ConcentrationPoint> cp;
        for (std::size_t i : members) cp.push_back(pts[i]);
        cr.tree = cluster_scales(cp, config.ratio_threshold);
        const auto& tree = cr.tree;
        const Point4 root = tree.root();
        const double mu = tree.mus[tree.root_index];

        // Isolation radius: half the distance to other clusters, capped by the domain.
        double iso = last.domain().radius - distance(root, last.domain().center);
        for (std::size_t i = 0; i < n; ++i)
            if (std::find(members.begin(), members.end(), i) == members.end())
                iso = std::min(iso, 0.5 * distance(root, pts[i].location));
        iso *= 1.0 - 1e-9;

        // Outermost member distance up to each level.
        std::vector<double> reach(tree.levels() + 1, 0.0);
        for (std::size_t q = 1; q <= tree.levels(); ++q) {
            reach[q] = reach[q - 1];
            for (std::size_t i : tree.groups[q - 1]) reach[q] = std::max(reach[q], distance(root, tree.locations[i]));
        }
        const std::size_t q0 = tree.levels();
        int count = 1;
        for (std::size_t q = 0; q <= q0; ++q) {
            if (q > 0) count += static_cast<int>(tree.groups[q - 1].size());
            double radius;
            if (q == q0) {
                radius = iso;
            } else if (q == 0) {
                const double next = tree.scales[0];
                radius = std::min(std::max(std::sqrt(mu * next), 50.0 * mu), 0.5 * next);
            } else {
                radius = std::sqrt(reach[q] * tree.scales[q]);
            }
            cr.level_radii.push_back(radius);
            cr.level_masses.push_back(mass(last, Ball{root, radius}, nullptr, config.mass));
            cr.level_expected.push_back(count);
        }
        cr.mass = cr.level_masses.back();
        cr.n = static_cast<int>(std::lround(cr.mass.value / Q));
        cr.deviation = std::abs(cr.mass.value - Q * cr.n) / Q;
        cr.warning = cr.deviation > config.warn_deviation;
        if (cr.warning)
            rep.warnings.push_back("cluster mass deviates from a quantum multiple by " + format_double(cr.deviation));

        // Necks between consecutive scale levels.
        double rho = config.rtilde * mu;
        double prev_outer = 0.0;
        for (std::size_t q = (q0 == 0 ? 0 : 1); q <= q0; ++q) {
            const double limit = q == q0 ? iso : 0.5 * tree.scales[q];
            if (q >= 2) rho = 3.0 * prev_outer;
            NeckSpec spec = default_neck(tree, q, rho, limit);
            if (q > 0) {
                // Keep the inner cutoff clear of this level's satellite holes.
                const double gap = (reach[q] > 0 ? [&] {
                    double g = std::numeric_limits<double>::infinity();
                    for (std::size_t i : tree.groups[q - 1])
                        g = std::min(g, distance(root, tree.locations[i]) - spec.nu * spec.r_scale);
                    return g;
                }()
                                                 : limit);
                if (2.0 * spec.rho_inner >= 0.5 * gap) {
                    spec.rho_inner = 0.25 * gap;
                    rep.warnings.push_back("neck inner cutoff reduced at level " + std::to_string(q));
                }
            }
            try {
                cr.neck_energies.push_back(neck_energy(last, tree, spec, config.mass));
                cr.necks.push_back(spec);
            } catch (const ConfigError& e) {
                rep.warnings.push_back(std::string("neck skipped: ") + e.what());
            } catch (const GeometryError& e) {
                rep.warnings.push_back(std::string("neck skipped: ") + e.what());
            }
            prev_outer = spec.R * spec.r_scale;
        }

        rep.per_cluster_mass.push_back(cr.mass);
        rep.verdict.push_back(cr.n);
        rep.deviation.push_back(cr.deviation);
        for (const auto& e : cr.neck_energies) rep.neck_energies.push_back(e);
        rep.clusters.push_back(std::move(cr));
    }

    for (const auto& f : family) {
        rep.lap_l1_omega0.push_back(laplacian_l1(f, omega0, LaplacianPart::Full, config.mass).value);
        rep.lap_negpart_l1.push_back(
            laplacian_l1(f, Region{f.domain()}, LaplacianPart::NegativePart, config.mass).value);
    }
    rep.lap_trend = trend_test(rep.lap_l1_omega0);
    rep.negpart_trend = trend_test(rep.lap_negpart_l1);
    rep.regime = rep.lap_trend.bounded && rep.negpart_trend.bounded ? Regime::TheoremApplies
                                                                    : Regime::HypothesisViolated;
    if (config.probe_ball) rep.probe_mass = mass(last, *config.probe_ball, nullptr, config.mass);
    return rep;
}

std::string summary_csv(const QuantizationReport& report) {
    std::ostringstream os;
    os << "cluster,mass,abs_error,n,deviation,regime\n";
    for (std::size_t i = 0; i < report.clusters.size(); ++i) {
        const auto& c = report.clusters[i];
        os << i << ',' << format_double(c.mass.value) << ',' << format_double(c.mass.abs_error) << ',' << c.n << ','
           << format_double(c.deviation) << ',' << to_string(report.regime) << '\n';
    }
    return os.str();
}

}  // namespace bubblelab
