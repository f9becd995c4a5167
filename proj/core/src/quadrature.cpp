#include "bubblelab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>
#include <random>

#include "bubblelab/errors.hpp"

namespace bubblelab::quad {

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = 2.220446049250313e-16;

}  // namespace

std::array<double, 15> kronrod15_nodes(double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, 15> out{};
    for (int j = 0; j < 7; ++j) {
        out[j] = c - h * kXgk[j];
        out[14 - j] = c + h * kXgk[j];
    }
    out[7] = c;
    return out;
}

Estimate combine_kronrod15(std::span<const double, 15> v, double a, double b) {
    const double h = 0.5 * (b - a);
    const double fc = v[7];
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    double resabs = std::abs(resk);
    for (int j = 0; j < 7; ++j) {
        const double s = v[j] + v[14 - j];
        resk += kWgk[j] * s;
        resabs += kWgk[j] * (std::abs(v[j]) + std::abs(v[14 - j]));
        if (j % 2 == 1) resg += kWg[j / 2] * s;
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += kWgk[j] * (std::abs(v[j] - reskh) + std::abs(v[14 - j] - reskh));

    Estimate e;
    e.value = resk * h;
    resabs *= std::abs(h);
    resasc *= std::abs(h);
    double err = std::abs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
        err = std::max(kEps * 50.0 * resabs, err);
    e.abs_error = err;
    e.samples = 15;
    return e;
}

Estimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b) {
    const auto x = kronrod15_nodes(a, b);
    std::array<double, 15> v{};
    for (int j = 0; j < 15; ++j) v[j] = f(x[j]);
    return combine_kronrod15(v, a, b);
}

Estimate integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                            double rel_tol, double abs_tol, int max_panels) {
    if (a == b) return {};
    struct Panel {
        double a, b;
        Estimate e;
        bool operator<(const Panel& o) const { return e.abs_error < o.e.abs_error; }
    };
    std::priority_queue<Panel> heap;
    Estimate total;
    auto first = gauss_kronrod15(f, a, b);
    heap.push({a, b, first});
    total = first;
    int panels = 1;
    while (panels < max_panels) {
        if (total.abs_error <= std::max(abs_tol, rel_tol * std::abs(total.value))) break;
        Panel p = heap.top();
        heap.pop();
        const double m = 0.5 * (p.a + p.b);
        if (m <= p.a || m >= p.b) {
            heap.push(p);
            break;
        }
        auto l = gauss_kronrod15(f, p.a, m);
        auto r = gauss_kronrod15(f, m, p.b);
        total.value += l.value + r.value - p.e.value;
        total.abs_error += l.abs_error + r.abs_error - p.e.abs_error;
        total.samples += 30;
        heap.push({p.a, m, l});
        heap.push({m, p.b, r});
        ++panels;
    }
    // Re-sum to shed accumulated cancellation from incremental updates.
    Estimate resum;
    resum.samples = total.samples;
    while (!heap.empty()) {
        resum.value += heap.top().e.value;
        resum.abs_error += heap.top().e.abs_error;
        heap.pop();
    }
    return resum;
}

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw ConfigError("gauss_legendre: n must be positive");
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    if (n == 1) {
        gl.nodes[0] = 0.0;
        gl.weights[0] = 2.0;
    }
    return cache.emplace(n, std::move(gl)).first->second;
}

Point4 hopf_point(double t, double phi1, double phi2) {
    const double a = std::sqrt(std::max(0.0, t));
    const double b = std::sqrt(std::max(0.0, 1.0 - t));
    return {a * std::cos(phi1), a * std::sin(phi1), b * std::cos(phi2), b * std::sin(phi2)};
}

AngularRule AngularRule::stratified(int strata_per_axis) {
    if (strata_per_axis < 1) throw ConfigError("stratified rule needs at least one stratum per axis");
    return AngularRule(Kind::Stratified, strata_per_axis);
}

AngularRule AngularRule::product(int n) {
    if (n < 1) throw ConfigError("product rule needs n >= 1");
    AngularRule r(Kind::Product, n);
    const auto& gl = gauss_legendre(n);
    const int nphi = 2 * n;
    r.weights_.reserve(static_cast<std::size_t>(n) * nphi * nphi);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nphi * nphi; ++j)
            r.weights_.push_back(0.5 * gl.weights[i] / (nphi * nphi));
    return r;
}

std::size_t AngularRule::size() const {
    const auto n = static_cast<std::size_t>(n_);
    return kind_ == Kind::Stratified ? 2 * n * n * n : n * (2 * n) * (2 * n);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void AngularRule::directions(std::uint64_t seed, std::vector<Point4>& out) const {
    out.clear();
    out.reserve(size());
    constexpr double two_pi = 2.0 * constants::pi;
    if (kind_ == Kind::Stratified) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double inv = 1.0 / n_;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                for (int k = 0; k < n_; ++k) {
                    const double t = (i + unit(rng)) * inv;
                    const double p1 = (j + unit(rng)) * inv * two_pi;
                    const double p2 = (k + unit(rng)) * inv * two_pi;
                    const Point4 p = hopf_point(t, p1, p2);
                    out.push_back(p);
                    out.push_back(-p);
                }
        return;
    }
    const auto& gl = gauss_legendre(n_);
    const int nphi = 2 * n_;
    for (int i = 0; i < n_; ++i) {
        const double t = 0.5 * (gl.nodes[i] + 1.0);
        for (int j = 0; j < nphi; ++j)
            for (int k = 0; k < nphi; ++k)
                out.push_back(hopf_point(t, two_pi * (j + 0.5) / nphi, two_pi * (k + 0.25) / nphi));
    }
}

AngularRule::Mean AngularRule::reduce(std::span<const double> v) const {
    Mean m;
    if (kind_ == Kind::Product) {
        for (std::size_t i = 0; i < v.size(); ++i) m.mean += weights_[i] * v[i];
        return m;
    }
    const std::size_t strata = v.size() / 2;
    double sum = 0.0;
    double collapsed = 0.0;
    double prev = 0.0;
    for (std::size_t s = 0; s < strata; ++s) {
        const double pair = 0.5 * (v[2 * s] + v[2 * s + 1]);
        sum += pair;
        if (s % 2 == 1) {
            const double d = pair - prev;
            collapsed += d * d;
        }
        prev = pair;
    }
    m.mean = sum / static_cast<double>(strata);
    m.variance = collapsed / (static_cast<double>(strata) * static_cast<double>(strata));
    return m;
}

Estimate integrate_shells(const Point4& center, double r_lo, double r_hi, double scale,
                          const std::function<double(const Point4&)>& g, const ShellOptions& opts,
                          std::span<const double> breakpoints) {
    Estimate total;
    if (!(r_hi > r_lo)) return total;
    if (r_lo < 0.0) throw ConfigError("integrate_shells: negative inner radius");

    std::vector<double> edges{r_lo, r_hi};
    for (double b : breakpoints)
        if (b > r_lo && b < r_hi) edges.push_back(b);
    const double ratio = std::pow(10.0, 1.0 / std::max(1, opts.panels_per_decade));
    double s = std::max(scale * opts.inner_fraction, r_hi * 1e-14);
    while (s < r_hi) {
        if (s > r_lo) edges.push_back(s);
        s *= ratio;
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [&](double a, double b) { return std::abs(a - b) <= 1e-14 * r_hi; }),
                edges.end());

    const AngularRule rule = opts.product_rule ? AngularRule::product(opts.product_n)
                                               : AngularRule::stratified(opts.strata);
    std::vector<Point4> dirs;
    std::vector<double> vals;
    double mc_variance = 0.0;
    std::uint64_t shell = 0;
    constexpr double area = constants::unit_sphere_area;

    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p];
        const double b = edges[p + 1];
        const auto nodes = kronrod15_nodes(a, b);
        std::array<double, 15> radial{};
        std::array<double, 15> var{};
        for (int j = 0; j < 15; ++j) {
            const double rho = nodes[j];
            rule.directions(mix_seed(opts.seed, shell++), dirs);
            vals.resize(dirs.size());
            for (std::size_t d = 0; d < dirs.size(); ++d) vals[d] = g(center + rho * dirs[d]);
            const auto m = rule.reduce(vals);
            const double jac = area * rho * rho * rho;
            radial[j] = jac * m.mean;
            var[j] = jac * jac * m.variance;
            total.samples += dirs.size();
        }
        const auto e = combine_kronrod15(radial, a, b);
        total.value += e.value;
        total.abs_error += e.abs_error;
        const double h = 0.5 * (b - a);
        for (int j = 0; j < 15; ++j) {
            const double w = kWgk[j < 7 ? j : (j == 7 ? 7 : 14 - j)] * h;
            mc_variance += w * w * var[j];
        }
    }
    total.abs_error += 2.0 * std::sqrt(mc_variance);
    return total;
}

}  // namespace bubblelab::quad
