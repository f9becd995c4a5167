#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bubblelab/point4.hpp"

namespace bubblelab::quad {

struct Estimate {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t samples = 0;

    Estimate& operator+=(const Estimate& o) {
        value += o.value;
        abs_error += o.abs_error;
        samples += o.samples;
        return *this;
    }
};

/// One 15-point Gauss-Kronrod panel on [a, b]. The error is the QUADPACK
/// heuristic built from the embedded 7-point Gauss rule.
Estimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b);

/// Abscissae of the 15-point Kronrod rule mapped to [a, b], in the order used by
/// `combine_kronrod15`.
std::array<double, 15> kronrod15_nodes(double a, double b);

/// Combine precomputed integrand values at `kronrod15_nodes(a, b)`.
Estimate combine_kronrod15(std::span<const double, 15> values, double a, double b);

/// Globally adaptive Gauss-Kronrod integration on [a, b].
Estimate integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                            double rel_tol = 1e-12, double abs_tol = 0.0, int max_panels = 2000);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

/// Uniform point on S^3 from Hopf coordinates (t, phi1, phi2), t uniform in [0,1].
Point4 hopf_point(double t, double phi1, double phi2);

/// Angular rule on S^3 returning a mean and the variance of that mean.
///
/// `Stratified` splits the Hopf parameter cube into strata^3 cells with one jittered
/// point per cell plus its antipode. The variance comes from collapsing adjacent strata.
/// `Product` is a deterministic Gauss(t) x trapezoid(phi1) x trapezoid(phi2) rule;
/// it reports zero variance.
class AngularRule {
public:
    enum class Kind { Stratified, Product };

    static AngularRule stratified(int strata_per_axis);
    static AngularRule product(int n);

    Kind kind() const { return kind_; }
    int resolution() const { return n_; }
    std::size_t size() const;

    /// Directions for a given shell; stratified rules draw fresh jitter from `seed`.
    void directions(std::uint64_t seed, std::vector<Point4>& out) const;

    struct Mean {
        double mean = 0.0;
        double variance = 0.0;
    };
    /// Mean of `values` evaluated at `directions(...)`.
    Mean reduce(std::span<const double> values) const;

private:
    AngularRule(Kind k, int n) : kind_(k), n_(n) {}
    Kind kind_;
    int n_;
    std::vector<double> weights_;
};

/// Deterministic 64-bit mixer used to derive per-call and per-shell seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct ShellOptions {
    int panels_per_decade = 6;
    int strata = 4;
    bool product_rule = false;
    int product_n = 8;
    std::uint64_t seed = 0x5eed5eedULL;
    /// Innermost geometric breakpoint as a fraction of the piece scale.
    double inner_fraction = 1e-2;
};

/// Integrates g(center + rho*theta) over rho in [r_lo, r_hi] and theta in S^3 with the
/// volume element 2 pi^2 rho^3 d rho d sigma. Radial panels are geometric from
/// `scale * inner_fraction`; `breakpoints` adds extra panel edges (e.g. where a clipped
/// region boundary begins to cut the shells).
Estimate integrate_shells(const Point4& center, double r_lo, double r_hi, double scale,
                          const std::function<double(const Point4&)>& g,
                          const ShellOptions& opts, std::span<const double> breakpoints = {});

}  // namespace bubblelab::quad
