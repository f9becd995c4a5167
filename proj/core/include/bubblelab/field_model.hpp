#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bubblelab/point4.hpp"
#include "bubblelab/quadrature.hpp"
#include "bubblelab/radial_engine.hpp"

namespace bubblelab {

using ScalarField = std::function<double(const Point4&)>;

/// Where a field concentrates: used to centre quadrature shells.
struct ScaleHint {
    Point4 center;
    double scale = 1.0;
};

/// Immutable evaluator of a scalar field u on R^4 and its Laplacian (minus-sign
/// convention) on a domain ball. Evaluation outside the closed domain throws DomainError.
class FieldOracle {
public:
    FieldOracle(std::string kind, ScalarField u, ScalarField lap, Ball domain,
                std::vector<ScaleHint> hints = {}, std::optional<int> family_index = {},
                bool analytic_laplacian = true);

    double u(const Point4& x) const;
    double lap(const Point4& x) const;

    /// Unchecked evaluation, for callers that already validated the point.
    double u_unchecked(const Point4& x) const { return u_(x); }
    double lap_unchecked(const Point4& x) const { return lap_(x); }

    const Ball& domain() const { return domain_; }
    std::span<const ScaleHint> hints() const { return hints_; }
    std::optional<int> family_index() const { return family_index_; }
    const std::string& kind() const { return kind_; }
    bool analytic_laplacian() const { return analytic_; }
    bool in_domain(const Point4& x) const;

    FieldOracle with_family_index(int k) const;
    FieldOracle with_domain(const Ball& b) const;

private:
    std::string kind_;
    ScalarField u_;
    ScalarField lap_;
    Ball domain_;
    std::vector<ScaleHint> hints_;
    std::optional<int> family_index_;
    bool analytic_;
};

/// Standard bubble U0(x) = ln(sqrt96 / (sqrt96 + |x|^2)).
double bubble(const Point4& x);

/// The standard bubble as an oracle on a centred ball.
FieldOracle bubble_field(double domain_radius = 1e4);

/// x -> u(center + mu x) + ln mu, Laplacian scaled by mu^2, domain mapped accordingly.
FieldOracle rescale(const FieldOracle& field, const Point4& center, double mu);

/// f_mu(x) = ln(sqrt96 mu / (sqrt96 mu^2 + |x - center|^2)), an exact solution with V = 1.
FieldOracle gen_fk(double mu, double domain_radius = 10.0, const Point4& center = {});

/// g_k(x) = v(k|x|) + ln k for a radial solution v; domain radius r_max(v)/k.
FieldOracle gen_gk(std::shared_ptr<const RadialSolution> v, int k);

/// A radial solution embedded about `center` (g_1 when centred at 0).
FieldOracle radial_field(std::shared_ptr<const RadialSolution> v, const Point4& center = {});

enum class LaplacianMode { FiniteDifference, Analytic };

/// u = (1/4) ln sum_i e^{4 f_{mu_i}(x - c_i)}; total mass 16 pi^2 N over R^4.
/// FiniteDifference mode steps by 2e-3 of the local length scale min_i sqrt(mu_i^2 + |x - c_i|^2).
FieldOracle gen_multibubble(std::span<const Point4> centers, std::span<const double> scales,
                            double domain_radius = 10.0,
                            LaplacianMode mode = LaplacianMode::FiniteDifference);

/// Exact Laplacian of the multibubble log-sum-exp (test oracle and Analytic mode).
double multibubble_laplacian(std::span<const Point4> centers, std::span<const double> scales,
                             const Point4& x);

/// Central second-order FD Laplacian over the 4 axes with the minus-sign convention.
double fd_laplacian(const ScalarField& f, const Point4& x, double h);

// Regions --------------------------------------------------------------------

struct Annulus {
    Point4 center;
    double r_in = 0.0;
    double r_out = 1.0;
};

/// Outer ball minus disjoint interior holes.
struct BallMinusBalls {
    Ball outer;
    std::vector<Ball> holes;
};

using Region = std::variant<Ball, Annulus, BallMinusBalls>;

std::string describe(const Region& region);
/// Throws GeometryError when holes overlap or leave the outer ball.
void validate(const Region& region);

using Potential = std::function<double(const Point4&)>;

/// V(x) = 1 + eps cos(<a, x>).
Potential cosine_potential(double eps, const Point4& a);

struct MassEstimate {
    double value = 0.0;
    double abs_error = 0.0;
    std::string method;
    std::size_t samples = 0;
};

struct MassOptions {
    quad::ShellOptions shells{};
    /// Cut off off-centre pieces before the boundary (see integrate_region).
    bool compact_partition = false;
};

/// int_region V e^{4u} dx.
MassEstimate mass(const FieldOracle& field, const Region& region, const Potential* V = nullptr,
                  const MassOptions& opts = {});

enum class LaplacianPart { Full, NegativePart };

/// int_region |Delta u| dx or int_region (Delta u)_- dx.
MassEstimate laplacian_l1(const FieldOracle& field, const Region& region, LaplacianPart part,
                          const MassOptions& opts = {});

/// Integrates an arbitrary integrand over a region of the field's domain with shells
/// centred on the field's scale hints and the region centre (Shepard partition of unity).
MassEstimate integrate_region(const FieldOracle& field, const Region& region,
                              const ScalarField& integrand, const MassOptions& opts = {});

// Families --------------------------------------------------------------------

/// Serializable description of a k-indexed family.
struct FamilySpec {
    std::string type = "fk";  ///< fk | gk | multibubble | radial
    double domain_radius = 4.0;
    std::vector<int> k_values;
    /// fk and multibubble: scale(k) = base * ratio^k.
    double mu0 = 1.0;
    double ratio = 0.5;
    /// gk and radial: profile chosen by beta, or by a target mass alpha.
    std::optional<double> beta;
    std::optional<double> alpha;
    double r_max = 1e4;
    /// multibubble
    std::vector<Point4> centers;
    std::vector<double> scales;
    LaplacianMode laplacian = LaplacianMode::FiniteDifference;
};

/// Radial profile selected by a gk/radial spec (resolving alpha through the beta search).
std::shared_ptr<const RadialSolution> family_profile(const FamilySpec& spec);

FieldOracle build_member(const FamilySpec& spec, int k,
                         std::shared_ptr<const RadialSolution> profile = nullptr);
std::vector<FieldOracle> build_family(const FamilySpec& spec);

}  // namespace bubblelab
