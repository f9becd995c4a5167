#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubblelab/bubble_detector.hpp"
#include "bubblelab/field_model.hpp"

namespace bubblelab {

/// Scale hierarchy around a root point: r_1 < r_2 < ... with groups I_1, I_2, ...
/// Indices refer to the point list passed to cluster_scales.
struct ClusterTree {
    std::size_t root_index = 0;
    std::vector<double> scales;
    std::vector<std::vector<std::size_t>> groups;
    double ratio_threshold = 10.0;
    std::vector<Point4> locations;
    std::vector<double> mus;

    std::size_t levels() const { return scales.size(); }
    const Point4& root() const { return locations[root_index]; }
};

/// Root is the higher peak of the closest pair (lower index on ties); then
/// r_{q+1} = min distance from the root to unassigned points and I_{q+1} = unassigned points
/// within T r_{q+1}.
ClusterTree cluster_scales(std::span<const ConcentrationPoint> points, double ratio_threshold);

/// Neck D = B_{R r}(x) minus B_{nu r}(x_i) for the satellites of `level`, minus B_{2 rho}(x).
/// level 0 means no satellites.
struct NeckSpec {
    double nu = 0.05;
    double R = 2.0;
    double r_scale = 1.0;
    double rho_inner = 0.0;
    std::size_t level = 0;
};

/// Defaults centred in the admissible windows: nu = (1/20) min satellite ratio,
/// R = 6 max satellite ratio (2 without satellites), R capped by `outer_limit` / r.
NeckSpec default_neck(const ClusterTree& tree, std::size_t level, double rho_inner, double outer_limit);

/// Throws ConfigError naming the violated inequality.
void check_neck(const ClusterTree& tree, const NeckSpec& spec);
BallMinusBalls neck_region(const ClusterTree& tree, const NeckSpec& spec);

MassEstimate neck_energy(const FieldOracle& field, const ClusterTree& tree, const NeckSpec& spec,
                         const MassOptions& opts = {});

/// Least-squares slope of u against ln s along 24 rays, averaged over the rays.
double neck_decay(const FieldOracle& field, const Point4& center, double s_min, double s_max);

struct HarnackResult {
    double sup = 0.0;
    double inf = 0.0;
    /// Largest beta in (0, 1] with beta sup <= inf + (1 - beta) ln r + C; NaN when none.
    double beta = 0.0;
    std::size_t samples = 0;
};

HarnackResult harnack_ratio(const FieldOracle& field, const Point4& center, double r,
                            std::span<const Ball> holes, double C = 0.0);

struct TrendTest {
    bool bounded = false;
    bool divergent = false;
};

/// bounded: every last-third value within 50% of the middle-third median (or all values
/// negligible); divergent: nondecreasing with last/first > 4.
TrendTest trend_test(std::span<const double> values);

enum class Regime { TheoremApplies, HypothesisViolated };
std::string to_string(Regime r);

struct QuantizeConfig {
    DetectorConfig detector{};
    double ratio_threshold = 10.0;
    /// Single-linkage radius grouping detected points into limit-point clusters;
    /// defaults to a quarter of the search-domain radius.
    std::optional<double> cluster_radius;
    /// Innermost neck cutoff rho = rtilde * mu_root.
    double rtilde = 10.0;
    double warn_deviation = 0.1;
    /// Optional ball whose mass (largest k) is reported alongside the clusters.
    std::optional<Ball> probe_ball;
    MassOptions mass{};
};

struct ClusterReport {
    ClusterTree tree;
    /// Members of this cluster as indices into the detection report.
    std::vector<std::size_t> members;
    /// Mass on B_{level_radii[q]}(root) for q = 0..levels; the last entry is the cluster mass.
    std::vector<double> level_radii;
    std::vector<MassEstimate> level_masses;
    std::vector<int> level_expected;
    MassEstimate mass;
    int n = 0;
    double deviation = 0.0;
    bool warning = false;
    std::vector<NeckSpec> necks;
    std::vector<MassEstimate> neck_energies;
};

struct QuantizationReport {
    std::vector<int> k_values;
    DetectionReport detection;
    std::vector<ClusterReport> clusters;
    std::vector<MassEstimate> per_cluster_mass;
    std::vector<int> verdict;
    std::vector<double> deviation;
    std::vector<MassEstimate> neck_energies;
    std::vector<double> lap_l1_omega0;
    std::vector<double> lap_negpart_l1;
    TrendTest lap_trend;
    TrendTest negpart_trend;
    Regime regime = Regime::TheoremApplies;
    std::optional<MassEstimate> probe_mass;
    std::vector<std::string> warnings;

    int total_verdict() const;
};

QuantizationReport quantize(std::span<const FieldOracle> family, const Region& omega0,
                            const QuantizeConfig& config = {});

/// cluster,mass,abs_error,n,deviation,regime
std::string summary_csv(const QuantizationReport& report);

}  // namespace bubblelab
