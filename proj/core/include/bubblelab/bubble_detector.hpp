#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bubblelab/field_model.hpp"

namespace bubblelab {

struct ConcentrationPoint {
    Point4 location;
    /// exp(-peak_value).
    double mu = 1.0;
    double peak_value = 0.0;
    double bubble_residual = 0.0;
    MassEstimate local_mass;
    /// Radius of the ball behind local_mass.
    double mass_radius = 0.0;
};

/// Builds a point from a location, filling mu and peak_value from the field.
ConcentrationPoint make_point(const FieldOracle& field, const Point4& location);

struct DetectorConfig {
    double weighted_sup_threshold = 10.0;
    double lap_threshold = 100.0;
    int max_points = 8;
    int refinement_levels = 4;
    double fit_radius = 10.0;
    /// Search domain; defaults to the field domain. Shrunk by `domain_shrink` either way.
    std::optional<Ball> domain;
    double domain_shrink = 0.1;
    int grid_per_axis = 9;
    int multistart = 8;
    int soundness_probes = 10000;
    std::uint64_t seed = 0x5eed5eedULL;
    MassOptions mass{};

    void validate() const;
};

struct DetectionReport {
    std::vector<ConcentrationPoint> points;
    double sup_weighted_u = 0.0;
    double sup_weighted_lap = 0.0;
    double min_separation_ratio = std::numeric_limits<double>::infinity();
    /// False when max_points was reached with the weighted bound still violated.
    bool complete = true;
    /// Number of candidate points removed by merging.
    int merged = 0;
    Ball search_domain;
};

/// Peak extraction: argmax of u, then repeated argmax of (min_i |x - x_i|) e^u while that
/// sup exceeds the threshold.
DetectionReport find_peaks(const FieldOracle& field, const DetectorConfig& config = {});

struct FitResult {
    double residual = 0.0;
    double fit_radius = 0.0;
    /// True when the fit ball was shrunk to stay inside the field domain.
    bool shrunk = false;
};

/// sup over a probe grid of B_{R_fit}(0) of |u(x0 + mu y) + ln mu - U0(y)|.
FitResult bubble_fit(const FieldOracle& field, const ConcentrationPoint& point, double fit_radius);

/// min_{i != j} |x_i - x_j| / mu_i; +infinity for fewer than two points, 0 for coincident points.
double separation(std::span<const ConcentrationPoint> points);

struct S0Candidate {
    Point4 location;
    /// masses[d][j]: mass of member j on B_{radii[d]}(location).
    std::vector<std::vector<double>> masses;
    double proxy = 0.0;
    bool in_s0 = false;
};

struct S0Report {
    std::vector<double> radii;
    std::vector<int> k_values;
    int k_half = 0;
    double tolerance = 0.05;
    std::vector<S0Candidate> candidates;
};

/// Finite (delta, k) table standing in for the double liminf. Candidates are the peaks of
/// the last member plus `extra`; proxy = min over delta of min over k >= k_half of mass.
S0Report s0_estimate(std::span<const FieldOracle> family, std::span<const double> radii,
                     std::span<const int> k_values, const DetectorConfig& config = {},
                     std::span<const Point4> extra = {}, double tolerance = 0.05);

/// index,x1,x2,x3,x4,mu,peak,residual,mass
std::string points_csv(std::span<const ConcentrationPoint> points);

}  // namespace bubblelab
