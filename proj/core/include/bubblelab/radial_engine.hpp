#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bubblelab {

/// Radial profile sample. `w` is the Laplacian with the minus-sign convention,
/// w = -(u'' + 3u'/r), so the standard bubble has w > 0.
struct RadialState {
    double r = 0.0;
    double u = 0.0;
    double du = 0.0;
    double w = 0.0;
    double dw = 0.0;
};

/// Right-hand side of the first-order system for u'' + 3u'/r = -w, w'' + 3w'/r = -e^{4u}.
/// Requires r > 0. Returns d/dr of (u, du, w, dw).
std::array<double, 4> radial_rhs(const RadialState& s);

enum class Classification { EntireIntegrable, FiniteRadiusBlowup, NonIntegrable };

std::string_view to_string(Classification c);
Classification classification_from_string(std::string_view s);

struct EnergyValue {
    double value = 0.0;
    double abs_error = 0.0;
};

struct ShootOptions {
    double r_max = 1e4;
    double tol = 1e-10;
    /// Radius of the series start.
    double r_start = 1e-4;
    /// Upward overflow guard on u.
    double overflow_guard = 50.0;
    /// Tail-mass ratio (last decade of radii) below which a run counts as integrable.
    double tail_ratio = 1e-3;
    /// Use a fixed step instead of adaptive control (order studies only).
    std::optional<double> fixed_step;
};

/// Solution of the regular radial initial-value problem u(0)=0, u'(0)=0, w(0)=beta, w'(0)=0.
class RadialSolution {
public:
    RadialSolution(double beta, std::vector<RadialState> states, Classification cls,
                   std::optional<double> blowup_radius, double tol = 0.0);

    double beta() const { return beta_; }
    Classification classification() const { return cls_; }
    std::optional<double> blowup_radius() const { return blowup_radius_; }
    const std::vector<RadialState>& states() const { return states_; }
    double r_max() const { return states_.back().r; }
    /// Step tolerance the profile was integrated with (0 when unknown).
    double tol() const { return tol_; }

    /// Quintic Hermite interpolation from (u, u', u'') and (w, w', w'') at the nodes;
    /// the origin node carries the exact limits u''(0) = -beta/4, w''(0) = -1/4.
    /// Throws DomainError outside [0, r_max].
    RadialState at(double r) const;
    double u(double r) const { return at(r).u; }
    double w(double r) const { return at(r).w; }

private:
    double beta_;
    std::vector<RadialState> states_;
    Classification cls_;
    std::optional<double> blowup_radius_;
    double tol_;
};

/// Regular radial shot for Laplacian-at-origin `beta`.
RadialSolution shoot(double beta, double r_max, double tol);
RadialSolution shoot(double beta, const ShootOptions& opts);

/// 2 pi^2 int_0^R e^{4u} r^3 dr with a composite Gauss-Kronrod estimate on the solver steps.
EnergyValue energy_radial(const RadialSolution& sol, double R);

/// Energy up to r_max plus a power-law tail extrapolated from the last node.
EnergyValue energy_total(const RadialSolution& sol);

/// Bracketing bisection on beta -> energy_radial(shoot(beta), r_cut) - alpha.
/// Shots that blow up at finite radius count as infinite mass; a non-integrable
/// classification inside the bracket raises NumericalError naming the beta.
struct BetaSearch {
    double r_cut = 1e3;
    double r_max = 1e4;
    double shoot_tol = 1e-10;
    double root_tol = 1e-10;
    int max_iter = 200;
};
double find_beta_for_energy(double alpha, double beta_lo, double beta_hi, double mass_tol,
                            const BetaSearch& search = {});

/// Minimum of w over the stored nodes.
double laplacian_min(const RadialSolution& sol);

/// Closed-form standard bubble U0(r) = ln(sqrt96/(sqrt96 + r^2)) and its Laplacian.
double bubble_profile(double r);
double bubble_laplacian(double r);
/// Mass of the standard bubble inside B_R: 16 pi^2 (1 - (3T+1)/(1+T)^3), T = R^2/sqrt96.
double bubble_mass(double R);

/// CSV with header r,u,du,w,dw in round-trip precision.
std::string to_csv(const RadialSolution& sol);

}  // namespace bubblelab
