#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bubblelab/field_model.hpp"
#include "bubblelab/point4.hpp"
#include "bubblelab/quadrature.hpp"

namespace bubblelab {

/// A ball B_R(c) with R > 0; construction validates.
struct BallSpec {
    Point4 center{};
    double radius = 1.0;

    BallSpec() = default;
    BallSpec(const Point4& c, double r);
    explicit BallSpec(const Ball& b) : BallSpec(b.center, b.radius) {}
    Ball ball() const { return {center, radius}; }
};

/// Dirichlet Green's function of the (minus-sign) Laplacian on the ball, so that
/// Delta_y G(x, y) = delta_x and G = 0 on the boundary. Throws NumericalError for x = y and
/// DomainError unless both points are strictly inside.
double green_dirichlet(const Point4& x, const Point4& y, const BallSpec& ball);

/// Shell options for kernel quadrature: 8 strata per Hopf axis keeps the stratified
/// estimate near 1e-3 relative.
quad::ShellOptions kernel_shells();

/// Navier Green's function of the bi-Laplacian, H(x,y) = int G(x,z) G(z,y) dz, by shell
/// quadrature centred on x, y and the ball centre.
quad::Estimate green_navier(const Point4& x, const Point4& y, const BallSpec& ball,
                            const quad::ShellOptions& opts = kernel_shells());

using RadialFunction = std::function<double(double)>;

struct RadialSolveOptions {
    /// Uniform panels on [0, R]; `scale` > 0 adds geometric panels from scale/100.
    int panels = 400;
    double scale = 0.0;
    int panels_per_decade = 16;
};

/// Tabulated radial solution of Delta^2 w = f, w = Delta w = 0 on the boundary, with quintic
/// Hermite interpolation of w and of psi = Delta w.
class RadialNavier {
public:
    struct Node {
        double r, w, dw, psi, dpsi, f;
    };
    RadialNavier(BallSpec ball, std::vector<Node> nodes);

    const BallSpec& ball() const { return ball_; }
    const std::vector<Node>& nodes() const { return nodes_; }

    /// Radial evaluation; throws DomainError outside [0, R].
    double w(double r) const;
    double dw(double r) const;
    double lap(double r) const;
    double dlap(double r) const;
    double w_at(const Point4& x) const { return w(distance(x, ball_.center)); }

private:
    std::size_t panel(double r) const;
    BallSpec ball_;
    std::vector<Node> nodes_;
};

/// Two nested radial Dirichlet-Poisson solves phi(r) = int_r^R m(t) t^-3 dt,
/// m(t) = int_0^t f s^3 ds. Throws NumericalError if f is not finite on the grid.
RadialNavier navier_solve_radial(const RadialFunction& f, const BallSpec& ball,
                                 const RadialSolveOptions& opts = {});

struct NavierDecomposition {
    FieldOracle w;
    FieldOracle h;
    /// Max |Delta^2 h| over the probes (finite differences).
    double residual_biharmonic = 0.0;
    /// True when w came from the radial solver; otherwise w is the iterated-kernel
    /// quadrature and the residual uses Delta^2 w = V e^{4u}.
    bool radial = true;
};

struct DecomposeOptions {
    RadialSolveOptions radial{};
    /// Relative spread of u over a probe sphere below which the field counts as radial.
    double radial_tol = 1e-9;
    /// Finite-difference step as a fraction of the ball radius.
    double fd_step = 1e-2;
    int probes = 24;
    quad::ShellOptions shells{};
};

/// u = w + h on the ball with Delta^2 w = V e^{4u}, w = Delta w = 0 on the boundary.
NavierDecomposition decompose(const FieldOracle& field, const BallSpec& ball, const Potential* V = nullptr,
                              const DecomposeOptions& opts = {});

/// int_ball e^{4p|w|} dx for radial w by adaptive radial quadrature. Throws
/// NumericalError with the partial sum when the integral overflows.
quad::Estimate brezis_merle_check(const RadialFunction& w, const BallSpec& ball, double p);

/// Sup and inf of H(c,y) - (1/8 pi^2) ln(1/|y-c|) over probes with |y-c| <= R/2.
struct LogBoundReport {
    double sup = 0.0;
    double inf = 0.0;
    std::vector<double> radii;
    std::vector<double> deviation;
};
LogBoundReport navier_log_bound(const BallSpec& ball, int probes = 12,
                                const quad::ShellOptions& opts = kernel_shells());

/// Probe for kernel tables: x = c + r_x e1, y = c + r_y (cos a e1 + sin a e2).
struct KernelProbe {
    double r_x = 0.0;
    double r_y = 0.0;
    double angle = 0.0;
};
/// CSV with header r_x,r_y,angle,G,H.
std::string kernel_table_csv(const BallSpec& ball, std::span<const KernelProbe> probes,
                             const quad::ShellOptions& opts = kernel_shells());

}  // namespace bubblelab
