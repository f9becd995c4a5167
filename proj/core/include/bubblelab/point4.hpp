#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace bubblelab {

/// A point (or displacement) in R^4.
struct Point4 {
    std::array<double, 4> x{0.0, 0.0, 0.0, 0.0};

    constexpr Point4() = default;
    constexpr Point4(double a, double b, double c, double d) : x{a, b, c, d} {}

    static constexpr Point4 axis(std::size_t i, double length = 1.0) {
        Point4 p;
        p.x[i] = length;
        return p;
    }

    constexpr double& operator[](std::size_t i) { return x[i]; }
    constexpr double operator[](std::size_t i) const { return x[i]; }

    constexpr Point4& operator+=(const Point4& o) {
        for (std::size_t i = 0; i < 4; ++i) x[i] += o.x[i];
        return *this;
    }
    constexpr Point4& operator-=(const Point4& o) {
        for (std::size_t i = 0; i < 4; ++i) x[i] -= o.x[i];
        return *this;
    }
    constexpr Point4& operator*=(double s) {
        for (auto& v : x) v *= s;
        return *this;
    }

    friend constexpr Point4 operator+(Point4 a, const Point4& b) { return a += b; }
    friend constexpr Point4 operator-(Point4 a, const Point4& b) { return a -= b; }
    friend constexpr Point4 operator*(Point4 a, double s) { return a *= s; }
    friend constexpr Point4 operator*(double s, Point4 a) { return a *= s; }
    friend constexpr Point4 operator-(Point4 a) { return a *= -1.0; }
    friend constexpr bool operator==(const Point4&, const Point4&) = default;

    constexpr double norm2() const { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }
    double norm() const { return std::sqrt(norm2()); }

    bool finite() const {
        for (double v : x)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

constexpr double dot(const Point4& a, const Point4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline double distance(const Point4& a, const Point4& b) { return (a - b).norm(); }

/// Closed ball B_radius(center) in R^4.
struct Ball {
    Point4 center{};
    double radius = 1.0;

    bool contains(const Point4& p) const { return distance(p, center) < radius; }
    /// True when `inner` lies inside this ball (closure allowed to touch within `slack`).
    bool encloses(const Ball& inner, double slack = 0.0) const {
        return distance(inner.center, center) + inner.radius <= radius * (1.0 + slack);
    }
};

namespace constants {
inline constexpr double pi = 3.14159265358979323846264338327950288;
inline constexpr double pi2 = pi * pi;
/// Mass of one standard bubble, 16 pi^2.
inline constexpr double quantum = 16.0 * pi2;
/// sqrt(96)
inline const double sqrt96 = std::sqrt(96.0);
/// Laplacian of the standard bubble at its peak, 8/sqrt(96) = 2/sqrt(6).
inline const double beta_star = 2.0 / std::sqrt(6.0);
/// Volume of the unit ball in R^4.
inline constexpr double unit_ball_volume = pi2 / 2.0;
/// Area of the unit sphere S^3.
inline constexpr double unit_sphere_area = 2.0 * pi2;
}  // namespace constants

}  // namespace bubblelab
