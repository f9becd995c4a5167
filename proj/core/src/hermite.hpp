#pragma once

namespace bubblelab::detail {

// Quintic Hermite interpolant on [x0, x0 + h] at t = (x - x0)/h from values, first and
// second derivatives at both ends. Returns the value and first derivative.
struct Hermite5 {
    double v, d;
};

inline Hermite5 hermite5(double t, double h, double y0, double d0, double s0, double y1, double d1,
                  double s1) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double H3 = 10 * t3 - 15 * t4 + 6 * t5;
    const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double H5 = 0.5 * (t3 - 2 * t4 + t5);
    const double D0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double D1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double D2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double D3 = 30 * t2 - 60 * t3 + 30 * t4;
    const double D4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double D5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    const double hh = h * h;
    Hermite5 out;
    out.v = y0 * H0 + h * d0 * H1 + hh * s0 * H2 + y1 * H3 + h * d1 * H4 + hh * s1 * H5;
    out.d = (y0 * D0 + h * d0 * D1 + hh * s0 * D2 + y1 * D3 + h * d1 * D4 + hh * s1 * D5) / h;
    return out;
}

}  // namespace bubblelab::detail
