#pragma once

#include <array>
#include <functional>

namespace pltrap {

using Pt = std::array<double, 3>;

// Adaptive Gauss-Kronrod 7-15 on [a,b]. Stops when the local error estimate
// is below max(abs_tol, rel_tol*|result|) distributed over subintervals.
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-9, double abs_tol = 0.0, int max_depth = 40);

// Nested adaptive integration of f over an axis-aligned box [lo,hi]^d.
double integrate_box(const std::function<double(const Pt&)>& f, const Pt& lo, const Pt& hi,
                     int d, double rel_tol = 1e-9, double abs_tol = 0.0);

} // namespace pltrap
