#pragma once

namespace pltrap {

// Lanczos (g=7, n=9) gamma and log-gamma; relative error below 1e-12 on the
// positive axis, which covers the d/theta range this project uses.
double gamma_fn(double x);
double lgamma_fn(double x);

// Regularized incomplete gamma P(a,x) (lower) and Q(a,x)=1-P(a,x) (upper),
// series / continued-fraction split at x = a+1.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Inverse of P(a,.) in x for u in (0,1); bisection + Newton.
double gamma_p_inv(double a, double u);

// Unit-sphere surface area in dimension d
double sphere_area(int d);

} // namespace pltrap
