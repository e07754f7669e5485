#pragma once

namespace citeaudit::stats {

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

// Regularized upper incomplete gamma Q(a, x).
double incomplete_gamma_q(double a, double x);

double chi_square_sf(double x, double dof);
double f_cdf(double x, double d1, double d2);

// Inverse of f_cdf by bisection on the incomplete beta.
double f_quantile(double p, double d1, double d2);

// Upper tail of the standard normal.
double normal_sf(double z);

}  // namespace citeaudit::stats
