#pragma once

namespace bpa {

/// Digamma function psi(x) for x > 0.
double digamma(double x);

/// Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0.
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Upper tail P(X > x) of the chi-squared distribution with df degrees of
/// freedom.
double chi_squared_sf(double x, double df);

/// Two-sided p-value of a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace bpa
