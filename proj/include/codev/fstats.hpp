#pragma once

namespace codev {

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
/// Continued-fraction evaluation; absolute accuracy target 1e-10.
double regularized_incomplete_beta(double a, double b, double x);

/// Upper-tail probability P(F > f) for an F(df1, df2) variate.
double f_upper_tail(double f, double df1, double df2);

/// Cumulative distribution P(F <= f).
double f_cdf(double f, double df1, double df2);

/// Quantile: the f with f_cdf(f, df1, df2) == p. Supports non-integer
/// degrees of freedom (needed for Satterthwaite approximations).
double f_quantile(double p, double df1, double df2);

}  // namespace codev
