#pragma once

namespace rmtl {

/// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
double gamma_p(double a, double x);

/// Chi-squared CDF with df >= 1 degrees of freedom; 0 for x <= 0.
double chi2_cdf(int df, double x);

/// Chi-squared quantile; throws std::domain_error unless 0 < p < 1.
double chi2_quantile(int df, double p);

/// Standard normal quantile; throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace rmtl
