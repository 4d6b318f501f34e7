#include "rmtl/distributions.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rmtl {

namespace {

constexpr int kMaxIterations = 500;
const double kEps = std::numeric_limits<double>::epsilon();
const double kTiny = std::numeric_limits<double>::min() / kEps;

// Series representation of P(a, x), for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int i = 0; i < kMaxIterations; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), for x >= a + 1 (modified Lentz).
double gamma_q_contfrac(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) <= kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double chi2_log_pdf(int df, double x) {
  const double a = 0.5 * df;
  return (a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a);
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("gamma_p: requires a > 0");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(int df, double x) {
  if (df < 1) throw std::domain_error("chi2_cdf: requires df >= 1");
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw std::domain_error("chi2_quantile: requires df >= 1");
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("chi2_quantile: requires 0 < p < 1");
  }

  // Wilson-Hilferty starting point.
  const double z = normal_quantile(p);
  const double t = 2.0 / (9.0 * df);
  const double cube = 1.0 - t + z * std::sqrt(t);
  double x = df * cube * cube * cube;
  if (!(x > 0.0)) x = 0.5 * df * std::exp((z - 1.0));

  // Bracket the root, then apply bisection-safeguarded Newton.
  double lo = x, hi = x;
  while (chi2_cdf(df, lo) > p && lo > kTiny) lo *= 0.5;
  while (chi2_cdf(df, hi) < p) hi = hi > 0.0 ? hi * 2.0 : 1.0;
  x = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    const double f = chi2_cdf(df, x) - p;
    if (f > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (std::abs(f) <= 1e-14 || hi - lo <= 1e-15 * hi) break;
    const double pdf = std::exp(chi2_log_pdf(df, x));
    double next = x - f / pdf;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("normal_quantile: requires 0 < p < 1");
  }

  // Acklam's rational approximation, then one Halley refinement with erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }

  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace rmtl
