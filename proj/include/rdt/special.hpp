#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rdt/errors.hpp"

// Deterministic special functions: log-gamma, (incomplete) beta and gamma,
// and the inverse CDFs the rest of the library is built on.

namespace rdt {

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients.
inline constexpr double kLanczosG = 7.0;
inline constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,    12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

inline constexpr long double kLogSqrt2Pi = 0.918938533204672741780329736406L;

// Extended precision internally: the large-argument terms reach ~1e7, and the
// beta combination cancels, so double intermediates would cost ~1e-9 absolute.
inline long double lanczos_log_gamma(long double x) {
  // x >= 0.5 here
  const long double z = x - 1.0L;
  long double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) acc += static_cast<long double>(kLanczos[i]) / (z + i);
  const long double t = z + static_cast<long double>(kLanczosG) + 0.5L;
  return kLogSqrt2Pi + (z + 0.5L) * std::log(t) - t + std::log(acc);
}

inline long double log_gamma_ld(long double x) {
  if (x < 0.5L) {
    // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    const long double pi = 3.14159265358979323846264338328L;
    return std::log(pi / std::sin(pi * x)) - lanczos_log_gamma(1.0L - x);
  }
  return lanczos_log_gamma(x);
}

}  // namespace detail

inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw domain_error("log_gamma: argument must be positive and finite");
  return static_cast<double>(detail::log_gamma_ld(x));
}

inline double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw domain_error("log_beta: shape parameters must be positive");
  return static_cast<double>(detail::log_gamma_ld(a) + detail::log_gamma_ld(b) -
                             detail::log_gamma_ld(static_cast<long double>(a) + b));
}

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_cont_fraction(double x, double a, double b) {
  constexpr double eps = 1e-16;
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 600; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw domain_error("reg_inc_beta: shape parameters must be positive");
  if (!(x >= 0.0) || !(x <= 1.0))
    throw domain_error("reg_inc_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  // symmetry switch keeps the continued fraction in its fast region
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::beta_cont_fraction(x, a, b) / a;
  }
  const double r =
      std::exp(log_front) * detail::beta_cont_fraction(1.0 - x, b, a) / b;
  return 1.0 - r;
}

// Density of beta(a, b) at x, tolerant of endpoint/extreme inputs (returns 0
// where the log would overflow to -inf).
inline double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) {
    if (x == 0.0 && a < 1.0) return std::numeric_limits<double>::infinity();
    if (x == 1.0 && b < 1.0) return std::numeric_limits<double>::infinity();
    if (x == 0.0 && a == 1.0) return std::exp(-log_beta(a, b));
    if (x == 1.0 && b == 1.0) return std::exp(-log_beta(a, b));
    return 0.0;
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                  log_beta(a, b));
}

// Inverse of I_x(a, b): bisection bracket with Newton refinement.
inline double inv_reg_inc_beta(double p, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw domain_error("inv_reg_inc_beta: shape parameters must be positive");
  if (!(p >= 0.0) || !(p <= 1.0))
    throw domain_error("inv_reg_inc_beta: p must lie in [0,1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  double x = a / (a + b);
  for (int it = 0; it < 200; ++it) {
    const double f = reg_inc_beta(x, a, b) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    if (std::fabs(f) < 1e-15 * std::max(p, 1.0 - p)) break;
    const double d = beta_pdf(x, a, b);
    double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) < 1e-17 * (1.0 + std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 2000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_cont_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 2000; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace detail

// Regularized lower incomplete gamma P(a, x).
inline double reg_inc_gamma_lower(double a, double x) {
  if (!(a > 0.0)) throw domain_error("reg_inc_gamma_lower: shape must be positive");
  if (!(x >= 0.0)) throw domain_error("reg_inc_gamma_lower: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cont_fraction(a, x);
}

inline double gamma_pdf(double x, double a, double rate) {
  if (x <= 0.0) return 0.0;
  return std::exp(a * std::log(rate) + (a - 1.0) * std::log(x) - rate * x -
                  log_gamma(a));
}

// Inverse of P(a, x) in x for unit rate.
inline double inv_reg_inc_gamma_lower(double p, double a) {
  if (!(a > 0.0)) throw domain_error("inv_reg_inc_gamma_lower: shape must be positive");
  if (!(p > 0.0) || !(p < 1.0))
    throw domain_error("inv_reg_inc_gamma_lower: p must lie in (0,1)");
  // Wilson-Hilferty start
  const double g = 1.0 - 2.0 / (9.0 * a);
  double z;
  {
    // rough normal quantile for the start only
    const double t = (p < 0.5) ? std::sqrt(-2.0 * std::log(p))
                               : std::sqrt(-2.0 * std::log(1.0 - p));
    double q = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                       (1.0 + 1.432788 * t + 0.189269 * t * t +
                        0.001308 * t * t * t);
    z = (p < 0.5) ? -q : q;
  }
  double x = a * std::pow(g + z * std::sqrt(2.0 / (9.0 * a)), 3.0);
  if (!(x > 0.0) || !std::isfinite(x)) x = a;
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double f = reg_inc_gamma_lower(a, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    if (std::fabs(f) < 1e-15 * std::max(p, 1.0 - p)) break;
    const double d = gamma_pdf(x, a, 1.0);
    double next = (d > 0.0 && std::isfinite(d)) ? x - f / d : 0.0;
    if (!(next > lo) || !(next < hi) || !std::isfinite(next))
      next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(x, 1.0);
    if (std::fabs(next - x) < 1e-16 * (1.0 + std::fabs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

// Quantile of gamma(shape, rate).
inline double gamma_quantile(double p, double shape, double rate) {
  if (!(rate > 0.0)) throw domain_error("gamma_quantile: rate must be positive");
  return inv_reg_inc_gamma_lower(p, shape) / rate;
}

inline double beta_quantile(double p, double a, double b) {
  if (!(p > 0.0) || !(p < 1.0))
    throw domain_error("beta_quantile: p must lie in (0,1)");
  return inv_reg_inc_beta(p, a, b);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

// Wichura's AS 241 (PPND16).
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw domain_error("normal_quantile: p must lie in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        q * (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                  6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

// Student-t quantile via the incomplete-beta relation
// I_{nu/(nu+t^2)}(nu/2, 1/2) = 2 min(p, 1-p).
inline double student_t_quantile(double p, double nu) {
  if (!(p > 0.0) || !(p < 1.0))
    throw domain_error("student_t_quantile: p must lie in (0,1)");
  if (!(nu > 0.0)) throw domain_error("student_t_quantile: nu must be positive");
  if (p == 0.5) return 0.0;
  if (nu >= 1e6) {
    const double z = normal_quantile(p);
    return z + (z * z * z + z) / (4.0 * nu);  // Cornish-Fisher tail term
  }
  const double tail = 2.0 * std::min(p, 1.0 - p);
  const double w = inv_reg_inc_beta(tail, 0.5 * nu, 0.5);
  const double t = std::sqrt(nu * (1.0 - w) / std::max(w, 1e-300));
  return (p < 0.5) ? -t : t;
}

}  // namespace rdt
