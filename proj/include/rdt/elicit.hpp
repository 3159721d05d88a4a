#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdt/binomial.hpp"
#include "rdt/errors.hpp"
#include "rdt/fit.hpp"
#include "rdt/special.hpp"
#include "rdt/weibull.hpp"

// Translation of expert quantile judgements into prior hyper-parameters.
// Every operation reports coherence diagnostics instead of silently adjusting
// the judgements.

namespace rdt {

struct QuartileJudgement {
  double lower = 0.0;
  double median = 0.0;
  double upper = 0.0;

  void validate(const char* what) const {
    if (!(lower < median) || !(median < upper))
      throw incoherence_error(std::string(what) + ": need lower < median < upper");
  }
};

namespace detail {

inline constexpr double kZ75 = 0.674489750196081743;  // normal upper quartile
// log[ log(2/3) / log(1/3) ]
inline const double kLogShapeRatio = std::log(std::log(2.0 / 3.0) / std::log(1.0 / 3.0));

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace detail

struct GammaShapeResult {
  double a_beta = 0.0;
  double b_beta = 0.0;
  double implied_beta_median = 0.0;  // median of the fitted gamma
  double judged_beta_median = 0.0;   // expert's median mapped through the link
  std::vector<std::string> diagnostics;
};

// Stage 1: quartiles of the ratio tau_{2/3}/tau_{1/3} map through
// beta = log[log(2/3)/log(1/3)] / log(ratio) (increasing in the ratio), and a
// gamma(a_beta, b_beta) is matched to the induced beta quartiles. The median
// is a held-out coherence check.
inline GammaShapeResult beta_shape_prior_from_ratio(const QuartileJudgement& ratio) {
  ratio.validate("shape ratio judgement");
  if (!(ratio.lower > 0.0) || !(ratio.upper < 1.0))
    throw incoherence_error(
        "shape ratio judgement: ratios must lie in (0,1) (later-survival life is shorter)");
  auto to_beta = [](double r) { return detail::kLogShapeRatio / std::log(r); };
  const double beta_lo = to_beta(ratio.lower);
  const double beta_med = to_beta(ratio.median);
  const double beta_hi = to_beta(ratio.upper);
  if (!(beta_hi > beta_lo) || beta_hi - beta_lo < 1e-10 * beta_med)
    throw incoherence_error("shape ratio judgement: zero spread (degenerate shape belief)");

  const double targets[2] = {beta_lo, beta_hi};
  const double mu = 0.5 * (beta_lo + beta_hi);
  const double sd = std::max((beta_hi - beta_lo) / (2.0 * detail::kZ75), 1e-8 * mu);
  auto forward = [](double a, double b, double* out) {
    out[0] = gamma_quantile(0.25, a, b);
    out[1] = gamma_quantile(0.75, a, b);
  };
  const auto fit = fit_two_positive_params(forward, 2, targets, (mu / sd) * (mu / sd),
                                           mu / (sd * sd));
  if (!fit.converged)
    throw infeasible_error("shape prior: no gamma matches the judged quartiles");
  GammaShapeResult res;
  res.a_beta = fit.x0;
  res.b_beta = fit.x1;
  res.implied_beta_median = gamma_quantile(0.5, fit.x0, fit.x1);
  res.judged_beta_median = beta_med;
  const double rel = std::fabs(res.implied_beta_median - beta_med) /
                     std::max(beta_med, 1e-12);
  if (rel > 1e-3)
    res.diagnostics.push_back("median check: judged shape median " +
                              detail::fmt_num(beta_med) + " vs fitted " +
                              detail::fmt_num(res.implied_beta_median) +
                              " (relative gap " + detail::fmt_num(rel) + ")");
  return res;
}

struct VepsResult {
  double v_eps = 0.0;
  std::vector<std::string> diagnostics;
};

// Stage 2 (fixed variance): the between-location life ratio has median 1 by
// symmetry; its upper quartile pins v_eps = [log(Q3)/z_{0.75}]^2 / 2.
inline VepsResult v_eps_from_ratio(double upper_quartile,
                                   std::optional<double> judged_median = std::nullopt) {
  if (!(upper_quartile > 1.0))
    throw incoherence_error("location ratio: upper quartile must exceed 1");
  VepsResult res;
  const double z = std::log(upper_quartile) / detail::kZ75;
  res.v_eps = 0.5 * z * z;
  if (judged_median && std::fabs(*judged_median - 1.0) > 1e-12)
    res.diagnostics.push_back(
        "coherence: the location ratio's median is 1 by symmetry; judged " +
        detail::fmt_num(*judged_median) + " was ignored");
  return res;
}

struct TepsResult {
  double a_eps = 0.0;
  double b_eps = 0.0;
  bool effectively_normal = false;
  std::vector<std::string> diagnostics;
};

// Stage 2 (learned variance): (eps_i - eps_j)/sqrt(2 b/a) is Student-t on 2a
// degrees of freedom; two quantile judgements of the log life ratio identify
// (a_eps, b_eps). Search range a in (0.5, 500].
inline TepsResult t_hypers_from_quantiles(double q1_prob, double q1_value,
                                          double q2_prob, double q2_value) {
  auto check_prob = [](double p, const char* name) {
    if (!(p > 0.0) || !(p < 1.0) || p == 0.5)
      throw incoherence_error(std::string("t quantile probabilities: ") + name +
                              " must lie in (0,1) and differ from 1/2");
  };
  check_prob(q1_prob, "q1");
  check_prob(q2_prob, "q2");
  if (q1_prob == q2_prob || q1_prob == 1.0 - q2_prob)
    throw incoherence_error("t quantile probabilities: q1 must differ from q2 and 1-q2");
  const double sign1 = (q1_prob > 0.5) ? 1.0 : -1.0;
  const double sign2 = (q2_prob > 0.5) ? 1.0 : -1.0;
  if (!(q1_value * sign1 > 0.0) || !(q2_value * sign2 > 0.0))
    throw incoherence_error("t quantile values: sign must match the tail of the probability");

  const double target = q1_value / q2_value;
  auto ratio_at = [&](double a) {
    return student_t_quantile(q1_prob, 2.0 * a) / student_t_quantile(q2_prob, 2.0 * a);
  };
  constexpr double a_lo = 0.5 + 1e-9, a_hi = 500.0;
  const double r_lo = ratio_at(a_lo), r_hi = ratio_at(a_hi);
  const double r_normal = normal_quantile(q1_prob) / normal_quantile(q2_prob);
  TepsResult res;
  double a;
  if ((r_lo - target) * (r_hi - target) <= 0.0) {
    a = bisect_root([&](double aa) { return ratio_at(aa) - target; }, a_lo, a_hi,
                    1e-13, 300);
  } else if (std::fabs(target - r_hi) <= std::fabs(target - r_lo) ||
             (target - r_hi) * (r_hi - r_normal) <= 0.0) {
    // beyond the heavy end of the range toward the normal limit
    a = a_hi;
    res.effectively_normal = true;
    res.diagnostics.push_back(
        "the judged quantile ratio is indistinguishable from a normal's; degrees of "
        "freedom set to the search bound " +
        detail::fmt_num(2.0 * a_hi));
  } else {
    throw infeasible_error(
        "t hyper-parameters: no degrees of freedom in (1, 1000] match the judged ratio");
  }
  const double scale = q1_value / student_t_quantile(q1_prob, 2.0 * a);
  if (!(scale > 0.0))
    throw incoherence_error("t hyper-parameters: judged values imply a nonpositive scale");
  res.a_eps = a;
  res.b_eps = 0.5 * a * scale * scale;
  return res;
}

struct RegressionHypersResult {
  double mu0 = 0.0, mu1 = 0.0;
  double s00 = 0.0, s01 = 0.0, s11 = 0.0;
  std::vector<std::string> diagnostics;
};

struct LifeQuartiles {
  double stress = 0.0;
  QuartileJudgement tau;  // reliable-life quartiles at q = 1/3, in time units
};

// Stage 3: medians at s in {0, s1} give (mu0, mu1) through
// log-median(s) = -(mu0 + mu1 s); quartile spreads at {0, s1, s2} give the
// covariance entries, after removing v_eps. Stress values must already be
// rescaled so that s = 0 is plausible.
inline RegressionHypersResult regression_hypers(const LifeQuartiles& at_zero,
                                                const LifeQuartiles& at_s1,
                                                const LifeQuartiles& at_s2,
                                                double v_eps) {
  if (std::fabs(at_zero.stress) > 1e-12)
    throw incoherence_error("regression judgements: the first stress must be 0 (rescaled)");
  if (at_s1.stress == 0.0 || at_s2.stress == 0.0 || at_s1.stress == at_s2.stress)
    throw incoherence_error("regression judgements: need two distinct nonzero stresses");
  if (!(v_eps >= 0.0)) throw domain_error("regression judgements: v_eps must be nonnegative");
  at_zero.tau.validate("life quartiles at s=0");
  at_s1.tau.validate("life quartiles at s1");
  at_s2.tau.validate("life quartiles at s2");
  if (!(at_zero.tau.lower > 0.0) || !(at_s1.tau.lower > 0.0) || !(at_s2.tau.lower > 0.0))
    throw incoherence_error("life quartiles: times must be positive");

  RegressionHypersResult res;
  res.mu0 = -std::log(at_zero.tau.median);
  res.mu1 = (-std::log(at_s1.tau.median) - res.mu0) / at_s1.stress;
  const double med2_pred = -(res.mu0 + res.mu1 * at_s2.stress);
  const double med2_gap = std::fabs(std::log(at_s2.tau.median) - med2_pred);
  if (med2_gap > 1e-9)
    res.diagnostics.push_back(
        "median check: the third stress's log-median differs from the fitted line by " +
        detail::fmt_num(med2_gap));

  auto spread_var = [](const LifeQuartiles& lq) {
    const double d = std::log(lq.tau.upper) - std::log(lq.tau.lower);
    return (d / (2.0 * detail::kZ75)) * (d / (2.0 * detail::kZ75));
  };
  const double v0 = spread_var(at_zero);
  const double v1 = spread_var(at_s1);
  const double v2 = spread_var(at_s2);
  const double s00 = v0 - v_eps;
  if (s00 < -1e-9 * std::max(1.0, v0))
    throw incoherence_error(
        "regression judgements: the spread at s=0 is smaller than the location spread "
        "(sigma00^2 would be negative)");
  res.s00 = std::max(s00, 0.0);
  if (res.s00 == 0.0)
    res.diagnostics.push_back("sigma00^2 hit the zero boundary (no intercept spread "
                              "beyond the location effect)");
  const double r1 = v1 - res.s00 - v_eps;
  const double r2 = v2 - res.s00 - v_eps;
  const double x1 = at_s1.stress, x2 = at_s2.stress;
  const double det = 2.0 * x1 * x2 * x2 - 2.0 * x2 * x1 * x1;
  res.s01 = (r1 * x2 * x2 - r2 * x1 * x1) / det;
  res.s11 = (2.0 * x1 * r2 - 2.0 * x2 * r1) / det;
  // eigenvalues of the 2x2 covariance
  const double tr = res.s00 + res.s11;
  const double dt = res.s00 * res.s11 - res.s01 * res.s01;
  const double disc = std::sqrt(std::max(tr * tr - 4.0 * dt, 0.0));
  const double eig_min = 0.5 * (tr - disc);
  if (eig_min < -1e-9 * std::max(1.0, std::fabs(tr)))
    throw incoherence_error(
        "regression judgements: covariance not positive definite (smallest eigenvalue " +
        detail::fmt_num(eig_min) + ")");
  if (eig_min <= 1e-12 * std::max(1.0, std::fabs(tr)))
    res.diagnostics.push_back("covariance is on the positive-semidefinite boundary");
  return res;
}

struct ScepticalBetaResult {
  BetaComponent prior;
  double residual = 0.0;  // |Pr(pi > pi_t) - delta| at the returned shape
};

// Analysis-prior calibration: alpha (with b fixed) such that
// Pr(pi > pi_t) = 1 - I_{pi_t}(alpha, b) equals delta.
inline ScepticalBetaResult sceptical_beta(double pi_t, double delta, double b_fixed) {
  if (!(pi_t > 0.0) || !(pi_t < 1.0))
    throw domain_error("sceptical_beta: pi_t must lie in (0,1)");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw domain_error("sceptical_beta: delta must lie in (0,1)");
  if (!(b_fixed > 0.0)) throw domain_error("sceptical_beta: b must be positive");
  auto g = [&](double log_a) {
    return (1.0 - reg_inc_beta(pi_t, std::exp(log_a), b_fixed)) - delta;
  };
  const double lo = std::log(1e-4), hi = std::log(1e6);
  if (g(lo) * g(hi) > 0.0)
    throw infeasible_error("sceptical_beta: no shape in [1e-4, 1e6] meets the target");
  const double log_a = bisect_root(g, lo, hi, 1e-14, 400);
  ScepticalBetaResult res;
  res.prior = {std::exp(log_a), b_fixed};
  res.residual = std::fabs(g(log_a));
  return res;
}

struct BinomialHypersResult {
  BinomialDesignPrior prior;
  double p_residual = 0.0;  // max relative residual of the beta fit
  double m_residual = 0.0;  // max relative residual of the gamma fit
  std::vector<std::string> diagnostics;
};

// Design-prior elicitation on (p, m): least squares of {mean, Q1, Q3} for the
// beta on p and the gamma on m.
inline BinomialHypersResult binomial_design_hypers(double mean_p, double p_lower,
                                                   double p_upper, double mean_m,
                                                   double m_lower, double m_upper) {
  if (!(mean_p > 0.0) || !(mean_p < 1.0))
    throw incoherence_error("design hypers: mean of p must lie in (0,1)");
  if (!(p_lower > 0.0) || !(p_lower < p_upper) || !(p_upper < 1.0))
    throw incoherence_error("design hypers: p quartiles must satisfy 0 < Q1 < Q3 < 1");
  if (!(mean_m > 0.0) || !(m_lower > 0.0) || !(m_lower < m_upper))
    throw incoherence_error("design hypers: m judgements must be positive with Q1 < Q3");

  BinomialHypersResult res;
  {
    const double targets[3] = {mean_p, p_lower, p_upper};
    auto forward = [](double a, double b, double* out) {
      out[0] = a / (a + b);
      out[1] = beta_quantile(0.25, a, b);
      out[2] = beta_quantile(0.75, a, b);
    };
    const double sd = std::max((p_upper - p_lower) / (2.0 * detail::kZ75), 1e-6);
    double size = mean_p * (1.0 - mean_p) / (sd * sd) - 1.0;
    size = std::max(size, 0.5);
    const auto fit = fit_two_positive_params(forward, 3, targets, mean_p * size,
                                             (1.0 - mean_p) * size);
    res.prior.a_p = fit.x0;
    res.prior.b_p = fit.x1;
    res.p_residual = fit.residual;
    if (fit.residual > 0.05)
      throw incoherence_error("design hypers: no beta is compatible with the p judgements "
                              "(residual " + detail::fmt_num(fit.residual) + ")");
    if (fit.residual > 1e-6)
      res.diagnostics.push_back("p fit residual " + detail::fmt_num(fit.residual) +
                                " (three constraints, two parameters)");
  }
  {
    const double targets[3] = {mean_m, m_lower, m_upper};
    auto forward = [](double a, double b, double* out) {
      out[0] = a / b;
      out[1] = gamma_quantile(0.25, a, b);
      out[2] = gamma_quantile(0.75, a, b);
    };
    const double sd = std::max((m_upper - m_lower) / (2.0 * detail::kZ75), 1e-9 * mean_m);
    const auto fit = fit_two_positive_params(forward, 3, targets,
                                             (mean_m / sd) * (mean_m / sd), mean_m / (sd * sd));
    res.prior.a_m = fit.x0;
    res.prior.b_m = fit.x1;
    res.m_residual = fit.residual;
    if (fit.residual > 0.05)
      throw incoherence_error("design hypers: no gamma is compatible with the m judgements "
                              "(residual " + detail::fmt_num(fit.residual) + ")");
    if (fit.residual > 1e-6)
      res.diagnostics.push_back("m fit residual " + detail::fmt_num(fit.residual) +
                                " (three constraints, two parameters)");
  }
  return res;
}

}  // namespace rdt
