#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "rdt/binomial.hpp"
#include "rdt/errors.hpp"
#include "rdt/random.hpp"

// Producer's and consumer's risk in classical, average, and posterior form,
// plus the minimal-(n, c) plan search. pi_0 is the acceptable reliability
// level, pi_1 the rejectable one.

namespace rdt {

struct RiskLevels {
  double pi0 = 0.95;
  double pi1 = 0.90;
  double alpha_max = 0.05;  // producer bound (plan search)
  double beta_max = 0.05;   // consumer bound (plan search)

  void validate() const {
    if (!(pi1 > 0.0) || !(pi1 <= pi0) || !(pi0 < 1.0))
      throw incoherence_error("risk levels: need 0 < pi1 <= pi0 < 1");
    if (!(alpha_max > 0.0) || !(alpha_max <= 1.0) || !(beta_max > 0.0) ||
        !(beta_max <= 1.0))
      throw incoherence_error("risk levels: bounds must lie in (0,1]");
  }
};

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// producer = Pr(fail | pi = pi0), consumer = Pr(pass | pi = pi1).
inline std::pair<double, double> classical_risks(const BinomialTestPlan& plan,
                                                 const RiskLevels& levels) {
  plan.validate();
  levels.validate();
  const double producer = 1.0 - binom_cdf(plan.c, plan.n, 1.0 - levels.pi0);
  const double consumer = binom_cdf(plan.c, plan.n, 1.0 - levels.pi1);
  return {producer, consumer};
}

// Average risks: Monte Carlo conditional expectations over a pi sampler.
inline std::pair<RiskEstimate, RiskEstimate> average_risks(
    const BinomialTestPlan& plan, const RiskLevels& levels,
    const std::function<double(Rng&)>& pi_sampler, std::size_t n_draws,
    RandomStream stream) {
  plan.validate();
  levels.validate();
  if (n_draws == 0) throw domain_error("average_risks: no draws");
  Rng rng(stream);
  double fail_hi = 0.0, pass_lo = 0.0;
  double fail_hi2 = 0.0, pass_lo2 = 0.0;
  std::size_t n_hi = 0, n_lo = 0;
  for (std::size_t j = 0; j < n_draws; ++j) {
    const double pi = pi_sampler(rng);
    const double pass = binom_cdf(plan.c, plan.n, 1.0 - pi);
    if (pi >= levels.pi0) {
      ++n_hi;
      fail_hi += 1.0 - pass;
      fail_hi2 += (1.0 - pass) * (1.0 - pass);
    }
    if (pi <= levels.pi1) {
      ++n_lo;
      pass_lo += pass;
      pass_lo2 += pass * pass;
    }
  }
  if (n_hi == 0)
    throw incoherence_error("average_risks: no draws with pi >= pi0 (conditioning mass)");
  if (n_lo == 0)
    throw incoherence_error("average_risks: no draws with pi <= pi1 (conditioning mass)");
  auto finish = [](double s, double s2, std::size_t k) {
    RiskEstimate e;
    e.value = s / static_cast<double>(k);
    if (k > 1) {
      const double var =
          (s2 - s * s / static_cast<double>(k)) / (static_cast<double>(k) - 1.0);
      e.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(k));
    }
    return e;
  };
  return {finish(fail_hi, fail_hi2, n_hi), finish(pass_lo, pass_lo2, n_lo)};
}

namespace detail {

// Ratio estimator mean(a) / mean(b) with a delta-method standard error.
inline RiskEstimate ratio_estimate(std::span<const double> a,
                                   std::span<const double> b) {
  const std::size_t n = a.size();
  double am = 0.0, bm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    am += a[j];
    bm += b[j];
  }
  am /= static_cast<double>(n);
  bm /= static_cast<double>(n);
  RiskEstimate e;
  e.value = am / bm;
  double v = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = a[j] - e.value * b[j];
    v += d * d;
  }
  v /= static_cast<double>(n) * static_cast<double>(n - 1);
  e.std_error = std::sqrt(std::max(v, 0.0)) / bm;
  return e;
}

}  // namespace detail

// Posterior risks over supplied pi draws:
//   producer = Pr(pi >= pi0 | test failed), consumer = Pr(pi <= pi1 | passed).
inline std::pair<RiskEstimate, RiskEstimate> posterior_risks(
    const BinomialTestPlan& plan, const RiskLevels& levels,
    std::span<const double> pi_draws) {
  plan.validate();
  levels.validate();
  const std::size_t n = pi_draws.size();
  if (n < 2) throw domain_error("posterior_risks: need at least 2 draws");
  std::vector<double> fail(n), pass(n), fail_hi(n), pass_lo(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = binom_cdf(plan.c, plan.n, 1.0 - pi_draws[j]);
    pass[j] = p;
    fail[j] = 1.0 - p;
    fail_hi[j] = (pi_draws[j] >= levels.pi0) ? fail[j] : 0.0;
    pass_lo[j] = (pi_draws[j] <= levels.pi1) ? pass[j] : 0.0;
  }
  double fail_mean = 0.0, pass_mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    fail_mean += fail[j];
    pass_mean += pass[j];
  }
  fail_mean /= static_cast<double>(n);
  pass_mean /= static_cast<double>(n);
  if (fail_mean < 1e-6)
    throw incoherence_error("posterior_risks: test almost surely passes (degenerate plan)");
  if (pass_mean < 1e-6)
    throw incoherence_error("posterior_risks: test almost surely fails (degenerate plan)");
  return {detail::ratio_estimate(fail_hi, fail), detail::ratio_estimate(pass_lo, pass)};
}

struct FindPlanResult {
  bool feasible = false;
  BinomialTestPlan plan;
  double producer = 1.0;
  double consumer = 1.0;
  // best joint margin max(producer - alpha_max, consumer - beta_max) seen
  double best_margin = std::numeric_limits<double>::infinity();
  BinomialTestPlan best_plan;
};

// Smallest n (then smallest c) whose posterior risks satisfy both bounds.
// Denominators too close to 0 (test almost surely passes/fails) make a cell
// uncertifiable and it is skipped.
inline FindPlanResult find_min_plan(const RiskLevels& levels,
                                    std::span<const double> pi_draws, int n_max,
                                    unsigned workers = 1) {
  levels.validate();
  if (n_max < 1) throw incoherence_error("find_min_plan: n_max must be at least 1");
  const std::size_t nd = pi_draws.size();
  if (nd < 2) throw domain_error("find_min_plan: need at least 2 draws");
  std::vector<std::uint8_t> hi(nd), lo(nd);
  for (std::size_t j = 0; j < nd; ++j) {
    hi[j] = pi_draws[j] >= levels.pi0;
    lo[j] = pi_draws[j] <= levels.pi1;
  }
  FindPlanResult res;

  struct PerN {
    bool feasible = false;
    int c = -1;
    double producer = 1.0, consumer = 1.0;
    double margin = std::numeric_limits<double>::infinity();
    int margin_c = -1;
  };

  auto scan_n = [&](int n) {
    PerN r;
    // cumulative pass probability per draw, advanced in c
    std::vector<double> cdf(nd, 0.0), pmf(nd);
    std::vector<double> logpmf0(nd);
    for (std::size_t j = 0; j < nd; ++j) {
      const double theta = 1.0 - pi_draws[j];
      pmf[j] = std::exp(n * std::log1p(-theta));
      cdf[j] = pmf[j];
    }
    const double total = static_cast<double>(nd);
    for (int c = 0; c <= n; ++c) {
      if (c > 0) {
        for (std::size_t j = 0; j < nd; ++j) {
          const double theta = 1.0 - pi_draws[j];
          const double odds = (theta < 1.0) ? theta / (1.0 - theta) : 0.0;
          pmf[j] *= odds * static_cast<double>(n - c + 1) / static_cast<double>(c);
          cdf[j] += pmf[j];
        }
      }
      double pass_sum = 0.0, fail_hi_sum = 0.0, pass_lo_sum = 0.0;
      for (std::size_t j = 0; j < nd; ++j) {
        const double pass = std::min(cdf[j], 1.0);
        pass_sum += pass;
        if (hi[j]) fail_hi_sum += 1.0 - pass;
        if (lo[j]) pass_lo_sum += pass;
      }
      const double fail_sum = total - pass_sum;
      if (fail_sum / total < 1e-6 || pass_sum / total < 1e-6) continue;
      const double producer = fail_hi_sum / fail_sum;
      const double consumer = pass_lo_sum / pass_sum;
      const double margin = std::max(producer - levels.alpha_max,
                                     consumer - levels.beta_max);
      if (margin < r.margin) {
        r.margin = margin;
        r.margin_c = c;
      }
      if (producer <= levels.alpha_max && consumer <= levels.beta_max) {
        r.feasible = true;
        r.c = c;
        r.producer = producer;
        r.consumer = consumer;
        return r;
      }
    }
    return r;
  };

  constexpr int kBlock = 16;
  std::vector<PerN> block(kBlock);
  for (int lo_n = 1; lo_n <= n_max; lo_n += kBlock) {
    const int hi_n = std::min(n_max, lo_n + kBlock - 1);
    const std::size_t count = static_cast<std::size_t>(hi_n - lo_n + 1);
    parallel_for(count, workers,
                 [&](std::size_t i) { block[i] = scan_n(lo_n + static_cast<int>(i)); });
    for (std::size_t i = 0; i < count; ++i) {
      const int n = lo_n + static_cast<int>(i);
      if (block[i].margin < res.best_margin) {
        res.best_margin = block[i].margin;
        res.best_plan = {n, block[i].margin_c};
      }
      if (block[i].feasible) {
        res.feasible = true;
        res.plan = {n, block[i].c};
        res.producer = block[i].producer;
        res.consumer = block[i].consumer;
        return res;
      }
    }
  }
  return res;
}

// Per-observation cutoff bounds: the largest c such that for every y <= c the
// exact-observation posterior satisfies the producer (resp. consumer)
// condition. -1 when no y qualifies.
inline std::pair<int, int> per_y_cutoff_bounds(int n, const RiskLevels& levels,
                                               std::span<const double> pi_draws) {
  if (n < 1) throw incoherence_error("per_y_cutoff_bounds: n must be at least 1");
  levels.validate();
  const std::size_t nd = pi_draws.size();
  if (nd == 0) throw domain_error("per_y_cutoff_bounds: no draws");
  std::vector<double> pmf(nd);
  for (std::size_t j = 0; j < nd; ++j) {
    const double theta = 1.0 - pi_draws[j];
    pmf[j] = std::exp(n * std::log1p(-theta));
  }
  int c_producer = -1, c_consumer = -1;
  bool producer_ok = true, consumer_ok = true;
  for (int y = 0; y <= n; ++y) {
    if (y > 0) {
      for (std::size_t j = 0; j < nd; ++j) {
        const double theta = 1.0 - pi_draws[j];
        const double odds = (theta < 1.0) ? theta / (1.0 - theta) : 0.0;
        pmf[j] *= odds * static_cast<double>(n - y + 1) / static_cast<double>(y);
      }
    }
    double w = 0.0, w_hi = 0.0, w_lo = 0.0;
    for (std::size_t j = 0; j < nd; ++j) {
      w += pmf[j];
      if (pi_draws[j] >= levels.pi0) w_hi += pmf[j];
      if (pi_draws[j] <= levels.pi1) w_lo += pmf[j];
    }
    if (w <= 0.0) break;  // numerically unreachable observations from here on
    if (producer_ok && w_hi / w <= levels.alpha_max)
      c_producer = y;
    else
      producer_ok = false;
    if (consumer_ok && w_lo / w <= levels.beta_max)
      c_consumer = y;
    else
      consumer_ok = false;
    if (!producer_ok && !consumer_ok) break;
  }
  return {c_producer, c_consumer};
}

}  // namespace rdt
