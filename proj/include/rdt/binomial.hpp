#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rdt/errors.hpp"
#include "rdt/parallel.hpp"
#include "rdt/random.hpp"
#include "rdt/special.hpp"

// Cutoff selection and assurance for failure-on-demand demonstration tests.
// Throughout, n items go on test, Y ~ bin(n, 1 - pi) counts failures, and a
// plan (n, c) passes when Y <= c. c = -1 encodes "no outcome passes".

namespace rdt {

inline double binom_log_pmf(int y, int n, double theta) {
  if (y < 0 || y > n || n < 0) throw domain_error("binom_log_pmf: need 0 <= y <= n");
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw domain_error("binom_log_pmf: theta must lie in [0,1]");
  if (theta == 0.0) return (y == 0) ? 0.0 : -std::numeric_limits<double>::infinity();
  if (theta == 1.0) return (y == n) ? 0.0 : -std::numeric_limits<double>::infinity();
  const double lc = log_gamma(n + 1.0) - log_gamma(y + 1.0) - log_gamma(n - y + 1.0);
  return lc + y * std::log(theta) + (n - y) * std::log1p(-theta);
}

inline double binom_pmf(int y, int n, double theta) {
  return std::exp(binom_log_pmf(y, n, theta));
}

namespace detail {

// Sum of pmf over j = from..to walked with the multiplicative recurrence,
// tracking an explicit log scale so n up to 1e6 neither under- nor overflows.
inline double binom_tail_sum(int from, int to, int n, double theta) {
  double log_scale = binom_log_pmf(from, n, theta);
  if (log_scale == -std::numeric_limits<double>::infinity()) {
    // walk from a representable start instead
    return 0.0;
  }
  double rel = 1.0;
  double sum = 1.0;
  const double odds = theta / (1.0 - theta);
  for (int j = from + 1; j <= to; ++j) {
    rel *= odds * static_cast<double>(n - j + 1) / static_cast<double>(j);
    sum += rel;
    if (rel > 1e250 || sum > 1e250) {
      sum *= 1e-250;
      rel *= 1e-250;
      log_scale += 250.0 * 2.302585092994045684;
    }
  }
  return std::exp(log_scale + std::log(sum));
}

}  // namespace detail

// Pr(Y <= y), Y ~ bin(n, theta). y < 0 gives 0 (the c = -1 sentinel); y > n
// is a domain error. Direct summation over whichever tail avoids
// cancellation, in scaled arithmetic.
inline double binom_cdf(int y, int n, double theta) {
  if (y > n) throw domain_error("binom_cdf: y must not exceed n");
  if (!(theta >= 0.0) || !(theta <= 1.0))
    throw domain_error("binom_cdf: theta must lie in [0,1]");
  if (y < 0) return 0.0;
  if (y >= n) return 1.0;
  if (theta == 0.0) return 1.0;
  if (theta == 1.0) return 0.0;
  const double mean = n * theta;
  double v;
  if (static_cast<double>(y) + 0.5 < mean) {
    v = detail::binom_tail_sum(0, y, n, theta);  // cdf itself is the small side
  } else {
    v = 1.0 - detail::binom_tail_sum(y + 1, n, n, theta);
  }
  if (v < 0.0) return 0.0;
  if (v > 1.0) return 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// plans, priors, cutoff rules
// ---------------------------------------------------------------------------

struct BinomialTestPlan {
  int n = 1;
  int c = -1;  // -1 <= c <= n
  void validate() const {
    if (n < 1) throw incoherence_error("test plan: n must be at least 1");
    if (c < -1 || c > n) throw incoherence_error("test plan: need -1 <= c <= n");
  }
};

struct BetaComponent {
  double a = 1.0;
  double b = 1.0;
  void validate() const {
    if (!(a > 0.0) || !(b > 0.0))
      throw domain_error("beta component: shape parameters must be positive");
  }
};

struct MixturePrior {
  std::vector<BetaComponent> components;
  std::vector<double> weights;

  static MixturePrior single(BetaComponent comp) { return {{comp}, {1.0}}; }

  void validate() const {
    if (components.empty()) throw incoherence_error("mixture prior: no components");
    if (weights.size() != components.size())
      throw incoherence_error("mixture prior: weight/component count mismatch");
    double sum = 0.0;
    for (double q : weights) {
      if (!(q > 0.0)) throw incoherence_error("mixture prior: weights must be positive");
      sum += q;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw incoherence_error("mixture prior: weights must sum to 1");
    for (const auto& comp : components) comp.validate();
  }
};

// Hierarchical design prior: pi ~ beta(m p, m (1-p)) with p ~ beta(a_p, b_p)
// and m ~ gamma(a_m, b_m) (shape/rate).
struct BinomialDesignPrior {
  double a_p = 1.0, b_p = 1.0;
  double a_m = 1.0, b_m = 1.0;
  void validate() const {
    if (!(a_p > 0.0) || !(b_p > 0.0) || !(a_m > 0.0) || !(b_m > 0.0))
      throw domain_error("design prior: hyper-parameters must be positive");
  }
};

// Which count feeds the mixture-weight update. `survivals` is the
// probability-consistent posterior; `failures` replicates the published
// worked example, whose weight update reads the failure count.
enum class MixtureWeightCount { survivals, failures };

struct ExactTest {
  double pi_t = 0.9;
  double alpha = 0.05;
};

struct NormalApprox {
  double pi_t = 0.9;
  double alpha = 0.05;
};

struct BayesThreshold {
  MixturePrior analysis;
  double pi_t = 0.9;
  double delta = 0.05;
  MixtureWeightCount weight_count = MixtureWeightCount::survivals;
};

using CutoffRule = std::variant<ExactTest, NormalApprox, BayesThreshold>;

inline void validate_rule_params(double pi_t, double level) {
  if (!(pi_t > 0.0) || !(pi_t < 1.0))
    throw incoherence_error("cutoff rule: pi_t must lie in (0,1)");
  // level = 1 is the vacuous rule (every outcome passes)
  if (!(level > 0.0) || !(level <= 1.0))
    throw incoherence_error("cutoff rule: alpha/delta must lie in (0,1]");
}

// ---------------------------------------------------------------------------
// cutoffs
// ---------------------------------------------------------------------------

// Largest c with Pr(Y <= c | pi = pi_t) <= alpha; -1 when even c = 0 fails.
inline int cutoff_exact(int n, double pi_t, double alpha_sig) {
  if (n < 1) throw incoherence_error("cutoff_exact: n must be at least 1");
  validate_rule_params(pi_t, alpha_sig);
  const double theta = 1.0 - pi_t;
  int c = -1;
  for (int y = 0; y <= n; ++y) {
    if (binom_cdf(y, n, theta) <= alpha_sig)
      c = y;
    else
      break;
  }
  return c;
}

// Normal approximation of the exact test: largest c with Z(c) < z_alpha,
// where Z compares the failure proportion with its null value 1 - pi_t,
// Z(y) = (y/n - (1 - pi_t)) / sqrt(pi_t (1 - pi_t) / n), and z_alpha is the
// lower-tail critical value (negative for alpha < 1/2).
inline int cutoff_normal(int n, double pi_t, double alpha_sig) {
  if (n < 1) throw incoherence_error("cutoff_normal: n must be at least 1");
  validate_rule_params(pi_t, alpha_sig);
  if (alpha_sig == 1.0) return n;
  const double z_alpha = normal_quantile(alpha_sig);
  const double se = std::sqrt(pi_t * (1.0 - pi_t) / n);
  const double bound = n * ((1.0 - pi_t) + z_alpha * se);
  int c = static_cast<int>(std::floor(bound));
  // settle float edges by checking the defining inequality directly
  auto ok = [&](int y) {
    return (static_cast<double>(y) / n - (1.0 - pi_t)) / se < z_alpha;
  };
  while (c >= 0 && !ok(c)) --c;
  while (c + 1 <= n && ok(c + 1)) ++c;
  if (c > n) c = n;
  if (c < -1) c = -1;
  return c;
}

// Pr_A(pi <= pi_t | Y = c) for a single-beta analysis prior:
// I_{pi_t}(a + n - c, b + c).
inline double posterior_fail_prob(int n, int c, const BetaComponent& prior,
                                  double pi_t) {
  if (c < 0 || c > n) throw domain_error("posterior_fail_prob: need 0 <= c <= n");
  prior.validate();
  return reg_inc_beta(pi_t, prior.a + (n - c), prior.b + c);
}

// Mixture posterior after observing y in the beta-update sense written in the
// worked example (components become (a + y, b + n - y)); the caller decides
// whether y counts survivals or failures.
inline MixturePrior mixture_posterior_update(const MixturePrior& prior, int n,
                                             int y) {
  prior.validate();
  if (y < 0 || y > n) throw domain_error("mixture_posterior_update: need 0 <= y <= n");
  const std::size_t m = prior.components.size();
  std::vector<double> lw(m);
  double lw_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const auto& comp = prior.components[i];
    lw[i] = std::log(prior.weights[i]) + log_beta(comp.a + y, comp.b + (n - y)) -
            log_beta(comp.a, comp.b);
    lw_max = std::max(lw_max, lw[i]);
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < m; ++i) norm += std::exp(lw[i] - lw_max);
  MixturePrior post;
  post.components.reserve(m);
  post.weights.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    post.components.push_back(
        {prior.components[i].a + y, prior.components[i].b + (n - y)});
    post.weights.push_back(std::exp(lw[i] - lw_max) / norm);
  }
  return post;
}

// Pr_A(pi <= pi_t | Y = c failures) under a beta-mixture analysis prior.
// With weight_count = survivals this is the consistent posterior (equal to
// direct quadrature of the prior-times-likelihood ratio).
inline double posterior_fail_prob_mixture(
    int n, int c, const MixturePrior& prior, double pi_t,
    MixtureWeightCount weight_count = MixtureWeightCount::survivals) {
  if (c < 0 || c > n) throw domain_error("posterior_fail_prob_mixture: need 0 <= c <= n");
  const int survivals = n - c;
  const int weight_y = (weight_count == MixtureWeightCount::survivals) ? survivals : c;
  const MixturePrior weighted = mixture_posterior_update(prior, n, weight_y);
  double p = 0.0;
  for (std::size_t i = 0; i < prior.components.size(); ++i) {
    const auto& comp = prior.components[i];
    p += weighted.weights[i] *
         reg_inc_beta(pi_t, comp.a + survivals, comp.b + c);
  }
  return p;
}

// Largest c in [0, n] whose posterior fail probability does not exceed delta;
// the probability is nondecreasing in c, so the upward scan stops at the
// first violation.
inline int cutoff_bayes(int n, const BayesThreshold& rule) {
  if (n < 1) throw incoherence_error("cutoff_bayes: n must be at least 1");
  rule.analysis.validate();
  validate_rule_params(rule.pi_t, rule.delta);
  int c = -1;
  for (int cc = 0; cc <= n; ++cc) {
    const double p = posterior_fail_prob_mixture(n, cc, rule.analysis, rule.pi_t,
                                                 rule.weight_count);
    if (p <= rule.delta)
      c = cc;
    else
      break;
  }
  return c;
}

inline int cutoff_for(int n, const CutoffRule& rule) {
  return std::visit(
      [n](const auto& r) -> int {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ExactTest>)
          return cutoff_exact(n, r.pi_t, r.alpha);
        else if constexpr (std::is_same_v<T, NormalApprox>)
          return cutoff_normal(n, r.pi_t, r.alpha);
        else
          return cutoff_bayes(n, r);
      },
      rule);
}

// ---------------------------------------------------------------------------
// assurance
// ---------------------------------------------------------------------------

struct AssuranceEstimate {
  double value = 0.0;
  double mc_std_error = 0.0;
  std::size_t n_draws = 0;
};

// Draw survival probabilities pi from the hierarchical design prior.
inline std::vector<double> sample_design_prior_pis(const BinomialDesignPrior& prior,
                                                   std::size_t n_draws,
                                                   RandomStream stream) {
  prior.validate();
  std::vector<double> pis(n_draws);
  Rng rng(stream);
  for (std::size_t j = 0; j < n_draws; ++j) {
    const double p = rng.beta(prior.a_p, prior.b_p);
    const double m = rng.gamma(prior.a_m, prior.b_m);
    pis[j] = rng.beta(m * p, m * (1.0 - p));
  }
  return pis;
}

// Mean and MC standard error of binom_cdf(c, n, 1 - pi) over the draws.
inline AssuranceEstimate assurance_from_draws(int n, int c,
                                              std::span<const double> pis) {
  if (pis.empty()) throw domain_error("assurance_from_draws: no draws");
  AssuranceEstimate est;
  est.n_draws = pis.size();
  if (c < 0) return est;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double pi : pis) {
    const double v = binom_cdf(c, n, 1.0 - pi);
    ++k;
    const double d = v - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (v - mean);
  }
  est.value = mean;
  est.mc_std_error =
      (k > 1) ? std::sqrt(m2 / (static_cast<double>(k) - 1.0) / static_cast<double>(k))
              : 0.0;
  return est;
}

inline AssuranceEstimate assurance_posterior(int n, const CutoffRule& rule,
                                             std::span<const double> pi_draws) {
  if (n < 1) throw incoherence_error("assurance: n must be at least 1");
  return assurance_from_draws(n, cutoff_for(n, rule), pi_draws);
}

inline AssuranceEstimate assurance_prior(int n, const CutoffRule& rule,
                                         const BinomialDesignPrior& design,
                                         std::size_t n_draws, RandomStream stream) {
  const auto pis = sample_design_prior_pis(design, n_draws, stream);
  return assurance_posterior(n, rule, pis);
}

// Assurance over a grid of sample sizes, sharing the pi draws (common random
// numbers) so neighbouring sample sizes are directly comparable.
inline std::vector<AssuranceEstimate> assurance_grid(const CutoffRule& rule,
                                                     std::span<const int> ns,
                                                     std::span<const double> pis,
                                                     unsigned workers = 1) {
  std::vector<AssuranceEstimate> out(ns.size());
  parallel_for(ns.size(), workers,
               [&](std::size_t i) { out[i] = assurance_posterior(ns[i], rule, pis); });
  return out;
}

struct FindMinNResult {
  bool reached = false;
  int n = -1;
  AssuranceEstimate estimate;   // at the returned n (or at best_n if unreached)
  double best_value = 0.0;      // max assurance seen in the scan
  int best_n = -1;
};

// Smallest n <= n_max with assurance >= gamma, by upward scan (the curve is
// sawtoothed in n, so bisection is unsound). Draws are shared across n.
inline FindMinNResult find_min_n(const CutoffRule& rule,
                                 std::span<const double> pi_draws, double gamma,
                                 int n_max, unsigned workers = 1) {
  if (!(gamma >= 0.0) || !(gamma < 1.0))
    throw incoherence_error("find_min_n: gamma must lie in [0,1)");
  if (n_max < 1) throw incoherence_error("find_min_n: n_max must be at least 1");
  FindMinNResult res;
  constexpr int kBlock = 32;
  std::vector<AssuranceEstimate> block(kBlock);
  for (int lo = 1; lo <= n_max; lo += kBlock) {
    const int hi = std::min(n_max, lo + kBlock - 1);
    const std::size_t count = static_cast<std::size_t>(hi - lo + 1);
    parallel_for(count, workers, [&](std::size_t i) {
      block[i] = assurance_posterior(lo + static_cast<int>(i), rule, pi_draws);
    });
    for (std::size_t i = 0; i < count; ++i) {
      const int n = lo + static_cast<int>(i);
      if (block[i].value > res.best_value) {
        res.best_value = block[i].value;
        res.best_n = n;
      }
      if (block[i].value >= gamma) {
        res.reached = true;
        res.n = n;
        res.estimate = block[i];
        return res;
      }
    }
  }
  // unreached: report the best point found
  res.estimate = assurance_posterior(std::max(res.best_n, 1), rule, pi_draws);
  return res;
}

// ---------------------------------------------------------------------------
// producer scenarios over consumer priors (cutoff distribution)
// ---------------------------------------------------------------------------

struct ConsumerScenario {
  double weight = 1.0;
  MixturePrior prior;
};

struct CutoffDistribution {
  int j_lo = 0;
  int j_hi = -1;
  std::vector<double> mass;    // Pr(c = j) for j in [j_lo, j_hi]
  std::vector<double> s_diag;  // s_j = mean_j pmf(j, n, 1 - pi), same range
};

struct ScenarioAssurance {
  AssuranceEstimate estimate;
  CutoffDistribution cutoffs;
  std::vector<int> scenario_cutoffs;
};

// Assurance sum_m q_m Pr(Y <= c_m) where c_m is each consumer prior's Bayes
// cutoff; also aggregates the induced cutoff distribution u_j and the
// diagnostic masses s_j.
inline ScenarioAssurance assurance_cutoff_distribution(
    int n, std::span<const ConsumerScenario> scenarios, double pi_t, double delta,
    std::span<const double> pi_draws,
    MixtureWeightCount weight_count = MixtureWeightCount::survivals) {
  if (scenarios.empty()) throw incoherence_error("scenarios: none given");
  double wsum = 0.0;
  for (const auto& s : scenarios) {
    if (!(s.weight > 0.0)) throw incoherence_error("scenarios: weights must be positive");
    wsum += s.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw incoherence_error("scenarios: weights must sum to 1");
  if (pi_draws.empty()) throw domain_error("scenarios: no draws");

  ScenarioAssurance out;
  std::map<int, double> mass;
  for (const auto& s : scenarios) {
    BayesThreshold rule{s.prior, pi_t, delta, weight_count};
    const int c = cutoff_bayes(n, rule);
    out.scenario_cutoffs.push_back(c);
    mass[c] += s.weight;
  }
  out.cutoffs.j_lo = mass.begin()->first;
  out.cutoffs.j_hi = mass.rbegin()->first;
  for (int j = out.cutoffs.j_lo; j <= out.cutoffs.j_hi; ++j) {
    auto it = mass.find(j);
    out.cutoffs.mass.push_back(it == mass.end() ? 0.0 : it->second);
  }

  // single pass over draws: per-draw weighted pass probability
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double pi : pi_draws) {
    double g = 0.0;
    for (const auto& [c, u] : mass)
      if (c >= 0) g += u * binom_cdf(c, n, 1.0 - pi);
    ++k;
    const double d = g - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (g - mean);
  }
  out.estimate.value = mean;
  out.estimate.n_draws = k;
  out.estimate.mc_std_error =
      (k > 1) ? std::sqrt(m2 / (static_cast<double>(k) - 1.0) / static_cast<double>(k))
              : 0.0;

  for (int j = std::max(0, out.cutoffs.j_lo); j <= out.cutoffs.j_hi; ++j) {
    double s = 0.0;
    for (double pi : pi_draws) s += binom_pmf(j, n, 1.0 - pi);
    out.cutoffs.s_diag.push_back(s / static_cast<double>(pi_draws.size()));
  }
  return out;
}

}  // namespace rdt
