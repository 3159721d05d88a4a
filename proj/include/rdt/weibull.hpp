#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdt/errors.hpp"
#include "rdt/random.hpp"

// Weibull time-to-failure model under accelerated stress:
//   T ~ Weibull(rho, beta), f(t) = rho beta (rho t)^{beta-1} exp(-(rho t)^beta),
//   log rho = alpha0 + alpha1 * s^k + eps_location.

namespace rdt {

// Stress enters the link through x = (s - offset)^k; k is a modelling choice
// (1 linear, -1 Arrhenius), never inferred.
struct StressLifeLink {
  double k = 1.0;
  double offset = 0.0;

  double transform(double s) const {
    const double z = s - offset;
    if (k == 1.0) return z;
    if (z <= 0.0 && k != std::floor(k))
      throw domain_error("stress link: nonpositive rescaled stress with fractional exponent");
    return std::pow(z, k);
  }
};

struct WeibullObservation {
  int location = 0;
  double stress = 0.0;
  double time = 0.0;
  bool censored = false;  // right-censored at `time`
};

struct WeibullData {
  std::vector<WeibullObservation> obs;
  int n_locations = 0;

  void validate() const {
    for (const auto& o : obs) {
      if (!(o.time > 0.0)) throw incoherence_error("lifetime data: times must be positive");
      if (o.location < 0 || o.location >= std::max(n_locations, 1))
        throw incoherence_error("lifetime data: location index out of range");
    }
  }
  int distinct_stresses() const {
    std::vector<double> seen;
    for (const auto& o : obs) {
      bool found = false;
      for (double s : seen)
        if (std::fabs(s - o.stress) <= 1e-12 * (1.0 + std::fabs(s))) {
          found = true;
          break;
        }
      if (!found) seen.push_back(o.stress);
    }
    return static_cast<int>(seen.size());
  }
};

// Reliable life tau_q at survival fraction q: tau = rho^{-1} (-log q)^{1/beta}.
inline double reliable_life(double rho, double beta_shape, double q) {
  if (!(rho > 0.0) || !(beta_shape > 0.0))
    throw domain_error("reliable_life: rho and beta must be positive");
  if (!(q > 0.0) || !(q < 1.0)) throw domain_error("reliable_life: q must lie in (0,1)");
  return std::pow(-std::log(q), 1.0 / beta_shape) / rho;
}

struct ReliableLifeTarget {
  double q = 0.5;         // survival fraction
  double tau_star = 1.0;  // target reliable life (time units)
  double s_star = 0.0;    // use stress
  double delta = 0.05;    // pass when Pr_A(tau_q >= tau_star) >= 1 - delta

  void validate() const {
    if (!(q > 0.0) || !(q < 1.0)) throw incoherence_error("target: q must lie in (0,1)");
    if (!(tau_star > 0.0)) throw incoherence_error("target: tau_star must be positive");
    if (!(delta > 0.0) || !(delta < 1.0))
      throw incoherence_error("target: delta must lie in (0,1)");
  }
};

inline bool passes_threshold(double r_q, double delta) { return r_q >= 1.0 - delta; }

struct WeibullParams {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta = 1.0;
  std::vector<double> eps;  // one per location
};

namespace detail {

struct PreparedWeibullData {
  std::vector<double> x;      // transformed stress
  std::vector<double> log_t;
  std::vector<std::uint8_t> censored;
  std::vector<int> location;
  int n_locations = 0;
};

inline PreparedWeibullData prepare(const WeibullData& data, const StressLifeLink& link) {
  data.validate();
  PreparedWeibullData p;
  p.n_locations = std::max(data.n_locations, 1);
  p.x.reserve(data.obs.size());
  p.log_t.reserve(data.obs.size());
  p.censored.reserve(data.obs.size());
  p.location.reserve(data.obs.size());
  for (const auto& o : data.obs) {
    p.x.push_back(link.transform(o.stress));
    p.log_t.push_back(std::log(o.time));
    p.censored.push_back(o.censored ? 1 : 0);
    p.location.push_back(o.location);
  }
  return p;
}

inline double loglik(const PreparedWeibullData& d, double a0, double a1, double beta,
                     std::span<const double> eps) {
  const double log_beta_shape = std::log(beta);
  double ll = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double z = a0 + a1 * d.x[i] + eps[static_cast<std::size_t>(d.location[i])];
    const double bw = beta * (z + d.log_t[i]);
    if (bw > 700.0) return -std::numeric_limits<double>::infinity();
    const double e = std::exp(bw);
    if (d.censored[i]) {
      ll -= e;
    } else {
      ll += log_beta_shape + bw - d.log_t[i] - e;
    }
  }
  return ll;
}

}  // namespace detail

inline double weibull_loglik(const WeibullData& data, const WeibullParams& params,
                             const StressLifeLink& link) {
  if (!(params.beta > 0.0)) throw domain_error("weibull_loglik: beta must be positive");
  const auto prep = detail::prepare(data, link);
  if (params.eps.size() < static_cast<std::size_t>(prep.n_locations))
    throw domain_error("weibull_loglik: missing location effects");
  return detail::loglik(prep, params.alpha0, params.alpha1, params.beta, params.eps);
}

// Gradient in (alpha0, alpha1, log beta).
inline std::array<double, 3> weibull_loglik_grad(const WeibullData& data,
                                                 const WeibullParams& params,
                                                 const StressLifeLink& link) {
  if (!(params.beta > 0.0)) throw domain_error("weibull_loglik_grad: beta must be positive");
  const auto prep = detail::prepare(data, link);
  const double beta = params.beta;
  double g0 = 0.0, g1 = 0.0, gb = 0.0;  // gb in d/d(log beta)
  for (std::size_t i = 0; i < prep.x.size(); ++i) {
    const double z = params.alpha0 + params.alpha1 * prep.x[i] +
                     params.eps[static_cast<std::size_t>(prep.location[i])];
    const double w = z + prep.log_t[i];
    const double e = std::exp(std::min(beta * w, 700.0));
    double gz, glb;
    if (prep.censored[i]) {
      gz = -beta * e;
      glb = -beta * w * e;
    } else {
      gz = beta * (1.0 - e);
      glb = 1.0 + beta * w * (1.0 - e);
    }
    g0 += gz;
    g1 += gz * prep.x[i];
    gb += glb;
  }
  return {g0, g1, gb};
}

// Design (or analysis) prior on (alpha0, alpha1, beta, location effects).
struct WeibullDesignPrior {
  double mu0 = 0.0, mu1 = 0.0;
  double s00 = 1.0, s01 = 0.0, s11 = 1.0;  // covariance of (alpha0, alpha1)
  double a_beta = 1.0, b_beta = 1.0;       // gamma prior on the shape
  bool learn_v_eps = false;
  double v_eps = 0.0;                      // fixed variance when !learn_v_eps
  double a_eps = 0.0, b_eps = 0.0;         // 1/v_eps ~ gamma(a_eps, b_eps) otherwise
  std::optional<double> beta_fixed;        // point-mass shape, for degenerate setups

  void validate() const {
    if (!(s00 >= 0.0) || !(s11 >= 0.0))
      throw domain_error("weibull prior: variances must be nonnegative");
    const double det = s00 * s11 - s01 * s01;
    if (det < -1e-10 * (1.0 + s00 * s11))
      throw domain_error("weibull prior: (alpha0, alpha1) covariance not PSD");
    if (!beta_fixed && (!(a_beta > 0.0) || !(b_beta > 0.0)))
      throw domain_error("weibull prior: gamma shape hyper-parameters must be positive");
    if (beta_fixed && !(*beta_fixed > 0.0))
      throw domain_error("weibull prior: fixed beta must be positive");
    if (learn_v_eps) {
      if (!(a_eps > 0.0) || !(b_eps > 0.0))
        throw domain_error("weibull prior: inverse-gamma hyper-parameters must be positive");
    } else if (!(v_eps >= 0.0)) {
      throw domain_error("weibull prior: v_eps must be nonnegative");
    }
  }
};

// One draw of everything needed to simulate or score a new test location.
struct WeibullDesignDraw {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta = 1.0;
  double v_eps = 0.0;
  double eps = 0.0;  // fresh effect for the new location

  double log_rho(double stress, const StressLifeLink& link) const {
    return alpha0 + alpha1 * link.transform(stress) + eps;
  }
  double log_reliable_life(double stress, double q, const StressLifeLink& link) const {
    return -log_rho(stress, link) + std::log(-std::log(q)) / beta;
  }
};

inline WeibullDesignDraw sample_design_prior(const WeibullDesignPrior& prior, Rng& rng) {
  prior.validate();
  WeibullDesignDraw d;
  const auto a = rng.bvn(prior.mu0, prior.mu1, prior.s00, prior.s01, prior.s11);
  d.alpha0 = a[0];
  d.alpha1 = a[1];
  d.beta = prior.beta_fixed ? *prior.beta_fixed : rng.gamma(prior.a_beta, prior.b_beta);
  d.v_eps = prior.learn_v_eps ? rng.inverse_gamma(prior.a_eps, prior.b_eps) : prior.v_eps;
  d.eps = (d.v_eps > 0.0) ? rng.normal(0.0, std::sqrt(d.v_eps)) : 0.0;
  return d;
}

// Simulate one test dataset at the given per-item stresses; all items share
// the draw's new-location effect. Items surviving past censor_time enter as
// right-censored.
inline WeibullData simulate_test_data(const WeibullDesignDraw& draw,
                                      std::span<const double> stresses,
                                      std::optional<double> censor_time,
                                      const StressLifeLink& link, Rng& rng) {
  WeibullData data;
  data.n_locations = 1;
  data.obs.reserve(stresses.size());
  for (double s : stresses) {
    const double log_rho = draw.log_rho(s, link);
    // t = rho^{-1} (-log U)^{1/beta}, in log space to survive extreme draws
    const double log_t = std::log(-std::log(rng.uniform())) / draw.beta - log_rho;
    double t = std::exp(std::min(log_t, 700.0));
    if (!(t > 0.0)) t = std::numeric_limits<double>::min();
    WeibullObservation o;
    o.location = 0;
    o.stress = s;
    if (censor_time && t > *censor_time) {
      o.time = *censor_time;
      o.censored = true;
    } else {
      o.time = t;
      o.censored = false;
    }
    data.obs.push_back(o);
  }
  return data;
}

// Per-item stress list for sample size n under fractional group allocation,
// by largest remainder (deterministic).
struct StressAllocation {
  std::vector<std::pair<double, double>> groups;  // (stress, fraction)

  void validate() const {
    if (groups.empty()) throw incoherence_error("stress allocation: no groups");
    double sum = 0.0;
    for (const auto& g : groups) {
      if (!(g.second >= 0.0)) throw incoherence_error("stress allocation: negative fraction");
      sum += g.second;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw incoherence_error("stress allocation: fractions must sum to 1");
  }

  std::vector<double> stresses_for(int n) const {
    validate();
    if (n < 1) throw incoherence_error("stress allocation: n must be at least 1");
    const std::size_t g = groups.size();
    std::vector<int> count(g, 0);
    std::vector<std::pair<double, std::size_t>> rem(g);
    int assigned = 0;
    for (std::size_t i = 0; i < g; ++i) {
      const double exact = groups[i].second * n;
      count[i] = static_cast<int>(std::floor(exact));
      assigned += count[i];
      rem[i] = {exact - std::floor(exact), i};
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      return a.first > b.first;
    });
    for (int k = 0; k < n - assigned; ++k) ++count[rem[static_cast<std::size_t>(k) % g].second];
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < g; ++i)
      for (int k = 0; k < count[i]; ++k) out.push_back(groups[i].first);
    return out;
  }
};

}  // namespace rdt
