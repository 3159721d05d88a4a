#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <string>
#include <vector>

#include "rdt/binomial.hpp"
#include "rdt/errors.hpp"
#include "rdt/random.hpp"

// Design posterior for the hierarchical binomial model:
//   x_i | pi_i ~ bin(n_i, 1 - pi_i),  pi_i ~ beta(m p, m (1-p)),
//   p ~ beta(a_p, b_p),  m ~ gamma(a_m, b_m).
// Gibbs on each pi_i (conjugate), joint random-walk Metropolis on
// (logit p, log m) with burn-in-only scale adaptation, and one new-unit pi
// emitted per retained iteration.

namespace rdt {

struct BinomialHistoricalData {
  struct Record {
    long long demands = 0;   // n_i
    long long failures = 0;  // x_i
  };
  std::vector<Record> records;

  void validate() const {
    if (records.empty()) throw incoherence_error("historical data: no records");
    for (const auto& r : records) {
      if (r.demands < 0 || r.failures < 0 || r.failures > r.demands)
        throw incoherence_error("historical data: need 0 <= x <= n per record");
    }
  }
};

struct McmcSettings {
  std::size_t iterations = 11000;
  std::size_t burn_in = 1000;
  double target_accept = 0.3;

  void validate() const {
    if (iterations <= burn_in)
      throw incoherence_error("mcmc: iterations must exceed burn-in");
  }
};

struct BinomialPosterior {
  std::vector<double> pi;  // new-unit survival probability per retained iteration
  std::vector<double> p;   // retained hyper draws (diagnostics)
  std::vector<double> m;
  double accept_rate = 0.0;  // MH acceptance after burn-in
};

inline BinomialPosterior design_posterior_draws(const BinomialDesignPrior& prior,
                                                const BinomialHistoricalData& data,
                                                const McmcSettings& mcmc,
                                                RandomStream stream) {
  prior.validate();
  data.validate();
  mcmc.validate();
  Rng rng(stream);

  const std::size_t groups = data.records.size();
  double p = prior.a_p / (prior.a_p + prior.b_p);
  double m = prior.a_m / prior.b_m;
  p = std::min(std::max(p, 1e-8), 1.0 - 1e-8);
  m = std::max(m, 1e-8);
  double u = std::log(p / (1.0 - p));
  double w = std::log(m);

  std::vector<double> pis(groups);
  for (std::size_t i = 0; i < groups; ++i) {
    const auto& r = data.records[i];
    pis[i] = rng.beta(m * p + static_cast<double>(r.demands - r.failures),
                      m * (1.0 - p) + static_cast<double>(r.failures));
  }

  // log posterior of (u, w) given the pi's, including transform Jacobians
  auto log_target = [&](double uu, double ww) {
    const double pp = 1.0 / (1.0 + std::exp(-uu));
    const double mm = std::exp(ww);
    const double a = mm * pp;
    const double b = mm * (1.0 - pp);
    if (!(a > 0.0) || !(b > 0.0)) return -std::numeric_limits<double>::infinity();
    double lp = prior.a_p * std::log(pp) + prior.b_p * std::log1p(-pp) +
                prior.a_m * ww - prior.b_m * mm;
    const double lb = log_beta(a, b);
    for (double pi_i : pis)
      lp += (a - 1.0) * std::log(pi_i) + (b - 1.0) * std::log1p(-pi_i) - lb;
    return lp;
  };

  double lt = log_target(u, w);
  if (!std::isfinite(lt))
    throw init_error("design_posterior_draws: non-finite log posterior at start");

  double step_u = 0.3, step_w = 0.3;
  const std::size_t retained = mcmc.iterations - mcmc.burn_in;
  BinomialPosterior out;
  out.pi.reserve(retained);
  out.p.reserve(retained);
  out.m.reserve(retained);
  std::size_t accepted_post = 0, proposals_post = 0;

  for (std::size_t it = 0; it < mcmc.iterations; ++it) {
    // conjugate refresh of each group probability
    const double pp = 1.0 / (1.0 + std::exp(-u));
    const double mm = std::exp(w);
    for (std::size_t i = 0; i < groups; ++i) {
      const auto& r = data.records[i];
      pis[i] = rng.beta(mm * pp + static_cast<double>(r.demands - r.failures),
                        mm * (1.0 - pp) + static_cast<double>(r.failures));
    }
    lt = log_target(u, w);

    const double pu = u + step_u * rng.normal();
    const double pw = w + step_w * rng.normal();
    const double plt = log_target(pu, pw);
    const bool accept = std::log(rng.uniform()) < plt - lt;
    if (accept) {
      u = pu;
      w = pw;
      lt = plt;
    }
    if (it < mcmc.burn_in) {
      const double gain = 2.0 / std::pow(static_cast<double>(it) + 10.0, 0.6);
      const double dir = (accept ? 1.0 : 0.0) - mcmc.target_accept;
      step_u *= std::exp(gain * dir);
      step_w *= std::exp(gain * dir);
    } else {
      ++proposals_post;
      if (accept) ++accepted_post;
      const double cp = 1.0 / (1.0 + std::exp(-u));
      const double cm = std::exp(w);
      out.p.push_back(cp);
      out.m.push_back(cm);
      out.pi.push_back(rng.beta(cm * cp, cm * (1.0 - cp)));
    }
  }
  out.accept_rate = proposals_post
                        ? static_cast<double>(accepted_post) / static_cast<double>(proposals_post)
                        : 0.0;
  return out;
}

}  // namespace rdt
