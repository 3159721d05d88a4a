#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rdt/binomial_mcmc.hpp"  // McmcSettings
#include "rdt/errors.hpp"
#include "rdt/fit.hpp"
#include "rdt/random.hpp"
#include "rdt/weibull.hpp"

// MH-within-Gibbs for the Weibull regression posterior: a joint random walk
// on (alpha0, alpha1) with burn-in-adapted proposal covariance, scalar walks
// on log beta and each location effect, and a conjugate Gibbs step for v_eps
// when it is learned. Each retained draw carries a fresh location effect for
// the next (new) test location. With no data the prior is sampled directly.

namespace rdt {

struct WeibullMcmcDiag {
  double accept_alpha = 0.0;
  double accept_log_beta = 0.0;
  double accept_eps = 0.0;
};

struct WeibullPosterior {
  std::vector<WeibullDesignDraw> draws;
  WeibullMcmcDiag diag;
};

namespace detail {

struct AlphaPrior {
  double mu0, mu1;
  double p00 = 0.0, p01 = 0.0, p11 = 0.0;  // precision entries (PD part)
  bool fix0 = false, fix1 = false;

  static AlphaPrior from(const WeibullDesignPrior& prior) {
    AlphaPrior a;
    a.mu0 = prior.mu0;
    a.mu1 = prior.mu1;
    a.fix0 = prior.s00 <= 0.0;
    a.fix1 = prior.s11 <= 0.0;
    if (!a.fix0 && !a.fix1) {
      const double det = prior.s00 * prior.s11 - prior.s01 * prior.s01;
      if (det <= 0.0) {
        // degenerate ridge: treat as independent (s01 ignored on the ridge)
        a.p00 = 1.0 / prior.s00;
        a.p11 = 1.0 / prior.s11;
      } else {
        a.p00 = prior.s11 / det;
        a.p11 = prior.s00 / det;
        a.p01 = -prior.s01 / det;
      }
    } else {
      if (!a.fix0) a.p00 = 1.0 / prior.s00;
      if (!a.fix1) a.p11 = 1.0 / prior.s11;
    }
    return a;
  }

  double log_density(double a0, double a1) const {
    const double d0 = a0 - mu0, d1 = a1 - mu1;
    return -0.5 * (p00 * d0 * d0 + 2.0 * p01 * d0 * d1 + p11 * d1 * d1);
  }
};

// scalar step-size adaptation toward a target acceptance rate
inline void adapt_step(double& step, bool accepted, std::size_t it, double target) {
  const double gain = 2.0 / std::pow(static_cast<double>(it) + 10.0, 0.6);
  step *= std::exp(gain * ((accepted ? 1.0 : 0.0) - target));
  step = std::min(std::max(step, 1e-8), 1e4);
}

}  // namespace detail

// require_stress_span: a design posterior must see at least two stresses to
// identify a free slope; an analysis posterior under a proper prior may run
// on any simulated dataset (including single-stress and size-1 ones).
inline WeibullPosterior weibull_posterior(const WeibullData& data,
                                          const WeibullDesignPrior& prior,
                                          const StressLifeLink& link,
                                          const McmcSettings& mcmc, RandomStream stream,
                                          bool require_stress_span = true) {
  prior.validate();
  mcmc.validate();
  Rng rng(stream);
  const std::size_t retained = mcmc.iterations - mcmc.burn_in;
  WeibullPosterior out;
  out.draws.reserve(retained);

  if (data.obs.empty()) {
    for (std::size_t i = 0; i < retained; ++i)
      out.draws.push_back(sample_design_prior(prior, rng));
    return out;
  }
  if (require_stress_span && data.distinct_stresses() < 2 && prior.s11 > 0.0)
    throw incoherence_error(
        "weibull posterior: a single test stress cannot identify the stress-life slope");

  const auto prep = detail::prepare(data, link);
  const auto alpha_prior = detail::AlphaPrior::from(prior);
  const std::size_t n_loc = static_cast<std::size_t>(prep.n_locations);
  const bool update_beta = !prior.beta_fixed.has_value();
  const bool update_eps = prior.learn_v_eps || prior.v_eps > 0.0;

  double a0 = prior.mu0, a1 = prior.mu1;
  double beta = prior.beta_fixed ? *prior.beta_fixed
                                 : std::max(prior.a_beta / prior.b_beta, 1e-6);
  double v_eps = prior.learn_v_eps ? prior.b_eps / std::max(prior.a_eps, 0.5)
                                   : prior.v_eps;
  std::vector<double> eps(n_loc, 0.0);

  // data-informed location offsets keep the initial log target finite even
  // for datasets simulated far from the prior centre
  if (update_eps) {
    std::vector<std::vector<double>> resid(n_loc);
    for (std::size_t i = 0; i < prep.x.size(); ++i) {
      if (!prep.censored[i])
        resid[static_cast<std::size_t>(prep.location[i])].push_back(
            -prep.log_t[i] - a0 - a1 * prep.x[i]);
    }
    for (std::size_t l = 0; l < n_loc; ++l) {
      if (resid[l].empty()) continue;
      auto mid = resid[l].begin() + static_cast<std::ptrdiff_t>(resid[l].size() / 2);
      std::nth_element(resid[l].begin(), mid, resid[l].end());
      eps[l] = std::clamp(*mid, -50.0, 50.0);
    }
  }

  auto log_target = [&](double aa0, double aa1, double bb,
                        std::span<const double> ee, double vv) {
    double lp = detail::loglik(prep, aa0, aa1, bb, ee);
    if (!std::isfinite(lp)) return lp;
    lp += alpha_prior.log_density(aa0, aa1);
    if (update_beta) lp += prior.a_beta * std::log(bb) - prior.b_beta * bb;
    if (update_eps && vv > 0.0) {
      double ss = 0.0;
      for (double e : ee) ss += e * e;
      lp += -0.5 * ss / vv - 0.5 * static_cast<double>(n_loc) * std::log(vv);
    }
    return lp;
  };

  double lt = log_target(a0, a1, beta, eps, v_eps);
  if (!std::isfinite(lt)) {
    // retry with smaller shapes before giving up
    for (double b_try : {0.5, 0.1, 0.02}) {
      if (!update_beta) break;
      beta = b_try;
      lt = log_target(a0, a1, beta, eps, v_eps);
      if (std::isfinite(lt)) break;
    }
    if (!std::isfinite(lt))
      throw init_error("weibull_posterior: non-finite log posterior at start");
  }

  const bool update_alpha = !(alpha_prior.fix0 && alpha_prior.fix1);
  double step_alpha = 0.2, step_beta = 0.2, step_eps = 0.3;
  // empirical covariance of (alpha0, alpha1), adapted during burn-in only
  double ca00 = std::max(prior.s00, 1e-4), ca01 = 0.0, ca11 = std::max(prior.s11, 1e-4);
  double mean0 = a0, mean1 = a1;
  std::size_t cov_n = 1;
  double l00 = std::sqrt(ca00), l01 = 0.0, l11 = std::sqrt(ca11);

  std::size_t acc_a = 0, prop_a = 0, acc_b = 0, prop_b = 0, acc_e = 0, prop_e = 0;
  std::vector<double> eps_prop(n_loc);

  for (std::size_t it = 0; it < mcmc.iterations; ++it) {
    const bool burning = it < mcmc.burn_in;

    if (update_alpha) {
      const double z0 = rng.normal(), z1 = rng.normal();
      double pa0 = a0, pa1 = a1;
      if (!alpha_prior.fix0) pa0 += step_alpha * l00 * z0;
      if (!alpha_prior.fix1) pa1 += step_alpha * (l01 * z0 + l11 * z1);
      const double plt = log_target(pa0, pa1, beta, eps, v_eps);
      const bool ok = std::log(rng.uniform()) < plt - lt;
      if (ok) {
        a0 = pa0;
        a1 = pa1;
        lt = plt;
      }
      if (burning) {
        detail::adapt_step(step_alpha, ok, it, mcmc.target_accept);
        // running covariance for the proposal shape
        ++cov_n;
        const double w = 1.0 / static_cast<double>(cov_n);
        const double d0 = a0 - mean0, d1 = a1 - mean1;
        mean0 += w * d0;
        mean1 += w * d1;
        ca00 += w * (d0 * d0 * (1.0 - w) - ca00);
        ca01 += w * (d0 * d1 * (1.0 - w) - ca01);
        ca11 += w * (d1 * d1 * (1.0 - w) - ca11);
        if (cov_n % 50 == 0) {
          const double r00 = ca00 + 1e-10, r11 = ca11 + 1e-10;
          l00 = std::sqrt(r00);
          l01 = ca01 / l00;
          const double rest = r11 - l01 * l01;
          l11 = std::sqrt(std::max(rest, 1e-12 * r11));
        }
      } else {
        ++prop_a;
        if (ok) ++acc_a;
      }
    }

    if (update_beta) {
      const double pb = beta * std::exp(step_beta * rng.normal());
      // symmetric walk on log beta; Jacobian folds into the +log(beta) term
      const double plt = log_target(a0, a1, pb, eps, v_eps) + std::log(pb);
      const double clt = lt + std::log(beta);
      const bool ok = std::log(rng.uniform()) < plt - clt;
      if (ok) {
        beta = pb;
        lt = log_target(a0, a1, beta, eps, v_eps);
      }
      if (burning)
        detail::adapt_step(step_beta, ok, it, mcmc.target_accept);
      else {
        ++prop_b;
        if (ok) ++acc_b;
      }
    }

    if (update_eps && v_eps > 0.0) {
      for (std::size_t l = 0; l < n_loc; ++l) {
        eps_prop = eps;
        eps_prop[l] = eps[l] + step_eps * rng.normal();
        const double plt = log_target(a0, a1, beta, eps_prop, v_eps);
        const bool ok = std::log(rng.uniform()) < plt - lt;
        if (ok) {
          eps[l] = eps_prop[l];
          lt = plt;
        }
        if (burning)
          detail::adapt_step(step_eps, ok, it, mcmc.target_accept);
        else {
          ++prop_e;
          if (ok) ++acc_e;
        }
      }
    }

    if (prior.learn_v_eps) {
      double ss = 0.0;
      for (double e : eps) ss += e * e;
      v_eps = 1.0 / rng.gamma(prior.a_eps + 0.5 * static_cast<double>(n_loc),
                              prior.b_eps + 0.5 * ss);
      lt = log_target(a0, a1, beta, eps, v_eps);
    }

    if (!burning) {
      WeibullDesignDraw d;
      d.alpha0 = a0;
      d.alpha1 = a1;
      d.beta = beta;
      d.v_eps = v_eps;
      d.eps = (v_eps > 0.0) ? rng.normal(0.0, std::sqrt(v_eps)) : 0.0;
      out.draws.push_back(d);
    }
  }

  out.diag.accept_alpha = prop_a ? static_cast<double>(acc_a) / static_cast<double>(prop_a) : 0.0;
  out.diag.accept_log_beta = prop_b ? static_cast<double>(acc_b) / static_cast<double>(prop_b) : 0.0;
  out.diag.accept_eps = prop_e ? static_cast<double>(acc_e) / static_cast<double>(prop_e) : 0.0;
  return out;
}

// Shift mu0 so that the prior probability of meeting the reliable-life target
// equals prob_target. Conditional on (beta, v_eps) the log reliable life is
// normal, so only (beta, v_eps) are sampled; common random numbers make the
// bisection objective smooth.
inline WeibullDesignPrior sceptical_weibull_prior(const WeibullDesignPrior& base,
                                                  const ReliableLifeTarget& target,
                                                  double prob_target,
                                                  const StressLifeLink& link,
                                                  std::size_t n_mc, RandomStream stream) {
  base.validate();
  target.validate();
  if (!(prob_target > 0.0) || !(prob_target < 1.0))
    throw domain_error("sceptical_weibull_prior: probability target must lie in (0,1)");
  Rng rng(stream);
  std::vector<double> betas(n_mc), veps(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    betas[i] = base.beta_fixed ? *base.beta_fixed : rng.gamma(base.a_beta, base.b_beta);
    veps[i] = base.learn_v_eps ? rng.inverse_gamma(base.a_eps, base.b_eps) : base.v_eps;
  }
  const double x_star = link.transform(target.s_star);
  const double log_tau_star = std::log(target.tau_star);
  const double link_var = base.s00 + 2.0 * x_star * base.s01 + x_star * x_star * base.s11;
  if (link_var < -1e-12) throw domain_error("sceptical_weibull_prior: negative link variance");

  auto prob_at = [&](double mu0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
      const double mean_log_tau =
          -(mu0 + base.mu1 * x_star) + std::log(-std::log(target.q)) / betas[i];
      const double sd = std::sqrt(std::max(link_var + veps[i], 0.0));
      if (sd == 0.0)
        acc += (mean_log_tau >= log_tau_star) ? 1.0 : 0.0;
      else
        acc += normal_cdf((mean_log_tau - log_tau_star) / sd);
    }
    return acc / static_cast<double>(n_mc);
  };

  // Pr is decreasing in mu0; expand a bracket around the base value.
  const double scale = std::sqrt(std::max(link_var, 0.0)) + 1.0;
  double lo = base.mu0, hi = base.mu0;
  double width = scale;
  for (int k = 0; k < 200 && prob_at(lo) < prob_target; ++k, width *= 2.0) lo -= width;
  width = scale;
  for (int k = 0; k < 200 && prob_at(hi) > prob_target; ++k, width *= 2.0) hi += width;
  const double mu0 = bisect_root(
      [&](double m) { return prob_at(m) - prob_target; }, lo, hi, 1e-12, 300);
  WeibullDesignPrior out = base;
  out.mu0 = mu0;
  return out;
}

}  // namespace rdt
