#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "rdt/isotonic.hpp"
#include "rdt/parallel.hpp"
#include "rdt/weibull_mcmc.hpp"

// Assurance estimation for Weibull demonstration tests: the naive
// design-draw x dataset estimator, the grid scheme (one design draw and one
// dataset per grid visit, smoothed by weighted isotonic regression), and its
// two-stress-group surface variant.

namespace rdt {

struct TestConfig {
  StressAllocation alloc;             // per-item stresses as a function of n
  std::optional<double> censor_time;  // right-censoring horizon (time units)
  WeibullDesignPrior analysis_prior;
  StressLifeLink link;
  McmcSettings mcmc{2500, 500, 0.3};  // inner analysis chain
};

using DesignSampler = std::function<WeibullDesignDraw(Rng&)>;

inline DesignSampler prior_design_sampler(const WeibullDesignPrior& prior) {
  prior.validate();
  return [prior](Rng& rng) { return sample_design_prior(prior, rng); };
}

// Uniformly indexed resampling from a fixed set of posterior draws.
inline DesignSampler posterior_design_sampler(
    std::shared_ptr<const std::vector<WeibullDesignDraw>> draws) {
  if (!draws || draws->empty())
    throw domain_error("posterior_design_sampler: no draws");
  return [draws](Rng& rng) {
    const std::size_t i = std::min(
        static_cast<std::size_t>(rng.uniform() * static_cast<double>(draws->size())),
        draws->size() - 1);
    return (*draws)[i];
  };
}

// r_q = Pr_A(tau_q >= tau_star at s_star, new location | test data).
inline double analysis_posterior_prob(const WeibullData& test_data,
                                      const TestConfig& config,
                                      const ReliableLifeTarget& target,
                                      RandomStream stream) {
  target.validate();
  const auto post = weibull_posterior(test_data, config.analysis_prior, config.link,
                                      config.mcmc, stream, /*require_stress_span=*/false);
  const double log_tau_star = std::log(target.tau_star);
  std::size_t hits = 0;
  for (const auto& d : post.draws)
    if (d.log_reliable_life(target.s_star, target.q, config.link) >= log_tau_star)
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(post.draws.size());
}

inline bool pass_test(const WeibullData& test_data, const TestConfig& config,
                      const ReliableLifeTarget& target, RandomStream stream) {
  return passes_threshold(analysis_posterior_prob(test_data, config, target, stream),
                          target.delta);
}

// One simulated test at sample size n: design draw, dataset, pass indicator.
inline bool simulate_pass_indicator(const TestConfig& config,
                                    const ReliableLifeTarget& target,
                                    const DesignSampler& design,
                                    std::span<const double> stresses,
                                    RandomStream stream) {
  Rng rng(stream.sub(0));
  const auto draw = design(rng);
  const auto data =
      simulate_test_data(draw, stresses, config.censor_time, config.link, rng);
  return pass_test(data, config, target, stream.sub(1));
}

// Naive estimator: M design draws, N2 datasets per draw. The standard error
// treats each design draw's N2 indicators as one cluster.
inline AssuranceEstimate assurance_naive(const TestConfig& config,
                                         const ReliableLifeTarget& target,
                                         const DesignSampler& design, int n,
                                         std::size_t m_draws, std::size_t n2,
                                         RandomStream stream, unsigned workers = 1) {
  if (m_draws == 0 || n2 == 0) throw domain_error("assurance_naive: M and N2 must be positive");
  const auto stresses = config.alloc.stresses_for(n);
  std::vector<double> cluster_mean(m_draws, 0.0);
  parallel_for(m_draws, workers, [&](std::size_t k) {
    const RandomStream cluster = stream.sub(k);
    Rng rng(cluster.sub(0));
    const auto draw = design(rng);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < n2; ++j) {
      const RandomStream rep = cluster.sub(j + 1);
      Rng sim(rep.sub(0));
      const auto data =
          simulate_test_data(draw, stresses, config.censor_time, config.link, sim);
      if (pass_test(data, config, target, rep.sub(1))) ++hits;
    }
    cluster_mean[k] = static_cast<double>(hits) / static_cast<double>(n2);
  });
  AssuranceEstimate est;
  est.n_draws = m_draws * n2;
  double mean = 0.0;
  for (double v : cluster_mean) mean += v;
  mean /= static_cast<double>(m_draws);
  double var = 0.0;
  for (double v : cluster_mean) var += (v - mean) * (v - mean);
  est.value = mean;
  est.mc_std_error =
      (m_draws > 1)
          ? std::sqrt(var / (static_cast<double>(m_draws) - 1.0) / static_cast<double>(m_draws))
          : 0.0;
  return est;
}

struct GridSpec {
  int n_min = 1;
  int n_max = 60;
  int points = 60;

  std::vector<int> values() const {
    if (n_min < 1 || n_max < n_min || points < 1)
      throw incoherence_error("grid: need 1 <= n_min <= n_max and points >= 1");
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      const double f = (points == 1) ? 0.0
                                     : static_cast<double>(i) / (points - 1.0);
      const int n = static_cast<int>(std::lround(n_min + f * (n_max - n_min)));
      if (out.empty() || out.back() != n) out.push_back(n);
    }
    return out;
  }
};

struct AssuranceCurve {
  std::vector<int> ns;
  std::vector<double> raw;        // pass proportion per grid point
  std::vector<int> repeats;       // repeats behind each raw value
  std::vector<double> fitted;     // isotonic nondecreasing fit
  std::vector<double> fitted_weight;  // pooled repeats behind each fitted value

  // step interpolation: value at the largest grid point <= n
  double value_at(int n) const {
    if (ns.empty()) throw domain_error("assurance curve: empty");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < ns.size(); ++i)
      if (ns[i] <= n) idx = i;
    return fitted[idx];
  }
};

// Grid scheme: repeats r = 1..R of (design draw, dataset of size n_j, pass
// indicator) per grid point, smoothed by repeat-weighted isotonic regression.
inline AssuranceCurve assurance_curve(const TestConfig& config,
                                      const ReliableLifeTarget& target,
                                      const DesignSampler& design, const GridSpec& grid,
                                      int reps, RandomStream stream,
                                      unsigned workers = 1) {
  if (reps < 1) throw incoherence_error("assurance_curve: reps must be at least 1");
  AssuranceCurve curve;
  curve.ns = grid.values();
  const std::size_t cells = curve.ns.size();
  const std::size_t tasks = cells * static_cast<std::size_t>(reps);
  std::vector<std::uint8_t> pass(tasks, 0);
  std::vector<std::vector<double>> stresses(cells);
  for (std::size_t j = 0; j < cells; ++j)
    stresses[j] = config.alloc.stresses_for(curve.ns[j]);
  parallel_for(tasks, workers, [&](std::size_t t) {
    const std::size_t cell = t / static_cast<std::size_t>(reps);
    const std::size_t rep = t % static_cast<std::size_t>(reps);
    const RandomStream s = stream.sub(cell).sub(rep);
    pass[t] = simulate_pass_indicator(config, target, design, stresses[cell], s) ? 1 : 0;
  });
  curve.raw.resize(cells);
  curve.repeats.assign(cells, reps);
  std::vector<double> w(cells);
  for (std::size_t j = 0; j < cells; ++j) {
    std::size_t hits = 0;
    for (int r = 0; r < reps; ++r)
      hits += pass[j * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
    curve.raw[j] = static_cast<double>(hits) / static_cast<double>(reps);
    w[j] = static_cast<double>(reps);
  }
  auto fit = isotonic_nondecreasing(curve.raw, w);
  curve.fitted = std::move(fit.fitted);
  curve.fitted_weight = std::move(fit.block_weight);
  return curve;
}

struct FindMinNWeibull {
  bool reached = false;
  int n = -1;
  double fitted = 0.0;
  double max_fitted = 0.0;
};

inline FindMinNWeibull find_min_n_weibull(const AssuranceCurve& curve, double gamma) {
  if (!(gamma >= 0.0) || !(gamma < 1.0))
    throw incoherence_error("find_min_n_weibull: gamma must lie in [0,1)");
  FindMinNWeibull res;
  for (std::size_t j = 0; j < curve.ns.size(); ++j) {
    res.max_fitted = std::max(res.max_fitted, curve.fitted[j]);
    if (!res.reached && curve.fitted[j] >= gamma) {
      res.reached = true;
      res.n = curve.ns[j];
      res.fitted = curve.fitted[j];
    }
  }
  if (!res.reached) res.fitted = res.max_fitted;
  return res;
}

struct AssuranceSurface {
  double stress_a = 0.0, stress_b = 0.0;
  std::vector<int> na, nb;       // axis values
  std::vector<double> raw;       // row-major na x nb
  std::vector<double> fitted;    // componentwise-nondecreasing projection

  double raw_at(std::size_t i, std::size_t j) const { return raw[i * nb.size() + j]; }
  double fitted_at(std::size_t i, std::size_t j) const { return fitted[i * nb.size() + j]; }

  struct Design {
    int na = 0, nb = 0;
    double assurance = 0.0;
    int total() const { return na + nb; }
  };
  // cells at or above gamma, sorted by total sample size (ties by assurance)
  std::vector<Design> designs_above(double gamma) const {
    std::vector<Design> out;
    for (std::size_t i = 0; i < na.size(); ++i)
      for (std::size_t j = 0; j < nb.size(); ++j)
        if (fitted_at(i, j) >= gamma) out.push_back({na[i], nb[j], fitted_at(i, j)});
    std::stable_sort(out.begin(), out.end(), [](const Design& a, const Design& b) {
      if (a.total() != b.total()) return a.total() < b.total();
      return a.assurance > b.assurance;
    });
    return out;
  }
};

// Two-group design surface over (n_a, n_b) cells; per cell the same repeat
// scheme as the curve, then a componentwise-monotone isotonic projection.
inline AssuranceSurface assurance_surface(const TestConfig& config,
                                          const ReliableLifeTarget& target,
                                          const DesignSampler& design, double stress_a,
                                          double stress_b, int na_max, int nb_max,
                                          int reps, RandomStream stream,
                                          unsigned workers = 1) {
  if (na_max < 1 || nb_max < 1)
    throw incoherence_error("assurance_surface: grid bounds must be at least 1");
  if (reps < 1) throw incoherence_error("assurance_surface: reps must be at least 1");
  AssuranceSurface surf;
  surf.stress_a = stress_a;
  surf.stress_b = stress_b;
  for (int i = 1; i <= na_max; ++i) surf.na.push_back(i);
  for (int j = 1; j <= nb_max; ++j) surf.nb.push_back(j);
  const std::size_t cells = surf.na.size() * surf.nb.size();
  const std::size_t tasks = cells * static_cast<std::size_t>(reps);
  std::vector<std::uint8_t> pass(tasks, 0);
  parallel_for(tasks, workers, [&](std::size_t t) {
    const std::size_t cell = t / static_cast<std::size_t>(reps);
    const std::size_t rep = t % static_cast<std::size_t>(reps);
    const std::size_t i = cell / surf.nb.size();
    const std::size_t j = cell % surf.nb.size();
    std::vector<double> stresses;
    stresses.reserve(static_cast<std::size_t>(surf.na[i] + surf.nb[j]));
    for (int k = 0; k < surf.na[i]; ++k) stresses.push_back(stress_a);
    for (int k = 0; k < surf.nb[j]; ++k) stresses.push_back(stress_b);
    const RandomStream s = stream.sub(cell).sub(rep);
    pass[t] = simulate_pass_indicator(config, target, design, stresses, s) ? 1 : 0;
  });
  surf.raw.resize(cells);
  std::vector<double> w(cells, static_cast<double>(reps));
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t hits = 0;
    for (int r = 0; r < reps; ++r)
      hits += pass[cell * static_cast<std::size_t>(reps) + static_cast<std::size_t>(r)];
    surf.raw[cell] = static_cast<double>(hits) / static_cast<double>(reps);
  }
  surf.fitted =
      isotonic_nondecreasing_2d(surf.raw, w, surf.na.size(), surf.nb.size());
  return surf;
}

}  // namespace rdt
