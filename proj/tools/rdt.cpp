// rdt - reliability demonstration test design by Bayesian assurance.
//
// Subcommands:
//   binomial cutoff|assurance|find-n|mixture-scenarios
//   risk     classical|average|posterior|find-plan
//   weibull  analyze|assurance|find-n|surface
//   elicit   binomial|weibull|sceptical
//
// Results go to stdout as TSV; human-readable summaries go to stderr.
// Exit codes: 0 success, 2 incoherent input, 3 infeasible/unreachable target,
// 1 internal error.

#include <cstdint>
#include <iostream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rdt/binomial.hpp"
#include "rdt/binomial_mcmc.hpp"
#include "rdt/elicit.hpp"
#include "rdt/io.hpp"
#include "rdt/risk.hpp"
#include "rdt/weibull_assurance.hpp"
#include "rdt/weibull_mcmc.hpp"

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  unsigned workers = 1;
  int precision = 6;
};

std::string fmt(const GlobalOpts& g, double v) { return rdt::format_sig(v, g.precision); }

// ---- small flag-value parsers ----------------------------------------------

rdt::BinomialDesignPrior parse_design(const std::vector<std::string>& tokens) {
  if (tokens.size() != 2)
    throw rdt::incoherence_error("--design expects two specs: p:beta:A,B m:gamma:A,B");
  rdt::BinomialDesignPrior prior;
  bool have_p = false, have_m = false;
  for (const auto& tok : tokens) {
    const auto parts = rdt::detail::split(tok, ':');
    if (parts.size() != 3) throw rdt::incoherence_error("bad --design spec: " + tok);
    const auto params = rdt::detail::split(parts[2], ',');
    if (params.size() != 2) throw rdt::incoherence_error("bad --design parameters: " + tok);
    const double a = rdt::detail::parse_double(params[0], "--design");
    const double b = rdt::detail::parse_double(params[1], "--design");
    if (parts[0] == "p" && parts[1] == "beta") {
      prior.a_p = a;
      prior.b_p = b;
      have_p = true;
    } else if (parts[0] == "m" && parts[1] == "gamma") {
      prior.a_m = a;
      prior.b_m = b;
      have_m = true;
    } else {
      throw rdt::incoherence_error("bad --design spec (want p:beta:... or m:gamma:...): " + tok);
    }
  }
  if (!have_p || !have_m)
    throw rdt::incoherence_error("--design needs both p:beta:A,B and m:gamma:A,B");
  prior.validate();
  return prior;
}

rdt::MixturePrior parse_mixture(const std::string& spec) {
  rdt::MixturePrior mix;
  const auto comps = rdt::detail::split(spec, ';');
  for (const auto& c : comps) {
    const auto f = rdt::detail::split(c, ',');
    if (f.size() != 2 && f.size() != 3)
      throw rdt::incoherence_error("bad mixture component (want a,b[,w]): " + c);
    rdt::BetaComponent comp{rdt::detail::parse_double(f[0], "--mixture"),
                            rdt::detail::parse_double(f[1], "--mixture")};
    mix.components.push_back(comp);
    mix.weights.push_back(f.size() == 3 ? rdt::detail::parse_double(f[2], "--mixture")
                                        : 1.0);
  }
  if (comps.size() == 1) mix.weights[0] = 1.0;
  double sum = 0.0;
  for (double w : mix.weights) sum += w;
  for (double& w : mix.weights) w /= sum;
  mix.validate();
  return mix;
}

std::vector<rdt::ConsumerScenario> parse_scenarios(const std::string& spec) {
  std::vector<rdt::ConsumerScenario> out;
  for (const auto& s : rdt::detail::split(spec, ';')) {
    const auto head = s.find(':');
    if (head == std::string::npos)
      throw rdt::incoherence_error("bad scenario (want w:a,b): " + s);
    rdt::ConsumerScenario sc;
    sc.weight = rdt::detail::parse_double(s.substr(0, head), "--scenarios");
    const auto f = rdt::detail::split(s.substr(head + 1), ',');
    if (f.size() != 2) throw rdt::incoherence_error("bad scenario prior (want a,b): " + s);
    sc.prior = rdt::MixturePrior::single({rdt::detail::parse_double(f[0], "--scenarios"),
                                          rdt::detail::parse_double(f[1], "--scenarios")});
    out.push_back(sc);
  }
  return out;
}

rdt::ReliableLifeTarget parse_target(const std::string& spec) {
  rdt::ReliableLifeTarget t;
  bool q = false, tau = false, s = false;
  for (const auto& kvs : rdt::detail::split(spec, ',')) {
    const auto eq = kvs.find('=');
    if (eq == std::string::npos)
      throw rdt::incoherence_error("bad --target entry (want key=value): " + kvs);
    const std::string key = rdt::detail::trim(kvs.substr(0, eq));
    const double v = rdt::detail::parse_double(kvs.substr(eq + 1), "--target");
    if (key == "q") {
      t.q = v;
      q = true;
    } else if (key == "tau") {
      t.tau_star = v;
      tau = true;
    } else if (key == "s") {
      t.s_star = v;
      s = true;
    } else if (key == "delta") {
      t.delta = v;
    } else {
      throw rdt::incoherence_error("unknown --target key: " + key);
    }
  }
  if (!q || !tau || !s)
    throw rdt::incoherence_error("--target needs q=, tau= and s= entries");
  t.validate();
  return t;
}

rdt::StressAllocation parse_stresses(const std::string& spec) {
  rdt::StressAllocation alloc;
  for (const auto& g : rdt::detail::split(spec, ',')) {
    const auto colon = g.find(':');
    if (colon == std::string::npos)
      throw rdt::incoherence_error("bad --stresses entry (want stress:fraction): " + g);
    alloc.groups.emplace_back(rdt::detail::parse_double(g.substr(0, colon), "--stresses"),
                              rdt::detail::parse_double(g.substr(colon + 1), "--stresses"));
  }
  alloc.validate();
  return alloc;
}

rdt::GridSpec parse_grid(const std::string& spec) {
  const auto f = rdt::detail::split(spec, ':');
  if (f.size() != 3)
    throw rdt::incoherence_error("bad --grid (want min:max:points): " + spec);
  rdt::GridSpec g;
  g.n_min = static_cast<int>(rdt::detail::parse_int(f[0], "--grid"));
  g.n_max = static_cast<int>(rdt::detail::parse_int(f[1], "--grid"));
  g.points = static_cast<int>(rdt::detail::parse_int(f[2], "--grid"));
  return g;
}

rdt::MixtureWeightCount parse_weight_count(const std::string& s) {
  if (s == "survivals") return rdt::MixtureWeightCount::survivals;
  if (s == "failures") return rdt::MixtureWeightCount::failures;
  throw rdt::incoherence_error("--weight-count must be 'survivals' or 'failures'");
}

// ---- binomial --------------------------------------------------------------

struct BinomialOpts {
  int n = 0;
  double pi_t = 0.96;
  double alpha = 0.05;
  double delta = 0.05;
  std::string rule = "exact";
  std::string analysis;  // "a,b" or "a,b,w;..." for the bayes rule
  std::string weight_count = "survivals";
  std::vector<std::string> design;
  std::string data_path;
  std::uint64_t draws = 100000;
  std::uint64_t mcmc_iters = 11000;
  std::uint64_t mcmc_burnin = 1000;
  double gamma = 0.5;
  int n_max = 1000;
  std::string scenarios;
};

rdt::CutoffRule make_rule(const BinomialOpts& o) {
  if (o.rule == "exact") return rdt::ExactTest{o.pi_t, o.alpha};
  if (o.rule == "normal") return rdt::NormalApprox{o.pi_t, o.alpha};
  if (o.rule == "bayes") {
    if (o.analysis.empty())
      throw rdt::incoherence_error("the bayes rule needs --analysis a,b[,w;...]");
    return rdt::BayesThreshold{parse_mixture(o.analysis), o.pi_t, o.delta,
                               parse_weight_count(o.weight_count)};
  }
  throw rdt::incoherence_error("--rule must be exact, normal or bayes");
}

std::vector<double> binomial_pi_draws(const BinomialOpts& o, const GlobalOpts& g) {
  const auto design = parse_design(o.design);
  if (o.data_path.empty())
    return rdt::sample_design_prior_pis(design, o.draws, rdt::RandomStream{g.seed, 0});
  const auto data = rdt::read_binomial_history_csv(o.data_path);
  rdt::McmcSettings mcmc;
  mcmc.iterations = o.mcmc_iters;
  mcmc.burn_in = o.mcmc_burnin;
  auto post = rdt::design_posterior_draws(design, data, mcmc, rdt::RandomStream{g.seed, 0});
  std::cerr << "design posterior: " << post.pi.size() << " draws, MH acceptance "
            << rdt::format_sig(post.accept_rate, 3) << "\n";
  return std::move(post.pi);
}

int run_binomial_cutoff(const BinomialOpts& o, const GlobalOpts& g) {
  if (o.n < 1) throw rdt::incoherence_error("--n must be at least 1");
  const int c = rdt::cutoff_for(o.n, make_rule(o));
  std::cout << "n\tc\n" << o.n << "\t" << c << "\n";
  std::cerr << "rule " << o.rule << ": cutoff c = " << c
            << (c < 0 ? " (no passing outcome)" : "") << "\n";
  (void)g;
  return 0;
}

int run_binomial_assurance(const BinomialOpts& o, const GlobalOpts& g) {
  if (o.n < 1) throw rdt::incoherence_error("--n must be at least 1");
  const auto rule = make_rule(o);
  const auto pis = binomial_pi_draws(o, g);
  const auto est = rdt::assurance_posterior(o.n, rule, pis);
  const int c = rdt::cutoff_for(o.n, rule);
  std::cout << "n\tassurance\tse\tcutoff\n"
            << o.n << "\t" << fmt(g, est.value) << "\t" << fmt(g, est.mc_std_error)
            << "\t" << c << "\n";
  std::cerr << "assurance at n=" << o.n << ": " << fmt(g, est.value) << " (se "
            << fmt(g, est.mc_std_error) << ", " << est.n_draws << " draws)\n";
  return 0;
}

int run_binomial_find_n(const BinomialOpts& o, const GlobalOpts& g) {
  const auto rule = make_rule(o);
  const auto pis = binomial_pi_draws(o, g);
  const auto res = rdt::find_min_n(rule, pis, o.gamma, o.n_max, g.workers);
  if (!res.reached) {
    std::cerr << "target assurance " << fmt(g, o.gamma) << " unreachable within n-max "
              << o.n_max << "; best " << fmt(g, res.best_value) << " at n=" << res.best_n
              << "\n";
    return 3;
  }
  std::cout << "n\tassurance\tse\tcutoff\n"
            << res.n << "\t" << fmt(g, res.estimate.value) << "\t"
            << fmt(g, res.estimate.mc_std_error) << "\t"
            << rdt::cutoff_for(res.n, rule) << "\n";
  std::cerr << "smallest n with assurance >= " << fmt(g, o.gamma) << ": " << res.n << "\n";
  return 0;
}

int run_binomial_scenarios(const BinomialOpts& o, const GlobalOpts& g) {
  if (o.n < 1) throw rdt::incoherence_error("--n must be at least 1");
  if (o.scenarios.empty()) throw rdt::incoherence_error("--scenarios is required");
  const auto scenarios = parse_scenarios(o.scenarios);
  const auto pis = binomial_pi_draws(o, g);
  const auto res = rdt::assurance_cutoff_distribution(
      o.n, scenarios, o.pi_t, o.delta, pis, parse_weight_count(o.weight_count));
  std::cout << "scenario\tweight\tcutoff\n";
  for (std::size_t m = 0; m < scenarios.size(); ++m)
    std::cout << (m + 1) << "\t" << fmt(g, scenarios[m].weight) << "\t"
              << res.scenario_cutoffs[m] << "\n";
  std::cout << "\nj\tu_j\ts_j\n";
  for (int j = res.cutoffs.j_lo; j <= res.cutoffs.j_hi; ++j) {
    const double u = res.cutoffs.mass[static_cast<std::size_t>(j - res.cutoffs.j_lo)];
    std::cout << j << "\t" << fmt(g, u) << "\t";
    if (j >= 0) {
      const std::size_t k = static_cast<std::size_t>(j - std::max(0, res.cutoffs.j_lo));
      std::cout << fmt(g, res.cutoffs.s_diag[k]);
    } else {
      std::cout << fmt(g, 0.0);
    }
    std::cout << "\n";
  }
  std::cout << "\nassurance\tse\tdraws\n"
            << fmt(g, res.estimate.value) << "\t" << fmt(g, res.estimate.mc_std_error)
            << "\t" << res.estimate.n_draws << "\n";
  std::cerr << "scenario-weighted assurance at n=" << o.n << ": "
            << fmt(g, res.estimate.value) << "\n";
  return 0;
}

// ---- risk ------------------------------------------------------------------

struct RiskOpts {
  int n = 0;
  int c = -1;
  double pi0 = 0.95;
  double pi1 = 0.90;
  double alpha_max = 0.05;
  double beta_max = 0.05;
  std::vector<std::string> design;
  std::string data_path;
  std::uint64_t draws = 100000;
  std::uint64_t mcmc_iters = 11000;
  std::uint64_t mcmc_burnin = 1000;
  int n_max = 500;
};

std::vector<double> risk_pi_draws(const RiskOpts& o, const GlobalOpts& g) {
  BinomialOpts b;
  b.design = o.design;
  b.data_path = o.data_path;
  b.draws = o.draws;
  b.mcmc_iters = o.mcmc_iters;
  b.mcmc_burnin = o.mcmc_burnin;
  return binomial_pi_draws(b, g);
}

int run_risk_classical(const RiskOpts& o, const GlobalOpts& g) {
  const auto [producer, consumer] =
      rdt::classical_risks({o.n, o.c}, {o.pi0, o.pi1, 1.0, 1.0});
  std::cout << "producer\tconsumer\n"
            << fmt(g, producer) << "\t" << fmt(g, consumer) << "\n";
  return 0;
}

int run_risk_average(const RiskOpts& o, const GlobalOpts& g) {
  const auto design = parse_design(o.design);
  auto sampler = [&design](rdt::Rng& rng) {
    const double p = rng.beta(design.a_p, design.b_p);
    const double m = rng.gamma(design.a_m, design.b_m);
    return rng.beta(m * p, m * (1.0 - p));
  };
  const auto [producer, consumer] =
      rdt::average_risks({o.n, o.c}, {o.pi0, o.pi1, 1.0, 1.0}, sampler, o.draws,
                         rdt::RandomStream{g.seed, 0});
  std::cout << "producer\tproducer_se\tconsumer\tconsumer_se\n"
            << fmt(g, producer.value) << "\t" << fmt(g, producer.std_error) << "\t"
            << fmt(g, consumer.value) << "\t" << fmt(g, consumer.std_error) << "\n";
  return 0;
}

int run_risk_posterior(const RiskOpts& o, const GlobalOpts& g) {
  const auto pis = risk_pi_draws(o, g);
  const auto [producer, consumer] =
      rdt::posterior_risks({o.n, o.c}, {o.pi0, o.pi1, 1.0, 1.0}, pis);
  std::cout << "producer\tproducer_se\tconsumer\tconsumer_se\n"
            << fmt(g, producer.value) << "\t" << fmt(g, producer.std_error) << "\t"
            << fmt(g, consumer.value) << "\t" << fmt(g, consumer.std_error) << "\n";
  return 0;
}

int run_risk_find_plan(const RiskOpts& o, const GlobalOpts& g) {
  const auto pis = risk_pi_draws(o, g);
  const auto res = rdt::find_min_plan({o.pi0, o.pi1, o.alpha_max, o.beta_max}, pis,
                                      o.n_max, g.workers);
  if (!res.feasible) {
    std::cerr << "no plan within n-max " << o.n_max
              << " satisfies both risk bounds; best joint margin "
              << fmt(g, res.best_margin) << " at (n=" << res.best_plan.n
              << ", c=" << res.best_plan.c << ")\n";
    return 3;
  }
  std::cout << "n\tc\tproducer\tconsumer\n"
            << res.plan.n << "\t" << res.plan.c << "\t" << fmt(g, res.producer) << "\t"
            << fmt(g, res.consumer) << "\n";
  std::cerr << "smallest feasible plan: n=" << res.plan.n << ", c=" << res.plan.c << "\n";
  return 0;
}

// ---- weibull ----------------------------------------------------------------

struct WeibullOpts {
  std::string data_path;
  std::string prior_path;           // design prior
  std::string analysis_prior_path;  // analysis prior (defaults to design prior)
  double sceptical = -1.0;  // when >= 0: calibrate analysis prior to this prob
  std::string target;
  std::string stresses;
  std::string grid = "1:60:60";
  int reps = 20;
  double gamma = 0.8;
  double link_k = 1.0;
  double stress_offset = 0.0;
  std::optional<double> censor_time;
  std::uint64_t mcmc_iters = 11000;
  std::uint64_t mcmc_burnin = 1000;
  std::uint64_t inner_iters = 2500;
  std::uint64_t inner_burnin = 500;
  double stress_a = 0.0, stress_b = 0.0;
  int grid_a = 20, grid_b = 20;
  std::string curve_out;
};

struct WeibullSetup {
  rdt::StressLifeLink link;
  rdt::WeibullDesignPrior design_prior;
  rdt::TestConfig config;
  rdt::ReliableLifeTarget target;
  bool want_sceptical = false;
};

WeibullSetup weibull_setup(const WeibullOpts& o, const GlobalOpts& g, bool need_alloc) {
  WeibullSetup s;
  s.link = {o.link_k, o.stress_offset};
  if (o.prior_path.empty()) throw rdt::incoherence_error("--prior file is required");
  s.design_prior = rdt::read_weibull_prior(o.prior_path);
  if (o.target.empty()) throw rdt::incoherence_error("--target is required");
  s.target = parse_target(o.target);
  s.config.link = s.link;
  s.config.censor_time = o.censor_time;
  s.config.mcmc.iterations = o.inner_iters;
  s.config.mcmc.burn_in = o.inner_burnin;
  if (!o.analysis_prior_path.empty()) {
    s.config.analysis_prior = rdt::read_weibull_prior(o.analysis_prior_path);
  } else if (o.sceptical >= 0.0) {
    s.want_sceptical = true;  // calibrated once the design information is in hand
  } else {
    s.config.analysis_prior = s.design_prior;
  }
  if (need_alloc) {
    if (o.stresses.empty()) throw rdt::incoherence_error("--stresses is required");
    s.config.alloc = parse_stresses(o.stresses);
  }
  (void)g;
  return s;
}

// Sceptical analysis prior: shift mu0 of the design prior to the requested
// prior probability, with the location variance fixed at a point value
// (a hierarchical v_eps cannot be learned from a single test location, so it
// would cap the pass probability regardless of sample size).
void apply_sceptical(WeibullSetup& s, const WeibullOpts& o, const GlobalOpts& g,
                     std::optional<double> v_hat) {
  if (!s.want_sceptical) return;
  rdt::WeibullDesignPrior base = s.design_prior;
  if (base.learn_v_eps) {
    base.learn_v_eps = false;
    base.v_eps = v_hat ? *v_hat : base.b_eps / base.a_eps;
    base.a_eps = 0.0;
    base.b_eps = 0.0;
  }
  s.config.analysis_prior = rdt::sceptical_weibull_prior(
      base, s.target, o.sceptical, s.link, 200000, rdt::RandomStream{g.seed, 0}.sub(901));
  std::cerr << "sceptical analysis prior: mu0 shifted to "
            << rdt::format_sig(s.config.analysis_prior.mu0, 8)
            << " (location variance fixed at "
            << rdt::format_sig(s.config.analysis_prior.v_eps, 4) << ")\n";
}

struct DesignInfo {
  rdt::DesignSampler sampler;
  std::optional<double> v_hat;  // posterior mean of v_eps when data were used
};

DesignInfo weibull_design_sampler(const WeibullOpts& o, const WeibullSetup& s,
                                  const GlobalOpts& g) {
  if (o.data_path.empty()) return {rdt::prior_design_sampler(s.design_prior), std::nullopt};
  const auto named = rdt::read_weibull_csv(o.data_path);
  rdt::McmcSettings mcmc;
  mcmc.iterations = o.mcmc_iters;
  mcmc.burn_in = o.mcmc_burnin;
  auto post = rdt::weibull_posterior(named.data, s.design_prior, s.link, mcmc,
                                     rdt::RandomStream{g.seed, 0}.sub(902));
  std::cerr << "design posterior: " << post.draws.size() << " draws; acceptance alpha "
            << rdt::format_sig(post.diag.accept_alpha, 3) << ", log-beta "
            << rdt::format_sig(post.diag.accept_log_beta, 3) << ", eps "
            << rdt::format_sig(post.diag.accept_eps, 3) << "\n";
  double v_hat = 0.0;
  for (const auto& d : post.draws) v_hat += d.v_eps;
  v_hat /= static_cast<double>(post.draws.size());
  auto shared = std::make_shared<const std::vector<rdt::WeibullDesignDraw>>(
      std::move(post.draws));
  return {rdt::posterior_design_sampler(shared), v_hat};
}

int run_weibull_analyze(const WeibullOpts& o, const GlobalOpts& g) {
  auto s = weibull_setup(o, g, false);
  if (o.data_path.empty()) throw rdt::incoherence_error("--data is required for analyze");
  const auto named = rdt::read_weibull_csv(o.data_path);
  apply_sceptical(s, o, g, std::nullopt);
  if (o.analysis_prior_path.empty() && o.sceptical < 0.0)
    std::cerr << "note: analysing under the design prior (no --analysis-prior given)\n";
  rdt::TestConfig config = s.config;
  config.mcmc.iterations = o.mcmc_iters;
  config.mcmc.burn_in = o.mcmc_burnin;
  const double r_q = rdt::analysis_posterior_prob(named.data, config, s.target,
                                                  rdt::RandomStream{g.seed, 0}.sub(903));
  const bool pass = rdt::passes_threshold(r_q, s.target.delta);
  std::cout << "r_q\tpass\n" << fmt(g, r_q) << "\t" << (pass ? 1 : 0) << "\n";
  std::cerr << "Pr(reliable life >= " << fmt(g, s.target.tau_star) << " at stress "
            << fmt(g, s.target.s_star) << ") = " << fmt(g, r_q) << " -> "
            << (pass ? "PASS" : "FAIL") << " (needs >= " << fmt(g, 1.0 - s.target.delta)
            << ")\n";
  return 0;
}

int run_weibull_assurance(const WeibullOpts& o, const GlobalOpts& g, bool find_n_mode) {
  auto s = weibull_setup(o, g, true);
  const auto design = weibull_design_sampler(o, s, g);
  apply_sceptical(s, o, g, design.v_hat);
  const auto grid = parse_grid(o.grid);
  const auto curve =
      rdt::assurance_curve(s.config, s.target, design.sampler, grid, o.reps,
                           rdt::RandomStream{g.seed, 0}.sub(904), g.workers);
  auto write_curve = [&](std::ostream& os) {
    os << "n\traw\tfitted\n";
    for (std::size_t j = 0; j < curve.ns.size(); ++j)
      os << curve.ns[j] << "\t" << fmt(g, curve.raw[j]) << "\t" << fmt(g, curve.fitted[j])
         << "\n";
  };
  if (!o.curve_out.empty()) {
    std::ofstream out(o.curve_out);
    if (!out) throw rdt::incoherence_error("cannot write curve file: " + o.curve_out);
    write_curve(out);
  }
  if (!find_n_mode) {
    write_curve(std::cout);
    std::cerr << "assurance curve over n in [" << grid.n_min << "," << grid.n_max << "], "
              << o.reps << " repeats per point\n";
    return 0;
  }
  const auto res = rdt::find_min_n_weibull(curve, o.gamma);
  if (!res.reached) {
    std::cerr << "target assurance " << fmt(g, o.gamma)
              << " unreachable on the grid; max fitted " << fmt(g, res.max_fitted) << "\n";
    return 3;
  }
  std::cout << "n\tassurance\n" << res.n << "\t" << fmt(g, res.fitted) << "\n";
  std::cerr << "smallest grid n with fitted assurance >= " << fmt(g, o.gamma) << ": "
            << res.n << "\n";
  return 0;
}

int run_weibull_surface(const WeibullOpts& o, const GlobalOpts& g) {
  auto s = weibull_setup(o, g, false);
  if (o.stress_a == 0.0 && o.stress_b == 0.0)
    throw rdt::incoherence_error("--stress-a and --stress-b are required");
  const auto design = weibull_design_sampler(o, s, g);
  apply_sceptical(s, o, g, design.v_hat);
  const auto surf = rdt::assurance_surface(
      s.config, s.target, design.sampler, o.stress_a, o.stress_b, o.grid_a, o.grid_b,
      o.reps, rdt::RandomStream{g.seed, 0}.sub(905), g.workers);
  std::cout << "n_a\tn_b\traw\tfitted\n";
  for (std::size_t i = 0; i < surf.na.size(); ++i)
    for (std::size_t j = 0; j < surf.nb.size(); ++j)
      std::cout << surf.na[i] << "\t" << surf.nb[j] << "\t" << fmt(g, surf.raw_at(i, j))
                << "\t" << fmt(g, surf.fitted_at(i, j)) << "\n";
  const auto designs = surf.designs_above(o.gamma);
  std::cerr << "designs with fitted assurance >= " << fmt(g, o.gamma)
            << " (sorted by total sample size):\n";
  std::size_t shown = 0;
  for (const auto& d : designs) {
    std::cerr << "  n_a=" << d.na << " n_b=" << d.nb << " total=" << d.total()
              << " assurance=" << fmt(g, d.assurance) << "\n";
    if (++shown >= 10) break;
  }
  if (designs.empty()) std::cerr << "  (none)\n";
  return 0;
}

// ---- elicit ------------------------------------------------------------------

struct ElicitOpts {
  std::string input;
  std::string out_prior;
  double pi_t = 0.96;
  double delta = 0.05;
  double b_fixed = 2.0;
};

int run_elicit_sceptical(const ElicitOpts& o, const GlobalOpts& g) {
  const auto res = rdt::sceptical_beta(o.pi_t, o.delta, o.b_fixed);
  std::cout << "alpha\tb\tresidual\n"
            << fmt(g, res.prior.a) << "\t" << fmt(g, res.prior.b) << "\t"
            << fmt(g, res.residual) << "\n";
  std::cerr << "beta(" << fmt(g, res.prior.a) << ", " << fmt(g, res.prior.b)
            << ") gives Pr(pi > " << fmt(g, o.pi_t) << ") = " << fmt(g, o.delta) << "\n";
  return 0;
}

int run_elicit_binomial(const ElicitOpts& o, const GlobalOpts& g) {
  if (o.input.empty()) throw rdt::incoherence_error("--input file is required");
  const auto kv = rdt::KeyValueFile::read(o.input);
  const auto res = rdt::binomial_design_hypers(
      kv.number("p", "mean"), kv.number("p", "lower"), kv.number("p", "upper"),
      kv.number("m", "mean"), kv.number("m", "lower"), kv.number("m", "upper"));
  std::cout << "param\tvalue\n"
            << "a_p\t" << fmt(g, res.prior.a_p) << "\n"
            << "b_p\t" << fmt(g, res.prior.b_p) << "\n"
            << "a_m\t" << fmt(g, res.prior.a_m) << "\n"
            << "b_m\t" << fmt(g, res.prior.b_m) << "\n"
            << "p_fit_residual\t" << fmt(g, res.p_residual) << "\n"
            << "m_fit_residual\t" << fmt(g, res.m_residual) << "\n";
  for (const auto& d : res.diagnostics) std::cerr << "diagnostic: " << d << "\n";
  return 0;
}

int run_elicit_weibull(const ElicitOpts& o, const GlobalOpts& g) {
  if (o.input.empty()) throw rdt::incoherence_error("--input file is required");
  const auto kv = rdt::KeyValueFile::read(o.input);
  std::vector<std::string> notes;

  const rdt::QuartileJudgement ratio{kv.number("shape-ratio", "lower"),
                                     kv.number("shape-ratio", "median"),
                                     kv.number("shape-ratio", "upper")};
  const auto shape = rdt::beta_shape_prior_from_ratio(ratio);
  notes.insert(notes.end(), shape.diagnostics.begin(), shape.diagnostics.end());

  rdt::WeibullDesignPrior prior;
  prior.a_beta = shape.a_beta;
  prior.b_beta = shape.b_beta;

  double v_eps_point;
  if (kv.has("location-ratio-t", "q1-prob")) {
    const auto t = rdt::t_hypers_from_quantiles(
        kv.number("location-ratio-t", "q1-prob"), kv.number("location-ratio-t", "q1-value"),
        kv.number("location-ratio-t", "q2-prob"), kv.number("location-ratio-t", "q2-value"));
    prior.learn_v_eps = true;
    prior.a_eps = t.a_eps;
    prior.b_eps = t.b_eps;
    v_eps_point = t.b_eps / t.a_eps;  // predictive scale for Stage 3
    notes.insert(notes.end(), t.diagnostics.begin(), t.diagnostics.end());
    if (t.effectively_normal) notes.push_back("location-effect tails are effectively normal");
  } else {
    std::optional<double> med;
    if (kv.has("location-ratio", "median")) med = kv.number("location-ratio", "median");
    const auto v = rdt::v_eps_from_ratio(kv.number("location-ratio", "upper"), med);
    prior.v_eps = v.v_eps;
    v_eps_point = v.v_eps;
    notes.insert(notes.end(), v.diagnostics.begin(), v.diagnostics.end());
  }

  auto life_at = [&](const std::string& key) {
    rdt::LifeQuartiles lq;
    lq.stress = kv.number(key, "stress");
    lq.tau = {kv.number(key, "lower"), kv.number(key, "median"), kv.number(key, "upper")};
    return lq;
  };
  const auto reg = rdt::regression_hypers(life_at("life-at-zero"), life_at("life-at-s1"),
                                          life_at("life-at-s2"), v_eps_point);
  notes.insert(notes.end(), reg.diagnostics.begin(), reg.diagnostics.end());
  prior.mu0 = reg.mu0;
  prior.mu1 = reg.mu1;
  prior.s00 = reg.s00;
  prior.s01 = reg.s01;
  prior.s11 = reg.s11;
  prior.validate();

  std::cout << "param\tvalue\n"
            << "mu0\t" << fmt(g, prior.mu0) << "\n"
            << "mu1\t" << fmt(g, prior.mu1) << "\n"
            << "s00\t" << fmt(g, prior.s00) << "\n"
            << "s01\t" << fmt(g, prior.s01) << "\n"
            << "s11\t" << fmt(g, prior.s11) << "\n"
            << "a_beta\t" << fmt(g, prior.a_beta) << "\n"
            << "b_beta\t" << fmt(g, prior.b_beta) << "\n";
  if (prior.learn_v_eps)
    std::cout << "a_eps\t" << fmt(g, prior.a_eps) << "\n"
              << "b_eps\t" << fmt(g, prior.b_eps) << "\n";
  else
    std::cout << "v_eps\t" << fmt(g, prior.v_eps) << "\n";
  for (const auto& n : notes) std::cerr << "diagnostic: " << n << "\n";
  if (!o.out_prior.empty()) {
    rdt::write_weibull_prior(o.out_prior, prior);
    std::cerr << "prior written to " << o.out_prior << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliability demonstration test design by Bayesian assurance"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Config file: key=value lines mirroring the flags; "
                                 "command-line flags override the file");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Random seed (unitless integer, default 0)")
      ->capture_default_str();
  app.add_option("--workers", g.workers,
                 "Worker threads for grid evaluation (count, default 1)")
      ->capture_default_str();
  app.add_option("--precision", g.precision,
                 "Significant digits in TSV output (count, default 6)")
      ->capture_default_str();

  BinomialOpts bo;
  RiskOpts ro;
  WeibullOpts wo;
  ElicitOpts eo;
  double censor_flag = -1.0;

  auto add_binomial_common = [&](CLI::App* cmd, bool with_rule) {
    if (with_rule) {
      cmd->add_option("--rule", bo.rule, "Cutoff rule: exact|normal|bayes (default exact)");
      cmd->add_option("--pi-t", bo.pi_t,
                      "Target reliability pi_T (probability, default 0.96)");
      cmd->add_option("--alpha", bo.alpha,
                      "Significance level of the frequentist test (probability, default 0.05)");
      cmd->add_option("--delta", bo.delta,
                      "Posterior threshold for the bayes rule (probability, default 0.05)");
      cmd->add_option("--analysis", bo.analysis,
                      "Analysis prior for the bayes rule: a,b or a,b,w;a,b,w");
      cmd->add_option("--weight-count", bo.weight_count,
                      "Mixture weight update count: survivals|failures (default survivals)");
    }
    cmd->add_option("--design", bo.design,
                    "Design prior: p:beta:A,B m:gamma:A,B (two specs)")
        ->expected(2);
    cmd->add_option("--data", bo.data_path, "Historical pass/fail CSV (header n,x)");
    cmd->add_option("--draws", bo.draws,
                    "Monte Carlo draws for assurance (count, default 100000)");
    cmd->add_option("--mcmc-iters", bo.mcmc_iters,
                    "MCMC iterations with historical data (count, default 11000)");
    cmd->add_option("--mcmc-burnin", bo.mcmc_burnin,
                    "MCMC burn-in iterations (count, default 1000)");
  };

  auto* binomial = app.add_subcommand("binomial", "Failure-on-demand test design");
  binomial->require_subcommand(1);
  auto* b_cutoff = binomial->add_subcommand("cutoff", "Cutoff c for a given n");
  b_cutoff->add_option("--n", bo.n, "Items on test (count)")->required();
  add_binomial_common(b_cutoff, true);
  auto* b_assur = binomial->add_subcommand("assurance", "Assurance at a given n");
  b_assur->add_option("--n", bo.n, "Items on test (count)")->required();
  add_binomial_common(b_assur, true);
  auto* b_findn = binomial->add_subcommand("find-n", "Smallest n reaching a target assurance");
  b_findn->add_option("--gamma", bo.gamma, "Target assurance (probability, default 0.5)");
  b_findn->add_option("--n-max", bo.n_max, "Scan bound on n (count, default 1000)");
  add_binomial_common(b_findn, true);
  auto* b_scen = binomial->add_subcommand(
      "mixture-scenarios", "Cutoff distribution over consumer-prior scenarios");
  b_scen->add_option("--n", bo.n, "Items on test (count)")->required();
  b_scen->add_option("--scenarios", bo.scenarios, "Scenarios: w:a,b;w:a,b;...")->required();
  b_scen->add_option("--pi-t", bo.pi_t, "Target reliability pi_T (probability, default 0.96)");
  b_scen->add_option("--delta", bo.delta,
                     "Posterior threshold (probability, default 0.05)");
  b_scen->add_option("--weight-count", bo.weight_count,
                     "Mixture weight update count: survivals|failures (default survivals)");
  add_binomial_common(b_scen, false);

  auto* risk = app.add_subcommand("risk", "Producer/consumer risk criteria");
  risk->require_subcommand(1);
  auto add_risk_common = [&](CLI::App* cmd, bool with_plan) {
    if (with_plan) {
      cmd->add_option("--n", ro.n, "Items on test (count)")->required();
      cmd->add_option("--c", ro.c, "Max allowed failures (count, -1 = none)")->required();
    }
    cmd->add_option("--pi0", ro.pi0, "Acceptable reliability level (probability, default 0.95)");
    cmd->add_option("--pi1", ro.pi1, "Rejectable reliability level (probability, default 0.90)");
  };
  auto* r_cls = risk->add_subcommand("classical", "Risks at fixed reliability levels");
  add_risk_common(r_cls, true);
  auto* r_avg = risk->add_subcommand("average", "Average risks under the design prior");
  add_risk_common(r_avg, true);
  r_avg->add_option("--design", ro.design, "Design prior: p:beta:A,B m:gamma:A,B")
      ->expected(2)->required();
  r_avg->add_option("--draws", ro.draws, "Monte Carlo draws (count, default 100000)");
  auto* r_post = risk->add_subcommand("posterior", "Posterior risks given pass/fail");
  add_risk_common(r_post, true);
  r_post->add_option("--design", ro.design, "Design prior: p:beta:A,B m:gamma:A,B")
      ->expected(2)->required();
  r_post->add_option("--data", ro.data_path, "Historical pass/fail CSV (header n,x)");
  r_post->add_option("--draws", ro.draws, "Monte Carlo draws (count, default 100000)");
  r_post->add_option("--mcmc-iters", ro.mcmc_iters, "MCMC iterations (count, default 11000)");
  r_post->add_option("--mcmc-burnin", ro.mcmc_burnin, "MCMC burn-in (count, default 1000)");
  auto* r_find = risk->add_subcommand("find-plan", "Smallest plan meeting both risk bounds");
  add_risk_common(r_find, false);
  r_find->add_option("--alpha-max", ro.alpha_max,
                     "Max producer risk (probability, default 0.05)");
  r_find->add_option("--beta-max", ro.beta_max,
                     "Max consumer risk (probability, default 0.05)");
  r_find->add_option("--n-max", ro.n_max, "Scan bound on n (count, default 500)");
  r_find->add_option("--design", ro.design, "Design prior: p:beta:A,B m:gamma:A,B")
      ->expected(2)->required();
  r_find->add_option("--data", ro.data_path, "Historical pass/fail CSV (header n,x)");
  r_find->add_option("--draws", ro.draws, "Monte Carlo draws (count, default 100000)");
  r_find->add_option("--mcmc-iters", ro.mcmc_iters, "MCMC iterations (count, default 11000)");
  r_find->add_option("--mcmc-burnin", ro.mcmc_burnin, "MCMC burn-in (count, default 1000)");

  auto* weibull = app.add_subcommand("weibull", "Time-to-failure (accelerated) test design");
  weibull->require_subcommand(1);
  auto add_weibull_common = [&](CLI::App* cmd) {
    cmd->add_option("--target", wo.target,
                    "Reliable-life target: q=0.5,tau=4000,s=25,delta=0.05 "
                    "(q fraction, tau hours, s stress units)")
        ->required();
    cmd->add_option("--prior", wo.prior_path, "Design prior file")->required();
    cmd->add_option("--analysis-prior", wo.analysis_prior_path,
                    "Analysis prior file (defaults to the design prior)");
    cmd->add_option("--sceptical", wo.sceptical,
                    "Calibrate the analysis prior to this prior probability of meeting "
                    "the target (probability)");
    cmd->add_option("--link-k", wo.link_k,
                    "Stress-life link exponent k (unitless, default 1)");
    cmd->add_option("--stress-offset", wo.stress_offset,
                    "Offset subtracted from stress before the link (stress units, default 0)");
    cmd->add_option("--censor-time", censor_flag,
                    "Right-censoring horizon (hours; omit for none)");
    cmd->add_option("--data", wo.data_path,
                    "Historical lifetime CSV (header location,stress,time,censored)");
    cmd->add_option("--mcmc-iters", wo.mcmc_iters,
                    "Design/analysis MCMC iterations (count, default 11000)");
    cmd->add_option("--mcmc-burnin", wo.mcmc_burnin,
                    "Design/analysis MCMC burn-in (count, default 1000)");
    cmd->add_option("--inner-iters", wo.inner_iters,
                    "Inner chain iterations per simulated dataset (count, default 2500)");
    cmd->add_option("--inner-burnin", wo.inner_burnin,
                    "Inner chain burn-in (count, default 500)");
  };
  auto* w_analyze = weibull->add_subcommand("analyze", "Pass/fail analysis of observed data");
  add_weibull_common(w_analyze);
  auto* w_assur = weibull->add_subcommand("assurance", "Assurance curve over sample sizes");
  add_weibull_common(w_assur);
  w_assur->add_option("--stresses", wo.stresses,
                      "Test stress allocation: stress:fraction,stress:fraction");
  w_assur->add_option("--grid", wo.grid, "Sample-size grid min:max:points (default 1:60:60)");
  w_assur->add_option("--reps", wo.reps, "Repeats per grid point (count, default 20)");
  w_assur->add_option("--curve-out", wo.curve_out, "Also write the curve TSV to this file");
  auto* w_findn = weibull->add_subcommand("find-n", "Smallest n reaching a target assurance");
  add_weibull_common(w_findn);
  w_findn->add_option("--stresses", wo.stresses,
                      "Test stress allocation: stress:fraction,stress:fraction");
  w_findn->add_option("--grid", wo.grid, "Sample-size grid min:max:points (default 1:60:60)");
  w_findn->add_option("--reps", wo.reps, "Repeats per grid point (count, default 20)");
  w_findn->add_option("--gamma", wo.gamma, "Target assurance (probability, default 0.8)");
  w_findn->add_option("--curve-out", wo.curve_out, "Also write the curve TSV to this file");
  auto* w_surface = weibull->add_subcommand("surface", "Two-stress design surface");
  add_weibull_common(w_surface);
  w_surface->add_option("--stress-a", wo.stress_a, "First group stress (stress units)")
      ->required();
  w_surface->add_option("--stress-b", wo.stress_b, "Second group stress (stress units)")
      ->required();
  w_surface->add_option("--grid-a", wo.grid_a, "Max items in group a (count, default 20)");
  w_surface->add_option("--grid-b", wo.grid_b, "Max items in group b (count, default 20)");
  w_surface->add_option("--reps", wo.reps, "Repeats per cell (count, default 20)");
  w_surface->add_option("--gamma", wo.gamma,
                        "Assurance threshold for the ranked designs (probability, default 0.8)");

  auto* elicit = app.add_subcommand("elicit", "Prior elicitation from quantile judgements");
  elicit->require_subcommand(1);
  auto* e_binom = elicit->add_subcommand("binomial", "Design-prior hypers for (p, m)");
  e_binom->add_option("--input", eo.input, "Judgement file ([p]/[m] sections)")->required();
  auto* e_weib = elicit->add_subcommand("weibull", "Design-prior hypers for the stress-life model");
  e_weib->add_option("--input", eo.input, "Judgement file (staged sections)")->required();
  e_weib->add_option("--out", eo.out_prior, "Write the derived prior to this file");
  auto* e_scep = elicit->add_subcommand("sceptical", "Sceptical beta analysis prior");
  e_scep->add_option("--pi-t", eo.pi_t, "Target reliability (probability, default 0.96)");
  e_scep->add_option("--delta", eo.delta,
                     "Prior probability that the target is met (probability, default 0.05)");
  e_scep->add_option("--b", eo.b_fixed, "Fixed second shape parameter (unitless, default 2)");

  // global flags remain usable after a subcommand name
  std::function<void(CLI::App*)> allow_parent_flags = [&](CLI::App* node) {
    for (CLI::App* sub : node->get_subcommands(nullptr)) {
      sub->fallthrough();
      allow_parent_flags(sub);
    }
  };
  allow_parent_flags(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad command line counts as incoherent input
  }

  try {
    if (censor_flag >= 0.0) wo.censor_time = censor_flag;
    if (b_cutoff->parsed()) return run_binomial_cutoff(bo, g);
    if (b_assur->parsed()) return run_binomial_assurance(bo, g);
    if (b_findn->parsed()) return run_binomial_find_n(bo, g);
    if (b_scen->parsed()) return run_binomial_scenarios(bo, g);
    if (r_cls->parsed()) return run_risk_classical(ro, g);
    if (r_avg->parsed()) return run_risk_average(ro, g);
    if (r_post->parsed()) return run_risk_posterior(ro, g);
    if (r_find->parsed()) return run_risk_find_plan(ro, g);
    if (w_analyze->parsed()) return run_weibull_analyze(wo, g);
    if (w_assur->parsed()) return run_weibull_assurance(wo, g, false);
    if (w_findn->parsed()) return run_weibull_assurance(wo, g, true);
    if (w_surface->parsed()) return run_weibull_surface(wo, g);
    if (e_binom->parsed()) return run_elicit_binomial(eo, g);
    if (e_weib->parsed()) return run_elicit_weibull(eo, g);
    if (e_scep->parsed()) return run_elicit_sceptical(eo, g);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const rdt::incoherence_error& e) {
    std::cerr << "error (incoherent input): " << e.what() << "\n";
    return 2;
  } catch (const rdt::domain_error& e) {
    std::cerr << "error (incoherent input): " << e.what() << "\n";
    return 2;
  } catch (const rdt::infeasible_error& e) {
    std::cerr << "error (infeasible): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
