#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <vector>

#include "oracles.hpp"
#include "rdt/binomial.hpp"
#include "rdt/io.hpp"

using namespace rdt;

namespace {

// Closed-form assurance under a fixed beta(a, b) prior:
// sum_{y<=c} C(n,y) B(a+n-y, b+y) / B(a,b).
double beta_binom_assurance(int n, int c, double a, double b) {
  if (c < 0) return 0.0;
  double total = 0.0;
  for (int y = 0; y <= c; ++y) {
    const double lc = log_gamma(n + 1.0) - log_gamma(y + 1.0) - log_gamma(n - y + 1.0);
    total += std::exp(lc + log_beta(a + n - y, b + y) - log_beta(a, b));
  }
  return total;
}

// Quadrature of Pr_A(pi <= pi_t | Y = c) for a mixture prior, straight from
// the prior-times-likelihood ratio (binomial coefficient cancels).
double mixture_fail_prob_quadrature(int n, int c, const MixturePrior& mix, double pi_t) {
  auto integrand = [&](double lo, double hi) {
    return oracle::integrate(
        [&](double pi) {
          if (pi <= 0.0 || pi >= 1.0) return 0.0;
          double density = 0.0;
          for (std::size_t i = 0; i < mix.components.size(); ++i) {
            const auto& comp = mix.components[i];
            density += mix.weights[i] *
                       std::exp((comp.a - 1.0) * std::log(pi) +
                                (comp.b - 1.0) * std::log1p(-pi) -
                                log_beta(comp.a, comp.b));
          }
          return std::exp(c * std::log1p(-pi) + (n - c) * std::log(pi)) * density;
        },
        lo, hi, 1e-14);
  };
  const double numer = integrand(0.0, pi_t);
  const double denom = numer + integrand(pi_t, 1.0);
  return numer / denom;
}

}  // namespace

TEST_CASE("binomial pmf and cdf") {
  CHECK(binom_pmf(0, 40, 0.04) == Catch::Approx(std::pow(0.96, 40)).epsilon(1e-12));
  CHECK(binom_cdf(2, 10, 0.5) == Catch::Approx(56.0 / 1024.0).epsilon(1e-13));
  for (double th : {0.0, 0.2, 0.7, 1.0}) CHECK(binom_cdf(10, 10, th) == 1.0);
  // pmf sums to one
  for (int n : {1, 7, 23}) {
    double s = 0.0;
    for (int y = 0; y <= n; ++y) s += binom_pmf(y, n, 0.31);
    CHECK(s == Catch::Approx(1.0).epsilon(1e-12));
  }
  // log-space path survives n = 1e6
  const double big = binom_cdf(1000, 1000000, 1.05e-3);
  CHECK(big > 0.0);
  CHECK(big < 0.07);
  CHECK(binom_cdf(-1, 10, 0.5) == 0.0);
  CHECK_THROWS_AS(binom_cdf(11, 10, 0.5), domain_error);
  CHECK_THROWS_AS(binom_pmf(3, 2, 0.5), domain_error);
}

TEST_CASE("binomial cdf agrees with the beta-identity form") {
  Rng rng(RandomStream{401, 0});
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + static_cast<int>(rng.uniform() * 400);
    const int c = static_cast<int>(rng.uniform() * n);  // c < n
    const double th = rng.uniform();
    const double direct = binom_cdf(c, n, th);
    const double via_beta = 1.0 - reg_inc_beta(th, c + 1.0, static_cast<double>(n - c));
    REQUIRE(std::fabs(direct - via_beta) < 1e-9);
  }
}

TEST_CASE("exact-test cutoff") {
  CHECK(cutoff_exact(40, 0.96, 0.05) == -1);  // 0.96^40 ~ 0.195 > 0.05
  CHECK(cutoff_exact(1, 0.5, 0.6) == 0);
  // against exhaustive long-double tail summation
  for (int n : {13, 57, 227, 400}) {
    int want = -1;
    for (int y = 0; y <= n; ++y) {
      if (oracle::ref_binom_cdf(y, n, 0.04) <= 0.05)
        want = y;
      else
        break;
    }
    CHECK(cutoff_exact(n, 0.96, 0.05) == want);
  }
  CHECK(cutoff_exact(227, 0.96, 0.05) == 4);
}

TEST_CASE("normal-approximation cutoff") {
  CHECK(cutoff_normal(100, 0.5, 0.05) == 41);
  CHECK(cutoff_normal(1, 0.96, 0.5) == 0);
  // near the exact cutoff at the worked example's sample size
  CHECK(std::abs(cutoff_normal(227, 0.96, 0.05) - cutoff_exact(227, 0.96, 0.05)) <= 1);
}

TEST_CASE("posterior fail probability, single beta") {
  CHECK(posterior_fail_prob(12, 3, {2.5, 1.5}, 1.0) == 1.0);
  // the published sceptical prior's actual mass below 0.96 (frozen reference)
  CHECK(posterior_fail_prob(0, 0, {6.45, 2.0}, 0.96) ==
        Catch::Approx(0.966785424415941).margin(1e-12));
  // posterior beta(a + n - c, b + c) = beta(50, 2); frozen 0.03092265124392068
  CHECK(posterior_fail_prob(50, 1, {1.0, 1.0}, 0.9) ==
        Catch::Approx(reg_inc_beta(0.9, 50.0, 2.0)).margin(1e-14));
  CHECK(posterior_fail_prob(50, 1, {1.0, 1.0}, 0.9) ==
        Catch::Approx(0.03092265124392068).margin(1e-12));
  // quadrature cross-check
  const MixturePrior single = MixturePrior::single({1.0, 1.0});
  CHECK(posterior_fail_prob(50, 1, {1.0, 1.0}, 0.9) ==
        Catch::Approx(mixture_fail_prob_quadrature(50, 1, single, 0.9)).margin(1e-9));
}

TEST_CASE("mixture posterior update") {
  const MixturePrior paper{{{106.0, 2.0}, {38.0, 2.0}}, {0.6, 0.4}};
  {
    const auto u = mixture_posterior_update(paper, 0, 0);
    CHECK(u.weights[0] == Catch::Approx(0.6).margin(1e-12));
    CHECK(u.components[0].a == 106.0);
    CHECK(u.components[1].b == 2.0);
  }
  {
    const auto u = mixture_posterior_update(MixturePrior::single({3.0, 4.0}), 12, 7);
    CHECK(u.weights[0] == Catch::Approx(1.0));
    CHECK(u.components[0].a == 10.0);
    CHECK(u.components[0].b == 9.0);
  }
  {
    // evidence-ratio oracle via log_beta at (n=10, y=9)
    const auto u = mixture_posterior_update(paper, 10, 9);
    double w1 = 0.6 * std::exp(log_beta(106.0 + 9, 2.0 + 1) - log_beta(106.0, 2.0));
    double w2 = 0.4 * std::exp(log_beta(38.0 + 9, 2.0 + 1) - log_beta(38.0, 2.0));
    CHECK(u.weights[0] == Catch::Approx(w1 / (w1 + w2)).margin(1e-12));
  }
}

TEST_CASE("mixture posterior fail probability") {
  const MixturePrior paper{{{106.0, 2.0}, {38.0, 2.0}}, {0.6, 0.4}};
  CHECK(posterior_fail_prob_mixture(30, 2, paper, 1.0) == Catch::Approx(1.0).margin(1e-12));
  // single component reduces to the plain beta posterior
  Rng rng(RandomStream{402, 0});
  for (int i = 0; i < 100; ++i) {
    const double a = std::exp(3.0 * rng.uniform());
    const double b = std::exp(2.0 * rng.uniform());
    const int n = 1 + static_cast<int>(rng.uniform() * 200);
    const int c = static_cast<int>(rng.uniform() * (n + 1));
    const double pi_t = 0.2 + 0.79 * rng.uniform();
    REQUIRE(posterior_fail_prob_mixture(n, c, MixturePrior::single({a, b}), pi_t) ==
            Catch::Approx(posterior_fail_prob(n, c, {a, b}, pi_t)).margin(1e-13));
  }
  // consistent update matches direct quadrature of the prior/likelihood ratio
  for (const auto& [n, c] : std::vector<std::pair<int, int>>{
           {20, 2}, {60, 5}, {120, 1}, {222, 4}}) {
    const double got =
        posterior_fail_prob_mixture(n, c, paper, 0.96, MixtureWeightCount::survivals);
    const double want = mixture_fail_prob_quadrature(n, c, paper, 0.96);
    REQUIRE(got == Catch::Approx(want).margin(1e-9));
  }
  // the failure-count weight convention reproduces the published curve's
  // crossing between n = 221 and n = 222 (frozen 40-digit references)
  CHECK(posterior_fail_prob_mixture(221, 4, paper, 0.96, MixtureWeightCount::failures) ==
        Catch::Approx(0.0500567404526).margin(1e-9));
  CHECK(posterior_fail_prob_mixture(222, 4, paper, 0.96, MixtureWeightCount::failures) ==
        Catch::Approx(0.048880735817).margin(1e-9));
}

TEST_CASE("bayes cutoff") {
  const MixturePrior sceptical = MixturePrior::single({6.45, 2.0});
  {
    // delta = 1: every c passes
    BayesThreshold rule{sceptical, 0.96, 1.0, MixtureWeightCount::survivals};
    CHECK(cutoff_bayes(25, rule) == 25);
  }
  {
    // c(n) nondecreasing in n
    BayesThreshold rule{sceptical, 0.96, 0.05, MixtureWeightCount::survivals};
    int prev = -1;
    for (int n = 1; n <= 500; ++n) {
      const int c = cutoff_bayes(n, rule);
      REQUIRE(c >= prev);
      prev = c;
    }
  }
  {
    // scan-based cutoff equals the largest c passing a quadrature check
    const MixturePrior paper{{{106.0, 2.0}, {38.0, 2.0}}, {0.6, 0.4}};
    BayesThreshold rule{paper, 0.96, 0.05, MixtureWeightCount::survivals};
    const int c = cutoff_bayes(222, rule);
    int want = -1;
    for (int cc = 0; cc <= 222; ++cc) {
      if (mixture_fail_prob_quadrature(222, cc, paper, 0.96) <= 0.05)
        want = cc;
      else
        break;
    }
    CHECK(c == want);
    // the replication convention gives the published jump at 222
    BayesThreshold repl{paper, 0.96, 0.05, MixtureWeightCount::failures};
    CHECK(cutoff_bayes(221, repl) == 3);
    CHECK(cutoff_bayes(222, repl) == 4);
  }
}

TEST_CASE("posterior fail probability is nondecreasing in c") {
  const BetaComponent prior{6.45, 2.0};
  for (int n : {5, 40, 120, 200}) {
    double prev = 0.0;
    for (int c = 0; c <= n; ++c) {
      const double p = posterior_fail_prob(n, c, prior, 0.96);
      REQUIRE(p >= prev - 1e-12);
      prev = p;
    }
  }
}

TEST_CASE("assurance basics") {
  const std::vector<double> pis{0.97, 0.99, 0.95};
  // c = n: certain success
  CHECK(assurance_from_draws(10, 10, pis).value == 1.0);
  // c = -1: certain failure
  CHECK(assurance_from_draws(10, -1, pis).value == 0.0);
  // degenerate design prior (point mass) equals the cdf exactly
  const std::vector<double> point(100, 0.93);
  const auto est = assurance_from_draws(25, 2, point);
  CHECK(est.value == binom_cdf(2, 25, 1.0 - 0.93));
  CHECK(est.mc_std_error == 0.0);
}

TEST_CASE("Monte Carlo assurance matches the conjugate closed form") {
  Rng prng(RandomStream{403, 0});
  int within = 0;
  const int cases = 100;
  for (int i = 0; i < cases; ++i) {
    const double a = 2.0 + 130.0 * prng.uniform();
    const double b = 0.5 + 6.0 * prng.uniform();
    const int n = 5 + static_cast<int>(prng.uniform() * 300);
    const int c = std::min(static_cast<int>(prng.uniform() * 8), n);
    std::vector<double> pis(20000);
    Rng rng(RandomStream{404, 0}.sub(static_cast<std::uint64_t>(i)));
    for (auto& pi : pis) pi = rng.beta(a, b);
    const auto est = assurance_from_draws(n, c, pis);
    const double want = beta_binom_assurance(n, c, a, b);
    const double se = std::max(est.mc_std_error, 1e-12);
    if (std::fabs(est.value - want) <= 3.0 * se) ++within;
  }
  CHECK(within >= 97);
}

TEST_CASE("sawtooth: assurance nonincreasing in n while c is constant") {
  Rng rng(RandomStream{405, 0});
  BinomialDesignPrior design{78.0, 2.0, 200.0, 1.0};
  const auto pis = sample_design_prior_pis(design, 20000, RandomStream{406, 0});
  const ExactTest rule{0.96, 0.05};
  double prev_assurance = -1.0;
  int prev_c = -2;
  for (int n = 1; n <= 500; ++n) {
    const int c = cutoff_exact(n, rule.pi_t, rule.alpha);
    const double a = assurance_from_draws(n, c, pis).value;
    if (c == prev_c) REQUIRE(a <= prev_assurance + 1e-12);
    prev_c = c;
    prev_assurance = a;
  }
}

TEST_CASE("find_min_n") {
  BinomialDesignPrior design{78.0, 2.0, 200.0, 1.0};
  const auto pis = sample_design_prior_pis(design, 20000, RandomStream{407, 0});
  const CutoffRule rule = ExactTest{0.96, 0.05};
  {
    const auto res = find_min_n(rule, pis, 0.0, 50);
    CHECK(res.reached);
    CHECK(res.n == 1);
  }
  {
    // gamma above the design-prior ceiling: unreachable, carries the best
    const auto res = find_min_n(rule, pis, 0.9, 400);
    CHECK_FALSE(res.reached);
    CHECK(res.best_n > 0);
    CHECK(res.best_value < 0.9);
  }
  {
    // upward scan equals the brute-force smallest n
    const auto res = find_min_n(rule, pis, 0.4, 400);
    REQUIRE(res.reached);
    int brute = -1;
    for (int n = 1; n <= 400; ++n) {
      const int c = cutoff_exact(n, 0.96, 0.05);
      if (assurance_from_draws(n, c, pis).value >= 0.4) {
        brute = n;
        break;
      }
    }
    CHECK(res.n == brute);
    // worker count does not change the answer
    const auto res2 = find_min_n(rule, pis, 0.4, 400, 2);
    CHECK(res2.n == res.n);
    CHECK(res2.estimate.value == res.estimate.value);
  }
}

TEST_CASE("scenario cutoff distribution") {
  BinomialDesignPrior design{78.0, 2.0, 200.0, 1.0};
  const auto pis = sample_design_prior_pis(design, 20000, RandomStream{408, 0});
  const MixturePrior optimistic = MixturePrior::single({106.0, 2.0});
  const MixturePrior doubtful = MixturePrior::single({38.0, 2.0});
  {
    // single scenario reduces to plain assurance at that prior's cutoff
    std::vector<ConsumerScenario> one{{1.0, doubtful}};
    const auto res = assurance_cutoff_distribution(150, one, 0.96, 0.05, pis);
    BayesThreshold rule{doubtful, 0.96, 0.05, MixtureWeightCount::survivals};
    const auto direct = assurance_posterior(150, CutoffRule{rule}, pis);
    CHECK(res.estimate.value == Catch::Approx(direct.value).margin(1e-12));
  }
  {
    // identical priors in two scenarios collapse to one
    std::vector<ConsumerScenario> two{{0.3, doubtful}, {0.7, doubtful}};
    std::vector<ConsumerScenario> one{{1.0, doubtful}};
    const auto a = assurance_cutoff_distribution(150, two, 0.96, 0.05, pis);
    const auto b = assurance_cutoff_distribution(150, one, 0.96, 0.05, pis);
    CHECK(a.estimate.value == Catch::Approx(b.estimate.value).margin(1e-12));
  }
  {
    // sum_m q_m Pr(Y <= c_m) equals the re-expression through u_j and
    // upper-tail weights sum_j u_j sum_{k<=j} s-type masses, computed directly
    std::vector<ConsumerScenario> three{
        {0.5, optimistic}, {0.3, doubtful}, {0.2, MixturePrior::single({60.0, 2.0})}};
    const int n = 180;
    const auto res = assurance_cutoff_distribution(n, three, 0.96, 0.05, pis);
    double re_expressed = 0.0;
    for (std::size_t m = 0; m < three.size(); ++m) {
      double pass = 0.0;
      for (double pi : pis) pass += binom_cdf(res.scenario_cutoffs[m], n, 1.0 - pi);
      re_expressed += three[m].weight * pass / static_cast<double>(pis.size());
    }
    CHECK(res.estimate.value == Catch::Approx(re_expressed).margin(1e-12));
    // and via the cutoff distribution: sum over j of u_j * mean cdf(j)
    double via_u = 0.0;
    for (int j = res.cutoffs.j_lo; j <= res.cutoffs.j_hi; ++j) {
      const double u = res.cutoffs.mass[static_cast<std::size_t>(j - res.cutoffs.j_lo)];
      if (u == 0.0 || j < 0) continue;
      double pass = 0.0;
      for (double pi : pis) pass += binom_cdf(j, n, 1.0 - pi);
      via_u += u * pass / static_cast<double>(pis.size());
    }
    CHECK(res.estimate.value == Catch::Approx(via_u).margin(1e-12));
  }
}

TEST_CASE("historical CSV") {
  const std::string path = "rdt_test_hist.csv";
  {
    std::ofstream out(path);
    out << "n,x\n100,2\n250,0\n";
  }
  const auto data = read_binomial_history_csv(path);
  REQUIRE(data.records.size() == 2);
  CHECK(data.records[0].demands == 100);
  CHECK(data.records[1].failures == 0);
  {
    std::ofstream out(path);
    out << "n,x\n10,11\n";
  }
  CHECK_THROWS_AS(read_binomial_history_csv(path), incoherence_error);
  {
    std::ofstream out(path);
    out << "x,n\n10,1\n";
  }
  CHECK_THROWS_AS(read_binomial_history_csv(path), incoherence_error);
  std::remove(path.c_str());
}
