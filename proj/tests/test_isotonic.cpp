#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rdt/isotonic.hpp"
#include "rdt/random.hpp"

using namespace rdt;

TEST_CASE("PAVA on hand-worked cases") {
  {
    const std::vector<double> y{1.0, 2.0, 3.0};
    const std::vector<double> w{1.0, 1.0, 1.0};
    const auto fit = isotonic_nondecreasing(y, w);
    CHECK(fit.fitted == y);  // already monotone: untouched
  }
  {
    const std::vector<double> y{3.0, 1.0};
    const std::vector<double> w{1.0, 1.0};
    const auto fit = isotonic_nondecreasing(y, w);
    CHECK(fit.fitted[0] == Catch::Approx(2.0));
    CHECK(fit.fitted[1] == Catch::Approx(2.0));
    CHECK(fit.block_weight[0] == Catch::Approx(2.0));
  }
  {
    // weighted pooling: (4*1 + 0*3)/4 with the violator pulled down
    const std::vector<double> y{4.0, 0.0};
    const std::vector<double> w{1.0, 3.0};
    const auto fit = isotonic_nondecreasing(y, w);
    CHECK(fit.fitted[0] == Catch::Approx(1.0));
    CHECK(fit.fitted[1] == Catch::Approx(1.0));
  }
}

TEST_CASE("PAVA properties on random inputs") {
  Rng rng(RandomStream{301, 0});
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 40);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform();
      w[i] = 0.5 + 4.0 * rng.uniform();
    }
    const auto fit = isotonic_nondecreasing(y, w);
    for (std::size_t i = 1; i < n; ++i) REQUIRE(fit.fitted[i] >= fit.fitted[i - 1] - 1e-14);
    // idempotent
    const auto refit = isotonic_nondecreasing(fit.fitted, w);
    for (std::size_t i = 0; i < n; ++i)
      REQUIRE(refit.fitted[i] == Catch::Approx(fit.fitted[i]).margin(1e-13));
    // weighted residuals balance within each block
    double block_resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      block_resid += w[i] * (y[i] - fit.fitted[i]);
      const bool block_end = i + 1 == n || fit.fitted[i + 1] > fit.fitted[i] + 1e-14;
      if (block_end) {
        REQUIRE(std::fabs(block_resid) < 1e-10);
        block_resid = 0.0;
      }
    }
  }
}

TEST_CASE("2-D isotonic projection") {
  Rng rng(RandomStream{302, 0});
  const std::size_t rows = 6, cols = 5;
  std::vector<double> y(rows * cols), w(rows * cols);
  for (auto& v : y) v = rng.uniform();
  for (auto& v : w) v = 0.5 + 2.0 * rng.uniform();
  const auto f = isotonic_nondecreasing_2d(y, w, rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c + 1 < cols; ++c)
      REQUIRE(f[r * cols + c + 1] >= f[r * cols + c] - 1e-9);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r + 1 < rows; ++r)
      REQUIRE(f[(r + 1) * cols + c] >= f[r * cols + c] - 1e-9);
  // idempotent
  const auto f2 = isotonic_nondecreasing_2d(f, w, rows, cols);
  for (std::size_t i = 0; i < f.size(); ++i)
    REQUIRE(f2[i] == Catch::Approx(f[i]).margin(1e-8));
  // a bi-monotone input is returned unchanged
  std::vector<double> mono(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      mono[r * cols + c] = 0.1 * static_cast<double>(r) + 0.05 * static_cast<double>(c);
  const auto f3 = isotonic_nondecreasing_2d(mono, w, rows, cols);
  for (std::size_t i = 0; i < mono.size(); ++i)
    REQUIRE(f3[i] == Catch::Approx(mono[i]).margin(1e-12));
  // single row reduces to 1-D PAVA
  std::vector<double> one_row(cols), wr(cols, 1.0);
  for (auto& v : one_row) v = rng.uniform();
  const auto f4 = isotonic_nondecreasing_2d(one_row, wr, 1, cols);
  const auto f5 = isotonic_nondecreasing(one_row, wr);
  for (std::size_t i = 0; i < cols; ++i)
    REQUIRE(f4[i] == Catch::Approx(f5.fitted[i]).margin(1e-10));
}

TEST_CASE("2-D projection is no farther than naive row-then-column sweeps") {
  Rng rng(RandomStream{303, 0});
  const std::size_t rows = 5, cols = 5;
  std::vector<double> y(rows * cols), w(rows * cols, 1.0);
  for (auto& v : y) v = rng.uniform();
  const auto f = isotonic_nondecreasing_2d(y, w, rows, cols);
  // naive: project rows, then columns (feasible but not the projection)
  std::vector<double> naive = y;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> ry(naive.begin() + r * cols, naive.begin() + (r + 1) * cols);
    std::vector<double> rw(w.begin() + r * cols, w.begin() + (r + 1) * cols);
    auto fit = isotonic_nondecreasing(ry, rw);
    for (std::size_t c = 0; c < cols; ++c) naive[r * cols + c] = fit.fitted[c];
  }
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> cy(rows), cw(rows, 1.0);
    for (std::size_t r = 0; r < rows; ++r) cy[r] = naive[r * cols + c];
    auto fit = isotonic_nondecreasing(cy, cw);
    for (std::size_t r = 0; r < rows; ++r) naive[r * cols + c] = fit.fitted[r];
  }
  bool naive_monotone = true;
  for (std::size_t r = 0; r < rows && naive_monotone; ++r)
    for (std::size_t c = 0; c + 1 < cols; ++c)
      if (naive[r * cols + c + 1] < naive[r * cols + c] - 1e-12) naive_monotone = false;
  auto dist = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += (v[i] - y[i]) * (v[i] - y[i]);
    return s;
  };
  if (naive_monotone) CHECK(dist(f) <= dist(naive) + 1e-9);
}
