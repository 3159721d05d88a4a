#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rdt/errors.hpp"

// Weighted least-squares monotone fits: pool-adjacent-violators in 1-D and
// the projection onto the componentwise-nondecreasing cone in 2-D (Dykstra's
// alternating projections between the row-monotone and column-monotone cones).

namespace rdt {

struct IsotonicFit {
  std::vector<double> fitted;
  // total weight of the level block each point was pooled into
  std::vector<double> block_weight;
};

inline IsotonicFit isotonic_nondecreasing(std::span<const double> y,
                                          std::span<const double> w) {
  const std::size_t n = y.size();
  if (w.size() != n) throw domain_error("isotonic: weight size mismatch");
  IsotonicFit out;
  out.fitted.resize(n);
  out.block_weight.resize(n);
  if (n == 0) return out;
  std::vector<double> mean(n), weight(n);
  std::vector<std::size_t> count(n);
  std::size_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] >= 0.0)) throw domain_error("isotonic: negative weight");
    mean[top] = y[i];
    weight[top] = w[i];
    count[top] = 1;
    ++top;
    while (top > 1 && mean[top - 2] >= mean[top - 1]) {
      const double tw = weight[top - 2] + weight[top - 1];
      if (tw > 0.0)
        mean[top - 2] =
            (mean[top - 2] * weight[top - 2] + mean[top - 1] * weight[top - 1]) / tw;
      else
        mean[top - 2] = 0.5 * (mean[top - 2] + mean[top - 1]);
      weight[top - 2] = tw;
      count[top - 2] += count[top - 1];
      --top;
    }
  }
  std::size_t pos = 0;
  for (std::size_t blk = 0; blk < top; ++blk) {
    for (std::size_t k = 0; k < count[blk]; ++k, ++pos) {
      out.fitted[pos] = mean[blk];
      out.block_weight[pos] = weight[blk];
    }
  }
  return out;
}

// Row-major grid of rows x cols values; returns the weighted L2 projection
// onto { f : f nondecreasing along both axes }.
inline std::vector<double> isotonic_nondecreasing_2d(
    const std::vector<double>& y, const std::vector<double>& w,
    std::size_t rows, std::size_t cols, double tol = 1e-12,
    int max_sweeps = 2000) {
  if (y.size() != rows * cols || w.size() != rows * cols)
    throw domain_error("isotonic_2d: size mismatch");
  std::vector<double> x = y;
  std::vector<double> p(y.size(), 0.0), q(y.size(), 0.0);
  std::vector<double> line_y, line_w;
  auto project_rows = [&](std::vector<double>& v) {
    for (std::size_t r = 0; r < rows; ++r) {
      line_y.assign(v.begin() + r * cols, v.begin() + (r + 1) * cols);
      line_w.assign(w.begin() + r * cols, w.begin() + (r + 1) * cols);
      auto fit = isotonic_nondecreasing(line_y, line_w);
      for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = fit.fitted[c];
    }
  };
  auto project_cols = [&](std::vector<double>& v) {
    line_y.resize(rows);
    line_w.resize(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) {
        line_y[r] = v[r * cols + c];
        line_w[r] = w[r * cols + c];
      }
      auto fit = isotonic_nondecreasing(line_y, line_w);
      for (std::size_t r = 0; r < rows; ++r) v[r * cols + c] = fit.fitted[r];
    }
  };
  std::vector<double> work(y.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    work = x;
    for (std::size_t i = 0; i < work.size(); ++i) work[i] += p[i];
    std::vector<double> before = work;
    project_rows(work);
    for (std::size_t i = 0; i < work.size(); ++i) p[i] = before[i] - work[i];
    for (std::size_t i = 0; i < work.size(); ++i) work[i] += q[i];
    before = work;
    project_cols(work);
    for (std::size_t i = 0; i < work.size(); ++i) q[i] = before[i] - work[i];
    for (std::size_t i = 0; i < work.size(); ++i)
      delta = std::max(delta, std::fabs(work[i] - x[i]));
    x = work;
    if (delta < tol) break;
  }
  return x;
}

}  // namespace rdt
