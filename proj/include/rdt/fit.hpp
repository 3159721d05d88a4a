#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rdt/errors.hpp"

// Small deterministic solvers used by prior calibration and elicitation:
// bracketed bisection and a damped Gauss-Newton in log-parameter space for
// matching distribution summaries (mean/quantiles) with two free parameters.

namespace rdt {

// Root of f on [lo, hi]; requires a sign change on the bracket.
inline double bisect_root(const std::function<double(double)>& f, double lo,
                          double hi, double xtol = 1e-13, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw infeasible_error("bisect_root: no sign change on bracket");
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < xtol * (1.0 + std::fabs(lo) + std::fabs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

struct TwoParamFit {
  double x0 = 0.0;
  double x1 = 0.0;
  double residual = 0.0;  // final max relative residual
  bool converged = false;
};

// Finds positive (x0, x1) such that forward(x0, x1) matches targets in a
// least-squares sense (exactly when an exact solution exists). forward fills
// a residual vector of size n_out evaluated at the current parameters;
// residuals are scaled relative to targets by the caller-provided map.
inline TwoParamFit fit_two_positive_params(
    const std::function<void(double, double, double*)>& forward, int n_out,
    const double* targets, double init0, double init1, int max_iter = 120) {
  auto eval = [&](double u0, double u1, std::vector<double>& r) {
    std::vector<double> out(static_cast<std::size_t>(n_out));
    forward(std::exp(u0), std::exp(u1), out.data());
    for (int i = 0; i < n_out; ++i) {
      const double scale = std::max(std::fabs(targets[i]), 1e-12);
      r[static_cast<std::size_t>(i)] = (out[static_cast<std::size_t>(i)] - targets[i]) / scale;
    }
  };
  auto norm2 = [](const std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return s;
  };
  double u0 = std::log(init0), u1 = std::log(init1);
  std::vector<double> r(static_cast<std::size_t>(n_out)),
      rp(static_cast<std::size_t>(n_out)), rm(static_cast<std::size_t>(n_out));
  eval(u0, u1, r);
  double f = norm2(r);
  TwoParamFit fit;
  for (int it = 0; it < max_iter; ++it) {
    // central-difference Jacobian in the log parameters
    const double h = 1e-6;
    std::vector<double> j0(static_cast<std::size_t>(n_out)),
        j1(static_cast<std::size_t>(n_out));
    eval(u0 + h, u1, rp);
    eval(u0 - h, u1, rm);
    for (int i = 0; i < n_out; ++i)
      j0[static_cast<std::size_t>(i)] =
          (rp[static_cast<std::size_t>(i)] - rm[static_cast<std::size_t>(i)]) / (2.0 * h);
    eval(u0, u1 + h, rp);
    eval(u0, u1 - h, rm);
    for (int i = 0; i < n_out; ++i)
      j1[static_cast<std::size_t>(i)] =
          (rp[static_cast<std::size_t>(i)] - rm[static_cast<std::size_t>(i)]) / (2.0 * h);
    // Gauss-Newton step from the normal equations
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, g0 = 0.0, g1 = 0.0;
    for (int i = 0; i < n_out; ++i) {
      const auto k = static_cast<std::size_t>(i);
      a00 += j0[k] * j0[k];
      a01 += j0[k] * j1[k];
      a11 += j1[k] * j1[k];
      g0 += j0[k] * r[k];
      g1 += j1[k] * r[k];
    }
    double det = a00 * a11 - a01 * a01;
    double d0, d1;
    if (std::fabs(det) < 1e-300) {
      d0 = -g0;  // gradient fallback
      d1 = -g1;
    } else {
      d0 = -(a11 * g0 - a01 * g1) / det;
      d1 = -(a00 * g1 - a01 * g0) / det;
    }
    // damping
    double step = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k) {
      eval(u0 + step * d0, u1 + step * d1, rp);
      const double fn = norm2(rp);
      if (fn < f) {
        u0 += step * d0;
        u1 += step * d1;
        r = rp;
        f = fn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    double rmax = 0.0;
    for (double v : r) rmax = std::max(rmax, std::fabs(v));
    if (rmax < 1e-12) {
      fit.converged = true;
      break;
    }
    if (!improved) break;
  }
  double rmax = 0.0;
  for (double v : r) rmax = std::max(rmax, std::fabs(v));
  if (rmax < 1e-9) fit.converged = true;
  fit.x0 = std::exp(u0);
  fit.x1 = std::exp(u1);
  fit.residual = rmax;
  return fit;
}

}  // namespace rdt
