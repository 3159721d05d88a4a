#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "rdt/errors.hpp"
#include "rdt/special.hpp"

// Counter-based random streams. A stream is addressed by (seed, stream-id);
// draw i is a pure function of (seed, stream-id, i), so substreams derived
// for parallel work reproduce bit-identically regardless of scheduling.

namespace rdt {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // Derived substream; chaining sub() calls is the intended way to address
  // nested work units (grid cell, repeat, chain block, ...).
  [[nodiscard]] RandomStream sub(std::uint64_t id) const {
    return {seed, detail::mix64(stream + detail::kGolden + id * 0xBF58476D1CE4E5B9ULL)};
  }
};

class Rng {
 public:
  explicit Rng(RandomStream s)
      : base_(detail::mix64(s.seed + 0xA24BAED4963EE407ULL) ^
              detail::mix64(s.stream + 0x9FB21C651E98DF25ULL)) {}

  std::uint64_t next_u64() { return detail::mix64(base_ + (++pos_) * detail::kGolden); }

  // Uniform on the open interval (0,1); never returns an endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  double normal(double mu, double sd) {
    if (!(sd >= 0.0)) throw domain_error("normal: sd must be nonnegative");
    return mu + sd * normal();
  }

  // Marsaglia-Tsang squeeze, with the boost step for shape < 1.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw domain_error("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
      throw domain_error("beta: shape parameters must be positive");
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    const double s = x + y;
    if (s <= 0.0) return 0.5;
    return x / s;
  }

  // Weibull(rho, beta) by inversion: t = rho^{-1} (-log U)^{1/beta}.
  double weibull(double rho, double beta_shape) {
    if (!(rho > 0.0) || !(beta_shape > 0.0))
      throw domain_error("weibull: rho and beta must be positive");
    return std::pow(-std::log(uniform()), 1.0 / beta_shape) / rho;
  }

  // X with 1/X ~ gamma(shape, rate).
  double inverse_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }

  // Bivariate normal with mean (mu0, mu1) and covariance
  // [[s00, s01], [s01, s11]]; zero variances are allowed (point coordinates).
  std::array<double, 2> bvn(double mu0, double mu1, double s00, double s01, double s11) {
    if (!(s00 >= 0.0) || !(s11 >= 0.0))
      throw domain_error("bvn: variances must be nonnegative");
    const double l11 = std::sqrt(s00);
    double l21 = 0.0, l22sq = s11;
    if (l11 > 0.0) {
      l21 = s01 / l11;
      l22sq = s11 - l21 * l21;
    } else if (s01 != 0.0) {
      throw domain_error("bvn: covariance not positive semidefinite");
    }
    if (l22sq < -1e-12 * (1.0 + s11))
      throw domain_error("bvn: covariance not positive semidefinite");
    const double l22 = std::sqrt(std::max(l22sq, 0.0));
    const double z1 = normal();
    const double z2 = normal();
    return {mu0 + l11 * z1, mu1 + l21 * z1 + l22 * z2};
  }

 private:
  std::uint64_t base_;
  std::uint64_t pos_ = 0;
};

}  // namespace rdt
