#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "perronopt/rates.hpp"

namespace testing_support {

// Uniform in [lo, hi) from the raw engine output, so draws are identical
// across standard libraries.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Rates spread over two decades, log-uniform in [0.1, 10).
inline perronopt::RateVector random_rates(std::mt19937_64& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (auto& x : v) x = std::exp(uniform(rng, std::log(0.1), std::log(10.0)));
  return perronopt::RateVector(std::move(v));
}

// Rates within a factor 4, uniform in [0.5, 2). The Perron vector stays
// delocalized, so every sensitivity is well above double rounding.
inline perronopt::RateVector moderate_rates(std::mt19937_64& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) + 1);
  for (auto& x : v) x = uniform(rng, 0.5, 2.0);
  return perronopt::RateVector(std::move(v));
}

using Real50 = boost::multiprecision::cpp_bin_float_50;

// Largest eigenvalue of the zero-diagonal tridiagonal matrix with couplings
// lambda_i^(-1/2), by Sturm-count bisection in 50-digit arithmetic.
inline Real50 sigma_mp(const std::vector<Real50>& lambda) {
  std::vector<Real50> b2(lambda.size());
  Real50 hi = 0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    b2[i] = 1 / lambda[i];
    hi = std::max(hi, Real50(2 * sqrt(b2[i])));
  }
  // number of eigenvalues below x, from the LDL^T pivots of B - xI
  auto below = [&](const Real50& x) {
    std::size_t k = 0;
    Real50 p = -x;
    for (std::size_t i = 0;; ++i) {
      if (p == 0) p = Real50(-1e-60);
      k += p < 0 ? 1 : 0;
      if (i == b2.size()) break;
      p = -x - b2[i] / p;
    }
    return k;
  };
  Real50 lo = 0;
  for (int it = 0; it < 200; ++it) {
    const Real50 mid = (lo + hi) / 2;
    (below(mid) == b2.size() + 1 ? hi : lo) = mid;
  }
  return (lo + hi) / 2;
}

// Central difference of R = sigma^-2 in lambda_i, evaluated in 50 digits.
inline double central_difference_R(const perronopt::RateVector& rates, int i) {
  std::vector<Real50> up(rates.values().begin(), rates.values().end());
  std::vector<Real50> down = up;
  const Real50 h = Real50(1e-6) * up[static_cast<std::size_t>(i)];
  up[static_cast<std::size_t>(i)] += h;
  down[static_cast<std::size_t>(i)] -= h;
  const Real50 su = sigma_mp(up);
  const Real50 sd = sigma_mp(down);
  return static_cast<double>((1 / (su * su) - 1 / (sd * sd)) / (2 * h));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace testing_support
