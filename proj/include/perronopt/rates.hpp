#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "perronopt/errors.hpp"

namespace perronopt {

// Transition rates lambda_0..lambda_n of a chain with n sites. Every entry is
// strictly positive; the budget sum <= n+1 is the optimizer's business.
class RateVector {
 public:
  explicit RateVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw DomainError("rate vector needs at least 2 entries (n >= 1), got " +
                        std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
        throw DomainError("rate lambda_" + std::to_string(i) +
                          " must be positive and finite, got " + std::to_string(values_[i]));
      }
    }
  }

  RateVector(std::initializer_list<double> values) : RateVector(std::vector<double>(values)) {}

  static RateVector ones(int n) {
    if (n < 1) throw DomainError("chain length n must be >= 1, got " + std::to_string(n));
    return RateVector(std::vector<double>(static_cast<std::size_t>(n) + 1, 1.0));
  }

  // number of sites
  int n() const noexcept { return static_cast<int>(values_.size()) - 1; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  double min() const {
    double m = values_[0];
    for (double x : values_) m = x < m ? x : m;
    return m;
  }

  RateVector scaled(double c) const {
    if (!(c > 0.0)) throw DomainError("scale factor must be positive");
    std::vector<double> out(values_);
    for (double& x : out) x *= c;
    return RateVector(std::move(out));
  }

  // Rescaled so that the entries sum to n+1 (active budget).
  RateVector normalized_to_budget() const { return scaled((n() + 1) / sum()); }

  RateVector with_entry(std::size_t i, double value) const {
    std::vector<double> out(values_);
    out.at(i) = value;
    return RateVector(std::move(out));
  }

  bool operator==(const RateVector&) const = default;

 private:
  std::vector<double> values_;
};

}  // namespace perronopt
