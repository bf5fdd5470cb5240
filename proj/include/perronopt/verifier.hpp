#pragma once

// Checks the bounds satisfied by the optimal rates (Perron-root bracket,
// exponential approach of lambda_i to 4/sigma^2, midpoint bounds) and the
// structural properties of the optimum, on a solved instance.
//
// Inequalities involving 4/sigma^2 - lambda_i are evaluated on the solver's
// bulk_gap, which the recursion solver computes at working precision; in the
// middle of a long chain the gap is far below double resolution of lambda_i.
// Those gaps are compared without slack. Gaps of the equalization solver are
// plain double differences and get the usual slack.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "perronopt/errors.hpp"
#include "perronopt/optimizer.hpp"

namespace perronopt {

inline constexpr double kStrictSlack = 1e-12;
inline constexpr double kEqualityTol = 1e-9;

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool passed = false;
  bool marginal = false;  // within kStrictSlack of violation
};

struct BoundsReport {
  int n = 0;
  std::vector<BoundCheck> checks;
  double M = std::numeric_limits<double>::quiet_NaN();
  std::map<double, int> turnpike_width;
  bool all_passed = true;

  // lhs < rhs, with slack against floating-point ties
  void less(std::string name, double lhs, double rhs, double slack = kStrictSlack) {
    BoundCheck c{std::move(name), lhs, rhs, lhs < rhs + slack, false};
    c.marginal = c.passed && !(lhs < rhs - slack);
    push(std::move(c));
  }

  // |lhs - rhs| <= tol * max(1, |rhs|)
  void equal(std::string name, double lhs, double rhs, double tol = kEqualityTol) {
    const double scale = std::max(1.0, std::abs(rhs));
    push(BoundCheck{std::move(name), lhs, rhs, std::abs(lhs - rhs) <= tol * scale, false});
  }

  // boolean property; lhs/rhs record the flag as 1/0
  void holds(std::string name, bool ok) { push(BoundCheck{std::move(name), ok ? 1.0 : 0.0, 1.0, ok, false}); }

  void merge(const BoundsReport& other) {
    for (const auto& c : other.checks) push(c);
    if (!std::isnan(other.M)) M = other.M;
    for (const auto& [eps, w] : other.turnpike_width) turnpike_width[eps] = w;
  }

  const BoundCheck* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  std::size_t failures() const {
    std::size_t k = 0;
    for (const auto& c : checks) k += c.passed ? 0 : 1;
    return k;
  }

 private:
  void push(BoundCheck c) {
    all_passed = all_passed && c.passed;
    checks.push_back(std::move(c));
  }
};

namespace detail {

inline std::string indexed(const char* base, int i) { return std::string(base) + "[" + std::to_string(i) + "]"; }

inline double gap_slack(const OptimalSolution& sol) {
  return sol.method == SolverMethod::recursion ? 0.0 : kStrictSlack;
}

}  // namespace detail

// Perron-root bracket, lower bounds on lambda_i relative to 4/sigma^2 (even
// and odd midpoints included) and, for n >= 36, 0 < 4/sigma^2 - lambda_i < 2^-i.
inline BoundsReport check_theorem1(const OptimalSolution& sol) {
  const int n = sol.n();
  BoundsReport rep;
  rep.n = n;
  if (n < 2) return rep;

  const double sigma = sol.sigma;
  const double cap = 4.0 / (sigma * sigma);
  const double ln2 = std::numbers::ln2;
  const auto& gap = sol.bulk_gap;
  const int half = n / 2;
  const double slack = detail::gap_slack(sol);

  rep.less("sigma_lower", 2.0 * std::sqrt(1.0 - 4.0 * ln2 / (n + 1)), sigma);
  rep.less("sigma_upper", sigma, 2.0 * std::sqrt(1.0 - 1.0 / (n + 1)));

  // (4/s^2)(1 - ln2/2^i) < lambda_i < 4/s^2, written on the gap 4/s^2 - lambda_i
  for (int i = 0; i < half; ++i) {
    rep.less(detail::indexed("lambda_lower", i), gap[i], cap * ln2 / std::ldexp(1.0, i), slack);
    rep.less(detail::indexed("lambda_upper", i), 0.0, gap[i], slack);
  }
  if (n % 2 == 0) {
    rep.less(detail::indexed("lambda_mid_lower_even", half), gap[half],
             cap * (4.0 / 3.0) * ln2 / std::ldexp(1.0, half), slack);
    rep.less(detail::indexed("lambda_mid_upper_even", half), 0.0, gap[half], slack);
  } else {
    rep.less(detail::indexed("lambda_mid_lower_odd", half), gap[half], cap * ln2 / std::ldexp(1.0, half), slack);
    rep.equal(detail::indexed("lambda_mid_equal_odd", half), sol.rates[half], sol.rates[half + 1]);
    rep.less(detail::indexed("lambda_mid_upper_odd", half), 0.0, gap[half], slack);
  }
  if (n >= 36) {
    for (int i = 0; i <= half; ++i) {
      rep.less(detail::indexed("exp_gap_positive", i), 0.0, gap[i], slack);
      rep.less(detail::indexed("exp_gap_bound", i), gap[i], std::ldexp(1.0, -i), slack);
    }
  }
  return rep;
}

// Symmetry and monotonicity of the rates, symmetry of the densities, the
// ratio identity e_i/(1-e_i) = lambda_i/lambda_{i-1}, a_i < q, the growth
// bound a_{i+1} > q^{(2^i-1)/2^i}, the ordering a_{i+1} > a_{i-1}, the
// brackets on r and q, stationarity, and optimality against both baselines.
inline BoundsReport check_structure(const OptimalSolution& sol) {
  const int n = sol.n();
  BoundsReport rep;
  rep.n = n;
  const auto& lam = sol.rates;
  const auto& e = sol.steady.e;
  const auto& gap = sol.bulk_gap;
  const auto& prof = sol.profile;
  const double q = prof.q;
  const int half = n / 2;
  const double slack = detail::gap_slack(sol);

  rep.equal("budget", lam.sum(), n + 1.0);
  for (int i = 0; i <= n; ++i) rep.equal(detail::indexed("lambda_symmetric", i), lam[i], lam[n - i]);
  // lambda_i < lambda_{i+1} up to the middle, i.e. gap_{i+1} < gap_i
  for (int i = 0; i < half; ++i) rep.less(detail::indexed("lambda_increasing", i), gap[i + 1], gap[i], slack);

  for (int i = 1; i <= n; ++i) {
    rep.equal(detail::indexed("density_symmetric", i), e[i - 1], 1.0 - e[n - i]);
    const double ratio_e = e[i - 1] / (1.0 - e[i - 1]);
    const double ratio_l = lam[i] / lam[i - 1];
    rep.equal(detail::indexed("density_ratio", i), ratio_e / ratio_l, 1.0);
  }
  if (n % 2 == 1) rep.equal("density_mid_half", e[half], 0.5);

  for (int i = 0; i <= n + 3; ++i) rep.less(detail::indexed("a_below_q", i), 0.0, prof.q_minus_a[i], slack);

  // a_{i+1} > q^{(2^i-1)/2^i}  <=>  q - a_{i+1} < q (1 - q^{-2^-i})
  const int growth_last = (n % 2 == 1 && n > 1) ? half + 1 : half;
  for (int i = 1; i <= growth_last; ++i) {
    const double room = -q * std::expm1(-std::log(q) * std::ldexp(1.0, -i));
    rep.less(detail::indexed("a_growth", i), prof.q_minus_a[i + 1], room, slack);
  }
  for (int i = 1; i <= half + 1; ++i) {
    rep.less(detail::indexed("a_ordering", i), prof.q_minus_a[i + 1], prof.q_minus_a[i - 1], slack);
  }

  rep.equal("r_cubed", sol.sigma * sol.sigma * lam[0], prof.r * prof.r * prof.r);
  rep.equal("kkt_mu_equal", sol.mu[0], sol.sigma * sol.perron.v[0] * sol.perron.v[0] / lam[0]);
  for (int i = 1; i <= n; ++i) rep.equal(detail::indexed("kkt_mu", i), sol.mu[i], sol.mu[0], 1e-8);
  for (int i = 1; i < n + 2; ++i) {
    rep.equal(detail::indexed("perron_symmetric", i), sol.perron.v[i - 1], sol.perron.v[n + 2 - i], 1e-8);
  }

  if (n > 1) {
    rep.less("r_lower", std::cbrt(2.0), prof.r);
    rep.less("r_upper", prof.r, std::sqrt(2.0));
    rep.less("q_lower", std::sqrt(2.0), q);
    rep.less("q_upper", q, std::cbrt(4.0));
    rep.less("beats_ones", sol.sigma, baseline_ones(n).sigma);
    rep.less("beats_tilde", sol.sigma, 2.0 * std::sqrt(n / (n + 1.0)));
    rep.less("R_above_tilde", (n + 1.0) / (4.0 * n), sol.R);
  }
  return rep;
}

struct GapMetric {
  double M = 0.0;
  int argmax = 0;
  bool all_terms_positive = true;
  double min_gap = std::numeric_limits<double>::infinity();  // min_i 4/sigma^2 - lambda_i
};

// M(n) = max_{i <= floor(n/2)} 2^i (4/sigma^2 - lambda_i)
inline GapMetric max_gap_metric(const OptimalSolution& sol) {
  GapMetric out;
  out.M = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= sol.n() / 2; ++i) {
    const double term = std::ldexp(sol.bulk_gap[i], i);
    out.all_terms_positive = out.all_terms_positive && term > 0.0;
    out.min_gap = std::min(out.min_gap, sol.bulk_gap[i]);
    if (term > out.M) {
      out.M = term;
      out.argmax = i;
    }
  }
  return out;
}

// Number of indices with |lambda_i - 1| >= eps.
inline int turnpike_width(const OptimalSolution& sol, double eps) {
  if (!(eps > 0.0)) throw DomainError("turnpike eps must be positive");
  int count = 0;
  for (double l : sol.rates) count += std::abs(l - 1.0) >= eps ? 1 : 0;
  return count;
}

// Everything the verify command runs for one n.
inline BoundsReport verify_solution(const OptimalSolution& sol, const std::vector<double>& eps_list = {}) {
  BoundsReport rep = check_theorem1(sol);
  rep.merge(check_structure(sol));
  const GapMetric g = max_gap_metric(sol);
  rep.M = g.M;
  if (sol.n() > 1) {
    rep.less("M_positive_terms", 0.0, g.min_gap, detail::gap_slack(sol));
    rep.less("M_below_one", g.M, 1.0);
  }
  for (double eps : eps_list) rep.turnpike_width[eps] = turnpike_width(sol, eps);
  return rep;
}

}  // namespace perronopt
