#pragma once

// Minimizes the Perron root of B(lambda) subject to sum(lambda) <= n+1 by two
// independent routes:
//
//  * solve_recursion shoots on the single parameter r of the recursion
//    a_{i-1} + a_{i+1} = r a_i^2 until the orbit is symmetric about the middle
//    of the chain, then reads the rates off as lambda_i = c a_{i+1} a_{i+2};
//  * solve_equalization drives lambda to a fixed point of
//    lambda_i <- (v_{i+1} v_{i+2})^{2/3}, where all sensitivities dR/dlambda_i
//    are equal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "perronopt/errors.hpp"
#include "perronopt/rates.hpp"
#include "perronopt/recursion.hpp"
#include "perronopt/rfm.hpp"
#include "perronopt/spectral.hpp"

namespace perronopt {

// Recursion data in double precision. q_minus_a holds q - a_i evaluated at the
// solver's working precision, so it keeps full relative accuracy even where
// a_i agrees with q to more digits than a double carries.
struct RecursionProfile {
  int n = 0;
  double r = 0.0;
  double q = 0.0;
  std::vector<double> a;
  std::vector<double> q_minus_a;
  bool diverged = false;
};

inline RecursionProfile recursion_profile(double r, int n, bool half_only) {
  const auto p = recursion_profile<double>(r, n, half_only);
  RecursionProfile out{p.n, p.r, p.q, p.a, {}, p.diverged};
  out.q_minus_a.reserve(p.a.size());
  for (double ai : p.a) out.q_minus_a.push_back(p.q - ai);
  return out;
}

inline double shoot_residual(double r, int n) { return shoot_residual<double>(r, n); }

inline std::array<double, 2> apply_F(double s, std::array<double, 2> point) {
  if (!(s > 0.0)) throw DomainError("map parameter s must be positive");
  return apply_F<double>(s, point);
}

enum class SolverMethod { recursion, equalization };

inline const char* to_string(SolverMethod m) {
  return m == SolverMethod::recursion ? "recursion" : "equalize";
}

struct OptimalSolution {
  explicit OptimalSolution(RateVector r) : rates(std::move(r)) {}

  RateVector rates;
  double sigma = 0.0;
  double R = 0.0;
  SteadyState steady;
  RecursionProfile profile;
  SensitivityVector sensitivities;
  std::vector<double> mu;
  double kkt_residual = 0.0;    // (max s - min s) / mean s
  double eigen_residual = 0.0;  // ||Bv - sigma v||_inf of the Perron pair below
  PerronPair perron;
  // 4/sigma^2 - lambda_i. The recursion solver evaluates it at working
  // precision; these differences fall below double resolution in the bulk.
  std::vector<double> bulk_gap;
  SolverMethod method = SolverMethod::recursion;
  int iterations = 0;
  bool bracket_fallback = false;  // recursion: grid scan was needed to bracket r
  int working_digits = 17;        // decimal digits used by the solver

  int n() const { return rates.n(); }
};

namespace detail {

// Decimal digits needed so that q - a_i stays resolved at the midpoint of a
// chain of length n: rounding error grows like 3.73^i while q - a_i decays like
// 0.27^i, about 0.57 digits per unit of n together.
inline int required_digits(int n) { return static_cast<int>(std::ceil(0.6 * n)) + 25; }

// Fills the fields every solver shares from the rates and a Perron pair.
inline void complete_solution(OptimalSolution& sol, const PerronOptions& popt) {
  sol.perron = perron(sol.rates, popt);
  sol.eigen_residual = sol.perron.residual;
  sol.steady = steady_state_from_perron(sol.rates, sol.perron, 1e-9);
  sol.R = 1.0 / (sol.sigma * sol.sigma);
  sol.sensitivities = sensitivities(sol.rates, sol.perron);
  sol.mu = mu_values(sol.rates, sol.perron);
  sol.kkt_residual = relative_spread(sol.sensitivities.s);
}

template <class Real>
OptimalSolution solve_recursion_at(int n, double tol, int digits) {
  using std::pow;
  using std::sqrt;

  const Real lower = n == 1 ? Real(1) : pow(Real(2), Real(1) / Real(3));
  Real lo = lower + Real(1e-9);
  Real hi = sqrt(Real(2));
  auto g = [n](const Real& r) { return shoot_residual<Real>(r, n); };

  bool fallback = false;
  if (!(g(lo) > 0 && g(hi) < 0)) {
    // grid scan for the first sign change, then bisect locally
    fallback = true;
    const Real step = Real(1e-4);
    Real prev = lo;
    Real g_prev = g(prev);
    bool found = false;
    for (Real x = lo + step; x <= hi + step / 2; x += step) {
      const Real xc = x > hi ? hi : x;
      const Real gx = g(xc);
      if (g_prev > 0 && !(gx > 0)) {
        lo = prev;
        hi = xc;
        found = true;
        break;
      }
      prev = xc;
      g_prev = gx;
    }
    if (!found) {
      throw NumericalError("no sign change of the shooting residual on the r bracket for n = " +
                               std::to_string(n),
                           static_cast<double>(g_prev));
    }
  }

  // Bisection down to working precision; the rates near the middle of a long
  // chain depend on r far below the requested tolerance.
  const Real resolution = std::numeric_limits<Real>::epsilon() * 4;
  const int max_iter = 4 * digits * 4 + 200;
  int iterations = 0;
  for (; iterations < max_iter && hi - lo > resolution * hi; ++iterations) {
    const Real mid = (lo + hi) / 2;
    const Real gm = g(mid);
    if (gm == 0) {
      lo = hi = mid;
      break;
    }
    (gm > 0 ? lo : hi) = mid;
  }
  if (!(hi - lo <= Real(tol))) {
    throw NumericalError("bisection on r did not reach the requested width", static_cast<double>(hi - lo));
  }
  const Real r = (lo + hi) / 2;

  const auto half = recursion_profile<Real>(r, n, true);
  if (half.diverged) throw NumericalError("recursion diverged at the bisected r", static_cast<double>(r));
  const std::vector<Real> a = mirror_profile(half.a, n);
  const Real q = half.q;

  std::vector<Real> products(static_cast<std::size_t>(n) + 1);
  Real total = 0;
  for (int i = 0; i <= n; ++i) {
    products[i] = a[i + 1] * a[i + 2];
    total += products[i];
  }
  const Real c = Real(n + 1) / total;
  const Real lambda0 = c * products[0];
  const Real sigma = sqrt(r * r * r / lambda0);

  std::vector<double> lambda(products.size());
  std::vector<double> gap(products.size());
  for (std::size_t i = 0; i < products.size(); ++i) {
    lambda[i] = static_cast<double>(c * products[i]);
    gap[i] = static_cast<double>(c * (q * q - products[i]));
  }

  RecursionProfile profile;
  profile.n = n;
  profile.r = static_cast<double>(r);
  profile.q = static_cast<double>(q);
  for (const Real& ai : a) {
    profile.a.push_back(static_cast<double>(ai));
    profile.q_minus_a.push_back(static_cast<double>(q - ai));
  }

  OptimalSolution sol{RateVector(std::move(lambda))};
  sol.sigma = static_cast<double>(sigma);
  sol.profile = std::move(profile);
  sol.bulk_gap = std::move(gap);
  sol.method = SolverMethod::recursion;
  sol.bracket_fallback = fallback;
  sol.iterations = iterations;
  sol.working_digits = std::numeric_limits<Real>::digits10;

  PerronOptions popt;
  popt.method = PerronMethod::sturm;
  complete_solution(sol, popt);
  const double mismatch = std::abs(sol.perron.sigma - sol.sigma) / sol.sigma;
  if (mismatch > 1e-9) {
    throw NumericalError("Perron root of the reconstructed rates disagrees with the recursion", mismatch);
  }
  return sol;
}

}  // namespace detail

// Optimal rates from shooting on r. tol bounds the final bisection width;
// the bisection actually runs to the working precision, which grows with n.
inline OptimalSolution solve_recursion(int n, double tol = 1e-12) {
  if (n < 1) throw DomainError("chain length n must be >= 1, got " + std::to_string(n));
  if (!(tol > 0.0) || tol > 1e-6) throw DomainError("recursion tolerance must lie in (0, 1e-6]");
  const int digits = detail::required_digits(n);
  if (digits <= 50) return detail::solve_recursion_at<detail::mp_real<50>>(n, tol, digits);
  if (digits <= 100) return detail::solve_recursion_at<detail::mp_real<100>>(n, tol, digits);
  if (digits <= 200) return detail::solve_recursion_at<detail::mp_real<200>>(n, tol, digits);
  if (digits <= 400) return detail::solve_recursion_at<detail::mp_real<400>>(n, tol, digits);
  if (digits <= 1000) return detail::solve_recursion_at<detail::mp_real<1000>>(n, tol, digits);
  throw DomainError("solve_recursion supports n <= 1625; use solve_equalization for n = " +
                    std::to_string(n));
}

namespace detail {

// Solves a x = b by Gaussian elimination with partial pivoting; a is
// row-major m x m and is overwritten.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t m = b.size();
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < m; ++i) {
      if (std::abs(a[i * m + k]) > std::abs(a[piv * m + k])) piv = i;
    }
    if (a[piv * m + k] == 0.0) throw NumericalError("singular Newton system", 0.0);
    if (piv != k) {
      for (std::size_t j = 0; j < m; ++j) std::swap(a[k * m + j], a[piv * m + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < m; ++i) {
      const double f = a[i * m + k] / a[k * m + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < m; ++j) a[i * m + j] -= f * a[k * m + j];
      b[i] -= f * b[k];
    }
  }
  for (std::size_t k = m; k-- > 0;) {
    double acc = b[k];
    for (std::size_t j = k + 1; j < m; ++j) acc -= a[k * m + j] * b[j];
    b[k] = acc / a[k * m + k];
  }
  return b;
}

// Fixed-point map of the equalization in log coordinates:
// phi(x)_i = log T(e^x)_i - x_i, T_i = (n+1) w_i / sum(w), w_i = (v_{i+1} v_{i+2})^{2/3}.
// phi = 0 exactly when all sensitivities agree.
inline std::vector<double> equalization_residual(std::span<const double> log_lambda) {
  const std::size_t m = log_lambda.size();
  std::vector<double> lambda(m);
  for (std::size_t i = 0; i < m; ++i) lambda[i] = std::exp(log_lambda[i]);
  PerronOptions popt;
  popt.method = PerronMethod::sturm;
  popt.compute_second = false;
  const PerronPair p = perron(RateVector(std::move(lambda)), popt);
  std::vector<double> out(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = (2.0 / 3.0) * (std::log(p.v[i]) + std::log(p.v[i + 1]));
    total += std::exp(out[i]);
  }
  const double shift = std::log(static_cast<double>(m) / total);
  for (std::size_t i = 0; i < m; ++i) out[i] += shift - log_lambda[i];
  return out;
}

inline void renormalize_log(std::vector<double>& x) {
  double total = 0.0;
  for (double e : x) total += std::exp(e);
  const double shift = std::log(static_cast<double>(x.size()) / total);
  for (double& e : x) e += shift;
}

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double e : x) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace detail

// Sensitivity equalization. Equal s_i is equivalent to lambda_i^{3/2} being
// proportional to v_{i+1} v_{i+2}, i.e. to lambda being a fixed point of
// T(lambda)_i = (v_{i+1} v_{i+2})^{2/3} rescaled to the budget. The plain
// iteration lambda <- T(lambda) is unstable (the Jacobian of T at the optimum
// has eigenvalues of order -n^2/8), so the fixed-point equation is solved by
// Newton's method in log coordinates from lambda = 1_{n+1}, with a
// finite-difference Jacobian and a backtracking line search. Stops when the
// largest relative change T(lambda)_i / lambda_i - 1 falls below tol.
inline OptimalSolution solve_equalization(int n, double tol = 1e-10, int max_iter = 10000) {
  if (n < 1) throw DomainError("chain length n must be >= 1, got " + std::to_string(n));
  if (!(tol > 0.0)) throw DomainError("equalization tolerance must be positive");
  if (max_iter < 1) throw DomainError("max_iter must be >= 1");

  const std::size_t m = static_cast<std::size_t>(n) + 1;
  std::vector<double> x(m, 0.0);
  std::vector<double> F = detail::equalization_residual(x);
  double change = std::abs(std::expm1(detail::max_abs(F)));
  int it = 0;
  constexpr double h = 1e-6;

  while (change >= tol && it < max_iter) {
    ++it;
    std::vector<double> jac(m * m);
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> xp = x;
      std::vector<double> xm = x;
      xp[j] += h;
      xm[j] -= h;
      const auto fp = detail::equalization_residual(xp);
      const auto fm = detail::equalization_residual(xm);
      for (std::size_t i = 0; i < m; ++i) jac[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = -F[i];
    const std::vector<double> delta = detail::dense_solve(std::move(jac), std::move(rhs));

    const double norm0 = detail::max_abs(F);
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      std::vector<double> trial = x;
      for (std::size_t i = 0; i < m; ++i) trial[i] += t * delta[i];
      detail::renormalize_log(trial);
      std::vector<double> f_trial = detail::equalization_residual(trial);
      if (detail::max_abs(f_trial) < (1.0 - 1e-4 * t) * norm0) {
        x.swap(trial);
        F.swap(f_trial);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    change = std::abs(std::expm1(detail::max_abs(F)));
    if (!accepted) break;
  }

  std::vector<double> lambda(m);
  for (std::size_t i = 0; i < m; ++i) lambda[i] = std::exp(x[i]);
  const double kkt = relative_spread(sensitivities(RateVector(lambda)).s);
  if (!(change < tol)) {
    throw NumericalError("sensitivity equalization did not converge after " + std::to_string(it) +
                             " Newton steps",
                         kkt);
  }

  OptimalSolution sol{RateVector(std::move(lambda))};
  sol.method = SolverMethod::equalization;
  sol.iterations = it;
  PerronOptions final_opt;
  final_opt.method = PerronMethod::sturm;
  detail::complete_solution(sol, final_opt);
  sol.sigma = sol.perron.sigma;
  sol.R = 1.0 / (sol.sigma * sol.sigma);

  // Recursion data recovered from the Perron vector: a_i = (v_i / v_1)^{2/3}.
  RecursionProfile& prof = sol.profile;
  prof.n = n;
  prof.r = std::cbrt(sol.sigma * sol.sigma * sol.rates[0]);
  prof.q = 2.0 / prof.r;
  prof.a.assign(static_cast<std::size_t>(n) + 4, 0.0);
  for (int i = 1; i <= n + 2; ++i) prof.a[i] = std::cbrt(std::pow(sol.perron.v[i - 1] / sol.perron.v[0], 2.0));
  for (double ai : prof.a) prof.q_minus_a.push_back(prof.q - ai);

  const double four_over_sigma2 = 4.0 / (sol.sigma * sol.sigma);
  for (double l : sol.rates) sol.bulk_gap.push_back(four_over_sigma2 - l);
  return sol;
}

struct BaselineOnes {
  RateVector rates;
  double sigma;
};

inline BaselineOnes baseline_ones(int n) {
  return {RateVector::ones(n), 2.0 * std::cos(std::numbers::pi / (n + 3))};
}

struct BaselineTilde {
  RateVector rates;
  double sigma;
  double R;
};

// lambda~ = ((n+1)/n) (1/2, 1, ..., 1, 1/2): all steady-state densities equal 1/2.
inline BaselineTilde baseline_tilde(int n) {
  if (n < 2) throw DomainError("baseline_tilde needs n >= 2, got " + std::to_string(n));
  const double c = (n + 1.0) / n;
  std::vector<double> lambda(static_cast<std::size_t>(n) + 1, c);
  lambda.front() = lambda.back() = 0.5 * c;
  BaselineTilde out{RateVector(std::move(lambda)), 2.0 * std::sqrt(n / (n + 1.0)), (n + 1.0) / (4.0 * n)};
  const double numeric = perron(out.rates).sigma;
  if (std::abs(numeric - out.sigma) > 1e-10) {
    throw NumericalError("Perron root of lambda~ disagrees with its closed form", numeric - out.sigma);
  }
  return out;
}

}  // namespace perronopt
