#pragma once

// Ribosome flow model: steady state by the spectral representation and by
// shooting on the forward density recursion, trajectory simulation, and the
// sensitivities of the production rate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "perronopt/errors.hpp"
#include "perronopt/rates.hpp"
#include "perronopt/spectral.hpp"

namespace perronopt {

struct SteadyState {
  std::vector<double> e;  // e_1..e_n, stored 0-based
  double R = 0.0;
  double flow_residual = 0.0;  // max_i |lambda_i e_i (1 - e_{i+1}) - R|
};

struct SensitivityVector {
  std::vector<double> s;  // s_i = dR/dlambda_i, i = 0..n
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  bool converged = false;
  double converged_time = std::numeric_limits<double>::quiet_NaN();
  double step_used = 0.0;

  const std::vector<double>& final_state() const { return states.back(); }
};

// max_i |lambda_i e_i (1 - e_{i+1}) - R| with e_0 = 1 and e_{n+1} = 0.
inline double flow_balance_residual(const RateVector& rates, std::span<const double> e, double R) {
  const std::size_t n = e.size();
  double worst = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double ei = i == 0 ? 1.0 : e[i - 1];
    const double next = i == n ? 0.0 : e[i];
    worst = std::max(worst, std::abs(rates[i] * ei * (1.0 - next) - R));
  }
  return worst;
}

inline SteadyState steady_state_from_perron(const RateVector& rates, const PerronPair& p, double tol) {
  const int n = rates.n();
  SteadyState out;
  out.R = 1.0 / (p.sigma * p.sigma);
  out.e.resize(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    // v is 0-based here: v_{i+1} -> v[i], v_{i+2} -> v[i+1]
    const double ei = p.v[i + 1] / (std::sqrt(rates[i]) * p.sigma * p.v[i]);
    if (ei <= -tol || ei >= 1.0 + tol || !std::isfinite(ei)) {
      throw NumericalError("spectral density e_" + std::to_string(i) + " = " + std::to_string(ei) +
                               " lies outside (0,1)",
                           ei);
    }
    out.e[i - 1] = ei;
  }
  out.flow_residual = flow_balance_residual(rates, out.e, out.R);
  return out;
}

inline SteadyState steady_state_spectral(const RateVector& rates, double tol = 1e-12) {
  PerronOptions opt;
  opt.tol = tol;
  opt.compute_second = false;
  return steady_state_from_perron(rates, perron(rates, opt), tol);
}

namespace detail {

namespace bmp = boost::multiprecision;

template <unsigned Digits>
using mp_real = bmp::number<bmp::cpp_bin_float<Digits>, bmp::et_off>;

// Outcome of the forward recursion e_{i+1} = 1 - R/(lambda_i e_i) from e_0 = 1.
// Negative when R is too large (some density drops to <= 0 before the exit,
// or the exit value is negative), positive when R is too small.
template <class Real>
int shoot_sign(const RateVector& rates, const Real& R, std::vector<Real>* e) {
  const int n = rates.n();
  Real cur = 1;
  if (e) e->assign(static_cast<std::size_t>(n), Real(0));
  for (int i = 0; i <= n; ++i) {
    const Real next = Real(1) - R / (Real(rates[i]) * cur);
    if (i == n) return next > 0 ? 1 : (next < 0 ? -1 : 0);
    if (!(next > 0)) return -1;
    if (e) (*e)[i] = next;
    cur = next;
  }
  return 0;
}

// Bisection to the resolution of Real. Returns nullopt when the densities read
// off at that resolution miss flow balance, i.e. when the recursion amplifies
// the last bit of R beyond the tolerance.
template <class Real>
std::optional<SteadyState> shoot_at(const RateVector& rates, double tol) {
  constexpr double eps = 1e-12;
  Real lo = Real(eps) * Real(rates.min());
  Real hi = Real(1.0 - eps) * Real(rates.min());
  if (shoot_sign<Real>(rates, lo, nullptr) <= 0 || shoot_sign<Real>(rates, hi, nullptr) >= 0) {
    throw NumericalError("steady-state shooting could not bracket the production rate", rates.min());
  }
  for (int it = 0; it < 8000; ++it) {
    const Real mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    const int s = shoot_sign<Real>(rates, mid, nullptr);
    if (s == 0) {
      lo = hi = mid;
      break;
    }
    (s > 0 ? lo : hi) = mid;
  }
  std::vector<Real> e;
  shoot_sign<Real>(rates, lo, &e);

  SteadyState out;
  out.R = static_cast<double>(lo);
  out.e.reserve(e.size());
  for (const auto& x : e) out.e.push_back(static_cast<double>(x));
  out.flow_residual = flow_balance_residual(rates, out.e, out.R);
  if (!(out.flow_residual <= std::max(tol, 1e-10) * std::max(1.0, rates.min()))) return std::nullopt;
  return out;
}

}  // namespace detail

// Bisection on R in (0, min lambda) so that the forward recursion exits with
// e_{n+1} = 0. Larger R drives the exit density down, which gives the bracket.
// The recursion multiplies errors by R/(lambda_i e_i^2) per site, which is
// large along low-density stretches, so the working precision is raised until
// the densities balance.
inline SteadyState steady_state_shooting(const RateVector& rates, double tol = 1e-12) {
  if (auto s = detail::shoot_at<long double>(rates, tol)) return *s;
  if (auto s = detail::shoot_at<detail::mp_real<50>>(rates, tol)) return *s;
  if (auto s = detail::shoot_at<detail::mp_real<100>>(rates, tol)) return *s;
  if (auto s = detail::shoot_at<detail::mp_real<200>>(rates, tol)) return *s;
  if (auto s = detail::shoot_at<detail::mp_real<400>>(rates, tol)) return *s;
  auto last = detail::shoot_at<detail::mp_real<1000>>(rates, tol);
  if (!last) throw NumericalError("steady-state shooting left a flow-balance residual at 1000 digits", 0.0);
  return *last;
}

// Right-hand side of the RFM with x_0 = 1 and x_{n+1} = 0.
inline void rfm_rhs(const RateVector& rates, std::span<const double> x, std::span<double> dx) {
  const std::size_t n = x.size();
  double inflow = rates[0] * (1.0 - x[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? x[i + 1] : 0.0;
    const double outflow = rates[i + 1] * x[i] * (1.0 - next);
    dx[i] = inflow - outflow;
    inflow = outflow;
  }
}

struct SimulateOptions {
  double step = 0.01;
  double sample_interval = 0.0;  // 0 stores every step
  double converge_tol = 1e-10;   // on ||x(t+1) - x(t)||_inf
  double cube_slack = 1e-12;
  int max_halvings = 20;
};

// Classical fixed-step RK4. A step that leaves [0,1]^n by more than the slack
// is retried with half the step size.
inline Trajectory simulate(const RateVector& rates, std::span<const double> x0, double t_final,
                           const SimulateOptions& opt = {}) {
  const std::size_t n = static_cast<std::size_t>(rates.n());
  if (x0.size() != n) {
    throw DomainError("initial condition has " + std::to_string(x0.size()) + " entries, expected " +
                      std::to_string(n));
  }
  for (double xi : x0) {
    if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("initial condition must lie in [0,1]^n");
  }
  if (!(t_final > 0.0)) throw DomainError("t_final must be positive");
  if (!(opt.step > 0.0)) throw DomainError("step must be positive");

  auto in_cube = [&](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(),
                       [&](double e) { return e >= -opt.cube_slack && e <= 1.0 + opt.cube_slack; });
  };

  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n), trial(n);
  auto rk4 = [&](std::span<const double> x, double h, std::vector<double>& out) {
    rfm_rhs(rates, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    rfm_rhs(rates, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    rfm_rhs(rates, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    rfm_rhs(rates, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  };

  Trajectory traj;
  std::vector<double> x(x0.begin(), x0.end());
  double t = 0.0;
  double h = opt.step;
  // t = t_base + steps * h, so the clock does not drift over long runs
  double t_base = 0.0;
  long long steps = 0;
  traj.times.push_back(t);
  traj.states.push_back(x);
  double next_sample = opt.sample_interval;
  double next_check = 1.0;
  std::vector<double> x_check = x;

  while (t < t_final) {
    const double h_step = std::min(h, t_final - t);
    rk4(x, h_step, trial);
    if (!in_cube(trial)) {
      int halvings = 0;
      double hh = h_step;
      while (!in_cube(trial) && halvings < opt.max_halvings) {
        hh *= 0.5;
        ++halvings;
        rk4(x, hh, trial);
      }
      if (!in_cube(trial)) {
        throw NumericalError("RK4 state left the unit cube at t = " + std::to_string(t), hh);
      }
      h = hh;
      t_base = t + hh;
      steps = 0;
      t = t_base;
    } else if (h_step < h) {
      t = t_final;
    } else {
      ++steps;
      t = t_base + static_cast<double>(steps) * h;
    }
    x.swap(trial);
    if (t >= t_final - 1e-9 * h) t = t_final;

    if (opt.sample_interval <= 0.0 || t >= next_sample - 1e-12 * std::max(1.0, t) || t == t_final) {
      traj.times.push_back(t);
      traj.states.push_back(x);
      if (opt.sample_interval > 0.0) {
        while (next_sample <= t + 1e-12 * std::max(1.0, t)) next_sample += opt.sample_interval;
      }
    }
    if (!traj.converged && t >= next_check - 1e-12 * std::max(1.0, t)) {
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(x[i] - x_check[i]));
      if (diff < opt.converge_tol) {
        traj.converged = true;
        traj.converged_time = t;
      }
      x_check = x;
      next_check += 1.0;
    }
  }
  traj.step_used = h;
  return traj;
}

inline Trajectory simulate(const RateVector& rates, std::span<const double> x0, double t_final, double step) {
  SimulateOptions opt;
  opt.step = step;
  return simulate(rates, x0, t_final, opt);
}

// s_i = 2 R^{3/2} v_{i+1} v_{i+2} / lambda_i^{3/2}
inline SensitivityVector sensitivities(const RateVector& rates, const PerronPair& p) {
  const double R = 1.0 / (p.sigma * p.sigma);
  SensitivityVector out;
  out.s.resize(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    out.s[i] = 2.0 * std::pow(R, 1.5) * p.v[i] * p.v[i + 1] / std::pow(rates[i], 1.5);
  }
  return out;
}

inline SensitivityVector sensitivities(const RateVector& rates) {
  PerronOptions opt;
  opt.compute_second = false;
  return sensitivities(rates, perron(rates, opt));
}

// mu_i = v_{i+1} v_{i+2} lambda_i^{-3/2}; proportional to s_i with factor 2R^{3/2}.
inline std::vector<double> mu_values(const RateVector& rates, const PerronPair& p) {
  std::vector<double> mu(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) mu[i] = p.v[i] * p.v[i + 1] / std::pow(rates[i], 1.5);
  return mu;
}

inline std::vector<double> mu_values(const RateVector& rates) {
  PerronOptions opt;
  opt.compute_second = false;
  return mu_values(rates, perron(rates, opt));
}

// (max s - min s) / mean s
inline double relative_spread(std::span<const double> s) {
  const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  return (*hi - *lo) / mean;
}

}  // namespace perronopt
