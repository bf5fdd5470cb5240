#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "perronopt/optimizer.hpp"
#include "perronopt/rfm.hpp"
#include "support.hpp"

using namespace perronopt;
using testing_support::random_rates;
using testing_support::rel_err;
using testing_support::uniform;
using testing_support::uniform_int;

namespace {

// e_{i} for the two-rate chain solves lambda_0 (1 - e) = lambda_1 e.
double single_site_density(double l0, double l1) {
  // R = l0 (1 - e) = l1 e  =>  e = l0 / (l0 + l1)
  return l0 / (l0 + l1);
}

}  // namespace

TEST(SteadyState, SingleSiteUnitRates) {
  const RateVector rates{1.0, 1.0};
  for (const auto& ss : {steady_state_spectral(rates), steady_state_shooting(rates)}) {
    ASSERT_EQ(ss.e.size(), 1u);
    EXPECT_NEAR(ss.e[0], 0.5, 1e-12);
    EXPECT_NEAR(ss.R, 0.5, 1e-12);
  }
}

TEST(SteadyState, SingleSiteClosedForm) {
  // the n=1 RFM is linear in e at steady state: R = l0 (1 - e) = l1 e
  const RateVector rates{3.0, 0.5};
  const double e = single_site_density(3.0, 0.5);
  const auto ss = steady_state_spectral(rates);
  EXPECT_NEAR(ss.e[0], e, 1e-12);
  EXPECT_NEAR(ss.R, 0.5 * e, 1e-12);
}

TEST(SteadyState, TildeRatesGiveHalfDensities) {
  for (int n : {2, 3, 8, 25}) {
    const auto base = baseline_tilde(n);
    for (const auto& ss : {steady_state_spectral(base.rates), steady_state_shooting(base.rates)}) {
      EXPECT_NEAR(ss.R, (n + 1.0) / (4.0 * n), 1e-10) << n;
      for (double e : ss.e) EXPECT_NEAR(e, 0.5, 1e-8) << n;
    }
  }
}

TEST(SteadyState, UniformRatesLongChain) {
  const auto rates = RateVector::ones(100);
  EXPECT_NEAR(steady_state_spectral(rates).R, 0.2502, 5e-5);
  EXPECT_NEAR(steady_state_shooting(rates).R, 0.2502, 5e-5);
}

TEST(SteadyState, SpectralRouteMatchesSigma) {
  const auto rates = RateVector{0.7, 2.0, 1.3, 0.9};
  const auto p = perron(rates);
  const auto ss = steady_state_spectral(rates);
  EXPECT_NEAR(ss.R, 1.0 / (p.sigma * p.sigma), 1e-15);
}

TEST(SteadyState, RoutesAgreeOnRandomRates) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 50; ++k) {
    const int n = uniform_int(rng, 1, 50);
    const auto rates = random_rates(rng, n);
    const auto a = steady_state_spectral(rates);
    const auto b = steady_state_shooting(rates);
    EXPECT_NEAR(a.R, b.R, 1e-8) << "n=" << n;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(a.e[i], b.e[i], 1e-7) << "n=" << n << " i=" << i;
  }
}

TEST(SteadyState, FlowBalanceAndBounds) {
  std::mt19937_64 rng(41);
  for (int k = 0; k < 30; ++k) {
    const int n = uniform_int(rng, 1, 50);
    const auto rates = random_rates(rng, n);
    for (const auto& ss : {steady_state_spectral(rates), steady_state_shooting(rates)}) {
      EXPECT_LE(flow_balance_residual(rates, ss.e, ss.R), 1e-8);
      EXPECT_LE(ss.flow_residual, 1e-8);
      EXPECT_LT(ss.R, rates.min());
      for (double e : ss.e) {
        EXPECT_GT(e, 0.0);
        EXPECT_LT(e, 1.0);
      }
    }
  }
}

TEST(Sensitivities, MatchCentralDifferences) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const int n = uniform_int(rng, 2, 30);
    const auto rates = random_rates(rng, n);
    const auto s = sensitivities(rates).s;
    ASSERT_EQ(s.size(), rates.size());
    for (int i = 0; i <= n; ++i) {
      const double fd = testing_support::central_difference_R(rates, i);
      EXPECT_GT(s[i], 0.0);
      EXPECT_LT(rel_err(s[i], fd), 1e-5) << "n=" << n << " i=" << i;
    }
  }
}

TEST(Sensitivities, UniformRatesFavourInteriorSites) {
  for (int n : {2, 5, 40}) {
    const auto s = sensitivities(RateVector::ones(n)).s;
    EXPECT_LT(s[0], s[1]) << n;
    const double ratio = std::sin(std::numbers::pi / (n + 3)) / std::sin(3.0 * std::numbers::pi / (n + 3));
    EXPECT_NEAR(s[0] / s[1], ratio, 1e-10) << n;
  }
}

TEST(Sensitivities, MuIsProportional) {
  std::mt19937_64 rng(3);
  const auto rates = random_rates(rng, 12);
  const auto s = sensitivities(rates).s;
  const auto mu = mu_values(rates);
  const double R = steady_state_spectral(rates).R;
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], 2.0 * std::pow(R, 1.5) * mu[i], 1e-14);
  EXPECT_EQ(std::max_element(s.begin(), s.end()) - s.begin(), std::max_element(mu.begin(), mu.end()) - mu.begin());
}

TEST(Sensitivities, RelativeSpread) {
  const std::vector<double> flat{2.0, 2.0, 2.0};
  EXPECT_DOUBLE_EQ(relative_spread(flat), 0.0);
  const std::vector<double> spread{1.0, 3.0};
  EXPECT_DOUBLE_EQ(relative_spread(spread), 1.0);
}

TEST(Simulate, SingleSiteConvergesToHalf) {
  const std::vector<double> x0{0.0};
  const auto traj = simulate(RateVector{1.0, 1.0}, x0, 50.0, 0.01);
  EXPECT_NEAR(traj.final_state()[0], 0.5, 1e-6);
  EXPECT_TRUE(traj.converged);
  EXPECT_DOUBLE_EQ(traj.times.back(), 50.0);
}

TEST(Simulate, EquilibriumIsInvariant) {
  std::mt19937_64 rng(8);
  const auto rates = random_rates(rng, 10);
  const auto ss = steady_state_spectral(rates);
  const auto traj = simulate(rates, ss.e, 20.0, 0.01);
  for (const auto& state : traj.states) {
    for (std::size_t i = 0; i < state.size(); ++i) EXPECT_NEAR(state[i], ss.e[i], 1e-10);
  }
}

TEST(Simulate, StaysInCubeAndConverges) {
  std::mt19937_64 rng(23);
  for (int n : {1, 5, 20}) {
    const auto rates = random_rates(rng, n);
    const auto ss = steady_state_spectral(rates);
    for (int k = 0; k < 3; ++k) {
      std::vector<double> x0(static_cast<std::size_t>(n));
      for (auto& x : x0) x = uniform(rng, 0.0, 1.0);
      SimulateOptions opt;
      opt.sample_interval = 0.0;
      const auto traj = simulate(rates, x0, 3000.0, opt);
      for (const auto& state : traj.states) {
        for (double x : state) {
          ASSERT_GE(x, -1e-12);
          ASSERT_LE(x, 1.0 + 1e-12);
        }
      }
      for (int i = 0; i < n; ++i) EXPECT_NEAR(traj.final_state()[i], ss.e[i], 1e-6) << n;
    }
  }
}

TEST(Simulate, SamplingClock) {
  SimulateOptions opt;
  opt.step = 0.01;
  opt.sample_interval = 0.5;
  const std::vector<double> x0{0.2, 0.4};
  const auto traj = simulate(RateVector{1.0, 2.0, 1.0}, x0, 10.0, opt);
  ASSERT_EQ(traj.times.size(), 21u);
  for (std::size_t k = 0; k < traj.times.size(); ++k) EXPECT_NEAR(traj.times[k], 0.5 * k, 1e-12);
  for (std::size_t k = 1; k < traj.times.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
}

TEST(Simulate, HalvesStepWhenLeavingCube) {
  // a step of 1 with rate 50 overshoots the cube immediately
  const std::vector<double> x0{0.0};
  const auto traj = simulate(RateVector{50.0, 50.0}, x0, 2.0, 1.0);
  EXPECT_LT(traj.step_used, 1.0);
  EXPECT_NEAR(traj.final_state()[0], 0.5, 1e-6);
}

TEST(Simulate, RejectsBadInput) {
  const RateVector rates{1.0, 1.0, 1.0};
  const std::vector<double> ok{0.1, 0.2};
  const std::vector<double> wrong_size{0.1};
  const std::vector<double> outside{0.1, 1.5};
  EXPECT_THROW(simulate(rates, wrong_size, 1.0, 0.01), DomainError);
  EXPECT_THROW(simulate(rates, outside, 1.0, 0.01), DomainError);
  EXPECT_THROW(simulate(rates, ok, 0.0, 0.01), DomainError);
  EXPECT_THROW(simulate(rates, ok, 1.0, -0.01), DomainError);
}
