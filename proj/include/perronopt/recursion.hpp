#pragma once

// The one-parameter recursion a_{i-1} + a_{i+1} = r a_i^2 with a_0 = 0,
// a_1 = 1, which describes the optimal rates once r is known, and the planar
// map F_s(u, v) = (s u^2 - v, u) that generates it.
//
// Every routine is templated on the scalar type. Near the optimum the orbit
// sits on the stable manifold of the hyperbolic fixed point (q, q), so
// rounding errors grow by a factor 2+sqrt(3) per step; long chains need a
// multiprecision Real.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "perronopt/errors.hpp"

namespace perronopt {

// Magnitude beyond which an orbit is declared divergent.
inline constexpr double kDivergenceGuard = 1e6;
// Value returned by shoot_residual when the orbit leaves the admissible
// region before the midpoint. The sign preserves the bracketing direction.
inline constexpr double kSaturatedResidual = 1e6;

template <class Real>
struct BasicRecursionProfile {
  int n = 0;
  Real r = 0;
  Real q = 0;            // 2 / r
  std::vector<Real> a;   // a_0, a_1, ... (truncated when diverged)
  bool diverged = false;
};

// Last index the half-sequence iteration needs: floor((n+3)/2) + 1.
inline int half_length_index(int n) { return (n + 3) / 2 + 1; }

template <class Real>
std::array<Real, 2> apply_F(const Real& s, const std::array<Real, 2>& point) {
  return {s * point[0] * point[0] - point[1], point[0]};
}

template <class Real>
BasicRecursionProfile<Real> recursion_profile(const Real& r, int n, bool half_only) {
  if (!(r > 0)) throw DomainError("recursion parameter r must be positive");
  if (n < 1) throw DomainError("chain length n must be >= 1, got " + std::to_string(n));
  BasicRecursionProfile<Real> out;
  out.n = n;
  out.r = r;
  out.q = Real(2) / r;
  const int last = half_only ? half_length_index(n) : n + 3;
  out.a.reserve(static_cast<std::size_t>(last) + 1);
  out.a.push_back(Real(0));
  out.a.push_back(Real(1));
  for (int i = 1; i < last; ++i) {
    const Real next = r * out.a[i] * out.a[i] - out.a[i - 1];
    if (next > Real(kDivergenceGuard) || next < Real(-kDivergenceGuard)) {
      out.diverged = true;
      break;
    }
    out.a.push_back(next);
  }
  return out;
}

// g(r) = a_m - a_{m+1} with m = (n+2)/2 for even n, and
// g(r) = a_{(n+1)/2} - a_{(n+5)/2} for odd n; g vanishes at the optimal r.
//
// Along the optimal orbit a is strictly increasing up to floor((n+3)/2) and
// stays below q. An orbit that turns down earlier belongs to an r that is too
// small and saturates to +kSaturatedResidual; one that reaches q keeps growing
// (a_{i+1} >= 2a_i - a_{i-1}) and saturates to -kSaturatedResidual.
template <class Real>
Real shoot_residual(const Real& r, int n) {
  if (!(r > 0)) throw DomainError("recursion parameter r must be positive");
  if (n < 1) throw DomainError("chain length n must be >= 1, got " + std::to_string(n));
  const int peak = (n + 3) / 2;
  const int last = peak + 1;
  const Real q = Real(2) / r;
  std::vector<Real> a;
  a.reserve(static_cast<std::size_t>(last) + 1);
  a.push_back(Real(0));
  a.push_back(Real(1));
  for (int i = 1; i < last; ++i) {
    const Real next = r * a[i] * a[i] - a[i - 1];
    const int j = i + 1;
    if (j <= peak && !(next > a[i])) return Real(kSaturatedResidual);
    if (!(next < q)) return Real(-kSaturatedResidual);
    a.push_back(next);
  }
  if (n % 2 == 0) {
    const int m = (n + 2) / 2;
    return a[m] - a[m + 1];
  }
  return a[(n + 1) / 2] - a[(n + 5) / 2];
}

// Full sequence a_0..a_{n+3} from the half sequence, mirrored about the
// midpoint (a_i = a_{n+3-i}).
template <class Real>
std::vector<Real> mirror_profile(const std::vector<Real>& half, int n) {
  const int peak = (n + 3) / 2;
  std::vector<Real> full(static_cast<std::size_t>(n) + 4);
  for (int i = 0; i <= n + 3; ++i) {
    full[i] = i <= peak ? half.at(i) : half.at(n + 3 - i);
  }
  return full;
}

}  // namespace perronopt
