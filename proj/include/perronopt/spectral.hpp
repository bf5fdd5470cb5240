#pragma once

// Perron root and Perron vector of the symmetric tridiagonal matrix B(lambda)
// with zero diagonal and off-diagonal entries lambda_i^{-1/2}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perronopt/errors.hpp"
#include "perronopt/rates.hpp"

namespace perronopt {

// Symmetric tridiagonal matrix of dimension n+2 with an implicit zero
// diagonal. offdiag[i] couples rows i and i+1.
class TridiagSymMatrix {
 public:
  explicit TridiagSymMatrix(std::vector<double> offdiag) : offdiag_(std::move(offdiag)) {
    if (offdiag_.empty()) throw DomainError("tridiagonal matrix needs at least one off-diagonal entry");
    for (std::size_t i = 0; i < offdiag_.size(); ++i) {
      if (!(offdiag_[i] > 0.0) || !std::isfinite(offdiag_[i])) {
        throw DomainError("off-diagonal entry " + std::to_string(i) + " must be positive");
      }
    }
  }

  std::size_t dim() const noexcept { return offdiag_.size() + 1; }
  std::span<const double> offdiag() const noexcept { return offdiag_; }

  // y = B x
  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t m = dim();
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      if (i > 0) acc += offdiag_[i - 1] * x[i - 1];
      if (i + 1 < m) acc += offdiag_[i] * x[i + 1];
      y[i] = acc;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim());
    apply(x, y);
    return y;
  }

  // Gershgorin bound on the spectral radius.
  double max_row_sum() const {
    double best = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      double s = 0.0;
      if (i > 0) s += offdiag_[i - 1];
      if (i + 1 < dim()) s += offdiag_[i];
      best = std::max(best, s);
    }
    return best;
  }

 private:
  std::vector<double> offdiag_;
};

inline TridiagSymMatrix build_matrix(const RateVector& rates) {
  std::vector<double> b(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) b[i] = 1.0 / std::sqrt(rates[i]);
  return TridiagSymMatrix(std::move(b));
}

enum class PerronMethod {
  automatic,  // power iteration, Sturm bisection + inverse iteration on stall
  power,
  sturm,
};

struct PerronOptions {
  double tol = 1e-12;  // relative eigen-residual ||Bv - sigma v||_inf / sigma
  PerronMethod method = PerronMethod::automatic;
  bool compute_second = true;                       // gap diagnostic
  std::optional<std::vector<double>> initial_guess;  // warm start for power iteration
};

struct PerronPair {
  double sigma = 0.0;
  std::vector<double> v;   // positive, unit Euclidean norm, length n+2
  double residual = 0.0;   // ||Bv - sigma v||_inf
  double second = std::numeric_limits<double>::quiet_NaN();  // second-largest eigenvalue
  PerronMethod method_used = PerronMethod::automatic;
  int iterations = 0;

  double gap() const { return sigma - second; }
};

namespace detail {

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double e : x) s += e * e;
  return std::sqrt(s);
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline void normalize(std::vector<double>& x) {
  const double nrm = norm2(x);
  for (double& e : x) e /= nrm;
}

inline double residual_inf(const TridiagSymMatrix& b, std::span<const double> v, double sigma) {
  const auto bv = b.apply(v);
  double r = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) r = std::max(r, std::abs(bv[i] - sigma * v[i]));
  return r;
}

// Number of eigenvalues strictly below x (Sturm sequence of the LDL^T
// factorization of B - xI).
inline std::size_t sturm_count(std::span<const double> offdiag, double x) {
  const double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double d = -x;
  if (d == 0.0) d = -tiny;
  if (d < 0.0) ++count;
  for (double b : offdiag) {
    d = -x - b * b / d;
    if (d == 0.0) d = -tiny;
    if (d < 0.0) ++count;
  }
  return count;
}

// Eigenvalue number `index` in ascending order, by bisection to full precision.
inline double sturm_eigenvalue(const TridiagSymMatrix& b, std::size_t index) {
  double hi = b.max_row_sum() * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  double lo = -hi;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(b.offdiag(), mid) > index) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Solves (B - mu I) y = rhs in place with partial pivoting (the scheme of
// LAPACK's gttrf/gtts2). Exactly zero pivots are replaced by a tiny value so
// the solve stays finite when mu hits an eigenvalue.
inline void shifted_solve(const TridiagSymMatrix& b, double mu, std::vector<double>& rhs) {
  const std::size_t m = b.dim();
  const auto off = b.offdiag();
  std::vector<double> dl(off.begin(), off.end());
  std::vector<double> du(off.begin(), off.end());
  std::vector<double> d(m, -mu);
  std::vector<double> du2(m > 2 ? m - 2 : 0, 0.0);
  std::vector<bool> swapped(m > 1 ? m - 1 : 0, false);
  const double pivot_floor = std::numeric_limits<double>::epsilon() * b.max_row_sum();

  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = pivot_floor;
      const double fact = dl[i] / d[i];
      dl[i] = fact;
      d[i + 1] -= fact * du[i];
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = fact;
      const double temp = du[i];
      du[i] = d[i + 1];
      d[i + 1] = temp - fact * d[i + 1];
      if (i + 2 < m) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du[i + 1];
      }
      swapped[i] = true;
    }
  }
  if (d[m - 1] == 0.0) d[m - 1] = pivot_floor;

  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (!swapped[i]) {
      rhs[i + 1] -= dl[i] * rhs[i];
    } else {
      const double temp = rhs[i];
      rhs[i] = rhs[i + 1];
      rhs[i + 1] = temp - dl[i] * rhs[i];
    }
  }
  rhs[m - 1] /= d[m - 1];
  if (m > 1) rhs[m - 2] = (rhs[m - 2] - du[m - 2] * rhs[m - 1]) / d[m - 2];
  for (std::size_t k = m - 2; k-- > 0;) {
    rhs[k] = (rhs[k] - du[k] * rhs[k + 1] - du2[k] * rhs[k + 2]) / d[k];
  }
}

inline void make_positive(std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e;
  if (s < 0.0) {
    for (double& e : v) e = -e;
  }
}

inline bool all_positive(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return e > 0.0; });
}

// Shifted power iteration with Rayleigh-quotient shift. Returns nullopt when
// the observed contraction rate cannot reach tol within the budget.
inline std::optional<PerronPair> power_iteration(const TridiagSymMatrix& b, const PerronOptions& opt,
                                                 int budget, bool give_up_on_stall) {
  const std::size_t m = b.dim();
  std::vector<double> x;
  if (opt.initial_guess && opt.initial_guess->size() == m) {
    x = *opt.initial_guess;
    for (double& e : x) e = std::abs(e) + std::numeric_limits<double>::min();
  } else {
    x.assign(m, 1.0);
  }
  normalize(x);

  std::vector<double> bx(m);
  b.apply(x, bx);
  double rho = dot(x, bx);
  double res = 0.0;
  constexpr int window = 25;
  double res_window_start = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= budget; ++it) {
    for (std::size_t i = 0; i < m; ++i) x[i] = bx[i] + rho * x[i];
    normalize(x);
    b.apply(x, bx);
    rho = dot(x, bx);
    res = 0.0;
    for (std::size_t i = 0; i < m; ++i) res = std::max(res, std::abs(bx[i] - rho * x[i]));
    if (res <= opt.tol * rho) {
      PerronPair out;
      out.sigma = rho;
      out.v = std::move(x);
      out.residual = res;
      out.method_used = PerronMethod::power;
      out.iterations = it;
      return out;
    }
    if (it % window == 0) {
      const double rate = std::pow(res / res_window_start, 1.0 / window);
      const double needed = std::log(opt.tol * rho / res) / std::log(rate);
      if (give_up_on_stall && (!(rate < 1.0) || needed > budget - it)) return std::nullopt;
      res_window_start = res;
    }
  }
  if (give_up_on_stall) return std::nullopt;
  throw NumericalError("power iteration did not converge within " + std::to_string(budget) + " iterations",
                       res);
}

inline PerronPair sturm_inverse(const TridiagSymMatrix& b, const PerronOptions& opt) {
  const std::size_t m = b.dim();
  const double mu = sturm_eigenvalue(b, m - 1);
  std::vector<double> v(m, 1.0);
  normalize(v);
  double sigma = mu;
  double res = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < 8 && !(res <= opt.tol * sigma); ++it) {
    shifted_solve(b, mu, v);
    make_positive(v);
    normalize(v);
    sigma = dot(v, b.apply(v));
    res = residual_inf(b, v, sigma);
  }
  if (!(res <= opt.tol * sigma)) {
    throw NumericalError("inverse iteration did not reach the eigen-residual tolerance", res);
  }
  PerronPair out;
  out.sigma = sigma;
  out.v = std::move(v);
  out.residual = res;
  out.method_used = PerronMethod::sturm;
  out.iterations = it;
  return out;
}

// Eigenvector of B for the eigenvalue estimate sigma from a twisted
// factorization of sigma I - B: the top and bottom LDL^T pivots are run
// towards the index k where the twist element is smallest, and every entry is
// a product of positive ratios. Entries keep their relative accuracy even
// where the vector is exponentially small. Returns nullopt if a pivot on
// either side is not positive (sigma is not a usable Perron estimate).
inline std::optional<std::vector<double>> twisted_vector(const TridiagSymMatrix& b, double sigma) {
  const std::size_t m = b.dim();
  const auto off = b.offdiag();
  std::vector<double> top(m), bottom(m);
  top[0] = sigma;
  for (std::size_t i = 1; i < m; ++i) top[i] = sigma - off[i - 1] * off[i - 1] / top[i - 1];
  bottom[m - 1] = sigma;
  for (std::size_t i = m - 1; i-- > 0;) bottom[i] = sigma - off[i] * off[i] / bottom[i + 1];

  std::size_t k = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double gamma = std::abs(top[i] + bottom[i] - sigma);
    if (gamma < best) {
      best = gamma;
      k = i;
    }
  }

  std::vector<double> v(m);
  v[k] = 1.0;
  for (std::size_t i = k; i-- > 0;) {
    if (!(top[i] > 0.0)) return std::nullopt;
    v[i] = off[i] / top[i] * v[i + 1];
  }
  for (std::size_t i = k + 1; i < m; ++i) {
    if (!(bottom[i] > 0.0)) return std::nullopt;
    v[i] = off[i - 1] / bottom[i] * v[i - 1];
  }
  const double peak = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(peak)) return std::nullopt;
  for (double& e : v) e /= peak;
  normalize(v);
  if (!all_positive(v)) return std::nullopt;
  return v;
}

// Replaces the vector by its twisted-factorization counterpart and sigma by
// the Rayleigh quotient, twice, keeping each step only if the residual stays
// within tolerance.
inline void polish(const TridiagSymMatrix& b, const PerronOptions& opt, PerronPair& p) {
  for (int pass = 0; pass < 2; ++pass) {
    auto v = twisted_vector(b, p.sigma);
    if (!v) return;
    const double sigma = dot(*v, b.apply(*v));
    const double res = residual_inf(b, *v, sigma);
    if (!(res <= std::max(p.residual, opt.tol * sigma))) return;
    p.v = std::move(*v);
    p.sigma = sigma;
    p.residual = res;
  }
}

}  // namespace detail

inline PerronPair perron(const TridiagSymMatrix& b, const PerronOptions& opt = {}) {
  if (!(opt.tol > 0.0) || opt.tol > 1e-3) throw DomainError("perron tolerance must lie in (0, 1e-3]");
  const int budget = 100 * static_cast<int>(b.dim());

  PerronPair out;
  switch (opt.method) {
    case PerronMethod::power:
      out = *detail::power_iteration(b, opt, budget, false);
      break;
    case PerronMethod::sturm:
      out = detail::sturm_inverse(b, opt);
      break;
    case PerronMethod::automatic: {
      auto p = detail::power_iteration(b, opt, budget, true);
      out = p ? std::move(*p) : detail::sturm_inverse(b, opt);
      break;
    }
  }

  detail::make_positive(out.v);
  detail::polish(b, opt, out);
  if (!detail::all_positive(out.v)) {
    throw NumericalError("Perron vector has a nonpositive entry", out.residual);
  }
  if (opt.compute_second) {
    out.second = b.dim() > 1 ? detail::sturm_eigenvalue(b, b.dim() - 2) : -out.sigma;
    if (!(out.second < out.sigma)) {
      throw NumericalError("Perron root is not simple", out.sigma - out.second);
    }
  }
  return out;
}

inline PerronPair perron(const TridiagSymMatrix& b, double tol) {
  PerronOptions opt;
  opt.tol = tol;
  return perron(b, opt);
}

inline PerronPair perron(const RateVector& rates, const PerronOptions& opt = {}) {
  return perron(build_matrix(rates), opt);
}

// Closed form for B(1_{n+1}), a tridiagonal Toeplitz matrix with unit
// off-diagonal: sigma = 2cos(pi/(n+3)), v_i = sqrt(2/(n+3)) sin(i pi/(n+3)).
inline PerronPair toeplitz_oracle(int n) {
  if (n < 1) throw DomainError("toeplitz_oracle needs n >= 1, got " + std::to_string(n));
  const double h = std::numbers::pi / (n + 3);
  PerronPair out;
  out.sigma = 2.0 * std::cos(h);
  out.second = 2.0 * std::cos(2.0 * h);
  out.v.resize(static_cast<std::size_t>(n) + 2);
  const double scale = std::sqrt(2.0 / (n + 3));
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = scale * std::sin((i + 1) * h);
  return out;
}

}  // namespace perronopt
