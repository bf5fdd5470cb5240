#pragma once

// The six CLI commands. Each builds a Report (tidy records or a wide table)
// that is then encoded as CSV or JSON, so both encodings carry the same
// numbers.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "perronopt/cli/config.hpp"
#include "perronopt/errors.hpp"
#include "perronopt/io.hpp"
#include "perronopt/optimizer.hpp"
#include "perronopt/rfm.hpp"
#include "perronopt/spectral.hpp"
#include "perronopt/verifier.hpp"

namespace perronopt::cli {

using Cell = std::variant<double, std::int64_t, bool>;

// quantity,index,value rows; index is empty for scalars
struct TidyEntry {
  std::string quantity;
  std::optional<int> index;
  Cell value = 0.0;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Report {
  std::vector<TidyEntry> tidy;
  std::optional<Table> table;
  std::vector<std::pair<std::string, Cell>> residuals;
  int exit_code = 0;

  void scalar(std::string q, Cell v) { tidy.push_back({std::move(q), std::nullopt, v}); }
  void vector(const std::string& q, std::span<const double> v, int base) {
    for (std::size_t i = 0; i < v.size(); ++i) tidy.push_back({q, static_cast<int>(i) + base, v[i]});
  }
  void residual(std::string q, Cell v) { residuals.emplace_back(std::move(q), v); }
};

namespace detail {

inline std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return io::format_number(*d == 0.0 ? 0.0 : *d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<bool>(c) ? "true" : "false";
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (!std::isfinite(*d)) return nullptr;
    return *d == 0.0 ? 0.0 : *d;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  return std::get<bool>(c);
}

inline nlohmann::ordered_json config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["command"] = to_string(c.command);
  j["n"] = c.n ? nlohmann::ordered_json(*c.n) : nullptr;
  j["n_min"] = c.n_min ? nlohmann::ordered_json(*c.n_min) : nullptr;
  j["n_max"] = c.n_max ? nlohmann::ordered_json(*c.n_max) : nullptr;
  j["rates"] = c.rates_file ? nlohmann::ordered_json(*c.rates_file) : nullptr;
  j["optimal"] = c.optimal;
  j["method"] = to_string(c.method);
  j["route"] = to_string(c.route);
  j["tol"] = c.tol ? nlohmann::ordered_json(*c.tol) : nullptr;
  j["eps"] = c.eps;
  j["t_final"] = c.t_final;
  j["step"] = c.step;
  j["sample"] = c.sample;
  j["x0"] = c.x0;
  return j;
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Report& rep) {
  if (rep.table) {
    const auto& t = *rep.table;
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::cell_text(row[i]);
      os << '\n';
    }
    return;
  }
  os << "quantity,index,value\n";
  for (const auto& e : rep.tidy) {
    os << e.quantity << ',' << (e.index ? std::to_string(*e.index) : "") << ',' << detail::cell_text(e.value) << '\n';
  }
  for (const auto& [name, v] : rep.residuals) os << name << ",," << detail::cell_text(v) << '\n';
}

inline void write_json(std::ostream& os, const RunConfig& cfg, const Report& rep) {
  nlohmann::ordered_json j;
  j["config"] = detail::config_json(cfg);
  nlohmann::ordered_json results = nlohmann::ordered_json::object();
  if (rep.table) {
    results["columns"] = rep.table->columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rep.table->rows) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (const auto& c : row) r.push_back(detail::cell_json(c));
      rows.push_back(std::move(r));
    }
    results["rows"] = std::move(rows);
  } else {
    for (const auto& e : rep.tidy) {
      if (e.index) {
        auto& arr = results[e.quantity];
        if (arr.is_null()) arr = nlohmann::ordered_json::array();
        arr.push_back(detail::cell_json(e.value));
      } else {
        results[e.quantity] = detail::cell_json(e.value);
      }
    }
  }
  j["results"] = std::move(results);
  nlohmann::ordered_json res = nlohmann::ordered_json::object();
  for (const auto& [name, v] : rep.residuals) res[name] = detail::cell_json(v);
  j["residuals"] = std::move(res);
  j["version"] = kVersion;
  os << j.dump(2) << '\n';
}

namespace detail {

inline OptimalSolution solve(int n, SolverMethod m, const std::optional<double>& tol) {
  if (m == SolverMethod::recursion) return tol ? solve_recursion(n, *tol) : solve_recursion(n);
  return tol ? solve_equalization(n, *tol) : solve_equalization(n);
}

inline RateVector input_rates(const RunConfig& c) {
  if (c.rates_file) return io::read_rates_file(*c.rates_file);
  if (c.optimal) {
    return solve(*c.n, c.method == Method::equalize ? SolverMethod::equalization : SolverMethod::recursion, std::nullopt)
        .rates;
  }
  return RateVector::ones(*c.n);
}

inline std::vector<double> initial_state(const std::string& choice, int n) {
  const auto count = static_cast<std::size_t>(n);
  if (choice == "zeros") return std::vector<double>(count, 0.0);
  if (choice == "half") return std::vector<double>(count, 0.5);
  if (choice.starts_with("random:")) {
    const std::string seed_text = choice.substr(7);
    std::uint64_t seed = 0;
    const auto res = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), seed);
    if (res.ec != std::errc() || res.ptr != seed_text.data() + seed_text.size() || seed_text.empty()) {
      throw DomainError("--x0 random:SEED needs a nonnegative integer seed, got '" + seed_text + "'");
    }
    std::mt19937_64 rng(seed);
    std::vector<double> x(count);
    // 53-bit uniform draws in [0,1), independent of the standard library's distributions
    for (auto& xi : x) xi = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return x;
  }
  return io::read_number_file(choice);
}

// Runs job(k) for k in [0, count) on up to `threads` workers. Exceptions are
// rethrown for the lowest failing k, so the outcome does not depend on timing.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

inline Report cmd_perron(const RunConfig& c) {
  const RateVector rates = detail::input_rates(c);
  PerronOptions opt;
  if (c.tol) opt.tol = *c.tol;
  const PerronPair p = perron(rates, opt);
  Report rep;
  rep.scalar("n", static_cast<std::int64_t>(rates.n()));
  rep.scalar("sigma", p.sigma);
  rep.scalar("second", p.second);
  rep.vector("v", p.v, 1);
  rep.residual("eigen_residual", p.residual);
  rep.residual("iterations", static_cast<std::int64_t>(p.iterations));
  return rep;
}

inline Report cmd_steady_state(const RunConfig& c) {
  const RateVector rates = detail::input_rates(c);
  const double tol = c.tol.value_or(1e-12);
  const SteadyState ss = c.route == Route::spectral ? steady_state_spectral(rates, tol) : steady_state_shooting(rates, tol);
  Report rep;
  rep.scalar("n", static_cast<std::int64_t>(rates.n()));
  rep.scalar("R", ss.R);
  rep.scalar("sigma", perron(rates).sigma);
  rep.vector("e", ss.e, 1);
  rep.residual("flow_residual", ss.flow_residual);
  return rep;
}

inline Report cmd_simulate(const RunConfig& c) {
  const RateVector rates = detail::input_rates(c);
  const std::vector<double> x0 = detail::initial_state(c.x0, rates.n());
  SimulateOptions opt;
  opt.step = c.step;
  opt.sample_interval = c.sample;
  const Trajectory traj = simulate(rates, x0, c.t_final, opt);
  Report rep;
  Table t;
  t.columns.push_back("t");
  for (int i = 1; i <= rates.n(); ++i) t.columns.push_back("x" + std::to_string(i));
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<Cell> row{traj.times[k]};
    for (double x : traj.states[k]) row.emplace_back(x);
    t.rows.push_back(std::move(row));
  }
  rep.table = std::move(t);

  const SteadyState ss = steady_state_spectral(rates);
  double dist = 0.0;
  for (std::size_t i = 0; i < ss.e.size(); ++i) dist = std::max(dist, std::abs(traj.final_state()[i] - ss.e[i]));
  rep.residual("distance_to_steady_state", dist);
  rep.residual("converged", traj.converged);
  if (traj.converged) rep.residual("converged_time", traj.converged_time);
  rep.residual("step_used", traj.step_used);
  return rep;
}

inline void add_solution(Report& rep, const OptimalSolution& sol) {
  rep.scalar("n", static_cast<std::int64_t>(sol.n()));
  rep.scalar("sigma", sol.sigma);
  rep.scalar("R", sol.R);
  rep.scalar("r", sol.profile.r);
  rep.scalar("q", sol.profile.q);
  rep.vector("lambda", sol.rates.values(), 0);
  rep.vector("e", sol.steady.e, 1);
  rep.vector("a", sol.profile.a, 0);
  rep.vector("s", sol.sensitivities.s, 0);
  rep.vector("mu", sol.mu, 0);
  rep.vector("bulk_gap", sol.bulk_gap, 0);
}

inline Report cmd_optimize(const RunConfig& c) {
  const int n = *c.n;
  Report rep;
  const SolverMethod primary = c.method == Method::equalize ? SolverMethod::equalization : SolverMethod::recursion;
  const OptimalSolution sol = detail::solve(n, primary, c.tol);
  add_solution(rep, sol);
  const std::string tag = std::string("_") + to_string(sol.method);
  rep.residual("kkt_residual" + tag, sol.kkt_residual);
  rep.residual("eigen_residual" + tag, sol.eigen_residual);
  rep.residual("flow_residual" + tag, sol.steady.flow_residual);
  rep.residual("iterations" + tag, static_cast<std::int64_t>(sol.iterations));
  if (c.method == Method::both) {
    const OptimalSolution eq = detail::solve(n, SolverMethod::equalization, c.tol);
    std::vector<double> gap(sol.rates.size());
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = std::abs(sol.rates[i] - eq.rates[i]);
    rep.vector("lambda_gap", gap, 0);
    rep.residual("kkt_residual_equalize", eq.kkt_residual);
    rep.residual("eigen_residual_equalize", eq.eigen_residual);
    rep.residual("flow_residual_equalize", eq.steady.flow_residual);
    rep.residual("iterations_equalize", static_cast<std::int64_t>(eq.iterations));
    rep.residual("max_lambda_gap", *std::max_element(gap.begin(), gap.end()));
  }
  return rep;
}

struct RangeResult {
  std::optional<OptimalSolution> sol;
  BoundsReport bounds;
  bool passed = true;
  std::vector<std::string> failed;
};

namespace detail {

inline std::vector<RangeResult> solve_range(const RunConfig& c) {
  const int lo = *c.n_min;
  const auto count = static_cast<std::size_t>(*c.n_max - lo + 1);
  std::vector<RangeResult> out(count);
  std::vector<SolverMethod> methods;
  if (c.method != Method::equalize) methods.push_back(SolverMethod::recursion);
  if (c.method != Method::recursion) methods.push_back(SolverMethod::equalization);
  parallel_for(count, c.threads, [&](std::size_t k) {
    const int n = lo + static_cast<int>(k);
    RangeResult& res = out[k];
    for (std::size_t m = 0; m < methods.size(); ++m) {
      OptimalSolution sol = solve(n, methods[m], c.tol);
      BoundsReport rep = verify_solution(sol, c.eps);
      for (const auto& chk : rep.checks) {
        if (!chk.passed) res.failed.push_back(std::string(to_string(methods[m])) + ":" + chk.name);
      }
      res.passed = res.passed && rep.all_passed;
      if (m == 0) {
        res.sol.emplace(std::move(sol));
        res.bounds = std::move(rep);
      }
    }
  });
  return out;
}

}  // namespace detail

inline Report cmd_verify(const RunConfig& c, std::ostream& err) {
  const auto results = detail::solve_range(c);
  Report rep;
  Table t;
  t.columns = {"n", "sigma", "r", "q", "M", "all_passed"};
  std::int64_t failures = 0;
  std::int64_t checks = 0;
  for (const auto& res : results) {
    const auto& s = *res.sol;
    t.rows.push_back({static_cast<std::int64_t>(s.n()), s.sigma, s.profile.r, s.profile.q, res.bounds.M, res.passed});
    checks += static_cast<std::int64_t>(res.bounds.checks.size());
    failures += static_cast<std::int64_t>(res.failed.size());
    for (const auto& name : res.failed) err << "n=" << s.n() << " failed " << name << '\n';
  }
  rep.table = std::move(t);
  rep.residual("checks", checks);
  rep.residual("failures", failures);
  rep.exit_code = failures == 0 ? 0 : 1;
  return rep;
}

inline Report cmd_sweep(const RunConfig& c) {
  const auto results = detail::solve_range(c);
  Report rep;
  Table t;
  t.columns = {"n", "sigma", "R", "r", "q", "M"};
  for (double eps : c.eps) t.columns.push_back("width_" + io::format_shortest(eps));
  for (const auto& res : results) {
    const auto& s = *res.sol;
    std::vector<Cell> row{static_cast<std::int64_t>(s.n()), s.sigma, s.R, s.profile.r, s.profile.q, res.bounds.M};
    for (double eps : c.eps) row.emplace_back(static_cast<std::int64_t>(res.bounds.turnpike_width.at(eps)));
    t.rows.push_back(std::move(row));
  }
  rep.table = std::move(t);
  return rep;
}

inline Report build_report(const RunConfig& c, std::ostream& err) {
  switch (c.command) {
    case Command::perron: return cmd_perron(c);
    case Command::steady_state: return cmd_steady_state(c);
    case Command::simulate: return cmd_simulate(c);
    case Command::optimize: return cmd_optimize(c);
    case Command::verify: return cmd_verify(c, err);
    case Command::sweep: return cmd_sweep(c);
  }
  throw DomainError("unknown command");
}

// Executes the command and writes the encoded report to --out or `out`.
// Returns the process exit code.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    const Report rep = build_report(c, err);
    std::ofstream file;
    if (c.out) {
      file.open(*c.out, std::ios::binary);
      if (!file) throw DomainError("cannot open output file '" + *c.out + "'");
    }
    std::ostream& os = c.out ? static_cast<std::ostream&>(file) : out;
    if (c.format == Format::csv) {
      write_csv(os, rep);
    } else {
      write_json(os, c, rep);
    }
    os.flush();
    return rep.exit_code;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const ParseOutcome parsed = parse_args(argc, argv);
  if (!parsed.config) {
    (parsed.exit_code == 0 ? out : err) << parsed.message;
    return parsed.exit_code;
  }
  return run(*parsed.config, out, err);
}

}  // namespace perronopt::cli
