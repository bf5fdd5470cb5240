#pragma once

// Command-line configuration and its parser.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "perronopt/errors.hpp"
#include "perronopt/io.hpp"

namespace perronopt::cli {

inline constexpr const char* kVersion = "1.0.0";

enum class Command { perron, steady_state, simulate, optimize, verify, sweep };
enum class Method { recursion, equalize, both };
enum class Format { csv, json };
enum class Route { spectral, shooting };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::perron: return "perron";
    case Command::steady_state: return "steady-state";
    case Command::simulate: return "simulate";
    case Command::optimize: return "optimize";
    case Command::verify: return "verify";
    case Command::sweep: return "sweep";
  }
  return "?";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::recursion: return "recursion";
    case Method::equalize: return "equalize";
    case Method::both: return "both";
  }
  return "?";
}

inline const char* to_string(Format f) { return f == Format::csv ? "csv" : "json"; }
inline const char* to_string(Route r) { return r == Route::spectral ? "spectral" : "shooting"; }

struct RunConfig {
  Command command = Command::perron;
  std::optional<int> n;
  std::optional<int> n_min;
  std::optional<int> n_max;
  std::optional<std::string> rates_file;
  bool optimal = false;
  Method method = Method::recursion;
  Route route = Route::spectral;
  std::optional<double> tol;
  std::vector<double> eps{0.05, 0.1};
  double t_final = 200.0;
  double step = 0.01;
  double sample = 1.0;
  std::string x0 = "zeros";
  Format format = Format::csv;
  std::optional<std::string> out;
  int threads = 0;  // 0: hardware concurrency
};

struct ParseOutcome {
  std::optional<RunConfig> config;
  int exit_code = 0;
  std::string message;  // help text or error, when config is empty
};

inline std::vector<double> parse_eps_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = io::trim(item);
    if (t.empty()) continue;
    const double v = io::parse_number(t, "--eps");
    if (!(v > 0.0)) throw DomainError("--eps entries must be positive");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("--eps needs at least one value");
  return out;
}

namespace detail {

// Enforces the per-command input contract: exactly one of --n / --rates for
// perron, steady-state and simulate; --n for optimize; a nonempty range for
// verify and sweep.
inline void validate(const RunConfig& c) {
  auto need_n_positive = [&] {
    if (c.n && *c.n < 1) throw DomainError("--n must be >= 1, got " + std::to_string(*c.n));
  };
  switch (c.command) {
    case Command::perron:
    case Command::steady_state:
    case Command::simulate:
      if (c.n.has_value() == c.rates_file.has_value()) {
        throw DomainError(std::string(to_string(c.command)) + " needs exactly one of --n or --rates");
      }
      if (c.optimal && !c.n) throw DomainError("--optimal needs --n");
      need_n_positive();
      break;
    case Command::optimize:
      if (!c.n) throw DomainError("optimize needs --n");
      need_n_positive();
      break;
    case Command::verify:
    case Command::sweep:
      if (!c.n_min || !c.n_max) throw DomainError(std::string(to_string(c.command)) + " needs --n-min and --n-max");
      if (*c.n_min < 1) throw DomainError("--n-min must be >= 1");
      if (*c.n_max < *c.n_min) {
        throw DomainError("empty range: --n-max " + std::to_string(*c.n_max) + " < --n-min " +
                          std::to_string(*c.n_min));
      }
      break;
  }
  if (c.tol && !(*c.tol > 0.0)) throw DomainError("--tol must be positive");
  if (!(c.t_final > 0.0)) throw DomainError("--t-final must be positive");
  if (!(c.step > 0.0)) throw DomainError("--step must be positive");
  if (c.sample < 0.0) throw DomainError("--sample must be nonnegative");
}

}  // namespace detail

inline ParseOutcome parse_args(int argc, const char* const* argv) {
  CLI::App app{"Perron-root minimization for ribosome flow model rates"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  std::string method = "recursion";
  std::string route = "spectral";
  std::string format = "csv";
  std::string eps = "0.05,0.1";
  double tol = 0.0;
  int n = 0;
  int n_min = 0;
  int n_max = 0;
  std::string rates;
  std::string out;

  struct Sub {
    Command cmd;
    CLI::App* app;
  };
  std::vector<Sub> subs;
  auto add = [&](Command cmd, const char* help) {
    CLI::App* s = app.add_subcommand(to_string(cmd), help);
    subs.push_back({cmd, s});
    s->add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--out", out, "output path (default: stdout)");
    s->add_option("--tol", tol, "solver tolerance");
    return s;
  };
  auto add_input = [&](CLI::App* s) {
    s->add_option("--n", n, "chain length; rates default to 1_{n+1}");
    s->add_option("--rates", rates, "rates file, one positive decimal per line");
    s->add_flag("--optimal", cfg.optimal, "use the optimal rates for --n");
    s->add_option("--method", method, "optimizer for --optimal")
        ->check(CLI::IsMember({"recursion", "equalize", "both"}));
  };
  auto add_range = [&](CLI::App* s) {
    s->add_option("--n-min", n_min, "first chain length");
    s->add_option("--n-max", n_max, "last chain length");
    s->add_option("--method", method, "optimizer")->check(CLI::IsMember({"recursion", "equalize", "both"}));
    s->add_option("--eps", eps, "comma-separated turnpike thresholds");
    s->add_option("--threads", cfg.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  };

  add_input(add(Command::perron, "Perron root and vector of B(lambda)"));
  CLI::App* ss = add(Command::steady_state, "RFM steady state");
  add_input(ss);
  ss->add_option("--route", route, "steady-state route")->check(CLI::IsMember({"spectral", "shooting"}));
  CLI::App* sim = add(Command::simulate, "integrate the RFM dynamics");
  add_input(sim);
  sim->add_option("--t-final", cfg.t_final, "final time");
  sim->add_option("--step", cfg.step, "RK4 step");
  sim->add_option("--sample", cfg.sample, "output interval (0: every step)");
  sim->add_option("--x0", cfg.x0, "zeros | half | random:SEED | FILE");
  CLI::App* opt = add(Command::optimize, "solve the rate optimization problem");
  opt->add_option("--n", n, "chain length");
  opt->add_option("--method", method, "optimizer")->check(CLI::IsMember({"recursion", "equalize", "both"}));
  add_range(add(Command::verify, "check the optimality bounds over a range of n"));
  add_range(add(Command::sweep, "summary rows over a range of n"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    return {std::nullopt, 0, os.str()};
  } catch (const CLI::ParseError& e) {
    std::ostringstream os;
    app.exit(e, os, os);
    return {std::nullopt, 2, os.str()};
  }

  for (const auto& s : subs) {
    if (!s.app->parsed()) continue;
    cfg.command = s.cmd;
    auto given = [&](const char* name) {
      const CLI::Option* o = s.app->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    if (given("--n")) cfg.n = n;
    if (given("--n-min")) cfg.n_min = n_min;
    if (given("--n-max")) cfg.n_max = n_max;
    if (given("--rates")) cfg.rates_file = rates;
    if (given("--tol")) cfg.tol = tol;
    if (given("--out")) cfg.out = out;
  }
  cfg.method = method == "equalize" ? Method::equalize : method == "both" ? Method::both : Method::recursion;
  cfg.route = route == "shooting" ? Route::shooting : Route::spectral;
  cfg.format = format == "json" ? Format::json : Format::csv;

  try {
    cfg.eps = parse_eps_list(eps);
    detail::validate(cfg);
  } catch (const DomainError& e) {
    return {std::nullopt, 2, std::string("error: ") + e.what() + "\n"};
  }
  return {cfg, 0, {}};
}

}  // namespace perronopt::cli
