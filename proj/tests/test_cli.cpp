#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "perronopt/cli/commands.hpp"

using namespace perronopt;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "perronopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

// Tidy CSV as quantity -> values in index order.
std::map<std::string, std::vector<double>> tidy(const std::string& text) {
  std::map<std::string, std::vector<double>> out;
  const auto rows = parse_csv(text);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k][2] == "true" || rows[k][2] == "false") continue;
    out[rows[k][0]].push_back(std::stod(rows[k][2]));
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({"optimize", "--n", "0"}).code, 2);
  EXPECT_EQ(run_cli({"verify", "--n-min", "5", "--n-max", "4"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"optimize"}).code, 2);
  EXPECT_EQ(run_cli({"optimize", "--n", "abc"}).code, 2);
  EXPECT_EQ(run_cli({"optimize", "--n", "3", "--format", "xml"}).code, 2);
  EXPECT_EQ(run_cli({"perron"}).code, 2);
  EXPECT_EQ(run_cli({"perron", "--n", "3", "--rates", "x.txt"}).code, 2);
  EXPECT_EQ(run_cli({"perron", "--rates", "/nonexistent/rates.txt"}).code, 2);
  EXPECT_EQ(run_cli({"sweep", "--n-min", "2", "--n-max", "3", "--eps", "0.1,-1"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--n", "3", "--x0", "random:abc"}).code, 2);
  EXPECT_EQ(run_cli({"optimize", "--n", "5000"}).code, 2);
  const auto bad = run_cli({"optimize", "--n", "0"});
  EXPECT_NE(bad.err.find("--n"), std::string::npos);
  EXPECT_TRUE(bad.out.empty());
}

TEST(Cli, HelpExitsZero) {
  const auto h = run_cli({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("optimize"), std::string::npos);
  EXPECT_EQ(run_cli({"optimize", "--help"}).code, 0);
}

TEST(Cli, NumericalFailureExitsThree) {
  const auto r = run_cli({"perron", "--n", "50", "--tol", "1e-300"});
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, OptimizeSingleSite) {
  const auto r = run_cli({"optimize", "--n", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = tidy(r.out);
  ASSERT_EQ(t.at("lambda").size(), 2u);
  EXPECT_NEAR(t.at("lambda")[0], 1.0, 1e-12);
  EXPECT_NEAR(t.at("lambda")[1], 1.0, 1e-12);
}

TEST(Cli, OptimizeLongChainCsv) {
  const auto r = run_cli({"optimize", "--n", "100", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = tidy(r.out);
  EXPECT_NEAR(t.at("sigma")[0], 1.9892, 5e-5);
  const auto& lam = t.at("lambda");
  ASSERT_EQ(lam.size(), 101u);
  const auto& gap = t.at("bulk_gap");
  ASSERT_EQ(gap.size(), 101u);
  for (int i = 0; i < 50; ++i) {
    EXPECT_LE(lam[i], lam[i + 1]);
    EXPECT_GT(gap[i], gap[i + 1]) << i;
  }
  for (const char* q : {"R", "r", "q", "e", "a", "s", "mu", "kkt_residual_recursion", "eigen_residual_recursion"}) {
    EXPECT_TRUE(t.contains(q)) << q;
  }
}

TEST(Cli, OptimizeBothReportsGap) {
  const auto r = run_cli({"optimize", "--n", "12", "--method", "both"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = tidy(r.out);
  ASSERT_EQ(t.at("lambda_gap").size(), 13u);
  for (double g : t.at("lambda_gap")) EXPECT_LT(g, 1e-6);
}

TEST(Cli, PerronFromRatesFile) {
  const auto path = temp_file("perronopt_ones4.txt", "1\n1\n1\n1\n");
  const auto r = run_cli({"perron", "--rates", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(tidy(r.out).at("sigma")[0], std::sqrt(3.0), 1e-12);
  std::filesystem::remove(path);
}

TEST(Cli, SteadyStateFromRatesFile) {
  std::string body;
  for (int i = 0; i < 101; ++i) body += "1\n";
  const auto path = temp_file("perronopt_ones101.txt", body);
  for (const char* route : {"spectral", "shooting"}) {
    const auto r = run_cli({"steady-state", "--rates", path.string(), "--route", route});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = tidy(r.out);
    EXPECT_NEAR(t.at("R")[0], 0.2502, 5e-5);
    EXPECT_EQ(t.at("e").size(), 100u);
  }
  std::filesystem::remove(path);
}

TEST(Cli, SteadyStateOptimalBulkIsHalf) {
  const auto r = run_cli({"steady-state", "--n", "100", "--optimal"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& e = tidy(r.out).at("e");
  ASSERT_EQ(e.size(), 100u);
  for (int i = 30; i < 70; ++i) EXPECT_NEAR(e[i], 0.5, 1e-3);
}

TEST(Cli, SimulateWideTable) {
  const auto r = run_cli({"simulate", "--n", "3", "--t-final", "5", "--x0", "half"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "x1", "x2", "x3"}));
  EXPECT_EQ(rows[1][0], "0");
  EXPECT_EQ(rows[1][1], "0.5");
  EXPECT_EQ(rows.back()[0], "5");
}

TEST(Cli, SimulateFromFileInitialCondition) {
  const auto path = temp_file("perronopt_x0.txt", "0.1\n0.9\n");
  const auto r = run_cli({"simulate", "--n", "2", "--t-final", "1", "--x0", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_csv(r.out)[1][1], "0.10000000000000001");
  std::filesystem::remove(path);
}

TEST(Cli, VerifyRangeRowsOrdered) {
  const auto r = run_cli({"verify", "--n-min", "2", "--n-max", "35", "--threads", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 35u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "sigma", "r", "q", "M", "all_passed"}));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_EQ(std::stoi(rows[k][0]), static_cast<int>(k) + 1);
    EXPECT_LT(std::stod(rows[k][4]), 1.0);
    EXPECT_EQ(rows[k][5], "true");
  }
}

TEST(Cli, SweepWidthColumns) {
  const auto r = run_cli({"sweep", "--n-min", "20", "--n-max", "22", "--eps", "0.1,0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "sigma", "R", "r", "q", "M", "width_0.1", "width_0.5"}));
  EXPECT_EQ(rows[1][6], "2");
  EXPECT_EQ(rows[1][7], "0");
}

TEST(Cli, OutputIsDeterministic) {
  const std::vector<std::vector<std::string>> configs{
      {"optimize", "--n", "30", "--method", "both"},
      {"sweep", "--n-min", "2", "--n-max", "40", "--threads", "3"},
      {"simulate", "--n", "5", "--x0", "random:42", "--t-final", "20"},
      {"perron", "--n", "9", "--format", "json"},
  };
  for (const auto& c : configs) {
    const auto a = run_cli(c);
    const auto b = run_cli(c);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
  }
  auto single = std::vector<std::string>{"sweep", "--n-min", "2", "--n-max", "40", "--threads", "1"};
  auto many = std::vector<std::string>{"sweep", "--n-min", "2", "--n-max", "40", "--threads", "5"};
  EXPECT_EQ(run_cli(single).out, run_cli(many).out);
}

TEST(Cli, OutFileMatchesStdout) {
  const auto path = std::filesystem::temp_directory_path() / "perronopt_out.json";
  const auto to_file = run_cli({"optimize", "--n", "7", "--format", "json", "--out", path.string()});
  ASSERT_EQ(to_file.code, 0) << to_file.err;
  EXPECT_TRUE(to_file.out.empty());
  std::ifstream in(path);
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto to_stdout = run_cli({"optimize", "--n", "7", "--format", "json", "--out", path.string()});
  std::ifstream in2(path);
  const std::string body2((std::istreambuf_iterator<char>(in2)), std::istreambuf_iterator<char>());
  EXPECT_EQ(body, body2);
  std::filesystem::remove(path);
}

TEST(Cli, JsonAndCsvCarrySameNumbers) {
  for (const char* cmd : {"optimize", "perron", "steady-state"}) {
    const auto csv = run_cli({cmd, "--n", "11", "--format", "csv"});
    const auto js = run_cli({cmd, "--n", "11", "--format", "json"});
    ASSERT_EQ(csv.code, 0) << csv.err;
    ASSERT_EQ(js.code, 0) << js.err;
    const auto doc = nlohmann::json::parse(js.out);
    EXPECT_TRUE(doc.contains("config"));
    EXPECT_TRUE(doc.contains("residuals"));
    EXPECT_EQ(doc.at("version"), cli::kVersion);
    const auto& results = doc.at("results");
    for (const auto& [q, values] : tidy(csv.out)) {
      if (results.contains(q)) {
        const auto& node = results.at(q);
        if (node.is_array()) {
          ASSERT_EQ(node.size(), values.size()) << q;
          for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(node[i].get<double>(), values[i]) << q;
        } else {
          EXPECT_EQ(node.get<double>(), values[0]) << q;
        }
      } else {
        const auto& node = doc.at("residuals").at(q);
        EXPECT_EQ(node.get<double>(), values[0]) << q;
      }
    }
  }
  const auto csv = run_cli({"sweep", "--n-min", "3", "--n-max", "6"});
  const auto js = nlohmann::json::parse(run_cli({"sweep", "--n-min", "3", "--n-max", "6", "--format", "json"}).out);
  const auto rows = parse_csv(csv.out);
  const auto& jrows = js.at("results").at("rows");
  ASSERT_EQ(jrows.size() + 1, rows.size());
  for (std::size_t k = 0; k < jrows.size(); ++k) {
    for (std::size_t c = 0; c < rows[k + 1].size(); ++c) EXPECT_EQ(jrows[k][c].get<double>(), std::stod(rows[k + 1][c]));
  }
}
