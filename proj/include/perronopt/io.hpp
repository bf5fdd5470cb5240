#pragma once

// Rates files and number formatting shared by the CLI and its tests.

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "perronopt/errors.hpp"
#include "perronopt/rates.hpp"

namespace perronopt::io {

// Shortest text that keeps 17 significant digits, independent of locale.
inline std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Shortest text that parses back to the same double; used for labels.
inline std::string format_shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\f\v");
  return s.substr(first, last - first + 1);
}

inline double parse_number(std::string_view token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw DomainError(where + ": cannot parse '" + std::string(token) + "' as a decimal number");
  }
  return value;
}

// One decimal per line; '#' starts a comment; blank lines are skipped.
inline std::vector<double> read_number_list(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    values.push_back(parse_number(view, source + ":" + std::to_string(lineno)));
  }
  return values;
}

inline std::vector<double> read_number_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file '" + path + "'");
  return read_number_list(in, path);
}

inline RateVector read_rates(std::istream& in, const std::string& source = "<rates>") {
  return RateVector(read_number_list(in, source));
}

inline RateVector read_rates_file(const std::string& path) { return RateVector(read_number_file(path)); }

inline void write_rates(std::ostream& out, const RateVector& rates) {
  for (double x : rates) out << format_number(x) << '\n';
}

}  // namespace perronopt::io
