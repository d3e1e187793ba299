#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "nct/errors.hpp"

namespace nct {

/// Shortest round-trip decimal rendering of a double (std::to_chars), so
/// CSV files reload bit-exactly.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& token) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin == end) throw input_error("empty numeric field");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    // from_chars rejects "nan"/"inf" spellings in some stdlibs; accept them
    std::string t(begin, end);
    try {
      std::size_t pos = 0;
      value = std::stod(t, &pos);
      if (pos != t.size()) throw input_error("bad numeric field: '" + t + "'");
    } catch (const std::exception&) {
      throw input_error("bad numeric field: '" + t + "'");
    }
  }
  return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

/// Quantile with linear interpolation between order statistics: the value
/// at fractional position p*(n-1) of the sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw analysis_error("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, p);
}

}  // namespace nct
