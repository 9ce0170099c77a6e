#pragma once

// Five-statistic angular-error summary used in every results table:
// mean of the best 25%, mean, median, Tukey's trimean, mean of the worst 25%.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "c3ae/errors.hpp"

namespace c3ae {

struct ErrorStats {
  double best25_mean = 0;
  double mean = 0;
  double median = 0;
  double trimean = 0;
  double worst25_mean = 0;
};

/// Linear-interpolation quantile at rank position (n-1)*q of a sorted,
/// non-empty sample.
inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile: empty sample");
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

/// Summarizes a non-empty list of angular errors (degrees). The 25% tails
/// average the smallest / largest ceil(n/4) values; the trimean is
/// (Q1 + 2*Q2 + Q3) / 4 under the quantile rule above.
inline ErrorStats summarize(const std::vector<double>& errors) {
  if (errors.empty()) throw DomainError("summarize: empty sample");
  std::vector<double> s = errors;
  std::sort(s.begin(), s.end());

  const std::size_t n = s.size();
  const std::size_t tail = (n + 3) / 4;  // ceil(n/4)

  ErrorStats st;
  st.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
  st.median = quantile(s, 0.5);
  st.trimean =
      (quantile(s, 0.25) + 2.0 * quantile(s, 0.5) + quantile(s, 0.75)) / 4.0;
  st.best25_mean = std::accumulate(s.begin(), s.begin() + tail, 0.0) /
                   static_cast<double>(tail);
  st.worst25_mean = std::accumulate(s.end() - tail, s.end(), 0.0) /
                    static_cast<double>(tail);
  return st;
}

struct ReportRow {
  std::string method;
  ErrorStats stats;
};

/// Plain-text table, one row per method, columns in the conventional order.
inline std::string format_report(const std::vector<ReportRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %9s %9s %9s %9s %9s\n",
                "Method", "Best25%", "Mean", "Med.", "Tri.", "Worst25%");
  out += buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %9.3f %9.3f %9.3f %9.3f %9.3f\n",
                  row.method.c_str(), row.stats.best25_mean, row.stats.mean,
                  row.stats.median, row.stats.trimean, row.stats.worst25_mean);
    out += buf;
  }
  return out;
}

inline std::string format_report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "method,best25_mean,mean,median,trimean,worst25_mean\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  row.method.c_str(), row.stats.best25_mean, row.stats.mean,
                  row.stats.median, row.stats.trimean, row.stats.worst25_mean);
    out += buf;
  }
  return out;
}

}  // namespace c3ae
