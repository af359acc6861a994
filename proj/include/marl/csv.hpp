#pragma once

// Deterministic CSV plumbing: shortest round-trip number formatting, the
// pinned metrics schema, a small reader for aggregation, and percentile
// helpers for cross-seed summaries.

#include "marl/trainer.hpp"

#include <string>
#include <vector>

namespace marl {

// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

// Fixed column order shared by every metrics file.
extern const char* const kMetricsHeader;

// wall_ms is written as 0 unless `timing` is set: wall-clock is the one
// nondeterministic column, and reruns must be byte-identical by default.
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records, bool timing);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> col(const std::string& name) const;  // throws when absent
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Linear interpolation between order statistics at rank h = (n-1)*q.
double percentile(std::vector<double> values, double q);

}  // namespace marl
