#include "marl/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace marl {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericsError("format_double: non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

const char* const kMetricsHeader =
    "step,episode,loss,mean_y,mean_E_s,mean_E_su,eval_return_mean,"
    "eval_success_rate,table_size,table_hits,table_misses,wall_ms";

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& records, bool timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << kMetricsHeader << '\n';
  for (const MetricsRecord& r : records) {
    out << r.step << ',' << r.episode << ',' << format_double(r.loss) << ','
        << format_double(r.mean_y) << ',' << format_double(r.mean_E_s) << ','
        << format_double(r.mean_E_su) << ','
        << format_double(r.eval_return_mean) << ','
        << format_double(r.eval_success_rate) << ',' << r.table_size << ','
        << r.table_hits << ',' << r.table_misses << ','
        << (timing ? format_double(r.wall_ms) : std::string("0")) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::col(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw IoError("csv: no column named " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row.at(static_cast<std::size_t>(c)));
  return out;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw IoError("csv missing header row: " + path);
  table.header = split_commas(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != table.header.size())
      throw IoError("csv ragged row in " + path);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& cell : cells) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw IoError("csv bad number '" + cell + "' in " + path);
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw IoError("csv ragged row (write)");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("percentile rank outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

}  // namespace marl
