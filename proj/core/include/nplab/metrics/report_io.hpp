#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nplab/metrics/metrics.hpp"

namespace nplab::metrics {

inline constexpr int kCsvSchemaVersion = 1;

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

/// Minimal CSV writer; every row starts with the schema version column.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
  std::size_t width_;
};

/// Identifies one evaluation row.
struct ReportKey {
  std::string model;
  std::string kernel;
  std::uint64_t seed = 0;
  Index samples = 0;
};

std::vector<std::string> metrics_columns();
std::vector<std::string> metrics_cells(const ReportKey& key, const EvalReport& r);

void write_metrics_csv(std::ostream& os, const ReportKey& key, const std::vector<EvalReport>& reports);
void write_calibration_csv(std::ostream& os, const ReportKey& key, const std::vector<EvalReport>& reports);

}  // namespace nplab::metrics
