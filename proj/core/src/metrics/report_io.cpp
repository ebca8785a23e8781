#include "nplab/metrics/report_io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "nplab/errors.hpp"

namespace nplab::metrics {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& columns) : os_(os), width_(columns.size()) {
  os_ << "schema_version";
  for (const std::string& c : columns) os_ << ',' << c;
  os_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw ContractError("CsvWriter: row width does not match the header");
  os_ << kCsvSchemaVersion;
  for (const std::string& c : cells) os_ << ',' << c;
  os_ << '\n';
}

std::vector<std::string> metrics_columns() {
  return {"model",    "kernel",    "mask",       "seed",     "samples",          "n_points", "ll",
          "ll_target", "ll_context", "ece",       "n_target_points", "n_context_points", "ece_intervals"};
}

std::vector<std::string> metrics_cells(const ReportKey& key, const EvalReport& r) {
  return {key.model,
          key.kernel,
          to_string(r.mask),
          std::to_string(key.seed),
          std::to_string(key.samples),
          std::to_string(r.n_points),
          format_double(r.ll),
          format_double(r.ll_target),
          format_double(r.ll_context),
          format_double(r.ece),
          std::to_string(r.n_target_points),
          std::to_string(r.n_context_points),
          "centered"};
}

void write_metrics_csv(std::ostream& os, const ReportKey& key, const std::vector<EvalReport>& reports) {
  CsvWriter w(os, metrics_columns());
  for (const EvalReport& r : reports) w.row(metrics_cells(key, r));
}

void write_calibration_csv(std::ostream& os, const ReportKey& key, const std::vector<EvalReport>& reports) {
  CsvWriter w(os, {"model", "kernel", "mask", "seed", "level", "coverage"});
  for (const EvalReport& r : reports)
    for (const auto& [level, cov] : r.calibration_curve)
      w.row({key.model, key.kernel, to_string(r.mask), std::to_string(key.seed), format_double(level),
             format_double(cov)});
}

}  // namespace nplab::metrics
