#pragma once

#include <string>
#include <vector>

#include "hubersl/csv.hpp"

namespace hubersl {

/// One long-format report cell.
struct ReportRow {
  std::string scenario;
  std::string estimator;
  std::string metric;
  double value = 0.0;
};

using Report = std::vector<ReportRow>;

CsvTable report_to_csv(const Report& report);
/// Needs the header scenario,estimator,metric,value.
Report report_from_csv(const CsvTable& table);

/// Metrics rendered as percentages.
bool is_relative_metric(const std::string& metric);

/// One section per scenario; rows are metrics and columns are estimators,
/// both in order of first appearance.
std::string render_markdown(const Report& report);

}  // namespace hubersl
