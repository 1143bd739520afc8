#include "hubersl/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

namespace hubersl {

namespace {

void remember(std::vector<std::string>& order, const std::string& s) {
  if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
}

std::string format_cell(const std::string& metric, double v) {
  char buf[64];
  if (is_relative_metric(metric)) {
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  } else {
    std::snprintf(buf, sizeof buf, "%.6g", v);
  }
  return buf;
}

}  // namespace

CsvTable report_to_csv(const Report& report) {
  CsvTable t;
  t.header = {"scenario", "estimator", "metric", "value"};
  for (const auto& r : report) t.rows.push_back({r.scenario, r.estimator, r.metric, format_double(r.value)});
  return t;
}

Report report_from_csv(const CsvTable& table) {
  const std::vector<std::string> expected{"scenario", "estimator", "metric", "value"};
  if (table.header != expected) throw DataError("report CSV header must be scenario,estimator,metric,value");
  Report out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    out.push_back({row[0], row[1], row[2], parse_double(row[3], r + 2, "value")});
  }
  return out;
}

bool is_relative_metric(const std::string& metric) {
  return metric == "relative_mse" || metric == "re" || metric == "relative_variance";
}

std::string render_markdown(const Report& report) {
  std::vector<std::string> scenarios;
  for (const auto& r : report) remember(scenarios, r.scenario);
  std::ostringstream os;
  bool first = true;
  for (const auto& scenario : scenarios) {
    std::vector<std::string> estimators;
    std::vector<std::string> metrics;
    std::map<std::pair<std::string, std::string>, double> cells;
    for (const auto& r : report) {
      if (r.scenario != scenario) continue;
      remember(estimators, r.estimator);
      remember(metrics, r.metric);
      cells[{r.metric, r.estimator}] = r.value;
    }
    if (!first) os << '\n';
    first = false;
    os << "## " << scenario << "\n\n| metric |";
    for (const auto& e : estimators) os << ' ' << e << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < estimators.size(); ++i) os << "---:|";
    os << '\n';
    for (const auto& m : metrics) {
      os << "| " << m << " |";
      for (const auto& e : estimators) {
        const auto it = cells.find({m, e});
        os << ' ' << (it == cells.end() ? std::string() : format_cell(m, it->second)) << " |";
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace hubersl
