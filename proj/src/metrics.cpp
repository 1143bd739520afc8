#include "hubersl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hubersl {

Scores score(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() == 0) throw std::invalid_argument("score needs at least one observation");
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("score: length mismatch");
  const double n = static_cast<double>(y_true.size());
  const Eigen::ArrayXd r = (y_true - y_pred).array();
  const double sse = r.square().sum();
  const double sst = (y_true.array() - y_true.mean()).square().sum();
  if (!(sst > 0.0)) throw std::invalid_argument("R^2 is undefined for a constant outcome");
  return {sse / n, r.abs().sum() / n, 1.0 - sse / sst};
}

MetricsReport relative_report(const Scores& s, const Scores& ref) {
  if (!(ref.mse > 0.0)) throw std::invalid_argument("reference MSE must be positive");
  if (ref.r2 == 0.0) throw std::invalid_argument("reference R^2 is zero");
  return {s.mse, s.mae, s.r2, s.mse / ref.mse, s.r2 / ref.r2};
}

double icc_1_1(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("icc: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("icc needs at least two pairs");
  const double n = static_cast<double>(a.size());
  const Eigen::ArrayXd m = (a.array() + b.array()) / 2.0;
  const double grand = m.mean();
  const double ss_between = 2.0 * (m - grand).square().sum();
  const double ss_within = (a.array() - m).square().sum() + (b.array() - m).square().sum();
  if (!(ss_between + ss_within > 0.0)) throw std::invalid_argument("icc undefined: zero total variance");
  const double ms_between = ss_between / (n - 1.0);
  const double ms_within = ss_within / n;  // n targets, k - 1 = 1
  return (ms_between - ms_within) / (ms_between + ms_within);
}

double icc(const Vector& lambda_train, const Vector& lambda_holdout) {
  auto log10v = [](const Vector& v) {
    if ((v.array() <= 0.0).any()) throw std::invalid_argument("icc: lambda values must be positive");
    return Vector(v.array().log10());
  };
  return icc_1_1(log10v(lambda_train), log10v(lambda_holdout));
}

double lambda_match_accuracy(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("accuracy needs equal nonempty index lists");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_digest(const nlohmann::json& config) { return fnv1a_hex(config.dump()); }

nlohmann::json RunManifest::to_json() const {
  return {{"seed", seed},
          {"config_digest", config_digest},
          {"tool_version", tool_version},
          {"elapsed_seconds", elapsed_seconds},
          {"replications", replications},
          {"failed_replications", failed_replications}};
}

}  // namespace hubersl
