#include "hubersl/losses.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hubersl {

HuberParam::HuberParam(double lambda) : lambda_(lambda) {
  if (!std::isfinite(lambda) || lambda <= 0.0) {
    throw std::domain_error("Huber lambda must be finite and positive");
  }
}

namespace {

void require_finite(double r) {
  if (!std::isfinite(r)) throw std::domain_error("non-finite residual");
}

}  // namespace

double huber_loss(double residual, HuberParam param) {
  require_finite(residual);
  const double a = std::abs(residual);
  const double lam = param.lambda();
  if (a <= lam) return 0.5 * residual * residual;
  return lam * (a - 0.5 * lam);
}

double huber_psi(double residual, HuberParam param) {
  require_finite(residual);
  const double lam = param.lambda();
  if (residual > lam) return lam;
  if (residual < -lam) return -lam;
  return residual;
}

double squared_loss(double residual) {
  require_finite(residual);
  return residual * residual;
}

double loss_value(const LossKind& loss, double residual) {
  if (const auto* h = std::get_if<HuberLoss>(&loss)) return huber_loss(residual, h->param);
  return squared_loss(residual);
}

double loss_derivative(const LossKind& loss, double residual) {
  if (const auto* h = std::get_if<HuberLoss>(&loss)) return huber_psi(residual, h->param);
  require_finite(residual);
  return 2.0 * residual;
}

double empirical_risk(std::span<const double> predictions, std::span<const double> outcomes,
                      const LossKind& loss) {
  if (predictions.empty()) throw std::invalid_argument("empirical_risk: empty input");
  if (predictions.size() != outcomes.size()) {
    throw std::invalid_argument("empirical_risk: length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    total += loss_value(loss, outcomes[i] - predictions[i]);
  }
  return total / static_cast<double>(predictions.size());
}

double empirical_risk(const Vector& predictions, const Vector& outcomes, const LossKind& loss) {
  return empirical_risk(std::span<const double>(predictions.data(), predictions.size()),
                        std::span<const double>(outcomes.data(), outcomes.size()), loss);
}

std::string describe(const LossKind& loss) {
  if (const auto* h = std::get_if<HuberLoss>(&loss)) {
    std::ostringstream os;
    os.precision(17);
    os << "huber(" << h->param.lambda() << ")";
    return os.str();
  }
  return "squared";
}

}  // namespace hubersl
