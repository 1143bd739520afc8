#pragma once

#include <span>
#include <string>
#include <variant>

#include "hubersl/types.hpp"

namespace hubersl {

/// Huber robustification parameter, in outcome units. Always finite and > 0.
class HuberParam {
 public:
  explicit HuberParam(double lambda);
  [[nodiscard]] double lambda() const { return lambda_; }

 private:
  double lambda_;
};

struct SquaredLoss {};

struct HuberLoss {
  HuberParam param;
};

/// Exactly one of squared-error or Huber(lambda).
using LossKind = std::variant<SquaredLoss, HuberLoss>;

inline LossKind huber(double lambda) { return HuberLoss{HuberParam(lambda)}; }

/// 1/2 r^2 for |r| <= lambda, lambda (|r| - lambda/2) otherwise.
double huber_loss(double residual, HuberParam param);

/// Derivative of huber_loss: r clipped to [-lambda, lambda].
double huber_psi(double residual, HuberParam param);

/// r^2. No 1/2 factor: this is the loss of the standard super learner.
double squared_loss(double residual);

double loss_value(const LossKind& loss, double residual);
double loss_derivative(const LossKind& loss, double residual);

/// Mean over i of loss(y_i - yhat_i).
double empirical_risk(std::span<const double> predictions, std::span<const double> outcomes,
                      const LossKind& loss);
double empirical_risk(const Vector& predictions, const Vector& outcomes, const LossKind& loss);

std::string describe(const LossKind& loss);

}  // namespace hubersl
