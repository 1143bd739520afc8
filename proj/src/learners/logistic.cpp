#include <cmath>

#include "hubersl/learners.hpp"
#include "internal.hpp"

namespace hubersl::detail {

double logistic_probability(double eta) {
  // Bounded linear predictor keeps probabilities strictly inside (0, 1).
  eta = std::clamp(eta, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-eta));
}

namespace {

double penalized_loglik(const Matrix& design, const Vector& y, const Vector& beta, double ridge) {
  const Vector eta = design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) computed stably
    const double e = eta[i];
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y[i] * e - log1pexp;
  }
  return ll - 0.5 * ridge * beta.tail(beta.size() - 1).squaredNorm();
}

class LogisticModel final : public ModelBase {
 public:
  LogisticModel(LearnerSpec spec, std::size_t p, ClampRange clamp, double intercept, Vector coef)
      : ModelBase(std::move(spec), p, clamp), intercept_(intercept), coef_(std::move(coef)) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    const Vector eta = (X * coef_).array() + intercept_;
    for (Eigen::Index i = 0; i < eta.size(); ++i) out[i] = logistic_probability(eta[i]);
  }
  nlohmann::json state_json() const override {
    return {{"intercept", intercept_}, {"coefficients", to_std_vector(coef_)}};
  }

 private:
  double intercept_;
  Vector coef_;
};

}  // namespace

LogisticFit logistic_irls(const Matrix& X, const Vector& y, double ridge, int max_iterations,
                          double tolerance) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;

  Vector beta = Vector::Zero(p + 1);
  const double prevalence = y.mean();
  beta[0] = std::log(prevalence / (1.0 - prevalence));
  double ll = penalized_loglik(design, y, beta, ridge);

  LogisticFit fit;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Vector eta = design * beta;
    Vector prob(n);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = eta[i];
      prob[i] = 1.0 / (1.0 + std::exp(-e));
      w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
    }
    Vector grad = design.transpose() * (y - prob);
    grad.tail(p) -= ridge * beta.tail(p);
    Matrix hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal().tail(p).array() += ridge;
    const Vector step = hess.ldlt().solve(grad);

    // Step halving keeps the penalized log-likelihood monotone.
    double scale = 1.0;
    Vector candidate = beta + step;
    double ll_new = penalized_loglik(design, y, candidate, ridge);
    for (int h = 0; h < 30 && !(ll_new >= ll - 1e-12 * std::abs(ll)); ++h) {
      scale *= 0.5;
      candidate = beta + scale * step;
      ll_new = penalized_loglik(design, y, candidate, ridge);
    }
    beta = candidate;
    fit.iterations = iter + 1;
    const double change = std::abs(ll_new - ll);
    ll = ll_new;
    if (change < tolerance) {
      fit.converged = true;
      break;
    }
  }
  const Vector eta = design * beta;
  fit.separated = eta.cwiseAbs().maxCoeff() > 20.0;
  fit.intercept = beta[0];
  fit.coefficients = beta.tail(p);
  return fit;
}

LearnerPtr fit_logistic(const LearnerSpec& spec, const Matrix& X, const Vector& y, FitLog* log) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw DataError("learner '" + spec.name + "': LogisticGLM requires a 0/1 outcome");
    }
  }
  const auto p = static_cast<std::size_t>(X.cols());
  const double prevalence = y.mean();
  if (prevalence == 0.0 || prevalence == 1.0) {
    record(log, spec, "single-class outcome; constant probability");
    const double c = prevalence == 0.0 ? -30.0 : 30.0;
    return std::make_shared<LogisticModel>(spec, p, ClampRange{0.0, 1.0}, c, Vector::Zero(X.cols()));
  }
  const LogisticFit f =
      logistic_irls(X, y, spec.param("ridge", 1e-6), static_cast<int>(spec.param("max_iterations", 50)),
                    spec.param("tolerance", 1e-8));
  if (f.separated) record(log, spec, "quasi-complete separation; ridge-stabilized estimate");
  if (!f.converged) record(log, spec, "IRLS hit the iteration cap");
  return std::make_shared<LogisticModel>(spec, p, ClampRange{0.0, 1.0}, f.intercept, f.coefficients);
}

LearnerPtr logistic_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                              const nlohmann::json& state) {
  return std::make_shared<LogisticModel>(spec, p, clamp, state.at("intercept").get<double>(),
                                         from_json_vector(state.at("coefficients")));
}

}  // namespace hubersl::detail
