#include "hubersl/learners.hpp"
#include "internal.hpp"

namespace hubersl::detail {

namespace {

class LinearModel final : public ModelBase {
 public:
  LinearModel(LearnerSpec spec, std::size_t p, ClampRange clamp, double intercept, Vector coef)
      : ModelBase(std::move(spec), p, clamp), intercept_(intercept), coef_(std::move(coef)) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    out = (X * coef_).array() + intercept_;
  }
  nlohmann::json state_json() const override {
    return {{"intercept", intercept_}, {"coefficients", to_std_vector(coef_)}};
  }

 private:
  double intercept_;
  Vector coef_;
};

}  // namespace

LearnerPtr make_linear_model(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                             double intercept, Vector coefficients) {
  return std::make_shared<LinearModel>(spec, p, clamp, intercept, std::move(coefficients));
}

LinearFit ridge_solve(const Matrix& X, const Vector& y, double penalty) {
  const auto n = static_cast<double>(X.rows());
  const Standardizer st = Standardizer::fit(X);
  const Matrix Xs = st.apply(X);
  const double ybar = y.mean();
  Matrix gram = Xs.transpose() * Xs / n;
  gram.diagonal().array() += penalty;
  const Vector rhs = Xs.transpose() * (y.array() - ybar).matrix() / n;
  const Vector b = gram.ldlt().solve(rhs);
  LinearFit f;
  f.coefficients = b.array() / st.scale.array();
  f.intercept = ybar - st.mean.dot(f.coefficients);
  return f;
}

LearnerPtr fit_ols(const LearnerSpec& spec, const Matrix& X, const Vector& y, FitLog* log) {
  const auto p = static_cast<std::size_t>(X.cols());
  Matrix design(X.rows(), X.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) {
    record(log, spec, "singular design; ridge(1e-8) fallback");
    LinearFit f = ridge_solve(X, y, 1e-8);
    return make_linear_model(spec, p, default_clamp(y), f.intercept, std::move(f.coefficients));
  }
  const Vector beta = qr.solve(y);
  return make_linear_model(spec, p, default_clamp(y), beta[0], beta.tail(X.cols()));
}

LearnerPtr fit_ridge(const LearnerSpec& spec, const Matrix& X, const Vector& y) {
  LinearFit f = ridge_solve(X, y, spec.param("penalty", 1.0));
  return make_linear_model(spec, static_cast<std::size_t>(X.cols()), default_clamp(y), f.intercept,
                           std::move(f.coefficients));
}

LearnerPtr linear_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                            const nlohmann::json& state) {
  return make_linear_model(spec, p, clamp, state.at("intercept").get<double>(),
                           from_json_vector(state.at("coefficients")));
}

}  // namespace hubersl::detail
