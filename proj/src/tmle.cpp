#include "hubersl/tmle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hubersl {

void check_binary_treatment(const Vector& a) {
  if (a.size() == 0) throw DataError("treatment vector is empty");
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] != 0.0 && a[i] != 1.0) throw DataError("treatment must be coded 0/1 (row " + std::to_string(i + 1) + ")");
    ones += a[i] == 1.0 ? 1 : 0;
  }
  if (ones == 0 || ones == a.size()) throw DataError("treatment has a single class");
}

Vector PropensityModel::predict(const Matrix& X_adjust) const {
  return model->predict(X_adjust).cwiseMax(kPropensityLower).cwiseMin(kPropensityUpper);
}

PropensityModel fit_propensity(const Matrix& X_adjust, const Vector& a, std::uint64_t seed) {
  check_binary_treatment(a);
  PropensityModel pm;
  pm.model = fit(make_spec("propensity", LearnerKind::LogisticGLM), X_adjust, a, seed, &pm.log);
  const auto state = pm.model->to_json().at("state");
  pm.intercept = state.at("intercept").get<double>();
  const auto coef = state.at("coefficients").get<std::vector<double>>();
  pm.coefficients = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  return pm;
}

AteEstimate unadjusted_ate(const Vector& y, const Vector& a) {
  if (y.size() != a.size()) throw DataError("outcome and treatment lengths differ");
  check_binary_treatment(a);
  double s1 = 0.0, s0 = 0.0;
  double n1 = 0.0, n0 = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (a[i] == 1.0) {
      s1 += y[i];
      n1 += 1.0;
    } else {
      s0 += y[i];
      n0 += 1.0;
    }
  }
  AteEstimate out;
  out.label = "unadjusted";
  out.estimate = s1 / n1 - s0 / n0;
  return out;
}

std::string to_string(Fluctuation f) { return f == Fluctuation::Linear ? "linear" : "logistic"; }

Fluctuation fluctuation_from_string(const std::string& s) {
  if (s == "linear") return Fluctuation::Linear;
  if (s == "logistic") return Fluctuation::Logistic;
  throw ConfigError("unknown fluctuation '" + s + "'");
}

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

AteEstimate tmle_from_predictions(const Vector& y, const Vector& a, const Vector& q_a, const Vector& q1,
                                  const Vector& q0, const Vector& g, Fluctuation fluctuation) {
  const Eigen::Index n = y.size();
  if (a.size() != n || q_a.size() != n || q1.size() != n || q0.size() != n || g.size() != n) {
    throw DataError("tmle inputs differ in length");
  }
  check_binary_treatment(a);
  const Vector gc = g.cwiseMax(kPropensityLower).cwiseMin(kPropensityUpper);
  const Vector h1 = gc.cwiseInverse();
  const Vector h0 = -(Vector::Ones(n) - gc).cwiseInverse();
  const Vector h = (a.array() == 1.0).select(h1, h0);
  if (!h.allFinite()) throw DataError("degenerate propensity scores");

  AteEstimate out;
  out.label = "tmle";
  out.g_min = gc.minCoeff();
  out.g_max = gc.maxCoeff();
  out.h_min = h.minCoeff();
  out.h_max = h.maxCoeff();

  if (fluctuation == Fluctuation::Linear) {
    // Extended-precision sums keep the score identity tight for large outcomes.
    long double hh = 0.0L, hr = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
      hh += static_cast<long double>(h[i]) * h[i];
      hr += static_cast<long double>(h[i]) * (static_cast<long double>(y[i]) - q_a[i]);
    }
    out.epsilon = static_cast<double>(hr / hh);
    long double score = 0.0L;
    for (Eigen::Index i = 0; i < n; ++i) {
      const long double star = static_cast<long double>(q_a[i]) + static_cast<long double>(out.epsilon) * h[i];
      score += static_cast<long double>(h[i]) * (static_cast<long double>(y[i]) - star);
    }
    out.score = static_cast<double>(score);
    out.estimate = ((q1 + out.epsilon * h1) - (q0 + out.epsilon * h0)).mean();
    return out;
  }

  // Logistic submodel on the range-rescaled outcome.
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  const double span = hi - lo;
  if (!(span > 0.0)) {
    out.estimate = (q1 - q0).mean();
    return out;
  }
  constexpr double kBound = 1e-5;
  auto scaled = [&](const Vector& q) {
    return Vector(((q.array() - lo) / span).max(kBound).min(1.0 - kBound));
  };
  const Vector ys = (y.array() - lo) / span;
  const Vector off_a = scaled(q_a).unaryExpr([](double p) { return logit(p); });
  const Vector off1 = scaled(q1).unaryExpr([](double p) { return logit(p); });
  const Vector off0 = scaled(q0).unaryExpr([](double p) { return logit(p); });
  double eps = 0.0;
  for (int it = 0; it < 100; ++it) {
    double grad = 0.0, info = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = expit(off_a[i] + eps * h[i]);
      grad += h[i] * (ys[i] - p);
      info += h[i] * h[i] * p * (1.0 - p);
    }
    if (!(info > 0.0)) break;
    const double step = grad / info;
    eps += step;
    if (std::abs(step) < 1e-12 * std::max(1.0, std::abs(eps))) break;
  }
  out.epsilon = eps;
  double score = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) score += h[i] * (ys[i] - expit(off_a[i] + eps * h[i]));
  out.score = score;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += expit(off1[i] + eps * h1[i]) - expit(off0[i] + eps * h0[i]);
  }
  out.estimate = span * total / static_cast<double>(n);
  return out;
}

AteEstimate tmle_ate(const Dataset& data, const SuperLearnerModel& outcome_model,
                     const PropensityModel& propensity, Fluctuation fluctuation) {
  if (data.X.cols() < 2) throw DataError("tmle needs the treatment column plus adjustment covariates");
  const Vector a = data.treatment ? *data.treatment : Vector(data.X.col(0));
  if (a != data.X.col(0)) throw DataError("treatment must be the first feature column");
  check_binary_treatment(a);
  Matrix X = data.X;
  const Vector q_a = predict_super_learner(outcome_model, X);
  X.col(0).setOnes();
  const Vector q1 = predict_super_learner(outcome_model, X);
  X.col(0).setZero();
  const Vector q0 = predict_super_learner(outcome_model, X);
  const Vector g = propensity.predict(data.X.rightCols(data.X.cols() - 1));
  AteEstimate est = tmle_from_predictions(data.y, a, q_a, q1, q0, g, fluctuation);
  est.label = "tmle/" + outcome_model.label;
  return est;
}

}  // namespace hubersl
