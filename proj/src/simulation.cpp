#include "hubersl/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hubersl {

Matrix gen_covariates(std::size_t n, std::uint64_t seed, const CovariateSpec& spec) {
  if (n < 1) throw std::invalid_argument("gen_covariates needs n >= 1");
  if (!(spec.x8_sd > 0.0)) throw std::invalid_argument("X8 standard deviation must be positive");
  Rng rng = make_rng(seed);
  std::bernoulli_distribution b05(0.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::gamma_distribution<double> g11(1.0, 1.0);
  std::poisson_distribution<int> p1(1.0);
  std::bernoulli_distribution b02(0.2);
  std::uniform_real_distribution<double> u11(-1.0, 1.0);
  std::normal_distribution<double> n8(0.0, spec.x8_sd);
  std::gamma_distribution<double> g05(0.5, 1.0);
  std::poisson_distribution<int> p2(2.0);

  Matrix X(static_cast<Eigen::Index>(n), 10);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = b05(rng) ? 1.0 : 0.0;
    X(i, 1) = u01(rng);
    X(i, 2) = n01(rng);
    X(i, 3) = g11(rng);
    X(i, 4) = p1(rng);
    X(i, 5) = b02(rng) ? 1.0 : 0.0;
    X(i, 6) = u11(rng);
    X(i, 7) = n8(rng);
    X(i, 8) = g05(rng);
    X(i, 9) = p2(rng);
  }
  return X;
}

std::vector<std::string> covariate_names() {
  std::vector<std::string> names;
  for (int j = 1; j <= 10; ++j) names.push_back("X" + std::to_string(j));
  return names;
}

std::string to_string(OutlierRegime r) {
  switch (r) {
    case OutlierRegime::Low: return "low";
    case OutlierRegime::Medium: return "medium";
    case OutlierRegime::High: return "high";
  }
  return "?";
}

OutlierRegime outlier_regime_from_string(const std::string& s) {
  if (s == "low") return OutlierRegime::Low;
  if (s == "medium") return OutlierRegime::Medium;
  if (s == "high") return OutlierRegime::High;
  throw ConfigError("unknown outlier regime '" + s + "'");
}

double CostScenario::tail_shape() const {
  const bool small = n < 500;
  switch (regime) {
    case OutlierRegime::Low: return 0.0;
    case OutlierRegime::Medium: return small ? 1.13 : 0.71;
    case OutlierRegime::High: return small ? 38.0 : 2.9;
  }
  return 0.0;
}

namespace {

void require_canonical(const Matrix& X) {
  if (X.cols() < 5) throw std::invalid_argument("simulation needs the canonical covariate columns");
}

double gamma_draw(double shape, double scale, Rng& rng) {
  if (!(shape > 0.0)) return 0.0;
  return std::gamma_distribution<double>(shape, scale)(rng);
}

}  // namespace

Vector cost_mu_beta(const Matrix& X) {
  require_canonical(X);
  const auto x1 = X.col(0).array(), x2 = X.col(1).array(), x3 = X.col(2).array(), x4 = X.col(3).array(),
             x5 = X.col(4).array();
  return (0.6 + 0.1 * (x1 + x2 - x3 + x4 - x5 + x1 * x2 - x2 * x3 + x3 * x4 - x4 * x5)).matrix();
}

Vector cost_mu_k(const Matrix& X) {
  require_canonical(X);
  const auto x1 = X.col(0).array(), x2 = X.col(1).array(), x3 = X.col(2).array(), x4 = X.col(3).array(),
             x5 = X.col(4).array();
  return (x1 + x2 + x3 + x4 + x5 + x1 * x2 + x2 * x3 + x3 * x4 + x4 * x5).matrix();
}

CostDraw gen_cost_two_stage_detailed(const Matrix& X, const CostScenario& scenario, std::uint64_t seed) {
  if (!(scenario.cap > 0.0)) throw std::invalid_argument("cost cap must be positive");
  const Vector mb = cost_mu_beta(X);
  const Vector mk = cost_mu_k(X);
  const Eigen::Index n = X.rows();
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  CostDraw d;
  d.z.resize(n);
  d.base.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p_positive = 1.0 / (1.0 + std::exp(-mb[i]));
    d.z[i] = u01(rng) < p_positive ? 1.0 : 0.0;
    d.base[i] = d.z[i] == 1.0 ? gamma_draw(10.0 * std::abs(mk[i]), 1.5, rng) : 0.0;
  }
  d.y = d.base;
  d.q3 = n > 0 ? quantile_type7(std::vector<double>(d.base.data(), d.base.data() + n), 0.75) : 0.0;
  const double c = scenario.tail_shape();
  if (c > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d.y[i] > d.q3) d.y[i] += gamma_draw(c * mk[i] * mk[i], 1.5, rng);
    }
  }
  d.y = d.y.cwiseMin(scenario.cap);
  return d;
}

Vector gen_cost_two_stage(const Matrix& X, const CostScenario& scenario, std::uint64_t seed) {
  return gen_cost_two_stage_detailed(X, scenario, seed).y;
}

double sample_tweedie(double mu, double p, double phi, Rng& rng) {
  if (!std::isfinite(mu) || mu < 0.0) throw std::domain_error("tweedie mean must be finite and nonnegative");
  if (!(p > 1.0 && p < 2.0)) throw std::domain_error("tweedie power must lie in (1, 2)");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw std::domain_error("tweedie dispersion must be positive");
  if (mu == 0.0) return 0.0;
  const double rate = std::pow(mu, 2.0 - p) / (phi * (2.0 - p));
  const double shape = (2.0 - p) / (p - 1.0);
  const double scale = phi * (p - 1.0) * std::pow(mu, p - 1.0);
  const auto count = std::poisson_distribution<long long>(rate)(rng);
  if (count == 0) return 0.0;
  // A sum of `count` iid Gamma(shape, scale) draws.
  return std::gamma_distribution<double>(static_cast<double>(count) * shape, scale)(rng);
}

double TweedieScenario::mean(double mu_alpha) const {
  return form == MeanForm::ShiftedAbs ? 15.0 + std::abs(mu_alpha) : mu_alpha * mu_alpha;
}

TweedieScenario TweedieScenario::low() { return {"low", 9200.0, 1.5, 5.0, MeanForm::ShiftedAbs}; }
TweedieScenario TweedieScenario::medium() { return {"medium", 1000.0, 1.5, 1.9, MeanForm::Squared}; }
TweedieScenario TweedieScenario::high() { return {"high", 1000.0, 1.932, 10.0, MeanForm::Squared}; }

TweedieScenario TweedieScenario::by_name(const std::string& name) {
  if (name == "low") return low();
  if (name == "medium") return medium();
  if (name == "high") return high();
  throw ConfigError("unknown tweedie scenario '" + name + "'");
}

void validate(const TweedieScenario& s) {
  if (!(s.p > 1.0 && s.p < 2.0)) throw ConfigError("tweedie power must lie in (1, 2)");
  if (!(s.phi > 0.0)) throw ConfigError("tweedie dispersion must be positive");
  if (!(s.C > 0.0)) throw ConfigError("tweedie multiplier must be positive");
}

Vector tweedie_mu_alpha(const Matrix& X) {
  require_canonical(X);
  const auto x1 = X.col(0).array(), x2 = X.col(1).array(), x3 = X.col(2).array(), x4 = X.col(3).array(),
             x5 = X.col(4).array();
  return (x1 + x2 + x3 + x1 * x4 + x1 * x5 + x2 * x3 + x4 * x5).matrix();
}

Vector tweedie_conditional_mean(const Matrix& X, const TweedieScenario& scenario) {
  const Vector ma = tweedie_mu_alpha(X);
  return ma.unaryExpr([&](double m) { return scenario.C * scenario.mean(m); });
}

Vector gen_tweedie_outcome(const Matrix& X, const TweedieScenario& scenario, std::uint64_t seed) {
  validate(scenario);
  const Vector ma = tweedie_mu_alpha(X);
  Rng rng = make_rng(seed);
  Vector y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y[i] = scenario.C * sample_tweedie(scenario.mean(ma[i]), scenario.p, scenario.phi, rng);
  }
  return y;
}

double tweedie_true_ate(const TweedieScenario& scenario, std::size_t draws, std::uint64_t seed,
                        const CovariateSpec& spec) {
  Matrix X = gen_covariates(draws, seed, spec);
  X.col(0).setOnes();
  const Vector m1 = tweedie_conditional_mean(X, scenario);
  X.col(0).setZero();
  const Vector m0 = tweedie_conditional_mean(X, scenario);
  return (m1 - m0).mean();
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double outlier_fraction(const Vector& y) {
  if (y.size() < 4) throw std::invalid_argument("outlier_fraction needs at least four values");
  const std::vector<double> v(y.data(), y.data() + y.size());
  const double q1 = quantile_type7(v, 0.25);
  const double q3 = quantile_type7(v, 0.75);
  const double threshold = q3 + 1.5 * (q3 - q1);
  return static_cast<double>((y.array() > threshold).count()) / static_cast<double>(y.size());
}

double skewness(const Vector& y) {
  if (y.size() < 3) throw std::invalid_argument("skewness needs at least three values");
  const Eigen::ArrayXd c = y.array() - y.mean();
  const double m2 = c.square().mean();
  if (!(m2 > 0.0)) throw std::invalid_argument("skewness of a constant sample");
  return c.cube().mean() / std::pow(m2, 1.5);
}

}  // namespace hubersl
