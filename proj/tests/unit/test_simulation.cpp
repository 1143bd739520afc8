#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "hubersl/simulation.hpp"

using namespace hubersl;

namespace {

double mean_of(const Vector& v) { return v.mean(); }

double var_of(const Vector& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

/// Type-7 quantile through two selections, without a full sort.
double select_quantile(std::vector<double> v, double p) {
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("covariate marginals") {
  const std::size_t n = 100000;
  const Matrix X = gen_covariates(n, 5);
  REQUIRE(X.cols() == 10);
  const double root_n = std::sqrt(static_cast<double>(n));
  // (mean, sd) of each column.
  const std::vector<std::pair<double, double>> moments{
      {0.5, 0.5}, {0.5, std::sqrt(1.0 / 12)}, {0.0, 1.0}, {1.0, 1.0}, {1.0, 1.0},
      {0.2, 0.4}, {0.0, std::sqrt(1.0 / 3)}, {0.0, 3.0}, {0.5, std::sqrt(0.5)}, {2.0, std::sqrt(2.0)}};
  for (Eigen::Index j = 0; j < 10; ++j) {
    const auto [mu, sd] = moments[static_cast<std::size_t>(j)];
    CAPTURE(j);
    CHECK(std::fabs(mean_of(X.col(j)) - mu) <= 4.0 * sd / root_n);
    CHECK(std::sqrt(var_of(X.col(j))) == doctest::Approx(sd).epsilon(0.03));
  }
  CHECK((X.col(0).array() * (1 - X.col(0).array())).abs().maxCoeff() == 0.0);
  CHECK(X.col(4).minCoeff() >= 0.0);
  CHECK(gen_covariates(50, 9) == gen_covariates(50, 9));
  CHECK(gen_covariates(50, 9) != gen_covariates(50, 10));
  CHECK(std::sqrt(var_of(gen_covariates(n, 6, CovariateSpec{std::sqrt(3.0)}).col(7))) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(0.03));
  CHECK_THROWS(gen_covariates(0, 1));
  CHECK(covariate_names().front() == "X1");
}

TEST_CASE("cost model: zero mass and outlier fractions") {
  const Matrix X = gen_covariates(10000, 11);
  const std::vector<std::pair<OutlierRegime, double>> targets{
      {OutlierRegime::Low, 0.035}, {OutlierRegime::Medium, 0.10}, {OutlierRegime::High, 0.20}};
  for (const auto& [regime, target] : targets) {
    const Vector y = gen_cost_two_stage(X, CostScenario{regime, 10000}, 12);
    CAPTURE(to_string(regime));
    CHECK(std::fabs((y.array() == 0.0).cast<double>().mean() - 0.35) <= 0.02);
    CHECK(std::fabs(outlier_fraction(y) - target) <= 0.03);
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() <= 1e6);
  }
}

TEST_CASE("cost model: gamma mean identity in the low regime") {
  const Matrix X = gen_covariates(20000, 13);
  const CostDraw d = gen_cost_two_stage_detailed(X, CostScenario{OutlierRegime::Low, 20000}, 14);
  const Vector mk = cost_mu_k(X);
  double sum = 0.0, expect = 0.0, var = 0.0, m = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (d.z[i] != 1.0) continue;
    sum += d.base[i];
    expect += 15.0 * std::fabs(mk[i]);
    var += 10.0 * std::fabs(mk[i]) * 2.25;
    m += 1.0;
  }
  CHECK(std::fabs(sum / m - expect / m) <= 4.0 * std::sqrt(var) / m);
  CHECK(d.y == d.base);
}

TEST_CASE("cost model: the tail component only touches rows above Q3") {
  const Matrix X = gen_covariates(2000, 15);
  for (OutlierRegime r : {OutlierRegime::Medium, OutlierRegime::High}) {
    const CostDraw d = gen_cost_two_stage_detailed(X, CostScenario{r, 250}, 16);
    std::vector<double> pre(d.base.data(), d.base.data() + d.base.size());
    CHECK(d.q3 == doctest::Approx(select_quantile(pre, 0.75)).epsilon(1e-12));
    for (Eigen::Index i = 0; i < d.y.size(); ++i) {
      if (d.base[i] <= d.q3) CHECK(d.y[i] == d.base[i]);
      else CHECK(d.y[i] >= d.base[i]);
      if (d.z[i] == 0.0) CHECK(d.y[i] == 0.0);
    }
  }
  CostScenario capped{OutlierRegime::High, 250, 100.0};
  CHECK(gen_cost_two_stage(X, capped, 1).maxCoeff() <= 100.0);
  CHECK(CostScenario{OutlierRegime::Medium, 250}.tail_shape() == 1.13);
  CHECK(CostScenario{OutlierRegime::Medium, 1000}.tail_shape() == 0.71);
  CHECK(CostScenario{OutlierRegime::High, 250}.tail_shape() == 38.0);
  CHECK(CostScenario{OutlierRegime::High, 2000}.tail_shape() == 2.9);
  CHECK(gen_cost_two_stage(X, capped, 1) == gen_cost_two_stage(X, capped, 1));
  CHECK_THROWS(gen_cost_two_stage(Matrix::Zero(3, 2), capped, 1));
}

TEST_CASE("tweedie sampler: zero mass, mean, variance") {
  Rng rng(17);
  const int N = 100000;
  int zeros = 0;
  for (int i = 0; i < N; ++i) zeros += sample_tweedie(1.0, 1.5, 1.0, rng) == 0.0;
  CHECK(std::fabs(zeros / double(N) - std::exp(-2.0)) <= 0.01);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    const double mu = 0.2 + 5.0 * u(rng), p = 1.05 + 0.9 * u(rng), phi = 0.3 + 3.0 * u(rng);
    CAPTURE(mu);
    CAPTURE(p);
    CAPTURE(phi);
    Vector draws(N);
    for (int i = 0; i < N; ++i) draws[i] = sample_tweedie(mu, p, phi, rng);
    const double target_var = phi * std::pow(mu, p);
    const double m = draws.mean();
    CHECK(std::fabs(m - mu) <= 4.0 * std::sqrt(target_var / N));
    const double s2 = var_of(draws);
    const double m4 = (draws.array() - m).pow(4).mean();
    CHECK(std::fabs(s2 - target_var) <= 5.0 * std::sqrt((m4 - s2 * s2) / N));
    CHECK(draws.minCoeff() >= 0.0);
  }
  CHECK(sample_tweedie(0.0, 1.5, 1.0, rng) == 0.0);
  CHECK_THROWS_AS(sample_tweedie(1.0, 2.0, 1.0, rng), std::domain_error);
  CHECK_THROWS_AS(sample_tweedie(-1.0, 1.5, 1.0, rng), std::domain_error);
  CHECK_THROWS_AS(sample_tweedie(1.0, 1.5, 0.0, rng), std::domain_error);
}

TEST_CASE("tweedie scenarios") {
  const Matrix X = gen_covariates(10000, 18);
  const Vector y = gen_tweedie_outcome(X, TweedieScenario::high(), 19);
  CHECK(std::fabs((y.array() == 0.0).cast<double>().mean() - 0.20) <= 0.02);
  CHECK(std::fabs(outlier_fraction(y) - 0.195) <= 0.04);
  CHECK(y.minCoeff() >= 0.0);
  CHECK(gen_tweedie_outcome(X, TweedieScenario::high(), 19) == y);

  const Vector mean = tweedie_conditional_mean(X, TweedieScenario::medium());
  const Vector mu = tweedie_mu_alpha(X);
  CHECK((mean - 1000.0 * mu.array().square().matrix()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(TweedieScenario::low().mean(-2.0) == 17.0);
  CHECK(TweedieScenario::by_name("medium").phi == TweedieScenario::medium().phi);
  CHECK_THROWS_AS(TweedieScenario::by_name("extreme"), ConfigError);
  TweedieScenario bad = TweedieScenario::high();
  bad.p = 2.5;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("numeric true ATE") {
  // E[mu_alpha(1,X)^2 - mu_alpha(0,X)^2] = 24 from the covariate moments.
  const double analytic = 24000.0;
  const double a = tweedie_true_ate(TweedieScenario::medium(), 1000000, 1);
  const double b = tweedie_true_ate(TweedieScenario::medium(), 1000000, 2);
  CHECK(std::fabs(a - analytic) / analytic < 5e-3);
  CHECK(std::fabs(b - analytic) / analytic < 5e-3);
  CHECK(std::fabs(a - b) / analytic < 5e-3);
  CHECK(tweedie_true_ate(TweedieScenario::high(), 1000, 3) == tweedie_true_ate(TweedieScenario::medium(), 1000, 3));
  const double lo1 = tweedie_true_ate(TweedieScenario::low(), 1000000, 4);
  const double lo2 = tweedie_true_ate(TweedieScenario::low(), 1000000, 5);
  CHECK(std::fabs(lo1 - lo2) / lo1 < 5e-3);
}

TEST_CASE("outlier fraction and quantiles") {
  Vector y(5);
  y << 0, 0, 0, 0, 100;
  CHECK(outlier_fraction(y) == 0.2);
  CHECK(outlier_fraction(Vector::LinSpaced(101, 0.0, 1.0)) == 0.0);
  CHECK_THROWS(outlier_fraction(Vector::Ones(3)));
  CHECK(quantile_type7({1, 2, 3, 4}, 0.75) == 3.25);
  CHECK(quantile_type7({5}, 0.3) == 5.0);

  std::mt19937_64 rng(20);
  std::lognormal_distribution<double> ln(0.0, 1.5);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 4 + static_cast<int>(rng() % 200);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = ln(rng);
    for (double p : {0.25, 0.5, 0.75}) CHECK(quantile_type7(v, p) == doctest::Approx(select_quantile(v, p)).epsilon(1e-14));
    const double q1 = select_quantile(v, 0.25), q3 = select_quantile(v, 0.75);
    const double cut = q3 + 1.5 * (q3 - q1);
    const double expect = double(std::count_if(v.begin(), v.end(), [&](double x) { return x > cut; })) / n;
    CHECK(outlier_fraction(Eigen::Map<const Vector>(v.data(), n)) == doctest::Approx(expect));
  }
}

TEST_CASE("skewness") {
  Vector s(3);
  s << -1, 0, 1;
  CHECK(std::fabs(skewness(s)) < 1e-15);
  s << 0, 0, 1;
  CHECK(skewness(s) > 0.0);
  CHECK_THROWS(skewness(Vector::Ones(4)));
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector v = testing::random_vector(rng, 50).array().exp();
    double m = 0;
    for (double x : v) m += x;
    m /= 50;
    double m2 = 0, m3 = 0;
    for (double x : v) {
      m2 += (x - m) * (x - m);
      m3 += (x - m) * (x - m) * (x - m);
    }
    m2 /= 50;
    m3 /= 50;
    CHECK(skewness(v) == doctest::Approx(m3 / std::pow(m2, 1.5)).epsilon(1e-10));
  }
}

}
