#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hubersl/rng.hpp"
#include "hubersl/types.hpp"

namespace hubersl {

/// The fixed ten-covariate generator. X8 is Normal with standard deviation
/// `x8_sd` (3 by default; set to sqrt(3) for the variance reading).
struct CovariateSpec {
  double x8_sd = 3.0;
};

Matrix gen_covariates(std::size_t n, std::uint64_t seed, const CovariateSpec& spec = {});
std::vector<std::string> covariate_names();

enum class OutlierRegime { Low, Medium, High };

std::string to_string(OutlierRegime r);
OutlierRegime outlier_regime_from_string(const std::string& s);

/// Two-stage gamma cost model. The tail rule depends on the design sample
/// size `n`, not on how many rows are generated (test sets reuse it).
struct CostScenario {
  OutlierRegime regime = OutlierRegime::Low;
  std::size_t n = 250;
  double cap = 1e6;

  /// Shape multiplier c in Gamma(c * mu_k^2, 1.5) added above Q3; 0 for the low regime.
  [[nodiscard]] double tail_shape() const;
};

/// mu_beta(X) = 0.6 + 0.1 (X1 + X2 - X3 + X4 - X5 + X1X2 - X2X3 + X3X4 - X4X5).
Vector cost_mu_beta(const Matrix& X);
/// mu_k(X) = X1 + X2 + X3 + X4 + X5 + X1X2 + X2X3 + X3X4 + X4X5.
Vector cost_mu_k(const Matrix& X);

struct CostDraw {
  Vector y;       // final costs, truncated at the cap
  Vector z;       // 1 when the cost is drawn from the gamma part
  Vector base;    // gamma draw before the tail component (0 when z = 0)
  double q3 = 0;  // upper quartile of the pre-tail costs
};

/// P(Z = 1 | X) = expit(mu_beta(X)); positive part Gamma(10|mu_k|, 1.5);
/// rows above Q3 of the whole cost vector get the regime's tail component.
CostDraw gen_cost_two_stage_detailed(const Matrix& X, const CostScenario& scenario, std::uint64_t seed);
Vector gen_cost_two_stage(const Matrix& X, const CostScenario& scenario, std::uint64_t seed);

/// Compound Poisson-gamma draw with mean mu and variance phi * mu^p.
double sample_tweedie(double mu, double p, double phi, Rng& rng);

/// Y = C * Tw_p(mean(mu_alpha(X)), phi).
struct TweedieScenario {
  enum class MeanForm { ShiftedAbs, Squared };

  std::string name;
  double C = 1.0;
  double p = 1.5;
  double phi = 1.0;
  MeanForm form = MeanForm::Squared;

  [[nodiscard]] double mean(double mu_alpha) const;

  static TweedieScenario low();
  static TweedieScenario medium();
  static TweedieScenario high();
  static TweedieScenario by_name(const std::string& name);
};

void validate(const TweedieScenario& scenario);

/// mu_alpha(X) = X1 + X2 + X3 + X1X4 + X1X5 + X2X3 + X4X5.
Vector tweedie_mu_alpha(const Matrix& X);
/// C * E[Y | X].
Vector tweedie_conditional_mean(const Matrix& X, const TweedieScenario& scenario);
Vector gen_tweedie_outcome(const Matrix& X, const TweedieScenario& scenario, std::uint64_t seed);

/// C * mean_i [mean(mu_alpha(1, X_i)) - mean(mu_alpha(0, X_i))] over fresh covariate draws.
double tweedie_true_ate(const TweedieScenario& scenario, std::size_t draws, std::uint64_t seed,
                        const CovariateSpec& spec = {});

/// Linear interpolation between order statistics (R type 7).
double quantile_type7(std::vector<double> values, double prob);

/// Share of values strictly above Q3 + 1.5 IQR. Needs n >= 4.
double outlier_fraction(const Vector& y);

/// m3 / m2^(3/2) with population moments. Needs n >= 3 and nonzero variance.
double skewness(const Vector& y);

}  // namespace hubersl
