#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hubersl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for invalid configuration: bad hyperparameters, inconsistent modes.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed or unusable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One sample O_i = (X_i, Y_i), optionally carrying a binary treatment column.
struct Dataset {
  Matrix X;
  Vector y;
  std::vector<std::string> feature_names;
  std::optional<Vector> treatment;

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(X.rows()); }
  [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(X.cols()); }
};

/// Rows of `source` listed in `rows`, in that order.
Matrix select_rows(const Matrix& source, const std::vector<std::size_t>& rows);
Vector select_rows(const Vector& source, const std::vector<std::size_t>& rows);

/// Throws DataError when X and y disagree in length or contain non-finite values.
void check_finite_design(const Matrix& X, const Vector& y);

}  // namespace hubersl
