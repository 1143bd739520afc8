#include "hubersl/types.hpp"

#include <cmath>

namespace hubersl {

Matrix select_rows(const Matrix& source, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = source.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

Vector select_rows(const Vector& source, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = source[static_cast<Eigen::Index>(rows[r])];
  }
  return out;
}

void check_finite_design(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) {
    throw DataError("design has " + std::to_string(X.rows()) + " rows but outcome has " +
                    std::to_string(y.size()) + " entries");
  }
  if (!X.allFinite()) throw DataError("design matrix contains non-finite values");
  if (!y.allFinite()) throw DataError("outcome contains non-finite values");
}

}  // namespace hubersl
