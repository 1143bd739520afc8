#include <functional>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "hubersl/meta_optimizer.hpp"

using namespace hubersl;

namespace {

/// min over {alpha : alpha_k = m_k * step} of f, K = 3.
double grid_min_k3(const std::function<double(const Vector&)>& f, double step) {
  const int m = static_cast<int>(std::lround(1.0 / step));
  double best = INFINITY;
  Vector a(3);
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m - i; ++j) {
      a << i * step, j * step, (m - i - j) * step;
      best = std::min(best, f(a));
    }
  return best;
}

/// Coarse lattice followed by pairwise mass transfers with shrinking step.
Vector brute_force_projection(const Vector& v) {
  const int K = static_cast<int>(v.size());
  auto dist = [&](const Vector& a) { return (a - v).squaredNorm(); };
  Vector best = Vector::Constant(K, 1.0 / K);
  const int m = 20;
  std::function<void(int, int, Vector&)> visit = [&](int k, int left, Vector& a) {
    if (k == K - 1) {
      a[k] = double(left) / m;
      if (dist(a) < dist(best)) best = a;
      return;
    }
    for (int c = 0; c <= left; ++c) {
      a[k] = double(c) / m;
      visit(k + 1, left - c, a);
    }
  };
  Vector a(K);
  visit(0, m, a);
  for (double step = 0.05; step > 1e-9; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
          if (i == j) continue;
          const double d = std::min(step, best[i]);
          if (d <= 0) continue;
          Vector c = best;
          c[i] -= d;
          c[j] += d;
          if (dist(c) < dist(best) - 1e-18) {
            best = c;
            moved = true;
          }
        }
    }
  }
  return best;
}

/// Projection via bisection on the threshold of sum(max(v - t, 0)) = 1.
Vector bisection_projection(const Vector& v) {
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double t = 0.5 * (lo + hi);
    ((v.array() - t).max(0.0).sum() > 1.0 ? lo : hi) = t;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0);
}

}  // namespace

TEST_SUITE("meta_optimizer") {

TEST_CASE("simplex weights invariants") {
  CHECK_NOTHROW(SimplexWeights(Vector::Constant(4, 0.25)));
  CHECK_THROWS_AS(SimplexWeights(Vector::Constant(4, 0.3)), std::invalid_argument);
  Vector neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(SimplexWeights{neg}, std::invalid_argument);
  CHECK_THROWS_AS(SimplexWeights(Vector(0)), std::invalid_argument);
  CHECK(SimplexWeights::vertex(3, 1).is_vertex());
  CHECK(!SimplexWeights::uniform(3).is_vertex());
  CHECK_THROWS_AS(validate(MetaSolveOptions{0}), ConfigError);
}

TEST_CASE("projection fixed point and symmetry") {
  Vector v(3);
  v << 0.2, 0.3, 0.5;
  CHECK((project_to_simplex(v).alpha() - v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((project_to_simplex(Vector::Constant(3, 0.5)).alpha().array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(project_to_simplex(Vector(0)), std::invalid_argument);
}

TEST_CASE("projection matches a brute-force search and a bisection oracle") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector v = testing::random_vector(rng, 5, 0.7);
    const Vector p = project_to_simplex(v).alpha();
    CHECK((p - brute_force_projection(v)).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((p - bisection_projection(v)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("single column and exact-column instances") {
  std::mt19937_64 rng(2);
  const Vector y = testing::random_vector(rng, 50);
  CHECK(solve_weights(Matrix(y), y, huber(1.0))[0] == 1.0);
  CHECK(discrete_select(Matrix(y), y, SquaredLoss{})[0] == 1.0);

  Matrix Z(50, 4);
  Z.col(0) = y;
  Z.rightCols(3) = testing::random_matrix(rng, 50, 3, 2.0);
  for (double lam : {0.01, 0.5, 10.0}) {
    const auto r = solve_weights_detailed(Z, y, huber(lam));
    CHECK(std::fabs(r.weights[0] - 1.0) < 1e-4);
    CHECK(r.objective <= 1e-8);
  }
}

TEST_CASE("solution is within 1e-7 of the step-0.005 grid minimum") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector y = testing::random_vector(rng, 200, 3.0);
    Matrix Z(200, 3);
    Z.col(0) = y + testing::random_vector(rng, 200, 1.0);
    Z.col(1) = 0.5 * y + testing::random_vector(rng, 200, 2.0);
    Z.col(2) = testing::random_vector(rng, 200, 1.0);
    std::vector<double> abs_y(y.data(), y.data() + 200);
    for (auto& a : abs_y) a = std::fabs(a);
    std::nth_element(abs_y.begin(), abs_y.begin() + 100, abs_y.end());
    const LossKind loss = huber(abs_y[100]);
    const double achieved = solve_weights_detailed(Z, y, loss).objective;
    const double grid = grid_min_k3([&](const Vector& a) { return meta_objective(Z, y, loss, a); }, 0.005);
    CHECK(achieved <= grid + 1e-7);
  }
}

TEST_CASE("objective trace is nonincreasing") {
  std::mt19937_64 rng(4);
  const Vector y = testing::random_vector(rng, 100, 5.0);
  const Matrix Z = testing::random_matrix(rng, 100, 5, 5.0);
  MetaSolveOptions o;
  o.record_trace = true;
  const auto r = solve_weights_detailed(Z, y, huber(0.7), o);
  REQUIRE(r.trace.size() >= 2);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] * (1 + 1e-12));
}

TEST_CASE("joint rescaling of (y, Z, lambda) leaves the weights unchanged") {
  std::mt19937_64 rng(5);
  const Vector y = testing::random_vector(rng, 80, 2.0);
  Matrix Z(80, 3);
  Z.col(0) = y + testing::random_vector(rng, 80);
  Z.col(1) = -y + testing::random_vector(rng, 80, 3.0);
  Z.col(2) = testing::random_vector(rng, 80);
  const Vector a = solve_weights(Z, y, huber(0.8)).alpha();
  for (double c : {1e-3, 7.0, 1e5}) {
    const Vector b = solve_weights(Matrix(c * Z), Vector(c * y), huber(0.8 * c)).alpha();
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("huber weights equal squared-error weights in the all-quadratic regime") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector y = testing::random_vector(rng, 60, 4.0);
    Matrix Z = testing::random_matrix(rng, 60, 4, 2.0);
    Z.col(0) += y;
    const double lam = y.cwiseAbs().maxCoeff() + Z.cwiseAbs().maxCoeff();
    const Vector h = solve_weights(Z, y, huber(lam)).alpha();
    const Vector s = solve_weights(Z, y, SquaredLoss{}).alpha();
    CHECK((h - s).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("duplicate columns: objective and fit are unique even though weights are not") {
  std::mt19937_64 rng(7);
  const Vector y = testing::random_vector(rng, 70, 2.0);
  Matrix Z(70, 3);
  Z.col(0) = y + testing::random_vector(rng, 70);
  Z.col(1) = Z.col(0);
  Z.col(2) = testing::random_vector(rng, 70);
  MetaSolveOptions o1, o2;
  Vector start(3);
  start << 0.9, 0.05, 0.05;
  o2.initial_point = start;
  const auto a = solve_weights_detailed(Z, y, huber(1.0), o1);
  const auto b = solve_weights_detailed(Z, y, huber(1.0), o2);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-8));
  CHECK(((Z * a.weights.alpha()) - (Z * b.weights.alpha())).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("discrete selector") {
  std::mt19937_64 rng(8);
  const Vector y = testing::random_vector(rng, 40);
  Matrix Z(40, 3);
  Z.col(0) = y + testing::random_vector(rng, 40, 2.0);
  Z.col(1) = y + testing::random_vector(rng, 40, 0.1);
  Z.col(2) = y + testing::random_vector(rng, 40, 3.0);
  CHECK(discrete_select(Z, y, SquaredLoss{}).alpha() == SimplexWeights::vertex(3, 1).alpha());
  Matrix tie(40, 2);
  tie.col(0) = Z.col(1);
  tie.col(1) = Z.col(1);
  CHECK(discrete_select(tie, y, huber(1.0))[0] == 1.0);

  for (int rep = 0; rep < 30; ++rep) {
    const Vector yy = testing::random_vector(rng, 50, 3.0);
    const Matrix ZZ = testing::random_matrix(rng, 50, 4, 3.0);
    for (const LossKind& loss : {LossKind{SquaredLoss{}}, huber(1.0)}) {
      const double conv = meta_objective(ZZ, yy, loss, solve_weights(ZZ, yy, loss).alpha());
      const double disc = meta_objective(ZZ, yy, loss, discrete_select(ZZ, yy, loss).alpha());
      CHECK(conv <= disc + 1e-12);
    }
  }
}

TEST_CASE("lattice mode mirrors the finite weight grid") {
  std::mt19937_64 rng(9);
  const Vector y = testing::random_vector(rng, 60, 2.0);
  Matrix Z = testing::random_matrix(rng, 60, 3);
  Z.col(0) += y;
  const auto lat = solve_weights_on_lattice(Z, y, huber(0.5), 40);
  const double grid = grid_min_k3([&](const Vector& a) { return meta_objective(Z, y, huber(0.5), a); }, 1.0 / 40);
  CHECK(lat.objective == doctest::Approx(grid).epsilon(1e-14));
  CHECK(lat.iterations == 41 * 42 / 2);
  CHECK(solve_weights_detailed(Z, y, huber(0.5)).objective <= lat.objective + 1e-12);
}

TEST_CASE("solver input checks") {
  const Vector y = Vector::Ones(3);
  Matrix Z = Matrix::Ones(3, 2);
  Z(0, 0) = NAN;
  CHECK_THROWS_AS(solve_weights(Z, y, SquaredLoss{}), std::invalid_argument);
  CHECK_THROWS_AS(solve_weights(Matrix::Ones(4, 2), y, SquaredLoss{}), std::invalid_argument);
}

}
