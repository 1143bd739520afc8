#include <algorithm>
#include <utility>

#include "hubersl/learners.hpp"
#include "internal.hpp"

namespace hubersl::detail {

namespace {

class KnnModel final : public ModelBase {
 public:
  KnnModel(LearnerSpec spec, std::size_t p, ClampRange clamp, Standardizer st, Matrix train_x,
           Vector train_y, std::size_t k)
      : ModelBase(std::move(spec), p, clamp),
        st_(std::move(st)),
        train_x_(std::move(train_x)),
        train_y_(std::move(train_y)),
        k_(std::min<std::size_t>(k, static_cast<std::size_t>(train_y_.size()))) {}

 protected:
  void predict_raw(const Matrix& X, Vector& out) const override {
    const Matrix q = st_.apply(X);
    const auto n = static_cast<std::size_t>(train_x_.rows());
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = {(train_x_.row(static_cast<Eigen::Index>(i)) - q.row(r)).squaredNorm(), i};
      }
      // Ties in distance resolve by training index.
      std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_ - 1), dist.end());
      std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_));
      double total = 0.0;
      for (std::size_t j = 0; j < k_; ++j) total += train_y_[static_cast<Eigen::Index>(dist[j].second)];
      out[r] = total / static_cast<double>(k_);
    }
  }

  nlohmann::json state_json() const override {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < train_x_.rows(); ++i) {
      rows.push_back(to_std_vector(train_x_.row(i).transpose()));
    }
    return {{"k", k_},
            {"center", to_std_vector(st_.mean)},
            {"scale", to_std_vector(st_.scale)},
            {"x", rows},
            {"y", to_std_vector(train_y_)}};
  }

 private:
  Standardizer st_;
  Matrix train_x_;  // already standardized
  Vector train_y_;
  std::size_t k_;
};

}  // namespace

LearnerPtr fit_knn(const LearnerSpec& spec, const Matrix& X, const Vector& y) {
  Standardizer st;
  if (spec.param("standardize", 1.0) != 0.0) {
    st = Standardizer::fit(X);
  } else {
    st.mean = Vector::Zero(X.cols());
    st.scale = Vector::Ones(X.cols());
  }
  Matrix train = st.apply(X);
  return std::make_shared<KnnModel>(spec, static_cast<std::size_t>(X.cols()), default_clamp(y),
                                    std::move(st), std::move(train), y,
                                    static_cast<std::size_t>(spec.param("k", 10)));
}

LearnerPtr knn_from_json(const LearnerSpec& spec, std::size_t p, ClampRange clamp,
                         const nlohmann::json& state) {
  Standardizer st{from_json_vector(state.at("center")), from_json_vector(state.at("scale"))};
  const auto& rows = state.at("x");
  Matrix train(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    train.row(static_cast<Eigen::Index>(i)) = from_json_vector(rows[i]).transpose();
  }
  return std::make_shared<KnnModel>(spec, p, clamp, std::move(st), std::move(train),
                                    from_json_vector(state.at("y")),
                                    state.at("k").get<std::size_t>());
}

}  // namespace hubersl::detail
