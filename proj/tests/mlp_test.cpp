#include "congruity/detect/mlp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "congruity/detect/model_io.hpp"
#include "congruity/random.hpp"
#include "test_util.hpp"

namespace congruity {
namespace {

TEST(MlpModel, ParameterLayout) {
  MlpModel model({3, 2, 1});
  EXPECT_EQ(model.parameters().size(), 3 * 2 + 2 + 2 * 1 + 1);
  model.weights(0)(1, 2) = 5.0;  // column-major: index 2*2+1
  EXPECT_EQ(model.parameters()(5), 5.0);
  model.bias(0)(1) = 7.0;
  EXPECT_EQ(model.parameters()(7), 7.0);
  model.bias(1)(0) = 9.0;
  EXPECT_EQ(model.parameters()(10), 9.0);
  EXPECT_THROW(MlpModel({3}), Error);
  EXPECT_THROW(MlpModel({3, 2}), Error);
}

TEST(MlpForward, LogisticOfUnitLogit) {
  MlpModel model({2, 1});
  model.bias(0)(0) = 1.0;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 1);
  EXPECT_NEAR(mlp_predict(model, x)(0), 0.7310585786300049, 1e-15);

  MlpModel hidden({2, 2, 1});
  hidden.weights(0) << 1, 0, 0, 1;
  hidden.weights(1) << 1, -1;
  Eigen::MatrixXd in(2, 2);
  in << 2, -3, 1, 1;
  // column 0: relu(2,1) -> 2-1 = 1; column 1: relu(-3,1) -> 0-1 = -1
  const auto p = mlp_predict(hidden, in);
  EXPECT_NEAR(p(0), 0.7310585786300049, 1e-15);
  EXPECT_NEAR(p(1), 1 - 0.7310585786300049, 1e-15);
}

TEST(MlpForward, SigmoidAndBceAreStableAtExtremes) {
  EXPECT_EQ(mlp_detail::sigmoid(1000), 1.0);
  EXPECT_EQ(mlp_detail::sigmoid(-1000), 0.0);
  EXPECT_NEAR(mlp_detail::bce_with_logit(-1000, 1), 1000, 1e-9);
  EXPECT_NEAR(mlp_detail::bce_with_logit(1000, 0), 1000, 1e-9);
  EXPECT_NEAR(mlp_detail::bce_with_logit(0, 1), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isfinite(mlp_detail::bce_with_logit(40, 1)));
}

TEST(PairFeatures, NormalizesEachHalf) {
  const auto f = pair_features(Embedding({3, 4}), Embedding({0, 2}));
  ASSERT_EQ(f.size(), 4);
  EXPECT_NEAR(f(0), 0.6, 1e-7);
  EXPECT_NEAR(f(1), 0.8, 1e-7);
  EXPECT_NEAR(f(2), 0.0, 1e-15);
  EXPECT_NEAR(f(3), 1.0, 1e-15);
  EXPECT_THROW(pair_features(Embedding({1, 2}), Embedding({1, 2, 3})), Error);
  EXPECT_THROW(pair_features(Embedding({0, 0}), Embedding({1, 2})), Error);
}

TEST(MlpForward, InputDimensionChecked) {
  MlpModel model({4, 1});
  EXPECT_THROW(mlp_predict(model, Eigen::MatrixXd::Zero(3, 1)), Error);
  EXPECT_THROW(mlp_forward(model, Embedding({1, 2, 3}), Embedding({1, 2, 3})), Error);
}

TEST(HeInit, VarianceAndDeterminism) {
  const auto a = MlpModel::he_init({400, 300, 1}, 42);
  const auto b = MlpModel::he_init({400, 300, 1}, 42);
  const auto c = MlpModel::he_init({400, 300, 1}, 43);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  const auto w = a.weights(0);
  const double var = w.array().square().mean();
  EXPECT_NEAR(var, 2.0 / 400.0, 0.05 * 2.0 / 400.0);
  EXPECT_EQ(a.bias(0).norm(), 0.0);
}

// Central differences on the mean loss, compared parameter by parameter.
TEST(MlpGradients, MatchFiniteDifferences) {
  Rng rng(99);
  const double h = 1e-5;
  int checked = 0;
  for (std::size_t depth = 1; depth <= 3; ++depth) {
    for (int draw = 0; draw < 20; ++draw) {
      std::vector<std::size_t> dims = {4 + rng.uniform_index(61)};
      for (std::size_t l = 0; l < depth; ++l) dims.push_back(4 + rng.uniform_index(13));
      dims.push_back(1);
      MlpModel model = MlpModel::he_init(dims, rng.next());
      for (auto& p : model.parameters()) p += 0.1 * rng.normal();
      const Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.uniform_index(8));
      Eigen::MatrixXd x(static_cast<Eigen::Index>(dims[0]), batch);
      for (auto& v : x.reshaped()) v = rng.normal();
      Eigen::VectorXd y(batch);
      for (auto& v : y) v = static_cast<double>(rng.uniform_index(2));

      const LossGradient analytic = mlp_gradients(model, x, y);
      EXPECT_NEAR(analytic.loss, mean_bce(model, x, y), 1e-12);

      // Sample up to 60 coordinates per draw to keep runtime small.
      const Eigen::Index n = model.parameters().size();
      for (int s = 0; s < 60; ++s) {
        const auto i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        MlpModel plus = model, minus = model;
        plus.parameters()(i) += h;
        minus.parameters()(i) -= h;
        const double numeric = (mean_bce(plus, x, y) - mean_bce(minus, x, y)) / (2 * h);
        const double a = analytic.gradient(i);
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        EXPECT_LT(rel, 1e-4) << "depth " << depth << " param " << i << " analytic " << a
                             << " numeric " << numeric;
        ++checked;
      }
    }
  }
  EXPECT_EQ(checked, 3 * 20 * 60);
}

TEST(ModelIo, RoundTripStoresSinglePrecision) {
  testing::TempDir dir;
  const auto model = MlpModel::he_init({6, 5, 3, 1}, 8);
  TrainConfig config;
  config.hidden_dims = {5, 3};
  write_mlp(dir / "m.model", model, config);
  ASSERT_TRUE(is_mlp_file(dir / "m.model"));
  const StoredMlp back = read_mlp(dir / "m.model");
  EXPECT_EQ(back.model.layer_dims(), model.layer_dims());
  const Eigen::VectorXd as_float = model.parameters().cast<float>().cast<double>();
  EXPECT_EQ(back.model.parameters(), as_float);
  EXPECT_EQ(back.header["layer_dims"], json(model.layer_dims()));

  testing::write_text(dir / "t.json", R"({"threshold":0.3})");
  EXPECT_FALSE(is_mlp_file(dir / "t.json"));
  EXPECT_THROW(read_mlp(dir / "t.json"), Error);
}

}  // namespace
}  // namespace congruity
