#include <doctest.h>

#include <cmath>

#include "laecf/errors.hpp"
#include "laecf/models.hpp"
#include "laecf/oracle.hpp"
#include "laecf/rng.hpp"
#include "test_helpers.hpp"

using namespace laecf;
using testutil::interactions_from_dense;
using testutil::semantic_from_dense;

namespace {

Eigen::MatrixXd random_binary(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols,
                              double density) {
  Rng rng(seed);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (rng.uniform() < density) m(r, c) = 1.0;
  if (m.cwiseAbs().maxCoeff() == 0.0) m(0, 0) = 1.0;
  return m;
}

Eigen::MatrixXd random_gaussian(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.gaussian();
  return m;
}

double offdiag_max(const Eigen::MatrixXd& m) {
  double value = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j) value = std::max(value, std::abs(m(i, j)));
  return value;
}

// EASE-style closed form straight through linalg, used as the explicit
// stacking reference.
Eigen::MatrixXd dense_closed_form(const Eigen::MatrixXd& design, double lambda) {
  auto ws = linalg::ridge_inverse(linalg::gram(design), lambda);
  return linalg::zero_diag_finish(ws);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("fit_ease reproduces the hand-computed 2x2 closed form") {
  const auto b = models::fit_ease(interactions_from_dense(testutil::ease_fixture_x()), 1.0);
  CHECK(std::abs(b.values(0, 1) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(b.values(1, 0) - 1.0 / 3.0) < 1e-12);
  CHECK(b.values(0, 0) == 0.0);
  CHECK(b.values(1, 1) == 0.0);
  CHECK(b.model == "ease");
  CHECK(b.hyperparams.lambda == 1.0);
}

TEST_CASE("fit_ease on orthogonal items has no cross-weights") {
  const auto b = models::fit_ease(interactions_from_dense(Eigen::MatrixXd::Identity(2, 2)), 1.0);
  CHECK(b.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_ease vanishes in the large-lambda limit") {
  const auto x = random_binary(3, 30, 8, 0.4);
  const double gram_max = (x.transpose() * x).cwiseAbs().maxCoeff();
  const auto b = models::fit_ease(interactions_from_dense(x), 1e9);
  CHECK(b.values.cwiseAbs().maxCoeff() < 1e-6 * gram_max);
}

TEST_CASE("fit_ease rejects bad inputs") {
  CHECK_THROWS_AS(models::fit_ease(interactions_from_dense(testutil::ease_fixture_x()), 0.0),
                  ConfigError);
  datasets::InteractionMatrix empty;
  empty.x.resize(2, 2);
  CHECK_THROWS_AS(models::fit_ease(empty, 1.0), DataError);
}

TEST_CASE("fit_ease satisfies the off-diagonal stationarity condition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_binary(40 + seed, 25, 9, 0.35);
    const double lambda = 0.5 + static_cast<double>(seed);
    const auto b = models::fit_ease(interactions_from_dense(x), lambda);
    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::MatrixXd residual = gram * (b.values - Eigen::MatrixXd::Identity(9, 9)) +
                                     lambda * b.values;
    CHECK(offdiag_max(residual) < 1e-6 * (1.0 + gram.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("fit_collective at alpha 0 degenerates to fit_ease") {
  const auto x = random_binary(7, 20, 6, 0.4);
  const auto f = semantic_from_dense(random_gaussian(8, 4, 6));
  const auto collective = models::fit_collective(interactions_from_dense(x), f, 0.0, 2.0);
  const auto ease = models::fit_ease(interactions_from_dense(x), 2.0);
  CHECK((collective.values - ease.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_collective equals the explicitly stacked fit") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto x = random_binary(60 + seed, 12, 5, 0.4);
    const Eigen::MatrixXd m = random_gaussian(70 + seed, 6, 5);
    const double alpha = 0.3 + 0.5 * static_cast<double>(seed);
    const double lambda = 1.5;

    Eigen::MatrixXd stacked(x.rows() + m.rows(), 5);
    stacked.topRows(x.rows()) = x;
    stacked.bottomRows(m.rows()) = std::sqrt(alpha) * m;

    const auto collective =
        models::fit_collective(interactions_from_dense(x), semantic_from_dense(m), alpha, lambda);
    const auto reference = dense_closed_form(stacked, lambda);
    CHECK((collective.values - reference).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fit_collective with a silent interaction matrix fits the features alone") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 4);
  const Eigen::MatrixXd m = random_gaussian(9, 5, 4);
  const auto collective =
      models::fit_collective(interactions_from_dense(x), semantic_from_dense(m), 1.0, 1.0);
  const auto reference = dense_closed_form(m, 1.0);
  CHECK((collective.values - reference).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_collective rejects misaligned features") {
  const auto x = random_binary(7, 10, 4, 0.5);
  const auto f = semantic_from_dense(random_gaussian(8, 3, 5));
  CHECK_THROWS_AS(models::fit_collective(interactions_from_dense(x), f, 1.0, 1.0), DataError);
}

TEST_CASE("fit_additive endpoints reproduce the parents bitwise") {
  const auto x = random_binary(11, 15, 6, 0.4);
  const auto f = semantic_from_dense(random_gaussian(12, 4, 6));
  const auto xm = interactions_from_dense(x);

  const auto c = models::fit_ease(xm, 2.0);
  const auto d = dense_closed_form(f.values, 3.0);
  const auto at_one = models::fit_additive(xm, f, 2.0, 3.0, 1.0);
  const auto at_zero = models::fit_additive(xm, f, 2.0, 3.0, 0.0);
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index i = 0; i < 6; ++i) {
      CHECK(at_one.values(i, j) == c.values(i, j));
      CHECK(at_zero.values(i, j) == d(i, j));
    }
}

TEST_CASE("fit_additive at beta 0.5 averages the parents") {
  const auto x = random_binary(13, 15, 6, 0.4);
  const auto f = semantic_from_dense(random_gaussian(14, 4, 6));
  const auto xm = interactions_from_dense(x);
  const auto c = models::fit_ease(xm, 2.0);
  const auto d = dense_closed_form(f.values, 3.0);
  const auto blended = models::fit_additive(xm, f, 2.0, 3.0, 0.5);
  CHECK((blended.values - 0.5 * (c.values + d)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fit_additive validates beta") {
  const auto x = random_binary(15, 10, 4, 0.5);
  const auto f = semantic_from_dense(random_gaussian(16, 3, 4));
  CHECK_THROWS_AS(models::fit_additive(interactions_from_dense(x), f, 1.0, 1.0, 1.5),
                  ConfigError);
}

TEST_CASE("fit_semantic_ease zeroes out for orthogonal item columns") {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(3, 3);
  f(0, 0) = 2.0;
  f(1, 1) = 1.0;
  f(2, 2) = 0.5;
  const auto s = models::fit_semantic_ease(semantic_from_dense(f), 1.0);
  CHECK(s.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fit_semantic_ease matches the shared 2x2 algebra") {
  Eigen::MatrixXd f(3, 2);
  f << 1, 0, 1, 1, 0, 1;  // F^T F = [[2,1],[1,2]]
  const auto s = models::fit_semantic_ease(semantic_from_dense(f), 1.0);
  CHECK(std::abs(s.values(0, 1) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(s.values(1, 0) - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("duplicated item columns dominate their rows symmetrically") {
  Eigen::MatrixXd f = random_gaussian(21, 5, 4);
  f.col(2) = f.col(0);
  const auto s = models::fit_semantic_ease(semantic_from_dense(f), 0.5);
  CHECK(s.values(0, 2) == doctest::Approx(s.values(2, 0)).epsilon(1e-10));
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (i == 2 || i == 0) continue;
    CHECK(s.values(0, 2) > std::abs(s.values(i, 2)));
  }
  CHECK(s.values(0, 2) > 0.0);
}

TEST_CASE("fit_semantic_ease requires semantic features") {
  datasets::FeatureMatrix tag;
  tag.kind = datasets::FeatureKind::tag;
  tag.values = Eigen::MatrixXd::Ones(2, 2);
  CHECK_THROWS_AS(models::fit_semantic_ease(tag, 1.0), DataError);
}

TEST_CASE("fit_l3ae with no distillation reduces to fit_ease") {
  const auto x = random_binary(31, 30, 10, 0.3);
  const auto s =
      models::fit_semantic_ease(semantic_from_dense(random_gaussian(32, 6, 10)), 1.0);
  const auto l3ae = models::fit_l3ae(interactions_from_dense(x), s, 4.0, 0.0);
  const auto ease = models::fit_ease(interactions_from_dense(x), 4.0);
  CHECK((l3ae.values - ease.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fit_l3ae with an identity gram scales the semantic matrix by a third") {
  const auto s =
      models::fit_semantic_ease(semantic_from_dense(random_gaussian(41, 5, 3)), 2.0);
  const auto x = interactions_from_dense(Eigen::MatrixXd::Identity(3, 3));
  const auto b = models::fit_l3ae(x, s, 1.0, 1.0);
  CHECK((b.values - s.values / 3.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_l3ae matches the KKT oracle on a ten-item instance") {
  const auto x = random_binary(51, 40, 10, 0.3);
  const auto s =
      models::fit_semantic_ease(semantic_from_dense(random_gaussian(52, 6, 10)), 1.5);
  const double lambda_x = 2.0, lambda_kd = 1.2;
  const auto b = models::fit_l3ae(interactions_from_dense(x), s, lambda_x, lambda_kd);
  const Eigen::MatrixXd gram = x.transpose() * x;
  const Eigen::MatrixXd reference =
      oracle::kkt_solve(gram, lambda_x + lambda_kd, gram + lambda_kd * s.values);
  CHECK((b.values - reference).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_l3ae rejects a semantic matrix with a nonzero diagonal") {
  const auto x = random_binary(61, 10, 4, 0.5);
  models::ItemWeightMatrix s;
  s.values = Eigen::MatrixXd::Zero(4, 4);
  s.values(1, 1) = 1e-9;
  CHECK_THROWS_AS(models::fit_l3ae(interactions_from_dense(x), s, 1.0, 1.0), DataError);
}

TEST_CASE("fit_l3ae satisfies the distilled stationarity condition") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_binary(70 + seed, 25, 8, 0.35);
    const auto s =
        models::fit_semantic_ease(semantic_from_dense(random_gaussian(80 + seed, 5, 8)), 1.0);
    const double lambda_x = 1.0 + static_cast<double>(seed);
    const double lambda_kd = 0.5 + 0.3 * static_cast<double>(seed);
    const auto b = models::fit_l3ae(interactions_from_dense(x), s, lambda_x, lambda_kd);
    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::MatrixXd residual =
        gram * (b.values - Eigen::MatrixXd::Identity(8, 8)) + lambda_x * b.values +
        lambda_kd * (b.values - s.values);
    CHECK(offdiag_max(residual) < 1e-6 * (1.0 + gram.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("cosine_similarity_matrix fixtures") {
  Eigen::MatrixXd f(2, 3);
  f << 1, 1, 2, 0, 1, 0;  // f0=(1,0), f1=(1,1), f2=(2,0)
  const auto w = models::cosine_similarity_matrix(semantic_from_dense(f));
  CHECK(w.values(0, 2) == doctest::Approx(1.0).epsilon(1e-12));   // parallel columns
  CHECK(w.values(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(w.values(j, j) == 0.0);

  Eigen::MatrixXd orth = Eigen::MatrixXd::Identity(3, 3);
  const auto w_orth = models::cosine_similarity_matrix(semantic_from_dense(orth));
  CHECK(w_orth.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine_similarity_matrix lists zero-norm items") {
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 2);
  f(0, 0) = 1.0;
  auto features = semantic_from_dense(f);
  CHECK_THROWS_WITH_AS(models::cosine_similarity_matrix(features), doctest::Contains("i0001"),
                       DataError);
}

TEST_CASE("every fitted matrix has an exactly zero diagonal") {
  const auto instance = oracle::random_instance(99);
  const auto x = interactions_from_dense(instance.x);
  const auto f = semantic_from_dense(instance.f);
  const auto s = models::fit_semantic_ease(f, instance.hyperparams.lambda_f);
  const Eigen::MatrixXd fits[] = {
      models::fit_ease(x, instance.hyperparams.lambda).values,
      models::fit_collective(x, f, instance.hyperparams.alpha, instance.hyperparams.lambda).values,
      models::fit_additive(x, f, instance.hyperparams.lambda_x, instance.hyperparams.lambda_f,
                           instance.hyperparams.beta)
          .values,
      s.values,
      models::fit_l3ae(x, s, instance.hyperparams.lambda_x, instance.hyperparams.lambda_kd).values,
      models::cosine_similarity_matrix(f).values};
  for (const auto& values : fits)
    for (Eigen::Index j = 0; j < values.cols(); ++j) CHECK(values(j, j) == 0.0);
}

TEST_CASE("closed form dominates random zero-diagonal perturbations") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto instance = oracle::random_instance(200 + static_cast<std::uint64_t>(trial));
    const auto s = models::fit_semantic_ease(semantic_from_dense(instance.f),
                                             instance.hyperparams.lambda_f);
    const auto b = models::fit_l3ae(interactions_from_dense(instance.x), s,
                                    instance.hyperparams.lambda_x, instance.hyperparams.lambda_kd);
    const auto spec = oracle::l3ae_objective(instance.x.transpose() * instance.x,
                                             instance.hyperparams.lambda_x,
                                             instance.hyperparams.lambda_kd, s.values);
    const double reference = oracle::objective_value(spec, b.values);
    const Eigen::Index n = b.values.rows();
    Eigen::MatrixXd perturbation(n, n);
    for (int p = 0; p < 1000; ++p) {
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) perturbation(i, j) = rng.gaussian();
      perturbation.diagonal().setZero();
      const double value = oracle::objective_value(spec, b.values + 1e-3 * perturbation);
      CHECK(reference <= value);
    }
  }
}

TEST_CASE("weight matrices round-trip through export up to f32 narrowing") {
  testutil::TempDir dir("weights_roundtrip");
  const auto x = random_binary(91, 20, 6, 0.4);
  auto b = models::fit_ease(interactions_from_dense(x), 2.5);
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f"};
  models::save_weights(b, ids, dir.path / "w.json", dir.path / "w.bin");
  const auto loaded = models::load_weights(dir.path / "w.json", dir.path / "w.bin");
  CHECK(loaded.item_ids == ids);
  CHECK(loaded.weights.model == "ease");
  CHECK(loaded.weights.hyperparams.lambda == 2.5);
  CHECK(loaded.weights.zero_diag);
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index i = 0; i < 6; ++i)
      CHECK(loaded.weights.values(i, j) == static_cast<double>(static_cast<float>(b.values(i, j))));
}

TEST_CASE("weight payload length mismatch is rejected") {
  testutil::TempDir dir("weights_short");
  auto b = models::fit_ease(interactions_from_dense(testutil::ease_fixture_x()), 1.0);
  models::save_weights(b, {"a", "b"}, dir.path / "w.json", dir.path / "w.bin");
  const std::string payload = testutil::read_file(dir.path / "w.bin");
  testutil::write_file(dir.path / "w.bin", payload.substr(0, payload.size() - 1));
  CHECK_THROWS_WITH_AS(models::load_weights(dir.path / "w.json", dir.path / "w.bin"),
                       doctest::Contains("length mismatch"), DataError);
}

}  // TEST_SUITE
