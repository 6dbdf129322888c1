// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 10 needs externally supplied data and is skipped when
// its environment variables are unset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "laecf/commands.hpp"
#include "laecf/config.hpp"
#include "laecf/datasets.hpp"
#include "laecf/eval.hpp"
#include "laecf/linalg.hpp"
#include "laecf/models.hpp"
#include "laecf/oracle.hpp"
#include "laecf/rng.hpp"
#include "laecf/synth.hpp"

using namespace laecf;

namespace {

struct Result {
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double offdiag_max(const Eigen::MatrixXd& m) {
  double value = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j) value = std::max(value, std::abs(m(i, j)));
  return value;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------
// Criterion 1: closed forms agree with the KKT oracle on 20 seeded random
// instances per model, under 1e-6 max-norm, in under 60 seconds.
Result criterion_oracle_agreement() {
  const auto start = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  for (int i = 0; i < 20; ++i) {
    const auto instance = oracle::random_instance(7000 + static_cast<std::uint64_t>(i));
    const auto x = oracle::to_interactions(instance.x);
    const auto f = oracle::to_features(instance.f);
    const Eigen::MatrixXd gx = instance.x.transpose() * instance.x;
    const Eigen::MatrixXd gf = instance.f.transpose() * instance.f;
    const auto& hp = instance.hyperparams;

    worst["ease"] = std::max(worst["ease"],
                             max_abs_diff(models::fit_ease(x, hp.lambda).values,
                                          oracle::kkt_solve(gx, hp.lambda, gx)));
    {
      const Eigen::MatrixXd combined = gx + hp.alpha * gf;
      worst["collective"] =
          std::max(worst["collective"],
                   max_abs_diff(models::fit_collective(x, f, hp.alpha, hp.lambda).values,
                                oracle::kkt_solve(combined, hp.lambda, combined)));
    }
    worst["additive"] = std::max(
        worst["additive"],
        max_abs_diff(models::fit_additive(x, f, hp.lambda_x, hp.lambda_f, hp.beta).values,
                     hp.beta * oracle::kkt_solve(gx, hp.lambda_x, gx) +
                         (1.0 - hp.beta) * oracle::kkt_solve(gf, hp.lambda_f, gf)));
    const auto s = models::fit_semantic_ease(f, hp.lambda_f);
    worst["semantic"] = std::max(worst["semantic"],
                                 max_abs_diff(s.values, oracle::kkt_solve(gf, hp.lambda_f, gf)));
    worst["l3ae"] = std::max(
        worst["l3ae"],
        max_abs_diff(models::fit_l3ae(x, s, hp.lambda_x, hp.lambda_kd).values,
                     oracle::kkt_solve(gx, hp.lambda_x + hp.lambda_kd,
                                       gx + hp.lambda_kd * s.values)));
  }
  const double elapsed = seconds_since(start);

  Result result;
  double overall = 0.0;
  for (const auto& [model, error] : worst) overall = std::max(overall, error);
  result.pass = overall < 1e-6 && elapsed < 60.0;
  std::ostringstream detail;
  detail << "max err " << overall << " over 20 instances x 5 models, " << elapsed << "s";
  result.detail = detail.str();
  return result;
}

// Criterion 2: the hand-computed 2x2 fixture.
Result criterion_hand_fixture() {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;  // X^T X = [[2,1],[1,2]]
  const auto b = models::fit_ease(oracle::to_interactions(x), 1.0);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.0, 1.0 / 3.0, 1.0 / 3.0, 0.0;
  const double error = max_abs_diff(b.values, expected);
  return {error <= 1e-12, false, "max err " + std::to_string(error)};
}

// Criterion 3: fit_l3ae with lambda_kd = 0 equals fit_ease at lambda_x.
Result criterion_reduction_identity() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto instance = oracle::random_instance(7100 + static_cast<std::uint64_t>(i));
    const auto x = oracle::to_interactions(instance.x);
    const auto s = models::fit_semantic_ease(oracle::to_features(instance.f),
                                             instance.hyperparams.lambda_f);
    worst = std::max(worst,
                     max_abs_diff(models::fit_l3ae(x, s, instance.hyperparams.lambda_x, 0.0).values,
                                  models::fit_ease(x, instance.hyperparams.lambda_x).values));
  }
  return {worst <= 1e-12, false, "max err " + std::to_string(worst) + " over 10 instances"};
}

// Criterion 4: gram additivity equals the explicitly stacked fit.
Result criterion_stacking_equivalence() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto instance = oracle::random_instance(7200 + static_cast<std::uint64_t>(i));
    const double alpha = instance.hyperparams.alpha;
    const double lambda = instance.hyperparams.lambda;

    Eigen::MatrixXd stacked(instance.x.rows() + instance.f.rows(), instance.x.cols());
    stacked.topRows(instance.x.rows()) = instance.x;
    stacked.bottomRows(instance.f.rows()) = std::sqrt(alpha) * instance.f;
    auto ws = linalg::ridge_inverse(linalg::gram(stacked), lambda);
    const Eigen::MatrixXd reference = linalg::zero_diag_finish(ws);

    const auto collective = models::fit_collective(
        oracle::to_interactions(instance.x), oracle::to_features(instance.f), alpha, lambda);
    worst = std::max(worst, max_abs_diff(collective.values, reference));
  }
  return {worst <= 1e-10, false, "max err " + std::to_string(worst) + " over 10 fixtures"};
}

// Criterion 5: exact zero diagonals plus first-order stationarity.
Result criterion_constraints() {
  bool diagonals_exact = true;
  double worst_relative = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto instance = oracle::random_instance(7300 + static_cast<std::uint64_t>(i));
    const auto x = oracle::to_interactions(instance.x);
    const auto f = oracle::to_features(instance.f);
    const auto& hp = instance.hyperparams;
    const Eigen::MatrixXd gx = instance.x.transpose() * instance.x;
    const Eigen::Index n = gx.rows();
    const double scale = 1.0 + gx.cwiseAbs().maxCoeff();

    const auto ease = models::fit_ease(x, hp.lambda);
    const auto s = models::fit_semantic_ease(f, hp.lambda_f);
    const auto l3ae = models::fit_l3ae(x, s, hp.lambda_x, hp.lambda_kd);
    const Eigen::MatrixXd fits[] = {
        ease.values, models::fit_collective(x, f, hp.alpha, hp.lambda).values,
        models::fit_additive(x, f, hp.lambda_x, hp.lambda_f, hp.beta).values, s.values,
        l3ae.values};
    for (const auto& values : fits)
      for (Eigen::Index j = 0; j < values.cols(); ++j)
        if (values(j, j) != 0.0) diagonals_exact = false;

    const Eigen::MatrixXd ease_residual =
        gx * (ease.values - Eigen::MatrixXd::Identity(n, n)) + hp.lambda * ease.values;
    const Eigen::MatrixXd l3ae_residual =
        gx * (l3ae.values - Eigen::MatrixXd::Identity(n, n)) + hp.lambda_x * l3ae.values +
        hp.lambda_kd * (l3ae.values - s.values);
    worst_relative = std::max(worst_relative, offdiag_max(ease_residual) / scale);
    worst_relative = std::max(worst_relative, offdiag_max(l3ae_residual) / scale);
  }
  std::ostringstream detail;
  detail << "diag exact=" << (diagonals_exact ? "yes" : "NO") << ", stationarity rel err "
         << worst_relative;
  return {diagonals_exact && worst_relative < 1e-6, false, detail.str()};
}

// Criterion 6: eval metrics equal the exhaustive oracle on 1000 fuzzed
// cases; the hand DCG fixture evaluates to 0.9197.
Result criterion_metric_correctness() {
  Rng rng(424242);
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(rng.below(49));
    Eigen::VectorXd scores(n);
    for (int v = 0; v < n; ++v) scores(v) = rng.uniform() < 0.15 ? 0.25 : rng.uniform();
    std::vector<Eigen::Index> relevant;
    for (int v = 0; v < n; ++v)
      if (rng.uniform() < 0.3) relevant.push_back(v);
    if (relevant.empty()) relevant.push_back(0);
    const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

    const auto reference = oracle::exhaustive_rank_metrics(scores, relevant, k);
    const auto ranked = eval::topk(scores, k);
    if (eval::recall_at_k(ranked, relevant, k) != reference.recall ||
        eval::ndcg_at_k(ranked, relevant, k) != reference.ndcg)
      return {false, false, "fuzz case " + std::to_string(i) + " diverged"};
  }
  const double fixture = eval::ndcg_at_k({0, 9, 1}, {0, 1}, 3);
  const bool fixture_ok = std::abs(fixture - 0.9197) <= 1e-4;
  return {fixture_ok, false,
          "1000 fuzz cases exact, ndcg fixture = " + std::to_string(fixture)};
}

// Criterion 7: 10-core postconditions, split disjointness/ratios, and seeded
// determinism on synthetic data, in under 30 seconds.
Result criterion_pipeline_protocol() {
  const auto start = std::chrono::steady_clock::now();
  synth::SynthConfig config;
  config.users = 400;
  config.items = 150;
  config.clusters = 4;
  config.seed = 5;
  const auto data = synth::generate(config);
  const auto data_again = synth::generate(config);
  if (data.interactions.size() != data_again.interactions.size())
    return {false, false, "generator not deterministic"};

  const auto pairs = datasets::k_core_filter(data.interactions, 10);
  if (pairs.empty()) return {false, false, "10-core removed everything"};
  std::map<std::string, int> user_degree, item_degree;
  for (const auto& p : pairs) {
    ++user_degree[p.user];
    ++item_degree[p.item];
  }
  int min_degree = 1 << 30;
  for (const auto& [id, degree] : user_degree) min_degree = std::min(min_degree, degree);
  for (const auto& [id, degree] : item_degree) min_degree = std::min(min_degree, degree);
  if (min_degree < 10)
    return {false, false, "10-core postcondition violated: min degree " +
                              std::to_string(min_degree)};

  const auto bundle = datasets::split(pairs, 5);
  const auto bundle_again = datasets::split(pairs, 5);

  // Disjoint parts that recover the input, per-user counts within +-1 of 8:1:1.
  std::size_t total = 0;
  for (Eigen::Index u = 0; u < bundle.train.users(); ++u) {
    std::vector<char> seen(static_cast<std::size_t>(bundle.train.items()), 0);
    std::size_t train_count = 0, validation_count = 0, test_count = 0;
    const std::pair<const datasets::InteractionMatrix*, std::size_t*> parts[] = {
        {&bundle.train, &train_count},
        {&bundle.validation, &validation_count},
        {&bundle.test, &test_count}};
    for (const auto& [part, counter] : parts) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(part->x, u); it; ++it) {
        if (seen[static_cast<std::size_t>(it.col())]) return {false, false, "parts overlap"};
        seen[static_cast<std::size_t>(it.col())] = 1;
        ++*counter;
      }
    }
    const double user_total = static_cast<double>(train_count + validation_count + test_count);
    total += static_cast<std::size_t>(user_total);
    if (std::abs(static_cast<double>(train_count) - 0.8 * user_total) > 1.0 ||
        std::abs(static_cast<double>(validation_count) - 0.1 * user_total) > 1.0 ||
        std::abs(static_cast<double>(test_count) - 0.1 * user_total) > 1.0)
      return {false, false, "per-user ratios off by more than one interaction"};
  }
  if (total != pairs.size()) return {false, false, "split lost interactions"};

  auto entries = [](const datasets::InteractionMatrix& m) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    for (Eigen::Index u = 0; u < m.users(); ++u)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m.x, u); it; ++it)
        out.emplace_back(u, it.col());
    return out;
  };
  if (entries(bundle.train) != entries(bundle_again.train) ||
      entries(bundle.validation) != entries(bundle_again.validation) ||
      entries(bundle.test) != entries(bundle_again.test))
    return {false, false, "split not deterministic under a fixed seed"};

  const double elapsed = seconds_since(start);
  std::ostringstream detail;
  detail << pairs.size() << " pairs, min degree " << min_degree << ", " << elapsed << "s";
  return {elapsed < 30.0, false, detail.str()};
}

// Criterion 8: on the clustered synthetic dataset, the distilled model keeps
// tail-slice recall at or above the interaction-only model without giving up
// overall recall (medians over 10 seeds, validation-selected).
struct SeedOutcome {
  double ease_overall = 0.0, ease_tail = 0.0;
  double l3ae_overall = 0.0, l3ae_tail = 0.0;
};

SeedOutcome run_directional_seed(std::uint64_t seed) {
  synth::SynthConfig config;  // defaults: 2000 users, 500 items, 8 clusters
  config.seed = seed;
  const auto data = synth::generate(config);
  const auto pairs = datasets::k_core_filter(data.interactions, 10);
  const auto bundle = datasets::split(pairs, seed);

  std::unordered_map<std::string, Eigen::Index> generator_column;
  for (std::size_t i = 0; i < data.item_ids.size(); ++i)
    generator_column.emplace(data.item_ids[i], static_cast<Eigen::Index>(i));
  datasets::FeatureMatrix features;
  features.kind = datasets::FeatureKind::semantic;
  features.item_ids = bundle.train.item_ids;
  features.values.resize(data.embeddings.rows(),
                         static_cast<Eigen::Index>(bundle.train.item_ids.size()));
  for (std::size_t j = 0; j < bundle.train.item_ids.size(); ++j)
    features.values.col(static_cast<Eigen::Index>(j)) =
        data.embeddings.col(generator_column.at(bundle.train.item_ids[j]));

  eval::EvalOptions options;
  options.k_values = {20};
  auto validation_r20 = [&](const models::ItemWeightMatrix& w) {
    return eval::evaluate(bundle.train, bundle.validation, w, options).overall.recall_at.at(20);
  };

  SeedOutcome outcome;
  models::ItemWeightMatrix best_ease;
  double best_ease_value = -1.0;
  double lambda_star = 0.0;
  for (double lambda : {1.0, 5.0, 10.0, 50.0, 100.0, 500.0}) {
    auto b = models::fit_ease(bundle.train, lambda);
    const double value = validation_r20(b);
    if (value > best_ease_value) {
      best_ease_value = value;
      lambda_star = lambda;
      best_ease = std::move(b);
    }
  }
  models::ItemWeightMatrix best_l3ae;
  double best_l3ae_value = -1.0;
  for (double lambda_f : {0.1, 1.0, 10.0}) {
    const auto s = models::fit_semantic_ease(features, lambda_f);
    for (double fraction : {0.1, 0.2, 0.4, 0.6, 0.8}) {
      const double lambda_kd = fraction * lambda_star;
      const double lambda_x = lambda_star - lambda_kd;
      auto b = models::fit_l3ae(bundle.train, s, lambda_x, lambda_kd);
      const double value = validation_r20(b);
      if (value > best_l3ae_value) {
        best_l3ae_value = value;
        best_l3ae = std::move(b);
      }
    }
  }

  const auto ease_report = eval::evaluate(bundle.train, bundle.test, best_ease, options);
  const auto l3ae_report = eval::evaluate(bundle.train, bundle.test, best_l3ae, options);
  outcome.ease_overall = ease_report.overall.recall_at.at(20);
  outcome.ease_tail = ease_report.tail.recall_at.at(20);
  outcome.l3ae_overall = l3ae_report.overall.recall_at.at(20);
  outcome.l3ae_tail = l3ae_report.tail.recall_at.at(20);
  return outcome;
}

Result criterion_directional() {
  std::vector<double> ease_overall, ease_tail, l3ae_overall, l3ae_tail;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto outcome = run_directional_seed(seed);
    ease_overall.push_back(outcome.ease_overall);
    ease_tail.push_back(outcome.ease_tail);
    l3ae_overall.push_back(outcome.l3ae_overall);
    l3ae_tail.push_back(outcome.l3ae_tail);
  }
  const double ease_tail_median = median(ease_tail);
  const double l3ae_tail_median = median(l3ae_tail);
  const double ease_overall_median = median(ease_overall);
  const double l3ae_overall_median = median(l3ae_overall);

  std::ostringstream detail;
  detail << "tail R@20 median l3ae " << l3ae_tail_median << " vs ease " << ease_tail_median
         << "; overall median l3ae " << l3ae_overall_median << " vs ease " << ease_overall_median;
  const bool pass = l3ae_tail_median >= ease_tail_median &&
                    l3ae_overall_median >= ease_overall_median - 0.002;
  return {pass, false, detail.str()};
}

// Criterion 9: the embedding spectrum collapses past twice the latent rank
// while the interaction spectrum decays more gradually.
Result criterion_spectrum_diagnostic() {
  synth::SynthConfig config;  // rank r = 8 clusters, dim 32
  config.seed = 0;
  const auto data = synth::generate(config);
  const auto f_spectrum = linalg::spectrum(data.embeddings);
  const auto x_dense = Eigen::MatrixXd(datasets::build_matrix(data.interactions).x);
  const auto x_spectrum = linalg::spectrum(x_dense);

  const std::size_t index = 2 * static_cast<std::size_t>(config.clusters);
  if (index >= f_spectrum.size() || index >= x_spectrum.size())
    return {false, false, "spectrum shorter than 2r"};
  std::ostringstream detail;
  detail << "sigma_F[2r] = " << f_spectrum[index] << ", sigma_X[2r] = " << x_spectrum[index];
  return {f_spectrum[index] < 0.1 && x_spectrum[index] > f_spectrum[index], false, detail.str()};
}

// Criterion 10 (optional): real-data statistics and the full grid protocol.
Result criterion_full_reproduction() {
  const char* interactions = std::getenv("LAECF_GAMES_INTERACTIONS");
  if (interactions == nullptr)
    return {true, true, "set LAECF_GAMES_INTERACTIONS (and optionally LAECF_GAMES_EMBEDDINGS, "
                        "LAECF_GAMES_EMBEDDINGS_HEADER) to run"};

  auto pairs = datasets::load_interactions(interactions, 3.0);
  pairs = datasets::k_core_filter(pairs, 10);
  const auto matrix = datasets::build_matrix(pairs);
  const auto stats = datasets::stats(matrix);
  std::ostringstream detail;
  detail << "stats " << stats.users << "/" << stats.items << "/" << stats.ratings;
  if (stats.users != 5222 || stats.items != 2676 || stats.ratings != 85690)
    return {false, false, detail.str() + " != 5222/2676/85690"};

  const char* embeddings = std::getenv("LAECF_GAMES_EMBEDDINGS");
  const char* header = std::getenv("LAECF_GAMES_EMBEDDINGS_HEADER");
  if (embeddings != nullptr && header != nullptr) {
    cli::RunConfig config;
    config.interactions = interactions;
    config.embeddings = embeddings;
    config.embeddings_header = header;
    config.out_dir = std::filesystem::temp_directory_path() / "laecf_full_repro";
    std::filesystem::create_directories(config.out_dir);
    std::ostringstream sink;
    cli::cmd_prepare(config, sink);
    config.prepared_dir = config.out_dir / "prepared";
    config.model = "ease";
    cli::cmd_grid(config, sink);
    config.model = "l3ae";
    cli::cmd_grid(config, sink);
    detail << "; ease + l3ae grid protocol completed";
  } else {
    detail << "; embeddings not supplied, grid protocol skipped";
  }
  return {true, false, detail.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "closed-form/oracle agreement", criterion_oracle_agreement},
      {2, "hand-computed fixture", criterion_hand_fixture},
      {3, "reduction identity", criterion_reduction_identity},
      {4, "stacking equivalence", criterion_stacking_equivalence},
      {5, "constraint machinery", criterion_constraints},
      {6, "metric correctness", criterion_metric_correctness},
      {7, "pipeline protocol", criterion_pipeline_protocol},
      {8, "directional synthetic result", criterion_directional},
      {9, "spectrum diagnostic", criterion_spectrum_diagnostic},
      {10, "full-reproduction mode (optional)", criterion_full_reproduction},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    Result result;
    try {
      result = criterion.run();
    } catch (const std::exception& e) {
      result = {false, false, std::string("exception: ") + e.what()};
    }
    const char* status = result.skipped ? "SKIP" : (result.pass ? "PASS" : "FAIL");
    std::cout << "[" << status << "] criterion " << criterion.id << ": " << criterion.name
              << " :: " << result.detail << "\n";
    if (!result.pass && !result.skipped) ++failures;
  }
  if (failures == 0)
    std::cout << "acceptance: all criteria passed\n";
  else
    std::cout << "acceptance: " << failures << " criterion(s) failed\n";
  return failures;
}
