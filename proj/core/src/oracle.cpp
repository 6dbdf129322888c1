#include "laecf/oracle.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "laecf/errors.hpp"
#include "laecf/eval.hpp"
#include "laecf/rng.hpp"

namespace laecf::oracle {

namespace {

std::string padded_id(char prefix, std::size_t index) {
  std::ostringstream out;
  out << prefix;
  std::string digits = std::to_string(index);
  for (std::size_t i = digits.size(); i < 4; ++i) out << '0';
  out << digits;
  return out.str();
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

OracleInstance random_instance(std::uint64_t seed, int max_users, int max_items, double density) {
  Rng rng(seed, 0x0eac1e);
  OracleInstance instance;
  instance.seed = seed;
  const int m = 5 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_users - 4)));
  const int n = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_items - 3)));
  const int d = 3 + static_cast<int>(rng.below(6));

  instance.x = Eigen::MatrixXd::Zero(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c)
      if (rng.uniform() < density) instance.x(r, c) = 1.0;
  if (instance.x.cwiseAbs().maxCoeff() == 0.0) instance.x(0, 0) = 1.0;

  instance.f.resize(d, n);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < n; ++c) instance.f(r, c) = rng.gaussian();

  instance.hyperparams.lambda = 0.5 + 5.0 * rng.uniform();
  instance.hyperparams.lambda_x = 0.5 + 5.0 * rng.uniform();
  instance.hyperparams.lambda_t = 0.5 + 5.0 * rng.uniform();
  instance.hyperparams.lambda_f = 0.5 + 5.0 * rng.uniform();
  instance.hyperparams.lambda_kd = 0.2 + 3.0 * rng.uniform();
  instance.hyperparams.alpha = 0.1 + 2.0 * rng.uniform();
  instance.hyperparams.beta = rng.uniform();
  return instance;
}

datasets::InteractionMatrix to_interactions(const Eigen::MatrixXd& x) {
  datasets::InteractionMatrix m;
  m.user_ids.reserve(static_cast<std::size_t>(x.rows()));
  m.item_ids.reserve(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index u = 0; u < x.rows(); ++u) m.user_ids.push_back(padded_id('u', static_cast<std::size_t>(u)));
  for (Eigen::Index i = 0; i < x.cols(); ++i) m.item_ids.push_back(padded_id('i', static_cast<std::size_t>(i)));
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index u = 0; u < x.rows(); ++u)
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      if (x(u, i) != 0.0) triplets.emplace_back(u, i, 1.0);
  m.x.resize(x.rows(), x.cols());
  m.x.setFromTriplets(triplets.begin(), triplets.end());
  m.x.makeCompressed();
  return m;
}

datasets::FeatureMatrix to_features(const Eigen::MatrixXd& f) {
  datasets::FeatureMatrix features;
  features.kind = datasets::FeatureKind::semantic;
  features.values = f;
  features.item_ids.reserve(static_cast<std::size_t>(f.cols()));
  for (Eigen::Index i = 0; i < f.cols(); ++i)
    features.item_ids.push_back(padded_id('i', static_cast<std::size_t>(i)));
  return features;
}

Eigen::MatrixXd kkt_solve(const Eigen::MatrixXd& gram, double lambda_total,
                          const Eigen::MatrixXd& rhs) {
  if (!(lambda_total > 0.0)) throw ConfigError("kkt_solve: lambda_total must be positive");
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n || rhs.rows() != n || rhs.cols() != n)
    throw DataError("kkt_solve: size mismatch");

  Eigen::MatrixXd system = gram;
  system.diagonal().array() += lambda_total;

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) return b;  // no free coordinates

  Eigen::MatrixXd subsystem(n - 1, n - 1);
  Eigen::VectorXd sub_rhs(n - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index row_out = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == j) continue;
      Eigen::Index col_out = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == j) continue;
        subsystem(row_out, col_out) = system(r, c);
        ++col_out;
      }
      sub_rhs(row_out) = rhs(r, j);
      ++row_out;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(subsystem);
    if (!lu.isInvertible())
      throw SolverError("kkt_solve: singular free-coordinate subsystem at column " +
                        std::to_string(j));
    const Eigen::VectorXd solution = lu.solve(sub_rhs);
    Eigen::Index out = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == j) continue;
      b(r, j) = solution(out++);
    }
  }
  return b;
}

ObjectiveSpec ease_objective(const Eigen::MatrixXd& gram, double lambda) {
  return {gram, lambda, gram, gram.trace()};
}

ObjectiveSpec collective_objective(const Eigen::MatrixXd& gram_x, const Eigen::MatrixXd& gram_m,
                                   double alpha, double lambda) {
  ObjectiveSpec spec;
  spec.gram = gram_x + alpha * gram_m;
  spec.lambda_total = lambda;
  spec.rhs = spec.gram;
  spec.constant = spec.gram.trace();
  return spec;
}

ObjectiveSpec l3ae_objective(const Eigen::MatrixXd& gram_x, double lambda_x, double lambda_kd,
                             const Eigen::MatrixXd& s) {
  ObjectiveSpec spec;
  spec.gram = gram_x;
  spec.lambda_total = lambda_x + lambda_kd;
  spec.rhs = gram_x + lambda_kd * s;
  spec.constant = gram_x.trace() + lambda_kd * s.squaredNorm();
  return spec;
}

double objective_value(const ObjectiveSpec& spec, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd gb = spec.gram * b;
  return b.cwiseProduct(gb).sum() + spec.lambda_total * b.squaredNorm() -
         2.0 * spec.rhs.cwiseProduct(b).sum() + spec.constant;
}

Eigen::MatrixXd projected_gradient(const ObjectiveSpec& spec, int steps, double learning_rate) {
  const Eigen::Index n = spec.gram.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  if (steps <= 0) return b;

  double rate = learning_rate;
  if (!(rate > 0.0)) {
    // Gershgorin bound on the largest curvature of the quadratic.
    const double gram_bound = spec.gram.cwiseAbs().rowwise().sum().maxCoeff();
    rate = 0.5 / (gram_bound + spec.lambda_total);
  }

  double current = objective_value(spec, b);
  int halvings = 0;
  Eigen::MatrixXd gradient(n, n), candidate(n, n);
  for (int step = 0; step < steps; ++step) {
    gradient.noalias() = spec.gram * b;
    gradient += spec.lambda_total * b - spec.rhs;
    gradient *= 2.0;
    candidate = b - rate * gradient;
    candidate.diagonal().setZero();
    const double next = objective_value(spec, candidate);
    if (next > current + 1e-12 * (1.0 + std::abs(current))) {
      rate *= 0.5;
      if (++halvings > 10)
        throw SolverError("projected_gradient: diverged after 10 step-size halvings");
      continue;
    }
    b.swap(candidate);
    current = next;
  }
  return b;
}

RankMetrics exhaustive_rank_metrics(const Eigen::VectorXd& scores,
                                    const std::vector<Eigen::Index>& relevant, int k) {
  RankMetrics metrics;
  if (relevant.empty()) return metrics;
  const Eigen::Index n = scores.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  std::vector<Eigen::Index> sorted_relevant = relevant;
  std::sort(sorted_relevant.begin(), sorted_relevant.end());

  const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t p = 0; p < limit; ++p) {
    if (std::binary_search(sorted_relevant.begin(), sorted_relevant.end(), order[p])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(p + 2));
    }
  }
  metrics.recall = static_cast<double>(hits) / static_cast<double>(sorted_relevant.size());
  double idcg = 0.0;
  const std::size_t ideal = std::min<std::size_t>(static_cast<std::size_t>(k), sorted_relevant.size());
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p + 2));
  metrics.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return metrics;
}

std::vector<AuditRow> run_audit(std::uint64_t seed) {
  constexpr int kInstances = 20;
  std::vector<AuditRow> rows;

  auto closed_vs_kkt = [&](const std::string& name, auto&& closed_fn, auto&& oracle_fn) {
    AuditRow row{name, kInstances, 0.0, 1e-6, false};
    for (int i = 0; i < kInstances; ++i) {
      const auto instance = random_instance(seed + static_cast<std::uint64_t>(i));
      const Eigen::MatrixXd closed = closed_fn(instance);
      const Eigen::MatrixXd reference = oracle_fn(instance);
      row.max_error = std::max(row.max_error, max_abs_diff(closed, reference));
    }
    row.pass = row.max_error < row.tolerance;
    rows.push_back(row);
  };

  auto gram_of = [](const Eigen::MatrixXd& m) { return (m.transpose() * m).eval(); };

  closed_vs_kkt(
      "ease closed form vs KKT",
      [](const OracleInstance& inst) {
        return models::fit_ease(to_interactions(inst.x), inst.hyperparams.lambda).values;
      },
      [&](const OracleInstance& inst) {
        const Eigen::MatrixXd g = gram_of(inst.x);
        return kkt_solve(g, inst.hyperparams.lambda, g);
      });

  closed_vs_kkt(
      "collective closed form vs KKT",
      [](const OracleInstance& inst) {
        return models::fit_collective(to_interactions(inst.x), to_features(inst.f),
                                      inst.hyperparams.alpha, inst.hyperparams.lambda)
            .values;
      },
      [&](const OracleInstance& inst) {
        const Eigen::MatrixXd g = gram_of(inst.x) + inst.hyperparams.alpha * gram_of(inst.f);
        return kkt_solve(g, inst.hyperparams.lambda, g);
      });

  closed_vs_kkt(
      "additive composition vs KKT",
      [](const OracleInstance& inst) {
        return models::fit_additive(to_interactions(inst.x), to_features(inst.f),
                                    inst.hyperparams.lambda_x, inst.hyperparams.lambda_f,
                                    inst.hyperparams.beta)
            .values;
      },
      [&](const OracleInstance& inst) {
        const Eigen::MatrixXd gx = gram_of(inst.x);
        const Eigen::MatrixXd gf = gram_of(inst.f);
        return (inst.hyperparams.beta * kkt_solve(gx, inst.hyperparams.lambda_x, gx) +
                (1.0 - inst.hyperparams.beta) * kkt_solve(gf, inst.hyperparams.lambda_f, gf))
            .eval();
      });

  closed_vs_kkt(
      "semantic closed form vs KKT",
      [](const OracleInstance& inst) {
        return models::fit_semantic_ease(to_features(inst.f), inst.hyperparams.lambda_f).values;
      },
      [&](const OracleInstance& inst) {
        const Eigen::MatrixXd g = gram_of(inst.f);
        return kkt_solve(g, inst.hyperparams.lambda_f, g);
      });

  closed_vs_kkt(
      "l3ae closed form vs KKT",
      [](const OracleInstance& inst) {
        const auto s = models::fit_semantic_ease(to_features(inst.f), inst.hyperparams.lambda_f);
        return models::fit_l3ae(to_interactions(inst.x), s, inst.hyperparams.lambda_x,
                                inst.hyperparams.lambda_kd)
            .values;
      },
      [&](const OracleInstance& inst) {
        const auto s = models::fit_semantic_ease(to_features(inst.f), inst.hyperparams.lambda_f);
        const Eigen::MatrixXd gx = gram_of(inst.x);
        return kkt_solve(gx, inst.hyperparams.lambda_x + inst.hyperparams.lambda_kd,
                         gx + inst.hyperparams.lambda_kd * s.values);
      });

  {
    AuditRow row{"projected gradient vs KKT (ease)", kInstances, 0.0, 1e-4, false};
    for (int i = 0; i < kInstances; ++i) {
      const auto instance = random_instance(seed + static_cast<std::uint64_t>(i));
      const Eigen::MatrixXd g = gram_of(instance.x);
      const auto spec = ease_objective(g, instance.hyperparams.lambda);
      row.max_error = std::max(
          row.max_error, max_abs_diff(projected_gradient(spec),
                                      kkt_solve(g, instance.hyperparams.lambda, g)));
    }
    row.pass = row.max_error < row.tolerance;
    rows.push_back(row);
  }

  {
    AuditRow row{"projected gradient vs KKT (l3ae)", kInstances, 0.0, 1e-4, false};
    for (int i = 0; i < kInstances; ++i) {
      const auto instance = random_instance(seed + static_cast<std::uint64_t>(i));
      const auto s = models::fit_semantic_ease(to_features(instance.f), instance.hyperparams.lambda_f);
      const Eigen::MatrixXd gx = gram_of(instance.x);
      const auto spec = l3ae_objective(gx, instance.hyperparams.lambda_x,
                                       instance.hyperparams.lambda_kd, s.values);
      row.max_error = std::max(
          row.max_error,
          max_abs_diff(projected_gradient(spec),
                       kkt_solve(gx, spec.lambda_total, spec.rhs)));
    }
    row.pass = row.max_error < row.tolerance;
    rows.push_back(row);
  }

  {
    AuditRow row{"mutual optimality (l3ae objective)", kInstances, 0.0, 1e-9, false};
    for (int i = 0; i < kInstances; ++i) {
      const auto instance = random_instance(seed + static_cast<std::uint64_t>(i));
      const auto s = models::fit_semantic_ease(to_features(instance.f), instance.hyperparams.lambda_f);
      const Eigen::MatrixXd gx = gram_of(instance.x);
      const auto spec = l3ae_objective(gx, instance.hyperparams.lambda_x,
                                       instance.hyperparams.lambda_kd, s.values);
      const auto closed = models::fit_l3ae(to_interactions(instance.x), s,
                                           instance.hyperparams.lambda_x,
                                           instance.hyperparams.lambda_kd);
      const auto reference = kkt_solve(gx, spec.lambda_total, spec.rhs);
      const double gap = objective_value(spec, closed.values) - objective_value(spec, reference);
      row.max_error = std::max(row.max_error, gap);
    }
    row.pass = row.max_error <= row.tolerance;
    rows.push_back(row);
  }

  {
    AuditRow row{"rank metrics vs eval (fuzz)", 1000, 0.0, 0.0, false};
    Rng rng(seed, 0x5c07e5);
    bool exact = true;
    for (int i = 0; i < 1000; ++i) {
      const int n = 2 + static_cast<int>(rng.below(49));
      Eigen::VectorXd scores(n);
      for (int v = 0; v < n; ++v)
        scores(v) = rng.uniform() < 0.2 ? rng.uniform() * 0.5 : rng.uniform();
      std::vector<Eigen::Index> relevant;
      for (int v = 0; v < n; ++v)
        if (rng.uniform() < 0.3) relevant.push_back(v);
      if (relevant.empty()) relevant.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
      const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

      const auto reference = exhaustive_rank_metrics(scores, relevant, k);
      const auto ranked = eval::topk(scores, k);
      const double recall = eval::recall_at_k(ranked, relevant, k);
      const double ndcg = eval::ndcg_at_k(ranked, relevant, k);
      if (recall != reference.recall || ndcg != reference.ndcg) {
        exact = false;
        row.max_error = std::max({row.max_error, std::abs(recall - reference.recall),
                                  std::abs(ndcg - reference.ndcg)});
      }
    }
    row.pass = exact;
    rows.push_back(row);
  }

  return rows;
}

}  // namespace laecf::oracle
