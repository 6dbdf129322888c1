#include "laecf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "laecf/errors.hpp"

namespace laecf::eval {

namespace {

using json = nlohmann::json;

constexpr double kMaskedScore = -std::numeric_limits<double>::infinity();

// Compensated (Kahan) accumulator for order-stable metric sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double value) {
    const double y = value - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

std::vector<Eigen::Index> row_indices(const Eigen::SparseMatrix<double, Eigen::RowMajor>& x,
                                      Eigen::Index row) {
  std::vector<Eigen::Index> indices;
  for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(x, row); it; ++it)
    indices.push_back(it.col());
  return indices;
}

struct SliceAccumulator {
  std::map<int, KahanSum> recall;
  std::map<int, KahanSum> ndcg;
  std::size_t users = 0;
};

void accumulate_slice(SliceAccumulator& acc, const std::vector<Eigen::Index>& ranked,
                      const std::vector<Eigen::Index>& relevant,
                      const std::vector<int>& k_values) {
  if (relevant.empty()) return;
  ++acc.users;
  for (int k : k_values) {
    acc.recall[k].add(recall_at_k(ranked, relevant, k));
    acc.ndcg[k].add(ndcg_at_k(ranked, relevant, k));
  }
}

SliceMetrics finalize_slice(const SliceAccumulator& acc, const std::vector<int>& k_values) {
  SliceMetrics metrics;
  metrics.users_evaluated = acc.users;
  for (int k : k_values) {
    const double denom = acc.users > 0 ? static_cast<double>(acc.users) : 1.0;
    const auto rec = acc.recall.find(k);
    const auto ndc = acc.ndcg.find(k);
    metrics.recall_at[k] = rec == acc.recall.end() ? 0.0 : rec->second.sum / denom;
    metrics.ndcg_at[k] = ndc == acc.ndcg.end() ? 0.0 : ndc->second.sum / denom;
  }
  return metrics;
}

}  // namespace

Eigen::MatrixXd score_users(const datasets::InteractionMatrix& train,
                            const models::ItemWeightMatrix& weights, Eigen::Index first_user,
                            Eigen::Index user_count) {
  const Eigen::Index n = train.items();
  if (weights.values.rows() != n || weights.values.cols() != n)
    throw DataError("score_users: weight matrix does not match the item count");
  if (first_user < 0 || user_count < 0 || first_user + user_count > train.users())
    throw ConfigError("score_users: user batch out of range");

  Eigen::MatrixXd scores;
  scores.noalias() = train.x.middleRows(first_user, user_count) * weights.values;
  for (Eigen::Index u = 0; u < user_count; ++u) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(train.x, first_user + u);
         it; ++it)
      scores(u, it.col()) = kMaskedScore;
  }
  return scores;
}

std::vector<Eigen::Index> topk(const Eigen::Ref<const Eigen::VectorXd>& scores, int k) {
  const Eigen::Index n = scores.size();
  if (k < 0 || k > n) throw ConfigError("topk: k must lie in [0, item count]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&scores](Eigen::Index a, Eigen::Index b) {
                      if (scores(a) != scores(b)) return scores(a) > scores(b);
                      return a < b;
                    });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

double recall_at_k(const std::vector<Eigen::Index>& ranked,
                   const std::vector<Eigen::Index>& relevant, int k) {
  const std::size_t limit = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t p = 0; p < limit; ++p)
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<Eigen::Index>& ranked,
                 const std::vector<Eigen::Index>& relevant, int k) {
  const std::size_t limit = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t p = 0; p < limit; ++p) {
    if (std::binary_search(relevant.begin(), relevant.end(), ranked[p]))
      dcg += 1.0 / std::log2(static_cast<double>(p + 2));  // position p+1, 1-based
  }
  const std::size_t ideal = std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size());
  double idcg = 0.0;
  for (std::size_t p = 0; p < ideal; ++p) idcg += 1.0 / std::log2(static_cast<double>(p + 2));
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::vector<Eigen::Index> head_items(const datasets::InteractionMatrix& train, double fraction) {
  const Eigen::Index n = train.items();
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ConfigError("head_items: fraction must lie in [0, 1]");
  std::vector<std::size_t> popularity(static_cast<std::size_t>(n), 0);
  for (Eigen::Index u = 0; u < train.users(); ++u)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(train.x, u); it; ++it)
      ++popularity[static_cast<std::size_t>(it.col())];

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&popularity](Eigen::Index a, Eigen::Index b) {
    const auto pa = popularity[static_cast<std::size_t>(a)];
    const auto pb = popularity[static_cast<std::size_t>(b)];
    if (pa != pb) return pa > pb;
    return a < b;
  });
  const auto head_size = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  order.resize(std::min(order.size(), head_size));
  return order;
}

EvalReport evaluate(const datasets::InteractionMatrix& train,
                    const datasets::InteractionMatrix& heldout,
                    const models::ItemWeightMatrix& weights, const EvalOptions& options) {
  const Eigen::Index n = train.items();
  if (heldout.items() != n || heldout.users() != train.users())
    throw DataError("evaluate: train and heldout parts use different index spaces");
  if (options.k_values.empty()) throw ConfigError("evaluate: k_values must be nonempty");
  int max_k = 0;
  for (int k : options.k_values) {
    if (k <= 0 || k > n)
      throw ConfigError("evaluate: k = " + std::to_string(k) + " outside [1, " +
                        std::to_string(n) + "]");
    max_k = std::max(max_k, k);
  }

  const auto head = head_items(train, options.head_fraction);
  std::vector<char> in_head(static_cast<std::size_t>(n), 0);
  for (Eigen::Index item : head) in_head[static_cast<std::size_t>(item)] = 1;

  EvalReport report;
  report.head_item_ids.reserve(head.size());
  for (Eigen::Index item : head)
    report.head_item_ids.push_back(train.item_ids[static_cast<std::size_t>(item)]);

  SliceAccumulator overall, head_acc, tail_acc;
  const Eigen::Index batch_size = 256;
  for (Eigen::Index first = 0; first < train.users(); first += batch_size) {
    const Eigen::Index count = std::min(batch_size, train.users() - first);
    const Eigen::MatrixXd scores = score_users(train, weights, first, count);
    for (Eigen::Index b = 0; b < count; ++b) {
      const Eigen::Index user = first + b;
      const auto relevant = row_indices(heldout.x, user);
      if (relevant.empty()) {
        ++report.users_skipped;
        continue;
      }
      ++report.users_evaluated;
      if (train.x.innerVector(user).nonZeros() == 0) ++report.cold_users;

      const auto ranked = topk(scores.row(b).transpose(), max_k);
      accumulate_slice(overall, ranked, relevant, options.k_values);

      std::vector<Eigen::Index> relevant_head, relevant_tail;
      for (Eigen::Index item : relevant) {
        if (in_head[static_cast<std::size_t>(item)])
          relevant_head.push_back(item);
        else
          relevant_tail.push_back(item);
      }
      accumulate_slice(head_acc, ranked, relevant_head, options.k_values);
      accumulate_slice(tail_acc, ranked, relevant_tail, options.k_values);
    }
  }

  report.overall = finalize_slice(overall, options.k_values);
  report.head = finalize_slice(head_acc, options.k_values);
  report.tail = finalize_slice(tail_acc, options.k_values);
  report.model = weights.model;
  report.hyperparams = weights.hyperparams;
  return report;
}

std::string to_json_string(const EvalReport& report) {
  auto slice_json = [](const SliceMetrics& slice) {
    json j;
    for (const auto& [k, v] : slice.recall_at) j["recall@" + std::to_string(k)] = v;
    for (const auto& [k, v] : slice.ndcg_at) j["ndcg@" + std::to_string(k)] = v;
    j["users_evaluated"] = slice.users_evaluated;
    return j;
  };
  json j;
  j["model"] = report.model;
  j["hyperparams"] = {{"lambda", report.hyperparams.lambda},
                      {"lambda_x", report.hyperparams.lambda_x},
                      {"lambda_t", report.hyperparams.lambda_t},
                      {"lambda_f", report.hyperparams.lambda_f},
                      {"lambda_kd", report.hyperparams.lambda_kd},
                      {"alpha", report.hyperparams.alpha},
                      {"beta", report.hyperparams.beta}};
  j["seed"] = report.seed;
  j["slices"] = {{"overall", slice_json(report.overall)},
                 {"head", slice_json(report.head)},
                 {"tail", slice_json(report.tail)}};
  j["users_evaluated"] = report.users_evaluated;
  j["users_skipped"] = report.users_skipped;
  j["cold_users"] = report.cold_users;
  j["head_items"] = report.head_item_ids;
  return j.dump(2);
}

}  // namespace laecf::eval
