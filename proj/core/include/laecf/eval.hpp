#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "laecf/datasets.hpp"
#include "laecf/models.hpp"

namespace laecf::eval {

struct EvalOptions {
  std::vector<int> k_values = {10, 20};
  double head_fraction = 0.2;
};

struct SliceMetrics {
  std::map<int, double> recall_at;
  std::map<int, double> ndcg_at;
  std::size_t users_evaluated = 0;
};

struct EvalReport {
  SliceMetrics overall;
  SliceMetrics head;
  SliceMetrics tail;
  std::size_t users_evaluated = 0;  // users with a nonempty relevant set
  std::size_t users_skipped = 0;    // empty relevant set
  std::size_t cold_users = 0;       // evaluated with an empty training row
  std::vector<std::string> head_item_ids;
  // run metadata
  std::string model;
  models::Hyperparams hyperparams;
  std::uint64_t seed = 0;
};

// Scores a contiguous block of users: row u of the result is the user's
// history times the weight matrix, with that user's training items set to
// -inf so they never rank.
Eigen::MatrixXd score_users(const datasets::InteractionMatrix& train,
                            const models::ItemWeightMatrix& weights,
                            Eigen::Index first_user, Eigen::Index user_count);

// Top-k by descending score, ties broken by ascending item index.
std::vector<Eigen::Index> topk(const Eigen::Ref<const Eigen::VectorXd>& scores, int k);

// relevant must be sorted ascending and nonempty.
double recall_at_k(const std::vector<Eigen::Index>& ranked,
                   const std::vector<Eigen::Index>& relevant, int k);
double ndcg_at_k(const std::vector<Eigen::Index>& ranked,
                 const std::vector<Eigen::Index>& relevant, int k);

// Top-ceil(fraction * n) items by training popularity, ties by ascending
// item index; returned in that order.
std::vector<Eigen::Index> head_items(const datasets::InteractionMatrix& train,
                                     double fraction);

// Full ranking evaluation of `heldout` against scores from `train`.
// Head/tail slices restrict each user's relevant set only; the candidate
// set stays global. Deterministic: fixed user order, compensated sums.
EvalReport evaluate(const datasets::InteractionMatrix& train,
                    const datasets::InteractionMatrix& heldout,
                    const models::ItemWeightMatrix& weights, const EvalOptions& options = {});

// Stable-key JSON rendering of a report.
std::string to_json_string(const EvalReport& report);

}  // namespace laecf::eval
