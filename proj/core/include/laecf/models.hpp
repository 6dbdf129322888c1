#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "laecf/datasets.hpp"
#include "laecf/linalg.hpp"

namespace laecf::models {

struct Hyperparams {
  double lambda = 0.0;     // single-source ridge weight
  double lambda_x = 0.0;   // interaction-side ridge weight
  double lambda_t = 0.0;   // tag-side ridge weight
  double lambda_f = 0.0;   // semantic-side ridge weight
  double lambda_kd = 0.0;  // distillation weight
  double alpha = 0.0;      // stacked-source weight
  double beta = 0.0;       // additive interpolation in [0, 1]
};

// Dense item-to-item weight matrix with fit provenance.
struct ItemWeightMatrix {
  Eigen::MatrixXd values;
  bool zero_diag = true;
  std::string model;
  Hyperparams hyperparams;
};

// B = I - P diagMat(1 / diag(P)), P = (X^T X + lambda I)^-1.
ItemWeightMatrix fit_ease(const datasets::InteractionMatrix& x, double lambda,
                          const linalg::SolveOptions& options = {});

// Shared weight matrix over X stacked with sqrt(alpha) * features, realized
// through gram additivity (X^T X + alpha M^T M) without materializing the
// stack.
ItemWeightMatrix fit_collective(const datasets::InteractionMatrix& x,
                                const datasets::FeatureMatrix& features, double alpha,
                                double lambda, const linalg::SolveOptions& options = {});

// beta * C + (1 - beta) * D with C fit on interactions (lambda_x) and D fit
// on the feature matrix (lambda_feat). Endpoints return the parent bitwise.
ItemWeightMatrix fit_additive(const datasets::InteractionMatrix& x,
                              const datasets::FeatureMatrix& features, double lambda_x,
                              double lambda_feat, double beta,
                              const linalg::SolveOptions& options = {});

// Semantic item-correlation matrix: the same closed form fit on F.
ItemWeightMatrix fit_semantic_ease(const datasets::FeatureMatrix& f, double lambda_f,
                                   const linalg::SolveOptions& options = {});

// Interaction fit with a distillation pull toward a precomputed semantic
// matrix s (required zero-diagonal):
//   B = I + lambda_kd P S - P diagMat(mu),
//   P = (X^T X + (lambda_kd + lambda_x) I)^-1,
//   mu = diag(1 + lambda_kd P S) / diag(P).
ItemWeightMatrix fit_l3ae(const datasets::InteractionMatrix& x, const ItemWeightMatrix& s,
                          double lambda_x, double lambda_kd,
                          const linalg::SolveOptions& options = {});

// Cosine similarity of item feature columns, diagonal zeroed.
ItemWeightMatrix cosine_similarity_matrix(const datasets::FeatureMatrix& f);

// Export: JSON header {n, dtype, model, hyperparams, item_ids} next to a
// row-major little-endian float32 payload.
void save_weights(const ItemWeightMatrix& weights, const std::vector<std::string>& item_ids,
                  const std::filesystem::path& header_path,
                  const std::filesystem::path& payload_path);

struct LoadedWeights {
  ItemWeightMatrix weights;
  std::vector<std::string> item_ids;
};

LoadedWeights load_weights(const std::filesystem::path& header_path,
                           const std::filesystem::path& payload_path);

}  // namespace laecf::models
