#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "laecf/datasets.hpp"
#include "laecf/models.hpp"

namespace laecf::oracle {

// Desk-sized random problem for cross-checking the closed forms.
struct OracleInstance {
  Eigen::MatrixXd x;  // dense binary interactions, m <= 50, n <= 15
  Eigen::MatrixXd f;  // dense features, d x n
  models::Hyperparams hyperparams;
  std::uint64_t seed = 0;
};

OracleInstance random_instance(std::uint64_t seed, int max_users = 50, int max_items = 15,
                               double density = 0.3);

// Wraps a dense 0/1 matrix as an InteractionMatrix with synthetic ids.
datasets::InteractionMatrix to_interactions(const Eigen::MatrixXd& x);
datasets::FeatureMatrix to_features(const Eigen::MatrixXd& f);

// Constrained minimizer computed column by column: for each j solve
// (gram + lambda I) restricted to the free coordinates {i != j} against
// rhs[:, j], with b[j][j] = 0. General dense LU, no diagonal-multiplier
// shortcut.
Eigen::MatrixXd kkt_solve(const Eigen::MatrixXd& gram, double lambda_total,
                          const Eigen::MatrixXd& rhs);

// Quadratic objective f(B) = tr(B^T G B) + lambda ||B||_F^2 - 2 <rhs, B>
// + constant, covering every model objective via its gram form.
struct ObjectiveSpec {
  Eigen::MatrixXd gram;
  double lambda_total = 0.0;
  Eigen::MatrixXd rhs;
  double constant = 0.0;
};

ObjectiveSpec ease_objective(const Eigen::MatrixXd& gram, double lambda);
ObjectiveSpec collective_objective(const Eigen::MatrixXd& gram_x, const Eigen::MatrixXd& gram_m,
                                   double alpha, double lambda);
ObjectiveSpec l3ae_objective(const Eigen::MatrixXd& gram_x, double lambda_x, double lambda_kd,
                             const Eigen::MatrixXd& s);

double objective_value(const ObjectiveSpec& spec, const Eigen::MatrixXd& b);

// Second independent oracle: gradient descent with the diagonal re-zeroed
// each step. learning_rate <= 0 picks a stable default. Steps that would
// increase the objective halve the step size; more than 10 halvings is an
// error.
Eigen::MatrixXd projected_gradient(const ObjectiveSpec& spec, int steps = 10000,
                                   double learning_rate = 0.0);

struct RankMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
};

// Reference metric path: full sort, direct formula evaluation.
RankMetrics exhaustive_rank_metrics(const Eigen::VectorXd& scores,
                                    const std::vector<Eigen::Index>& relevant, int k);

struct AuditRow {
  std::string check;
  int instances = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Full verification suite (closed forms vs both oracles, metric fuzz).
std::vector<AuditRow> run_audit(std::uint64_t seed);

}  // namespace laecf::oracle
