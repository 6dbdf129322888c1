#include "laecf/models.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <utility>

#include "laecf/errors.hpp"

namespace laecf::models {

namespace {

using json = nlohmann::json;

// EASE finishing applied to an arbitrary gram matrix.
Eigen::MatrixXd closed_form_fit(linalg::GramMatrix gram, double lambda,
                                const linalg::SolveOptions& options) {
  auto ws = linalg::ridge_inverse(std::move(gram), lambda, options);
  return linalg::zero_diag_finish(ws);
}

void require_feature_alignment(const datasets::InteractionMatrix& x,
                               const datasets::FeatureMatrix& features) {
  if (features.values.cols() != x.items())
    throw DataError("feature matrix has " + std::to_string(features.values.cols()) +
                    " item columns, interactions have " + std::to_string(x.items()));
}

json hyperparams_to_json(const Hyperparams& hp) {
  return json{{"lambda", hp.lambda},       {"lambda_x", hp.lambda_x}, {"lambda_t", hp.lambda_t},
              {"lambda_f", hp.lambda_f},   {"lambda_kd", hp.lambda_kd},
              {"alpha", hp.alpha},         {"beta", hp.beta}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams hp;
  hp.lambda = j.value("lambda", 0.0);
  hp.lambda_x = j.value("lambda_x", 0.0);
  hp.lambda_t = j.value("lambda_t", 0.0);
  hp.lambda_f = j.value("lambda_f", 0.0);
  hp.lambda_kd = j.value("lambda_kd", 0.0);
  hp.alpha = j.value("alpha", 0.0);
  hp.beta = j.value("beta", 0.0);
  return hp;
}

}  // namespace

ItemWeightMatrix fit_ease(const datasets::InteractionMatrix& x, double lambda,
                          const linalg::SolveOptions& options) {
  if (!(lambda > 0.0)) throw ConfigError("fit_ease: lambda must be positive");
  if (x.x.nonZeros() == 0) throw DataError("fit_ease: interaction matrix is empty");
  linalg::check_dense_budget(x.items(), options);
  ItemWeightMatrix b;
  b.values = closed_form_fit(linalg::gram(x.x), lambda, options);
  b.model = "ease";
  b.hyperparams.lambda = lambda;
  return b;
}

ItemWeightMatrix fit_collective(const datasets::InteractionMatrix& x,
                                const datasets::FeatureMatrix& features, double alpha,
                                double lambda, const linalg::SolveOptions& options) {
  if (alpha < 0.0) throw ConfigError("fit_collective: alpha must be >= 0");
  if (!(lambda > 0.0)) throw ConfigError("fit_collective: lambda must be positive");
  require_feature_alignment(x, features);
  linalg::check_dense_budget(x.items(), options);

  // Gram of the stack [X; sqrt(alpha) M] without materializing it.
  linalg::GramMatrix combined = linalg::gram(x.x);
  {
    linalg::GramMatrix feature_gram = linalg::gram(features.values);
    combined.values.noalias() += alpha * feature_gram.values;
    combined.source_rows += feature_gram.source_rows;
  }
  ItemWeightMatrix b;
  b.values = closed_form_fit(std::move(combined), lambda, options);
  b.model = "collective";
  b.hyperparams.alpha = alpha;
  b.hyperparams.lambda = lambda;
  return b;
}

ItemWeightMatrix fit_additive(const datasets::InteractionMatrix& x,
                              const datasets::FeatureMatrix& features, double lambda_x,
                              double lambda_feat, double beta,
                              const linalg::SolveOptions& options) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("fit_additive: beta must lie in [0, 1]");
  if (!(lambda_x > 0.0) || !(lambda_feat > 0.0))
    throw ConfigError("fit_additive: both regularization weights must be positive");
  require_feature_alignment(x, features);
  linalg::check_dense_budget(x.items(), options);

  ItemWeightMatrix b;
  b.model = "additive";
  b.hyperparams.lambda_x = lambda_x;
  b.hyperparams.beta = beta;
  if (features.kind == datasets::FeatureKind::tag)
    b.hyperparams.lambda_t = lambda_feat;
  else
    b.hyperparams.lambda_f = lambda_feat;

  // Endpoints reproduce the parent matrix bitwise.
  if (beta == 1.0) {
    b.values = closed_form_fit(linalg::gram(x.x), lambda_x, options);
    return b;
  }
  if (beta == 0.0) {
    b.values = closed_form_fit(linalg::gram(features.values), lambda_feat, options);
    return b;
  }
  Eigen::MatrixXd interaction_side = closed_form_fit(linalg::gram(x.x), lambda_x, options);
  Eigen::MatrixXd feature_side = closed_form_fit(linalg::gram(features.values), lambda_feat, options);
  b.values = beta * interaction_side + (1.0 - beta) * feature_side;
  return b;
}

ItemWeightMatrix fit_semantic_ease(const datasets::FeatureMatrix& f, double lambda_f,
                                   const linalg::SolveOptions& options) {
  if (!(lambda_f > 0.0)) throw ConfigError("fit_semantic_ease: lambda_f must be positive");
  if (f.kind != datasets::FeatureKind::semantic)
    throw DataError("fit_semantic_ease: feature matrix must be semantic");
  linalg::check_dense_budget(f.values.cols(), options);
  ItemWeightMatrix s;
  s.values = closed_form_fit(linalg::gram(f.values), lambda_f, options);
  s.model = "semantic-ease";
  s.hyperparams.lambda_f = lambda_f;
  return s;
}

ItemWeightMatrix fit_l3ae(const datasets::InteractionMatrix& x, const ItemWeightMatrix& s,
                          double lambda_x, double lambda_kd,
                          const linalg::SolveOptions& options) {
  if (!(lambda_x > 0.0)) throw ConfigError("fit_l3ae: lambda_x must be positive");
  if (lambda_kd < 0.0) throw ConfigError("fit_l3ae: lambda_kd must be >= 0");
  if (s.values.rows() != x.items() || s.values.cols() != x.items())
    throw DataError("fit_l3ae: semantic matrix size does not match the item count");
  if (!s.values.allFinite()) throw DataError("fit_l3ae: semantic matrix has non-finite entries");
  for (Eigen::Index j = 0; j < s.values.cols(); ++j)
    if (s.values(j, j) != 0.0)
      throw DataError("fit_l3ae: semantic matrix diagonal must be exactly zero (entry " +
                      std::to_string(j) + " is " + std::to_string(s.values(j, j)) + ")");
  linalg::check_dense_budget(x.items(), options);

  auto ws = linalg::ridge_inverse(linalg::gram(x.x), lambda_kd + lambda_x, options);
  const Eigen::Index n = ws.p.rows();

  Eigen::MatrixXd b;
  b.noalias() = ws.p * s.values;  // P S
  ws.mu.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double pivot = ws.p(j, j);
    if (!(pivot > 0.0))
      throw SolverError("fit_l3ae: diag(P) not positive at index " + std::to_string(j));
    ws.mu(j) = (1.0 + lambda_kd * b(j, j)) / pivot;
  }
  b *= lambda_kd;
  for (Eigen::Index j = 0; j < n; ++j) {
    b.col(j).noalias() -= ws.mu(j) * ws.p.col(j);
    b(j, j) = 0.0;  // the identity term cancels by construction of mu
  }

  ItemWeightMatrix result;
  result.values = std::move(b);
  result.model = "l3ae";
  result.hyperparams.lambda_x = lambda_x;
  result.hyperparams.lambda_kd = lambda_kd;
  result.hyperparams.lambda_f = s.hyperparams.lambda_f;
  return result;
}

ItemWeightMatrix cosine_similarity_matrix(const datasets::FeatureMatrix& f) {
  const Eigen::Index n = f.values.cols();
  if (n < 1) throw DataError("cosine_similarity_matrix: no item columns");

  Eigen::VectorXd norms(n);
  std::vector<std::string> zero_norm;
  for (Eigen::Index j = 0; j < n; ++j) {
    norms(j) = f.values.col(j).norm();
    if (!(norms(j) > 0.0)) {
      zero_norm.push_back(f.item_ids.empty() ? ("column " + std::to_string(j))
                                             : f.item_ids[static_cast<std::size_t>(j)]);
    }
  }
  if (!zero_norm.empty()) {
    std::ostringstream msg;
    msg << "cosine_similarity_matrix: zero-norm feature column(s):";
    const std::size_t shown = std::min<std::size_t>(zero_norm.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << zero_norm[i];
    if (shown < zero_norm.size()) msg << " (+" << zero_norm.size() - shown << " more)";
    throw DataError(msg.str());
  }

  ItemWeightMatrix w;
  w.values = linalg::gram(f.values).values;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) w.values(i, j) /= norms(i) * norms(j);
    w.values(j, j) = 0.0;
  }
  w.model = "cosine";
  return w;
}

void save_weights(const ItemWeightMatrix& weights, const std::vector<std::string>& item_ids,
                  const std::filesystem::path& header_path,
                  const std::filesystem::path& payload_path) {
  const Eigen::Index n = weights.values.rows();
  if (weights.values.cols() != n) throw DataError("save_weights: weight matrix not square");
  if (static_cast<std::size_t>(n) != item_ids.size())
    throw DataError("save_weights: item id count does not match the matrix size");

  json header;
  header["n"] = n;
  header["dtype"] = "f32";
  header["model"] = weights.model;
  header["hyperparams"] = hyperparams_to_json(weights.hyperparams);
  header["item_ids"] = item_ids;
  std::ofstream header_out(header_path);
  if (!header_out) throw DataError("cannot write file: " + header_path.string());
  header_out << header.dump(2) << "\n";

  std::ofstream payload(payload_path, std::ios::binary);
  if (!payload) throw DataError("cannot write file: " + payload_path.string());
  std::vector<float> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row[static_cast<std::size_t>(j)] = static_cast<float>(weights.values(i, j));
    payload.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

LoadedWeights load_weights(const std::filesystem::path& header_path,
                           const std::filesystem::path& payload_path) {
  std::ifstream header_in(header_path);
  if (!header_in) throw DataError("cannot open file: " + header_path.string());
  json header;
  try {
    header = json::parse(header_in);
  } catch (const json::exception& e) {
    throw DataError("weight header " + header_path.string() + ": " + e.what());
  }
  const auto n = header.at("n").get<Eigen::Index>();
  const auto dtype = header.at("dtype").get<std::string>();
  if (dtype != "f32") throw DataError("weight header: unknown dtype '" + dtype + "'");

  LoadedWeights loaded;
  loaded.item_ids = header.at("item_ids").get<std::vector<std::string>>();
  if (static_cast<Eigen::Index>(loaded.item_ids.size()) != n)
    throw DataError("weight header: item_ids length does not match n");
  loaded.weights.model = header.value("model", "");
  loaded.weights.hyperparams = hyperparams_from_json(header.value("hyperparams", json::object()));

  std::ifstream payload(payload_path, std::ios::binary);
  if (!payload) throw DataError("cannot open file: " + payload_path.string());
  payload.seekg(0, std::ios::end);
  const auto actual = static_cast<std::uint64_t>(payload.tellg());
  payload.seekg(0, std::ios::beg);
  const std::uint64_t expected = 4ull * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  if (actual != expected) {
    std::ostringstream msg;
    msg << "weight payload length mismatch: expected " << expected << " bytes, found " << actual;
    throw DataError(msg.str());
  }
  loaded.weights.values.resize(n, n);
  std::vector<float> row(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    payload.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!payload) throw DataError("weight payload read failed: " + payload_path.string());
    for (Eigen::Index j = 0; j < n; ++j) loaded.weights.values(i, j) = static_cast<double>(row[static_cast<std::size_t>(j)]);
  }
  double max_diag = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(loaded.weights.values(j, j)));
  loaded.weights.zero_diag = (max_diag == 0.0);
  return loaded;
}

}  // namespace laecf::models
