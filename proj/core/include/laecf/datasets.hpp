#pragma once

#include <Eigen/SparseCore>
#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace laecf::datasets {

struct Interaction {
  std::string user;
  std::string item;
};

using PairList = std::vector<Interaction>;

// Parses `user<TAB>item<TAB>rating<TAB>timestamp` lines, keeps rows with
// rating strictly greater than the threshold, collapses duplicates to one
// pair. Order of first occurrence is preserved.
PairList load_interactions(const std::filesystem::path& path, double rating_threshold = 3.0);

// Iterative peeling until every user and item has at least k interactions.
// Retained pairs keep their input order. Empty output is allowed (warns).
PairList k_core_filter(PairList pairs, int k = 10);

// Binary user-by-item matrix with canonical (lexicographic) id indexing.
struct InteractionMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> x;  // entries are exactly 1.0
  std::vector<std::string> user_ids;               // row index -> external id
  std::vector<std::string> item_ids;               // col index -> external id

  Eigen::Index users() const { return x.rows(); }
  Eigen::Index items() const { return x.cols(); }
};

InteractionMatrix build_matrix(const PairList& pairs);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitBundle {
  InteractionMatrix train;
  InteractionMatrix validation;
  InteractionMatrix test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

// Per-user seeded shuffle + largest-remainder assignment (ties resolved in
// order train, validation, test). Deterministic for a fixed seed.
SplitBundle split(const PairList& pairs, std::uint64_t seed, SplitRatios ratios = {});

enum class FeatureKind { semantic, tag };

// Dense feature-by-item matrix, columns aligned with an InteractionMatrix
// item index.
struct FeatureMatrix {
  Eigen::MatrixXd values;                  // d x n
  FeatureKind kind = FeatureKind::semantic;
  std::vector<std::string> item_ids;       // column index -> external id
  std::vector<std::string> feature_names;  // tag vocabulary when kind == tag
};

// Embedding sidecar: JSON header {d, n, dtype, layout, item_ids} plus a raw
// little-endian column-major payload. Columns are reordered to match
// item_ids; missing items are an error, extras are ignored with a warning.
FeatureMatrix load_embeddings(const std::filesystem::path& payload_path,
                              const std::filesystem::path& header_path,
                              const std::vector<std::string>& item_ids,
                              bool l2_normalize_columns = false);

void write_embeddings(const std::filesystem::path& payload_path,
                      const std::filesystem::path& header_path,
                      const Eigen::MatrixXd& values,
                      const std::vector<std::string>& item_ids,
                      const std::string& dtype = "f32");

using TagAssignments = std::vector<std::pair<std::string, std::string>>;  // (item, tag)

// Parses `item<TAB>tag` lines.
TagAssignments load_tags(const std::filesystem::path& path);

// Multi-hot tag-by-item matrix; vocabulary sorted lexicographically.
// Unknown items are ignored with a warning; untagged items stay zero
// columns and are counted in a warning.
FeatureMatrix build_tag_matrix(const TagAssignments& tags,
                               const std::vector<std::string>& item_ids);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  double density = 0.0;
};

DatasetStats stats(const InteractionMatrix& m);

}  // namespace laecf::datasets
