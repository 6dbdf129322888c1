#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "laecf/datasets.hpp"

namespace laecf::synth {

// Clustered interaction/embedding generator: users and items live in latent
// clusters, users interact mostly within their cluster (with a popularity
// skew inside each cluster), and item embeddings are the cluster centroid
// plus noise.
struct SynthConfig {
  int users = 2000;
  int items = 500;
  int clusters = 8;
  int embedding_dim = 32;
  double noise = 0.05;
  int min_interactions = 25;
  int max_interactions = 40;
  double in_cluster_boost = 15.0;    // draw-weight multiplier for own-cluster items
  double popularity_exponent = 0.8;  // within-cluster Zipf skew
  std::uint64_t seed = 0;
};

struct SynthDataset {
  datasets::PairList interactions;  // deduplicated (user, item) pairs
  Eigen::MatrixXd embeddings;       // d x items, column order = item_ids order
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  datasets::TagAssignments tags;
  std::vector<int> item_cluster;
  std::vector<int> user_cluster;
};

SynthDataset generate(const SynthConfig& config);

// Writes interactions.tsv, tags.tsv, embeddings.{json,bin}, truth.json in
// the external formats. Byte-identical for a fixed config.
void write_dataset(const SynthDataset& data, const SynthConfig& config,
                   const std::filesystem::path& out_dir);

}  // namespace laecf::synth
