#include "laecf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "laecf/errors.hpp"
#include "laecf/rng.hpp"

namespace laecf::synth {

namespace {

using json = nlohmann::json;

std::string padded_id(char prefix, int index) {
  std::ostringstream out;
  out << prefix;
  std::string digits = std::to_string(index);
  for (std::size_t i = digits.size(); i < 6; ++i) out << '0';
  out << digits;
  return out.str();
}

void validate(const SynthConfig& c) {
  if (c.users < 1 || c.items < 1) throw ConfigError("synth: users and items must be >= 1");
  if (c.clusters < 1 || c.clusters > c.items)
    throw ConfigError("synth: clusters must lie in [1, items]");
  if (c.embedding_dim < 1) throw ConfigError("synth: embedding_dim must be >= 1");
  if (c.min_interactions < 1 || c.max_interactions < c.min_interactions)
    throw ConfigError("synth: interaction range must satisfy 1 <= min <= max");
  if (c.noise < 0.0) throw ConfigError("synth: noise must be >= 0");
  if (c.in_cluster_boost < 1.0) throw ConfigError("synth: in_cluster_boost must be >= 1");
}

}  // namespace

SynthDataset generate(const SynthConfig& config) {
  validate(config);
  Rng rng(config.seed);

  SynthDataset data;
  data.user_ids.reserve(static_cast<std::size_t>(config.users));
  data.item_ids.reserve(static_cast<std::size_t>(config.items));
  for (int u = 0; u < config.users; ++u) data.user_ids.push_back(padded_id('u', u));
  for (int i = 0; i < config.items; ++i) data.item_ids.push_back(padded_id('i', i));

  // Items round-robin over clusters (every cluster nonempty, balanced);
  // users assigned at random.
  data.item_cluster.resize(static_cast<std::size_t>(config.items));
  for (int i = 0; i < config.items; ++i)
    data.item_cluster[static_cast<std::size_t>(i)] = i % config.clusters;
  data.user_cluster.resize(static_cast<std::size_t>(config.users));
  for (int u = 0; u < config.users; ++u)
    data.user_cluster[static_cast<std::size_t>(u)] =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(config.clusters)));

  // Within-cluster popularity skew: rank = how many earlier items share the
  // cluster; weight = (1 + rank)^-exponent.
  std::vector<double> popularity_weight(static_cast<std::size_t>(config.items));
  for (int i = 0; i < config.items; ++i) {
    const int rank = i / config.clusters;
    popularity_weight[static_cast<std::size_t>(i)] =
        std::pow(1.0 + static_cast<double>(rank), -config.popularity_exponent);
  }

  std::vector<double> cumulative(static_cast<std::size_t>(config.items));
  std::vector<char> drawn(static_cast<std::size_t>(config.items));
  for (int u = 0; u < config.users; ++u) {
    const int span = config.max_interactions - config.min_interactions + 1;
    int degree = config.min_interactions +
                 static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
    degree = std::min(degree, config.items);

    double total = 0.0;
    for (int i = 0; i < config.items; ++i) {
      const double boost = data.item_cluster[static_cast<std::size_t>(i)] ==
                                   data.user_cluster[static_cast<std::size_t>(u)]
                               ? config.in_cluster_boost
                               : 1.0;
      total += popularity_weight[static_cast<std::size_t>(i)] * boost;
      cumulative[static_cast<std::size_t>(i)] = total;
    }

    std::fill(drawn.begin(), drawn.end(), 0);
    int taken = 0;
    long attempts = 0;
    const long attempt_limit = 200L * degree + 1000L;
    while (taken < degree && attempts < attempt_limit) {
      ++attempts;
      const double needle = rng.uniform() * total;
      const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), needle);
      auto index = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
      if (index >= drawn.size()) index = drawn.size() - 1;
      if (drawn[index]) continue;
      drawn[index] = 1;
      ++taken;
      data.interactions.push_back({data.user_ids[static_cast<std::size_t>(u)],
                                   data.item_ids[index]});
    }
    // Rejection stalled (degree close to the item count): fill in index order.
    for (std::size_t i = 0; taken < degree && i < drawn.size(); ++i) {
      if (drawn[i]) continue;
      drawn[i] = 1;
      ++taken;
      data.interactions.push_back({data.user_ids[static_cast<std::size_t>(u)], data.item_ids[i]});
    }
  }

  Eigen::MatrixXd centroids(config.embedding_dim, config.clusters);
  for (int c = 0; c < config.clusters; ++c)
    for (int r = 0; r < config.embedding_dim; ++r) centroids(r, c) = rng.gaussian();
  data.embeddings.resize(config.embedding_dim, config.items);
  for (int i = 0; i < config.items; ++i) {
    const int cluster = data.item_cluster[static_cast<std::size_t>(i)];
    for (int r = 0; r < config.embedding_dim; ++r)
      data.embeddings(r, i) = centroids(r, cluster) + config.noise * rng.gaussian();
  }

  data.tags.reserve(static_cast<std::size_t>(config.items) * 2);
  const int cluster_size = (config.items + config.clusters - 1) / config.clusters;
  for (int i = 0; i < config.items; ++i) {
    std::ostringstream tag;
    tag << 'c';
    const std::string digits = std::to_string(data.item_cluster[static_cast<std::size_t>(i)]);
    for (std::size_t p = digits.size(); p < 3; ++p) tag << '0';
    tag << digits;
    data.tags.emplace_back(data.item_ids[static_cast<std::size_t>(i)], tag.str());
    const int rank = i / config.clusters;
    data.tags.emplace_back(data.item_ids[static_cast<std::size_t>(i)],
                           rank * 5 < cluster_size ? "popular" : "longtail");
  }
  return data;
}

void write_dataset(const SynthDataset& data, const SynthConfig& config,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "interactions.tsv");
    if (!out) throw DataError("cannot write file: " + (out_dir / "interactions.tsv").string());
    long timestamp = 1000000;
    for (const auto& pair : data.interactions)
      out << pair.user << '\t' << pair.item << '\t' << 5 << '\t' << timestamp++ << '\n';
  }
  {
    std::ofstream out(out_dir / "tags.tsv");
    if (!out) throw DataError("cannot write file: " + (out_dir / "tags.tsv").string());
    for (const auto& [item, tag] : data.tags) out << item << '\t' << tag << '\n';
  }
  datasets::write_embeddings(out_dir / "embeddings.bin", out_dir / "embeddings.json",
                             data.embeddings, data.item_ids, "f32");
  {
    json truth;
    truth["seed"] = config.seed;
    truth["users"] = config.users;
    truth["items"] = config.items;
    truth["clusters"] = config.clusters;
    truth["embedding_dim"] = config.embedding_dim;
    truth["noise"] = config.noise;
    truth["min_interactions"] = config.min_interactions;
    truth["max_interactions"] = config.max_interactions;
    truth["in_cluster_boost"] = config.in_cluster_boost;
    truth["popularity_exponent"] = config.popularity_exponent;
    truth["interactions"] = data.interactions.size();
    truth["item_cluster"] = data.item_cluster;
    truth["user_cluster"] = data.user_cluster;
    std::ofstream out(out_dir / "truth.json");
    if (!out) throw DataError("cannot write file: " + (out_dir / "truth.json").string());
    out << truth.dump(2) << "\n";
  }
}

}  // namespace laecf::synth
