#include "laecf/config.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "laecf/errors.hpp"

namespace laecf::cli {

namespace {

using json = nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key))
      throw ConfigError("config: unknown key '" + key + "' in " + context);
  }
}

}  // namespace

void validate_model_name(const std::string& model) {
  if (std::find(kModelNames.begin(), kModelNames.end(), model) == kModelNames.end()) {
    std::string roster;
    for (const auto& name : kModelNames) {
      if (!roster.empty()) roster += ", ";
      roster += name;
    }
    throw ConfigError("unknown model '" + model + "' (expected one of: " + roster + ")");
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }

  RunConfig config;
  reject_unknown_keys(j,
                      {"interactions", "embeddings", "embeddings_header", "tags", "prepared",
                       "weights", "s_cache", "out", "model", "hyperparams", "grid", "seed", "k",
                       "k_core", "rating_threshold", "memory_cap", "eval_split", "threads",
                       "normalize_embeddings", "synth"},
                      "top level");
  try {
    if (j.contains("interactions")) config.interactions = j.at("interactions").get<std::string>();
    if (j.contains("embeddings")) config.embeddings = j.at("embeddings").get<std::string>();
    if (j.contains("embeddings_header"))
      config.embeddings_header = j.at("embeddings_header").get<std::string>();
    if (j.contains("tags")) config.tags = j.at("tags").get<std::string>();
    if (j.contains("prepared")) config.prepared_dir = j.at("prepared").get<std::string>();
    if (j.contains("weights")) config.weights_header = j.at("weights").get<std::string>();
    if (j.contains("s_cache")) config.s_cache_header = j.at("s_cache").get<std::string>();
    if (j.contains("out")) config.out_dir = j.at("out").get<std::string>();
    if (j.contains("model")) config.model = j.at("model").get<std::string>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("k")) config.k_values = j.at("k").get<std::vector<int>>();
    if (j.contains("k_core")) config.k_core = j.at("k_core").get<int>();
    if (j.contains("rating_threshold"))
      config.rating_threshold = j.at("rating_threshold").get<double>();
    if (j.contains("memory_cap")) config.memory_cap_bytes = j.at("memory_cap").get<std::uint64_t>();
    if (j.contains("eval_split")) config.eval_split = j.at("eval_split").get<std::string>();
    if (j.contains("threads")) config.threads = j.at("threads").get<int>();
    if (j.contains("normalize_embeddings"))
      config.normalize_embeddings = j.at("normalize_embeddings").get<bool>();

    if (j.contains("hyperparams")) {
      const json& hp = j.at("hyperparams");
      reject_unknown_keys(
          hp, {"lambda", "lambda_x", "lambda_t", "lambda_f", "lambda_kd", "alpha", "beta"},
          "hyperparams");
      config.hyperparams.lambda = hp.value("lambda", 0.0);
      config.hyperparams.lambda_x = hp.value("lambda_x", 0.0);
      config.hyperparams.lambda_t = hp.value("lambda_t", 0.0);
      config.hyperparams.lambda_f = hp.value("lambda_f", 0.0);
      config.hyperparams.lambda_kd = hp.value("lambda_kd", 0.0);
      config.hyperparams.alpha = hp.value("alpha", 0.0);
      config.hyperparams.beta = hp.value("beta", 0.0);
    }
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      reject_unknown_keys(
          g, {"lambda", "lambda_x", "lambda_t", "lambda_f", "lambda_kd", "alpha", "beta"}, "grid");
      if (g.contains("lambda")) config.grid.lambda = g.at("lambda").get<std::vector<double>>();
      if (g.contains("lambda_x")) config.grid.lambda_x = g.at("lambda_x").get<std::vector<double>>();
      if (g.contains("lambda_t")) config.grid.lambda_t = g.at("lambda_t").get<std::vector<double>>();
      if (g.contains("lambda_f")) config.grid.lambda_f = g.at("lambda_f").get<std::vector<double>>();
      if (g.contains("lambda_kd"))
        config.grid.lambda_kd = g.at("lambda_kd").get<std::vector<double>>();
      if (g.contains("alpha")) config.grid.alpha = g.at("alpha").get<std::vector<double>>();
      if (g.contains("beta")) config.grid.beta = g.at("beta").get<std::vector<double>>();
    }
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      reject_unknown_keys(s,
                          {"users", "items", "clusters", "embedding_dim", "noise",
                           "min_interactions", "max_interactions", "in_cluster_boost",
                           "popularity_exponent"},
                          "synth");
      config.synth.users = s.value("users", config.synth.users);
      config.synth.items = s.value("items", config.synth.items);
      config.synth.clusters = s.value("clusters", config.synth.clusters);
      config.synth.embedding_dim = s.value("embedding_dim", config.synth.embedding_dim);
      config.synth.noise = s.value("noise", config.synth.noise);
      config.synth.min_interactions = s.value("min_interactions", config.synth.min_interactions);
      config.synth.max_interactions = s.value("max_interactions", config.synth.max_interactions);
      config.synth.in_cluster_boost = s.value("in_cluster_boost", config.synth.in_cluster_boost);
      config.synth.popularity_exponent =
          s.value("popularity_exponent", config.synth.popularity_exponent);
    }
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace laecf::cli
