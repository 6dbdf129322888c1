#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "laecf/linalg.hpp"
#include "laecf/models.hpp"
#include "laecf/synth.hpp"

namespace laecf::cli {

inline const std::vector<std::string> kModelNames = {
    "ease", "cease", "add-ease", "llm-ease", "cosine", "l3ae", "llm-cease", "llm-add-ease"};

struct GridRanges {
  std::vector<double> lambda = {0.1, 0.5, 1, 5, 10, 50, 100, 500, 1000};
  std::vector<double> lambda_x = {0.1, 0.5, 1, 5, 10, 50, 100, 500, 1000};
  std::vector<double> lambda_t = {0.1, 0.5, 1, 5, 10, 50, 100, 500, 1000};
  std::vector<double> lambda_f = {0.1, 0.5, 1, 5, 10, 50, 100, 500, 1000};
  std::vector<double> lambda_kd = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 150, 200, 250, 300};
  std::vector<double> alpha = {0.1, 0.5, 1, 2, 3, 4, 5};
  std::vector<double> beta = {0.2, 0.4, 0.6, 0.8};
};

struct RunConfig {
  // inputs
  std::filesystem::path interactions;
  std::filesystem::path embeddings;         // payload (.bin)
  std::filesystem::path embeddings_header;  // sidecar (.json)
  std::filesystem::path tags;
  std::filesystem::path prepared_dir;       // output of `prepare`
  std::filesystem::path weights_header;     // fitted weights for `eval`
  std::filesystem::path s_cache_header;     // cached semantic matrix for l3ae
  // outputs
  std::filesystem::path out_dir = "out";

  std::string model;
  models::Hyperparams hyperparams;
  GridRanges grid;

  std::uint64_t seed = 42;
  std::vector<int> k_values = {10, 20};
  std::uint64_t memory_cap_bytes = linalg::kDefaultMemoryCapBytes;
  int k_core = 10;
  double rating_threshold = 3.0;
  std::string eval_split = "test";  // or "validation"
  int threads = 0;                  // 0 = hardware concurrency (grid only)
  bool normalize_embeddings = false;

  synth::SynthConfig synth;

  linalg::SolveOptions solve_options() const { return {memory_cap_bytes}; }
};

// JSON config file; unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& path);

void validate_model_name(const std::string& model);

}  // namespace laecf::cli
