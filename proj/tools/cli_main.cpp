#include "cli_main.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "laecf/commands.hpp"
#include "laecf/config.hpp"
#include "laecf/errors.hpp"

namespace laecf::cli {

namespace {

struct FlagValues {
  std::optional<std::string> config_path;
  std::optional<std::string> model;
  std::optional<std::string> out;
  std::optional<std::string> interactions;
  std::optional<std::string> embeddings;
  std::optional<std::string> embeddings_header;
  std::optional<std::string> tags;
  std::optional<std::string> prepared;
  std::optional<std::string> weights;
  std::optional<std::string> s_cache;
  std::optional<std::string> eval_split;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> memory_cap;
  std::optional<double> lambda, lambda_x, lambda_t, lambda_f, lambda_kd, alpha, beta;
  std::optional<double> rating_threshold;
  std::optional<int> k_core;
  std::optional<int> threads;
  std::vector<int> k_values;
  bool k_values_set = false;
  bool normalize = false;
  bool normalize_set = false;
  // synth sizes
  std::optional<int> users, items, clusters, embedding_dim, min_interactions, max_interactions;
  std::optional<double> noise, in_cluster_boost, popularity_exponent;
};

void add_common_flags(CLI::App* sub, FlagValues& flags) {
  sub->add_option("--config", flags.config_path, "JSON config file (flags override it)");
  sub->add_option("--model", flags.model, "model name");
  sub->add_option("--seed", flags.seed, "random seed");
  sub->add_option("--lambda", flags.lambda, "ridge weight");
  sub->add_option("--lambda-x", flags.lambda_x, "interaction-side ridge weight");
  sub->add_option("--lambda-t", flags.lambda_t, "tag-side ridge weight");
  sub->add_option("--lambda-f", flags.lambda_f, "semantic-side ridge weight");
  sub->add_option("--lambda-kd", flags.lambda_kd, "distillation weight");
  sub->add_option("--alpha", flags.alpha, "stacked-source weight");
  sub->add_option("--beta", flags.beta, "additive interpolation in [0,1]");
  sub->add_option("--k", flags.k_values, "ranking cutoffs (comma separated)")
      ->delimiter(',')
      ->each([&flags](const std::string&) { flags.k_values_set = true; });
  sub->add_option("--memory-cap", flags.memory_cap, "dense-solve memory cap in bytes");
  sub->add_option("--out", flags.out, "output directory");
  sub->add_option("--interactions", flags.interactions, "interaction TSV file");
  sub->add_option("--embeddings", flags.embeddings, "embedding payload (.bin)");
  sub->add_option("--embeddings-header", flags.embeddings_header, "embedding header (.json)");
  sub->add_option("--tags", flags.tags, "tag TSV file");
  sub->add_option("--prepared", flags.prepared, "prepared split directory");
  sub->add_option("--weights", flags.weights, "fitted weight header (.json)");
  sub->add_option("--s-cache", flags.s_cache, "cached semantic weight header (.json)");
  sub->add_option("--split", flags.eval_split, "eval split: test or validation");
  sub->add_option("--k-core", flags.k_core, "k-core filter threshold");
  sub->add_option("--rating-threshold", flags.rating_threshold,
                  "keep interactions with rating strictly above this");
  sub->add_option("--threads", flags.threads, "grid worker threads (0 = auto)");
  auto* normalize_opt =
      sub->add_flag("--normalize-embeddings", flags.normalize, "L2-normalize embedding columns");
  normalize_opt->each([&flags](const std::string&) { flags.normalize_set = true; });
}

void add_synth_flags(CLI::App* sub, FlagValues& flags) {
  sub->add_option("--users", flags.users, "user count");
  sub->add_option("--items", flags.items, "item count");
  sub->add_option("--clusters", flags.clusters, "latent cluster count");
  sub->add_option("--dim", flags.embedding_dim, "embedding dimension");
  sub->add_option("--noise", flags.noise, "embedding noise scale");
  sub->add_option("--min-interactions", flags.min_interactions, "per-user minimum");
  sub->add_option("--max-interactions", flags.max_interactions, "per-user maximum");
  sub->add_option("--boost", flags.in_cluster_boost, "in-cluster draw weight");
  sub->add_option("--pop-exponent", flags.popularity_exponent, "within-cluster skew");
}

RunConfig build_config(const FlagValues& flags) {
  RunConfig config;
  if (flags.config_path) config = load_config(*flags.config_path);
  if (flags.model) config.model = *flags.model;
  if (flags.out) config.out_dir = *flags.out;
  if (flags.interactions) config.interactions = *flags.interactions;
  if (flags.embeddings) config.embeddings = *flags.embeddings;
  if (flags.embeddings_header) config.embeddings_header = *flags.embeddings_header;
  if (flags.tags) config.tags = *flags.tags;
  if (flags.prepared) config.prepared_dir = *flags.prepared;
  if (flags.weights) config.weights_header = *flags.weights;
  if (flags.s_cache) config.s_cache_header = *flags.s_cache;
  if (flags.eval_split) config.eval_split = *flags.eval_split;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.memory_cap) config.memory_cap_bytes = *flags.memory_cap;
  if (flags.lambda) config.hyperparams.lambda = *flags.lambda;
  if (flags.lambda_x) config.hyperparams.lambda_x = *flags.lambda_x;
  if (flags.lambda_t) config.hyperparams.lambda_t = *flags.lambda_t;
  if (flags.lambda_f) config.hyperparams.lambda_f = *flags.lambda_f;
  if (flags.lambda_kd) config.hyperparams.lambda_kd = *flags.lambda_kd;
  if (flags.alpha) config.hyperparams.alpha = *flags.alpha;
  if (flags.beta) config.hyperparams.beta = *flags.beta;
  if (flags.k_values_set) config.k_values = flags.k_values;
  if (flags.k_core) config.k_core = *flags.k_core;
  if (flags.rating_threshold) config.rating_threshold = *flags.rating_threshold;
  if (flags.threads) config.threads = *flags.threads;
  if (flags.normalize_set) config.normalize_embeddings = flags.normalize;
  if (flags.users) config.synth.users = *flags.users;
  if (flags.items) config.synth.items = *flags.items;
  if (flags.clusters) config.synth.clusters = *flags.clusters;
  if (flags.embedding_dim) config.synth.embedding_dim = *flags.embedding_dim;
  if (flags.noise) config.synth.noise = *flags.noise;
  if (flags.min_interactions) config.synth.min_interactions = *flags.min_interactions;
  if (flags.max_interactions) config.synth.max_interactions = *flags.max_interactions;
  if (flags.in_cluster_boost) config.synth.in_cluster_boost = *flags.in_cluster_boost;
  if (flags.popularity_exponent) config.synth.popularity_exponent = *flags.popularity_exponent;
  return config;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"closed-form linear-autoencoder recommenders"};
  app.require_subcommand(1);

  FlagValues flags;
  auto* prepare = app.add_subcommand("prepare", "filter, split, and persist a dataset");
  auto* fit = app.add_subcommand("fit", "fit a model and export its weight matrix");
  auto* eval_cmd = app.add_subcommand("eval", "rank a split and report recall/ndcg");
  auto* grid = app.add_subcommand("grid", "validation-selected hyperparameter sweep");
  auto* spectrum = app.add_subcommand("spectrum", "normalized singular-value tables");
  auto* audit = app.add_subcommand("audit", "run the oracle verification suite");
  auto* synth = app.add_subcommand("synth", "generate a clustered synthetic dataset");
  for (CLI::App* sub : {prepare, fit, eval_cmd, grid, spectrum, audit, synth})
    add_common_flags(sub, flags);
  add_synth_flags(synth, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const RunConfig config = build_config(flags);
    if (app.got_subcommand(prepare))
      cmd_prepare(config, std::cout);
    else if (app.got_subcommand(fit))
      cmd_fit(config, std::cout);
    else if (app.got_subcommand(eval_cmd))
      cmd_eval(config, std::cout);
    else if (app.got_subcommand(grid))
      cmd_grid(config, std::cout);
    else if (app.got_subcommand(spectrum))
      cmd_spectrum(config, std::cout);
    else if (app.got_subcommand(audit))
      cmd_audit(config, std::cout);
    else if (app.got_subcommand(synth))
      cmd_synth(config, std::cout);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace laecf::cli
