#include "laecf/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "laecf/errors.hpp"
#include "laecf/eval.hpp"
#include "laecf/oracle.hpp"
#include "laecf/synth.hpp"
#include "laecf/warnings.hpp"

namespace laecf::cli {

namespace {

using json = nlohmann::json;

void ensure_input(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError("missing required path: " + what);
  if (!std::filesystem::exists(path))
    throw ConfigError(what + " does not exist: " + path.string());
}

std::filesystem::path payload_for(const std::filesystem::path& header_path) {
  std::filesystem::path p = header_path;
  p.replace_extension(".bin");
  return p;
}

void write_id_file(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> read_id_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void write_pair_file(const std::filesystem::path& path, const datasets::InteractionMatrix& part) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  for (Eigen::Index u = 0; u < part.users(); ++u) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(part.x, u); it; ++it) {
      out << part.user_ids[static_cast<std::size_t>(u)] << '\t'
          << part.item_ids[static_cast<std::size_t>(it.col())] << '\n';
    }
  }
}

datasets::InteractionMatrix read_pair_file(const std::filesystem::path& path,
                                           const std::vector<std::string>& user_ids,
                                           const std::vector<std::string>& item_ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::unordered_map<std::string, Eigen::Index> user_index, item_index;
  for (std::size_t i = 0; i < user_ids.size(); ++i)
    user_index.emplace(user_ids[i], static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < item_ids.size(); ++i)
    item_index.emplace(item_ids[i], static_cast<Eigen::Index>(i));

  std::vector<Eigen::Triplet<double>> triplets;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path.string() + " line " + std::to_string(line_number) +
                      ": expected `user<TAB>item`");
    const std::string user = line.substr(0, tab);
    const std::string item = line.substr(tab + 1);
    const auto u = user_index.find(user);
    const auto i = item_index.find(item);
    if (u == user_index.end() || i == item_index.end())
      throw DataError(path.string() + " line " + std::to_string(line_number) +
                      ": id not present in the prepared index");
    triplets.emplace_back(u->second, i->second, 1.0);
  }
  datasets::InteractionMatrix m;
  m.user_ids = user_ids;
  m.item_ids = item_ids;
  m.x.resize(static_cast<Eigen::Index>(user_ids.size()), static_cast<Eigen::Index>(item_ids.size()));
  m.x.setFromTriplets(triplets.begin(), triplets.end(),
                      [](const double&, const double&) { return 1.0; });
  m.x.makeCompressed();
  return m;
}

datasets::FeatureMatrix load_semantic(const RunConfig& config,
                                      const std::vector<std::string>& item_ids) {
  ensure_input(config.embeddings, "embeddings payload (--embeddings)");
  ensure_input(config.embeddings_header, "embeddings header (--embeddings-header)");
  return datasets::load_embeddings(config.embeddings, config.embeddings_header, item_ids,
                                   config.normalize_embeddings);
}

datasets::FeatureMatrix load_tag_features(const RunConfig& config,
                                          const std::vector<std::string>& item_ids) {
  ensure_input(config.tags, "tag file (--tags)");
  return datasets::build_tag_matrix(datasets::load_tags(config.tags), item_ids);
}

struct FeatureCache {
  std::optional<datasets::FeatureMatrix> semantic;
  std::optional<datasets::FeatureMatrix> tag;

  const datasets::FeatureMatrix& get_semantic(const RunConfig& config,
                                              const std::vector<std::string>& ids) {
    if (!semantic) semantic = load_semantic(config, ids);
    return *semantic;
  }
  const datasets::FeatureMatrix& get_tag(const RunConfig& config,
                                         const std::vector<std::string>& ids) {
    if (!tag) tag = load_tag_features(config, ids);
    return *tag;
  }
};

void require_positive(double value, const std::string& flag) {
  if (!(value > 0.0)) throw ConfigError(flag + " must be set to a positive value");
}

// Fits one model at one hyperparameter point. For l3ae, `semantic_fit`
// supplies the Phase-1 matrix.
models::ItemWeightMatrix fit_point(const std::string& model, const models::Hyperparams& hp,
                                   const datasets::InteractionMatrix& train, FeatureCache& cache,
                                   const RunConfig& config,
                                   const models::ItemWeightMatrix* semantic_fit) {
  const auto& ids = train.item_ids;
  const auto options = config.solve_options();
  if (model == "ease") {
    require_positive(hp.lambda, "--lambda");
    return models::fit_ease(train, hp.lambda, options);
  }
  if (model == "cease") {
    require_positive(hp.lambda, "--lambda");
    return models::fit_collective(train, cache.get_tag(config, ids), hp.alpha, hp.lambda, options);
  }
  if (model == "llm-cease") {
    require_positive(hp.lambda, "--lambda");
    return models::fit_collective(train, cache.get_semantic(config, ids), hp.alpha, hp.lambda,
                                  options);
  }
  if (model == "add-ease") {
    require_positive(hp.lambda_x, "--lambda-x");
    require_positive(hp.lambda_t, "--lambda-t (hyperparams.lambda_t)");
    return models::fit_additive(train, cache.get_tag(config, ids), hp.lambda_x, hp.lambda_t,
                                hp.beta, options);
  }
  if (model == "llm-add-ease") {
    require_positive(hp.lambda_x, "--lambda-x");
    require_positive(hp.lambda_f, "--lambda-f");
    return models::fit_additive(train, cache.get_semantic(config, ids), hp.lambda_x, hp.lambda_f,
                                hp.beta, options);
  }
  if (model == "llm-ease") {
    require_positive(hp.lambda_f, "--lambda-f");
    return models::fit_semantic_ease(cache.get_semantic(config, ids), hp.lambda_f, options);
  }
  if (model == "cosine") {
    return models::cosine_similarity_matrix(cache.get_semantic(config, ids));
  }
  if (model == "l3ae") {
    require_positive(hp.lambda_x, "--lambda-x");
    if (hp.lambda_kd < 0.0) throw ConfigError("--lambda-kd must be >= 0");
    if (semantic_fit == nullptr)
      throw ConfigError("l3ae requires a Phase-1 semantic matrix");
    return models::fit_l3ae(train, *semantic_fit, hp.lambda_x, hp.lambda_kd, options);
  }
  throw ConfigError("unknown model '" + model + "'");
}

std::string format_double(double value) {
  std::ostringstream out;
  out << std::setprecision(12) << value;
  return out.str();
}

std::string format_metric(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

void write_eval_tsv(const std::filesystem::path& path, const eval::EvalReport& report,
                    const std::vector<int>& k_values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "slice\tmetric\tk\tvalue\n";
  const std::pair<const char*, const eval::SliceMetrics*> slices[] = {
      {"overall", &report.overall}, {"head", &report.head}, {"tail", &report.tail}};
  for (const auto& [name, slice] : slices) {
    for (int k : k_values)
      out << name << "\trecall\t" << k << '\t' << format_metric(slice->recall_at.at(k)) << '\n';
    for (int k : k_values)
      out << name << "\tndcg\t" << k << '\t' << format_metric(slice->ndcg_at.at(k)) << '\n';
  }
}

struct GridRow {
  models::Hyperparams hp;
  std::map<int, double> recall;
  std::map<int, double> ndcg;
};

std::vector<double> sorted_unique(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

// Evaluates every point on the validation split; deterministic result
// order regardless of the worker count.
std::vector<GridRow> run_sweep(const std::string& model,
                               const std::vector<models::Hyperparams>& points,
                               const datasets::SplitBundle& bundle, FeatureCache& cache,
                               const RunConfig& config, const eval::EvalOptions& eval_options,
                               const std::map<double, models::ItemWeightMatrix>* semantic_fits) {
  // Warm the feature cache before spawning workers; afterwards it is
  // read-only and safe to share.
  if (model == "cease" || model == "add-ease") cache.get_tag(config, bundle.train.item_ids);
  if (model == "llm-cease" || model == "llm-add-ease" || model == "llm-ease" ||
      model == "cosine")
    cache.get_semantic(config, bundle.train.item_ids);

  std::vector<GridRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      const std::size_t index = next.fetch_add(1);
      if (index >= points.size()) return;
      try {
        const auto& hp = points[index];
        const models::ItemWeightMatrix* semantic_fit = nullptr;
        if (semantic_fits != nullptr) {
          const auto it = semantic_fits->find(hp.lambda_f);
          if (it != semantic_fits->end()) semantic_fit = &it->second;
        }
        auto weights = fit_point(model, hp, bundle.train, cache, config, semantic_fit);
        weights.hyperparams = hp;
        const auto report = eval::evaluate(bundle.train, bundle.validation, weights, eval_options);
        rows[index].hp = hp;
        rows[index].recall = report.overall.recall_at;
        rows[index].ndcg = report.overall.ndcg_at;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::size_t threads = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
  // Each in-flight fit holds up to three n x n panels; respect the cap.
  const auto n = static_cast<std::uint64_t>(bundle.train.items());
  const std::uint64_t per_fit = 3ull * 8ull * n * n;
  if (per_fit > 0) {
    const std::uint64_t allowed = std::max<std::uint64_t>(1, config.memory_cap_bytes / per_fit);
    threads = static_cast<std::size_t>(std::min<std::uint64_t>(threads, allowed));
  }
  threads = std::min(threads, points.size());
  threads = std::max<std::size_t>(threads, 1);

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

void write_grid_tsv(const std::filesystem::path& path, const std::vector<GridRow>& rows,
                    const std::string& model, const std::vector<int>& k_values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  out << "model\tlambda\tlambda_x\tlambda_t\tlambda_f\tlambda_kd\talpha\tbeta";
  for (int k : k_values) out << "\trecall@" << k;
  for (int k : k_values) out << "\tndcg@" << k;
  out << '\n';
  for (const auto& row : rows) {
    out << model << '\t' << format_double(row.hp.lambda) << '\t' << format_double(row.hp.lambda_x)
        << '\t' << format_double(row.hp.lambda_t) << '\t' << format_double(row.hp.lambda_f) << '\t'
        << format_double(row.hp.lambda_kd) << '\t' << format_double(row.hp.alpha) << '\t'
        << format_double(row.hp.beta);
    for (int k : k_values) out << '\t' << format_metric(row.recall.at(k));
    for (int k : k_values) out << '\t' << format_metric(row.ndcg.at(k));
    out << '\n';
  }
}

std::size_t argmax_row(const std::vector<GridRow>& rows, int selection_k) {
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double value = rows[i].recall.at(selection_k);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return best;
}

json hyperparams_json(const models::Hyperparams& hp) {
  return json{{"lambda", hp.lambda},     {"lambda_x", hp.lambda_x},   {"lambda_t", hp.lambda_t},
              {"lambda_f", hp.lambda_f}, {"lambda_kd", hp.lambda_kd}, {"alpha", hp.alpha},
              {"beta", hp.beta}};
}

}  // namespace

datasets::SplitBundle load_prepared(const std::filesystem::path& prepared_dir) {
  ensure_input(prepared_dir, "prepared directory (--prepared)");
  const auto user_ids = read_id_file(prepared_dir / "users.txt");
  const auto item_ids = read_id_file(prepared_dir / "items.txt");

  datasets::SplitBundle bundle;
  bundle.train = read_pair_file(prepared_dir / "train.tsv", user_ids, item_ids);
  bundle.validation = read_pair_file(prepared_dir / "validation.tsv", user_ids, item_ids);
  bundle.test = read_pair_file(prepared_dir / "test.tsv", user_ids, item_ids);

  const auto manifest_path = prepared_dir / "manifest.json";
  if (std::filesystem::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      const json manifest = json::parse(in);
      bundle.seed = manifest.value("seed", std::uint64_t{0});
    } catch (const json::exception&) {
      warn("load_prepared: unreadable manifest.json, seed metadata dropped");
    }
  }
  return bundle;
}

void cmd_prepare(const RunConfig& config, std::ostream& out) {
  ensure_input(config.interactions, "interaction file (--interactions)");

  auto pairs = datasets::load_interactions(config.interactions, config.rating_threshold);
  pairs = datasets::k_core_filter(pairs, config.k_core);
  if (pairs.empty())
    throw DataError("dataset is empty after " + std::to_string(config.k_core) +
                    "-core filtering");

  const auto bundle = datasets::split(pairs, config.seed);
  const auto full_stats = datasets::DatasetStats{
      bundle.train.user_ids.size(), bundle.train.item_ids.size(), pairs.size(),
      static_cast<double>(pairs.size()) /
          (static_cast<double>(bundle.train.user_ids.size()) *
           static_cast<double>(bundle.train.item_ids.size()))};

  const auto dir = config.out_dir / "prepared";
  std::filesystem::create_directories(dir);
  write_id_file(dir / "users.txt", bundle.train.user_ids);
  write_id_file(dir / "items.txt", bundle.train.item_ids);
  write_pair_file(dir / "train.tsv", bundle.train);
  write_pair_file(dir / "validation.tsv", bundle.validation);
  write_pair_file(dir / "test.tsv", bundle.test);

  json manifest;
  manifest["seed"] = config.seed;
  manifest["ratios"] = {bundle.ratios.train, bundle.ratios.validation, bundle.ratios.test};
  manifest["counts"] = {{"train", bundle.train.x.nonZeros()},
                        {"validation", bundle.validation.x.nonZeros()},
                        {"test", bundle.test.x.nonZeros()}};
  manifest["users"] = full_stats.users;
  manifest["items"] = full_stats.items;
  manifest["stats"] = {{"users", full_stats.users},
                       {"items", full_stats.items},
                       {"ratings", full_stats.ratings},
                       {"density", full_stats.density}};
  {
    std::ofstream mout(dir / "manifest.json");
    if (!mout) throw DataError("cannot write file: " + (dir / "manifest.json").string());
    mout << manifest.dump(2) << "\n";
  }

  out << "users\titems\tratings\tdensity\n";
  out << full_stats.users << '\t' << full_stats.items << '\t' << full_stats.ratings << '\t'
      << format_metric(full_stats.density) << '\n';
  out << "split counts: train=" << bundle.train.x.nonZeros()
      << " validation=" << bundle.validation.x.nonZeros() << " test=" << bundle.test.x.nonZeros()
      << '\n';
  out << "prepared artifacts written to " << dir.string() << '\n';
}

void cmd_fit(const RunConfig& config, std::ostream& out) {
  validate_model_name(config.model);
  const auto bundle = load_prepared(config.prepared_dir);
  FeatureCache cache;

  const auto dir = config.out_dir / "weights";
  std::filesystem::create_directories(dir);

  models::ItemWeightMatrix weights;
  if (config.model == "l3ae") {
    models::ItemWeightMatrix semantic_fit;
    if (!config.s_cache_header.empty()) {
      ensure_input(config.s_cache_header, "cached semantic matrix (--s-cache)");
      auto loaded = models::load_weights(config.s_cache_header, payload_for(config.s_cache_header));
      if (loaded.item_ids != bundle.train.item_ids)
        throw DataError("cached semantic matrix item ids do not match the prepared split");
      semantic_fit = std::move(loaded.weights);
    } else {
      require_positive(config.hyperparams.lambda_f, "--lambda-f");
      semantic_fit = models::fit_semantic_ease(cache.get_semantic(config, bundle.train.item_ids),
                                               config.hyperparams.lambda_f,
                                               config.solve_options());
      models::save_weights(semantic_fit, bundle.train.item_ids, dir / "l3ae_phase1.json",
                           dir / "l3ae_phase1.bin");
      out << "phase 1 semantic matrix written to " << (dir / "l3ae_phase1.json").string() << '\n';
    }
    weights = fit_point(config.model, config.hyperparams, bundle.train, cache, config,
                        &semantic_fit);
  } else {
    weights = fit_point(config.model, config.hyperparams, bundle.train, cache, config, nullptr);
  }

  weights.model = config.model;
  const auto header_path = dir / (config.model + ".json");
  const auto payload_path = dir / (config.model + ".bin");
  models::save_weights(weights, bundle.train.item_ids, header_path, payload_path);
  out << "model=" << config.model << " items=" << bundle.train.items() << '\n';
  out << "weights written to " << header_path.string() << '\n';
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  ensure_input(config.weights_header, "weight header (--weights)");
  auto loaded = models::load_weights(config.weights_header, payload_for(config.weights_header));
  const auto bundle = load_prepared(config.prepared_dir);
  if (loaded.item_ids != bundle.train.item_ids)
    throw DataError("weight matrix item space does not match the prepared split");

  const datasets::InteractionMatrix* heldout = nullptr;
  if (config.eval_split == "test")
    heldout = &bundle.test;
  else if (config.eval_split == "validation")
    heldout = &bundle.validation;
  else
    throw ConfigError("eval_split must be 'test' or 'validation'");

  eval::EvalOptions options;
  options.k_values = config.k_values;
  auto report = eval::evaluate(bundle.train, *heldout, loaded.weights, options);
  report.seed = config.seed;

  const auto dir = config.out_dir / "reports";
  std::filesystem::create_directories(dir);
  const std::string stem =
      (loaded.weights.model.empty() ? std::string("model") : loaded.weights.model) + "_" +
      config.eval_split;
  {
    std::ofstream jout(dir / (stem + ".json"));
    if (!jout) throw DataError("cannot write file: " + (dir / (stem + ".json")).string());
    jout << eval::to_json_string(report) << "\n";
  }
  write_eval_tsv(dir / (stem + ".tsv"), report, options.k_values);

  out << "slice\tmetric\tk\tvalue\n";
  const std::pair<const char*, const eval::SliceMetrics*> slices[] = {
      {"overall", &report.overall}, {"head", &report.head}, {"tail", &report.tail}};
  for (const auto& [name, slice] : slices) {
    for (int k : options.k_values)
      out << name << "\trecall\t" << k << '\t' << format_metric(slice->recall_at.at(k)) << '\n';
    for (int k : options.k_values)
      out << name << "\tndcg\t" << k << '\t' << format_metric(slice->ndcg_at.at(k)) << '\n';
  }
  out << "users evaluated=" << report.users_evaluated << " skipped=" << report.users_skipped
      << " cold=" << report.cold_users << '\n';
  out << "report written to " << (dir / (stem + ".json")).string() << '\n';
}

void cmd_grid(const RunConfig& config, std::ostream& out) {
  validate_model_name(config.model);
  const auto bundle = load_prepared(config.prepared_dir);
  FeatureCache cache;

  const Eigen::Index n = bundle.train.items();
  const int selection_k = static_cast<int>(std::min<Eigen::Index>(20, n));
  eval::EvalOptions eval_options;
  eval_options.k_values.clear();
  for (int k : config.k_values)
    if (k <= n) eval_options.k_values.push_back(k);
  if (std::find(eval_options.k_values.begin(), eval_options.k_values.end(), selection_k) ==
      eval_options.k_values.end())
    eval_options.k_values.push_back(selection_k);
  std::sort(eval_options.k_values.begin(), eval_options.k_values.end());

  const auto dir = config.out_dir / "grid";
  std::filesystem::create_directories(dir);

  GridRanges grid = config.grid;
  grid.lambda = sorted_unique(grid.lambda);
  grid.lambda_x = sorted_unique(grid.lambda_x);
  grid.lambda_t = sorted_unique(grid.lambda_t);
  grid.lambda_f = sorted_unique(grid.lambda_f);
  grid.lambda_kd = sorted_unique(grid.lambda_kd);
  grid.alpha = sorted_unique(grid.alpha);
  grid.beta = sorted_unique(grid.beta);

  std::vector<models::Hyperparams> points;
  std::map<double, models::ItemWeightMatrix> semantic_fits;
  std::optional<double> lambda_star;

  if (config.model == "ease") {
    for (double lambda : grid.lambda) {
      models::Hyperparams hp;
      hp.lambda = lambda;
      points.push_back(hp);
    }
  } else if (config.model == "llm-ease") {
    for (double lambda_f : grid.lambda_f) {
      models::Hyperparams hp;
      hp.lambda_f = lambda_f;
      points.push_back(hp);
    }
  } else if (config.model == "cosine") {
    points.emplace_back();
  } else if (config.model == "cease" || config.model == "llm-cease") {
    for (double alpha : grid.alpha)
      for (double lambda : grid.lambda) {
        models::Hyperparams hp;
        hp.alpha = alpha;
        hp.lambda = lambda;
        points.push_back(hp);
      }
  } else if (config.model == "add-ease") {
    for (double lambda_x : grid.lambda_x)
      for (double lambda_t : grid.lambda_t)
        for (double beta : grid.beta) {
          models::Hyperparams hp;
          hp.lambda_x = lambda_x;
          hp.lambda_t = lambda_t;
          hp.beta = beta;
          points.push_back(hp);
        }
  } else if (config.model == "llm-add-ease") {
    for (double lambda_x : grid.lambda_x)
      for (double lambda_f : grid.lambda_f)
        for (double beta : grid.beta) {
          models::Hyperparams hp;
          hp.lambda_x = lambda_x;
          hp.lambda_f = lambda_f;
          hp.beta = beta;
          points.push_back(hp);
        }
  } else if (config.model == "l3ae") {
    // Stage A: pick the interaction-only ridge weight on validation.
    std::vector<models::Hyperparams> stage_points;
    for (double lambda : grid.lambda) {
      models::Hyperparams hp;
      hp.lambda = lambda;
      stage_points.push_back(hp);
    }
    if (stage_points.empty()) throw ConfigError("grid: empty lambda grid for the ease stage");
    const auto stage_rows =
        run_sweep("ease", stage_points, bundle, cache, config, eval_options, nullptr);
    const std::size_t stage_best = argmax_row(stage_rows, selection_k);
    lambda_star = stage_rows[stage_best].hp.lambda;
    write_grid_tsv(dir / "l3ae_stage1_ease.tsv", stage_rows, "ease", eval_options.k_values);
    out << "stage 1: lambda* = " << format_double(*lambda_star) << " (validation recall@"
        << selection_k << " = " << format_metric(stage_rows[stage_best].recall.at(selection_k))
        << ")\n";

    // Stage B: budgeted sweep, lambda_kd ascending so the smallest wins ties.
    for (double lambda_kd : grid.lambda_kd) {
      const double lambda_x = *lambda_star - lambda_kd;
      if (!(lambda_x > 0.0)) continue;
      for (double lambda_f : grid.lambda_f) {
        models::Hyperparams hp;
        hp.lambda_kd = lambda_kd;
        hp.lambda_x = lambda_x;
        hp.lambda_f = lambda_f;
        points.push_back(hp);
      }
    }
    if (points.empty())
      throw ConfigError("grid: no (lambda_kd, lambda_x) pair satisfies the budget lambda* = " +
                        format_double(*lambda_star));
    for (double lambda_f : grid.lambda_f)
      semantic_fits.emplace(lambda_f, models::fit_semantic_ease(
                                          cache.get_semantic(config, bundle.train.item_ids),
                                          lambda_f, config.solve_options()));
  }

  if (points.empty()) throw ConfigError("grid: no points to evaluate");

  const auto rows = run_sweep(config.model, points, bundle, cache, config, eval_options,
                              semantic_fits.empty() ? nullptr : &semantic_fits);
  const std::size_t best = argmax_row(rows, selection_k);

  write_grid_tsv(dir / (config.model + "_grid.tsv"), rows, config.model, eval_options.k_values);
  json best_json;
  best_json["model"] = config.model;
  best_json["selection_metric"] = "recall@" + std::to_string(selection_k);
  best_json["selection_value"] = rows[best].recall.at(selection_k);
  best_json["hyperparams"] = hyperparams_json(rows[best].hp);
  best_json["evaluated_points"] = rows.size();
  if (lambda_star) best_json["lambda_star"] = *lambda_star;
  {
    std::ofstream bout(dir / (config.model + "_best.json"));
    if (!bout) throw DataError("cannot write file: " + (dir / (config.model + "_best.json")).string());
    bout << best_json.dump(2) << "\n";
  }

  out << "evaluated " << rows.size() << " grid point(s)\n";
  out << "best validation recall@" << selection_k << " = "
      << format_metric(rows[best].recall.at(selection_k)) << '\n';
  out << "best hyperparams: lambda=" << format_double(rows[best].hp.lambda)
      << " lambda_x=" << format_double(rows[best].hp.lambda_x)
      << " lambda_t=" << format_double(rows[best].hp.lambda_t)
      << " lambda_f=" << format_double(rows[best].hp.lambda_f)
      << " lambda_kd=" << format_double(rows[best].hp.lambda_kd)
      << " alpha=" << format_double(rows[best].hp.alpha)
      << " beta=" << format_double(rows[best].hp.beta) << '\n';
  out << "table written to " << (dir / (config.model + "_grid.tsv")).string() << '\n';
}

void cmd_spectrum(const RunConfig& config, std::ostream& out) {
  const auto bundle = load_prepared(config.prepared_dir);
  const auto dir = config.out_dir / "spectrum";
  std::filesystem::create_directories(dir);

  const auto dense_bytes = static_cast<std::uint64_t>(bundle.train.users()) *
                           static_cast<std::uint64_t>(bundle.train.items()) * 8ull;
  if (dense_bytes > config.memory_cap_bytes)
    throw SolverError("spectrum: densified interaction matrix needs " +
                      std::to_string(dense_bytes) + " bytes, above the memory cap");

  auto write_spectrum = [&](const std::filesystem::path& path, const std::vector<double>& values) {
    std::ofstream sout(path);
    if (!sout) throw DataError("cannot write file: " + path.string());
    sout << "index\tvalue\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      sout << i << '\t' << std::setprecision(9) << std::scientific << values[i] << '\n';
    }
  };

  const Eigen::MatrixXd dense_x = Eigen::MatrixXd(bundle.train.x);
  const auto spectrum_x = linalg::spectrum(dense_x);
  write_spectrum(dir / "spectrum_x.tsv", spectrum_x);
  out << "interaction spectrum: " << spectrum_x.size() << " values -> "
      << (dir / "spectrum_x.tsv").string() << '\n';

  if (!config.embeddings.empty() || !config.embeddings_header.empty()) {
    const auto features = load_semantic(config, bundle.train.item_ids);
    const auto spectrum_f = linalg::spectrum(features.values);
    write_spectrum(dir / "spectrum_f.tsv", spectrum_f);
    out << "embedding spectrum: " << spectrum_f.size() << " values -> "
        << (dir / "spectrum_f.tsv").string() << '\n';
  }
}

void cmd_audit(const RunConfig& config, std::ostream& out) {
  const auto rows = oracle::run_audit(config.seed);
  out << "check\tinstances\tmax_error\ttolerance\tresult\n";
  std::size_t failures = 0;
  for (const auto& row : rows) {
    out << row.check << '\t' << row.instances << '\t' << std::setprecision(6) << std::scientific
        << row.max_error << '\t' << row.tolerance << '\t' << (row.pass ? "PASS" : "FAIL") << '\n';
    if (!row.pass) ++failures;
  }
  if (failures > 0)
    throw SolverError("audit: " + std::to_string(failures) + " check(s) failed");
  out << "audit: all " << rows.size() << " checks passed\n";
}

void cmd_synth(const RunConfig& config, std::ostream& out) {
  synth::SynthConfig synth_config = config.synth;
  synth_config.seed = config.seed;
  const auto data = synth::generate(synth_config);
  const auto dir = config.out_dir / "synth";
  synth::write_dataset(data, synth_config, dir);
  out << "users\titems\tclusters\tinteractions\n";
  out << synth_config.users << '\t' << synth_config.items << '\t' << synth_config.clusters << '\t'
      << data.interactions.size() << '\n';
  out << "synthetic dataset written to " << dir.string() << '\n';
}

}  // namespace laecf::cli
