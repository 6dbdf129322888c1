#include "laecf/datasets.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "laecf/errors.hpp"
#include "laecf/rng.hpp"
#include "laecf/warnings.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary payloads are little-endian; big-endian hosts are unsupported");

namespace laecf::datasets {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_rating(const std::string& text, std::size_t line_number) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "line " << line_number << ": cannot parse rating '" << text << "'";
    throw DataError(msg.str());
  }
  return value;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  return in;
}

std::string pair_key(const std::string& user, const std::string& item) {
  std::string key = user;
  key.push_back('\x1f');
  key += item;
  return key;
}

std::vector<std::string> sorted_unique_ids(const PairList& pairs, bool users) {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& p : pairs) {
    const std::string& id = users ? p.user : p.item;
    if (seen.insert(id).second) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::unordered_map<std::string, Eigen::Index> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, Eigen::Index> map;
  map.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) map.emplace(ids[i], static_cast<Eigen::Index>(i));
  return map;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_from_indexed_pairs(
    const std::vector<std::pair<Eigen::Index, Eigen::Index>>& indexed, Eigen::Index rows,
    Eigen::Index cols) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(indexed.size());
  for (const auto& [u, i] : indexed) triplets.emplace_back(u, i, 1.0);
  Eigen::SparseMatrix<double, Eigen::RowMajor> x(rows, cols);
  x.setFromTriplets(triplets.begin(), triplets.end(),
                    [](const double&, const double&) { return 1.0; });
  x.makeCompressed();
  return x;
}

// Largest-remainder apportionment of `count` into the three ratio buckets;
// remainder ties go in declaration order (train, validation, test).
std::array<std::size_t, 3> apportion(std::size_t count, const SplitRatios& ratios) {
  const double r[3] = {ratios.train, ratios.validation, ratios.test};
  std::array<std::size_t, 3> base{};
  double fraction[3];
  std::size_t assigned = 0;
  for (int part = 0; part < 3; ++part) {
    const double quota = static_cast<double>(count) * r[part];
    base[part] = static_cast<std::size_t>(std::floor(quota));
    fraction[part] = quota - static_cast<double>(base[part]);
    assigned += base[part];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fraction[a] > fraction[b]; });
  for (std::size_t extra = 0; extra < count - assigned; ++extra) base[order[extra % 3]] += 1;
  return base;
}

}  // namespace

PairList load_interactions(const std::filesystem::path& path, double rating_threshold) {
  std::ifstream in = open_text(path);
  PairList pairs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 4) {
      std::ostringstream msg;
      msg << "line " << line_number << ": expected 4 tab-separated fields "
          << "(user, item, rating, timestamp), found " << fields.size();
      throw DataError(msg.str());
    }
    if (fields[0].empty() || fields[1].empty()) {
      std::ostringstream msg;
      msg << "line " << line_number << ": empty user or item id";
      throw DataError(msg.str());
    }
    const double rating = parse_rating(fields[2], line_number);
    if (!(rating > rating_threshold)) continue;
    if (seen.insert(pair_key(fields[0], fields[1])).second)
      pairs.push_back({fields[0], fields[1]});
  }
  if (pairs.empty())
    throw DataError("no interactions above the rating threshold in " + path.string());
  return pairs;
}

PairList k_core_filter(PairList pairs, int k) {
  if (k < 1) throw ConfigError("k_core_filter: k must be >= 1");
  const auto user_ids = sorted_unique_ids(pairs, true);
  const auto item_ids = sorted_unique_ids(pairs, false);
  const auto user_index = index_of(user_ids);
  const auto item_index = index_of(item_ids);

  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  edges.reserve(pairs.size());
  for (const auto& p : pairs)
    edges.emplace_back(user_index.at(p.user), item_index.at(p.item));

  std::vector<int> user_degree(user_ids.size(), 0), item_degree(item_ids.size(), 0);
  for (const auto& [u, i] : edges) {
    ++user_degree[static_cast<std::size_t>(u)];
    ++item_degree[static_cast<std::size_t>(i)];
  }
  std::vector<char> user_alive(user_ids.size(), 1), item_alive(item_ids.size(), 1);

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t u = 0; u < user_ids.size(); ++u) {
      if (user_alive[u] && user_degree[u] < k) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    for (std::size_t i = 0; i < item_ids.size(); ++i) {
      if (item_alive[i] && item_degree[i] < k) {
        item_alive[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
    std::fill(user_degree.begin(), user_degree.end(), 0);
    std::fill(item_degree.begin(), item_degree.end(), 0);
    for (const auto& [u, i] : edges) {
      if (user_alive[static_cast<std::size_t>(u)] && item_alive[static_cast<std::size_t>(i)]) {
        ++user_degree[static_cast<std::size_t>(u)];
        ++item_degree[static_cast<std::size_t>(i)];
      }
    }
  }

  PairList kept;
  kept.reserve(pairs.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, i] = edges[e];
    if (user_alive[static_cast<std::size_t>(u)] && item_alive[static_cast<std::size_t>(i)])
      kept.push_back(pairs[e]);
  }
  if (kept.empty()) warn("k_core_filter: no users or items survive the " + std::to_string(k) + "-core");
  return kept;
}

InteractionMatrix build_matrix(const PairList& pairs) {
  InteractionMatrix m;
  m.user_ids = sorted_unique_ids(pairs, true);
  m.item_ids = sorted_unique_ids(pairs, false);
  const auto user_index = index_of(m.user_ids);
  const auto item_index = index_of(m.item_ids);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> indexed;
  indexed.reserve(pairs.size());
  for (const auto& p : pairs) indexed.emplace_back(user_index.at(p.user), item_index.at(p.item));
  m.x = matrix_from_indexed_pairs(indexed, static_cast<Eigen::Index>(m.user_ids.size()),
                                  static_cast<Eigen::Index>(m.item_ids.size()));
  return m;
}

SplitBundle split(const PairList& pairs, std::uint64_t seed, SplitRatios ratios) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.validation < 0 || ratios.test < 0)
    throw ConfigError("split: ratios must be nonnegative and sum to 1");

  const auto user_ids = sorted_unique_ids(pairs, true);
  const auto item_ids = sorted_unique_ids(pairs, false);
  const auto user_index = index_of(user_ids);
  const auto item_index = index_of(item_ids);

  // Per-user item lists in first-occurrence order.
  std::vector<std::vector<Eigen::Index>> per_user(user_ids.size());
  for (const auto& p : pairs)
    per_user[static_cast<std::size_t>(user_index.at(p.user))].push_back(item_index.at(p.item));

  std::vector<std::pair<Eigen::Index, Eigen::Index>> part_pairs[3];
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto items = per_user[u];
    Rng rng(seed, static_cast<std::uint64_t>(u));
    rng.shuffle(items);
    const auto counts = apportion(items.size(), ratios);
    std::size_t cursor = 0;
    for (int part = 0; part < 3; ++part) {
      for (std::size_t c = 0; c < counts[static_cast<std::size_t>(part)]; ++c, ++cursor)
        part_pairs[part].emplace_back(static_cast<Eigen::Index>(u), items[cursor]);
    }
  }

  const auto rows = static_cast<Eigen::Index>(user_ids.size());
  const auto cols = static_cast<Eigen::Index>(item_ids.size());
  SplitBundle bundle;
  bundle.seed = seed;
  bundle.ratios = ratios;
  InteractionMatrix* parts[3] = {&bundle.train, &bundle.validation, &bundle.test};
  for (int part = 0; part < 3; ++part) {
    parts[part]->x = matrix_from_indexed_pairs(part_pairs[part], rows, cols);
    parts[part]->user_ids = user_ids;
    parts[part]->item_ids = item_ids;
  }
  return bundle;
}

FeatureMatrix load_embeddings(const std::filesystem::path& payload_path,
                              const std::filesystem::path& header_path,
                              const std::vector<std::string>& item_ids,
                              bool l2_normalize_columns) {
  std::ifstream header_in = open_text(header_path);
  json header;
  try {
    header = json::parse(header_in);
  } catch (const json::exception& e) {
    throw DataError("embedding header " + header_path.string() + ": " + e.what());
  }
  for (const char* field : {"d", "n", "dtype", "layout", "item_ids"})
    if (!header.contains(field))
      throw DataError("embedding header missing field '" + std::string(field) + "'");

  const auto dim = header.at("d").get<std::int64_t>();
  const auto count = header.at("n").get<std::int64_t>();
  const auto dtype = header.at("dtype").get<std::string>();
  const auto layout = header.at("layout").get<std::string>();
  const auto header_ids = header.at("item_ids").get<std::vector<std::string>>();
  if (dim < 1) throw DataError("embedding header: d must be >= 1");
  if (count < 0 || static_cast<std::size_t>(count) != header_ids.size())
    throw DataError("embedding header: n does not match item_ids length");
  if (layout != "column-major")
    throw DataError("embedding header: unsupported layout '" + layout + "'");
  std::size_t scalar_size = 0;
  if (dtype == "f32")
    scalar_size = 4;
  else if (dtype == "f64")
    scalar_size = 8;
  else
    throw DataError("embedding header: unknown dtype '" + dtype + "'");

  std::ifstream payload(payload_path, std::ios::binary);
  if (!payload) throw DataError("cannot open file: " + payload_path.string());
  payload.seekg(0, std::ios::end);
  const auto actual_bytes = static_cast<std::uint64_t>(payload.tellg());
  payload.seekg(0, std::ios::beg);
  const std::uint64_t expected_bytes =
      static_cast<std::uint64_t>(dim) * static_cast<std::uint64_t>(count) * scalar_size;
  if (actual_bytes != expected_bytes) {
    std::ostringstream msg;
    msg << "embedding payload length mismatch: expected " << expected_bytes << " bytes ("
        << dim << " x " << count << " " << dtype << "), found " << actual_bytes;
    throw DataError(msg.str());
  }

  Eigen::MatrixXd all(dim, count);
  if (dtype == "f32") {
    std::vector<float> buffer(static_cast<std::size_t>(dim) * static_cast<std::size_t>(count));
    payload.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!payload) throw DataError("embedding payload read failed: " + payload_path.string());
    for (std::int64_t j = 0; j < count; ++j)
      for (std::int64_t r = 0; r < dim; ++r)
        all(r, j) = static_cast<double>(buffer[static_cast<std::size_t>(j * dim + r)]);
  } else {
    std::vector<double> buffer(static_cast<std::size_t>(dim) * static_cast<std::size_t>(count));
    payload.read(reinterpret_cast<char*>(buffer.data()),
                 static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (!payload) throw DataError("embedding payload read failed: " + payload_path.string());
    for (std::int64_t j = 0; j < count; ++j)
      for (std::int64_t r = 0; r < dim; ++r) all(r, j) = buffer[static_cast<std::size_t>(j * dim + r)];
  }
  if (!all.allFinite()) throw DataError("embedding payload contains non-finite values");

  std::unordered_map<std::string, Eigen::Index> header_index;
  header_index.reserve(header_ids.size());
  for (std::size_t j = 0; j < header_ids.size(); ++j) {
    if (!header_index.emplace(header_ids[j], static_cast<Eigen::Index>(j)).second)
      throw DataError("embedding header: duplicate item id '" + header_ids[j] + "'");
  }

  FeatureMatrix f;
  f.kind = FeatureKind::semantic;
  f.item_ids = item_ids;
  f.values.resize(dim, static_cast<Eigen::Index>(item_ids.size()));
  std::vector<std::string> missing;
  for (std::size_t j = 0; j < item_ids.size(); ++j) {
    const auto it = header_index.find(item_ids[j]);
    if (it == header_index.end()) {
      missing.push_back(item_ids[j]);
      continue;
    }
    f.values.col(static_cast<Eigen::Index>(j)) = all.col(it->second);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " item(s) have no embedding:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg << ' ' << missing[i];
    if (shown < missing.size()) msg << " (+" << missing.size() - shown << " more)";
    throw DataError(msg.str());
  }
  if (header_ids.size() > item_ids.size()) {
    warn("load_embeddings: ignoring " + std::to_string(header_ids.size() - item_ids.size()) +
         " embedding(s) for items outside the interaction index");
  }
  if (l2_normalize_columns) {
    for (Eigen::Index j = 0; j < f.values.cols(); ++j) {
      const double norm = f.values.col(j).norm();
      if (norm > 0.0)
        f.values.col(j) /= norm;
      else
        warn("load_embeddings: zero-norm column left unnormalized for item " +
             item_ids[static_cast<std::size_t>(j)]);
    }
  }
  return f;
}

void write_embeddings(const std::filesystem::path& payload_path,
                      const std::filesystem::path& header_path, const Eigen::MatrixXd& values,
                      const std::vector<std::string>& item_ids, const std::string& dtype) {
  if (static_cast<std::size_t>(values.cols()) != item_ids.size())
    throw DataError("write_embeddings: column/id count mismatch");
  if (dtype != "f32" && dtype != "f64")
    throw ConfigError("write_embeddings: dtype must be f32 or f64");

  json header;
  header["d"] = values.rows();
  header["n"] = values.cols();
  header["dtype"] = dtype;
  header["layout"] = "column-major";
  header["item_ids"] = item_ids;
  std::ofstream header_out(header_path);
  if (!header_out) throw DataError("cannot write file: " + header_path.string());
  header_out << header.dump(2) << "\n";

  std::ofstream payload(payload_path, std::ios::binary);
  if (!payload) throw DataError("cannot write file: " + payload_path.string());
  if (dtype == "f32") {
    std::vector<float> buffer(static_cast<std::size_t>(values.size()));
    std::size_t cursor = 0;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      for (Eigen::Index r = 0; r < values.rows(); ++r)
        buffer[cursor++] = static_cast<float>(values(r, j));
    payload.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size() * sizeof(float)));
  } else {
    std::vector<double> buffer(static_cast<std::size_t>(values.size()));
    std::size_t cursor = 0;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      for (Eigen::Index r = 0; r < values.rows(); ++r) buffer[cursor++] = values(r, j);
    payload.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  }
}

TagAssignments load_tags(const std::filesystem::path& path) {
  std::ifstream in = open_text(path);
  TagAssignments tags;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      std::ostringstream msg;
      msg << "line " << line_number << ": expected `item<TAB>tag`";
      throw DataError(msg.str());
    }
    tags.emplace_back(fields[0], fields[1]);
  }
  return tags;
}

FeatureMatrix build_tag_matrix(const TagAssignments& tags,
                               const std::vector<std::string>& item_ids) {
  const auto item_index = index_of(item_ids);

  std::size_t unknown_items = 0;
  std::vector<std::string> vocabulary;
  {
    std::unordered_set<std::string> seen;
    for (const auto& [item, tag] : tags) {
      if (!item_index.contains(item)) {
        ++unknown_items;
        continue;
      }
      if (seen.insert(tag).second) vocabulary.push_back(tag);
    }
  }
  std::sort(vocabulary.begin(), vocabulary.end());
  const auto vocab_index = index_of(vocabulary);

  FeatureMatrix t;
  t.kind = FeatureKind::tag;
  t.item_ids = item_ids;
  t.feature_names = vocabulary;
  t.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocabulary.size()),
                                   static_cast<Eigen::Index>(item_ids.size()));
  for (const auto& [item, tag] : tags) {
    const auto it = item_index.find(item);
    if (it == item_index.end()) continue;
    t.values(vocab_index.at(tag), it->second) = 1.0;
  }
  if (unknown_items > 0)
    warn("build_tag_matrix: ignored " + std::to_string(unknown_items) +
         " assignment(s) for unknown items");
  std::size_t untagged = 0;
  for (Eigen::Index j = 0; j < t.values.cols(); ++j)
    if (t.values.col(j).isZero(0.0)) ++untagged;
  if (untagged > 0)
    warn("build_tag_matrix: " + std::to_string(untagged) + " item(s) have no tags");
  return t;
}

DatasetStats stats(const InteractionMatrix& m) {
  DatasetStats s;
  s.users = static_cast<std::size_t>(m.users());
  s.items = static_cast<std::size_t>(m.items());
  s.ratings = static_cast<std::size_t>(m.x.nonZeros());
  s.density = (s.users && s.items)
                  ? static_cast<double>(s.ratings) / (static_cast<double>(s.users) * static_cast<double>(s.items))
                  : 0.0;
  return s;
}

}  // namespace laecf::datasets
