#include "semhash/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "semhash/error.hpp"
#include "text_util.hpp"

namespace semhash {

PairLabels labels_from_type(PairType t) {
  switch (t) {
    case PairType::same_item: return {1, 1};
    case PairType::same_class: return {1, 0};
    case PairType::different_class: return {0, std::nullopt};
  }
  throw UsageError("labels_from_type: invalid pair type");
}

PairLabels labels_from_type(int t) { return labels_from_type(pair_type_from_int(t)); }

PairType pair_type_from_int(int t) {
  if (t < 0 || t > 2) throw UsageError("pair type must be 0, 1 or 2, got " + std::to_string(t));
  return static_cast<PairType>(t);
}

PairSample make_pair_sample(std::size_t i, std::size_t j, PairType t) {
  const PairLabels labels = labels_from_type(t);
  return {i, j, t, labels.subjective, labels.relational};
}

const char* to_string(SplitTag tag) noexcept {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::test: return "test";
    case SplitTag::gallery: return "gallery";
    case SplitTag::query: return "query";
  }
  return "?";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train") return SplitTag::train;
  if (text == "test") return SplitTag::test;
  if (text == "gallery") return SplitTag::gallery;
  if (text == "query") return SplitTag::query;
  throw ParseError("unknown split tag '" + std::string(text) + "'");
}

const std::vector<std::size_t>& DatasetSplit::of(SplitTag tag) const {
  switch (tag) {
    case SplitTag::train: return train;
    case SplitTag::test: return test;
    case SplitTag::gallery: return gallery;
    case SplitTag::query: return query;
  }
  throw UsageError("DatasetSplit::of: invalid tag");
}

void Dataset::index_splits() {
  split = {};
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (records[i].split) {
      case SplitTag::train: split.train.push_back(i); break;
      case SplitTag::test: split.test.push_back(i); break;
      case SplitTag::gallery: split.gallery.push_back(i); break;
      case SplitTag::query: split.query.push_back(i); break;
    }
  }
}

void Dataset::validate() const {
  if (feature_dim == 0) throw ValidationError("dataset: feature dimension must be > 0");
  if (num_classes == 0) throw ValidationError("dataset: class count must be > 0");
  std::set<std::string_view> ids;
  std::set<std::pair<std::string_view, int>> item_poses;
  std::unordered_map<std::string_view, int> item_class;
  std::set<std::string_view> gallery_items;
  for (const auto& r : records) {
    const std::string where = "record '" + r.record_id + "'";
    if (!detail::valid_identifier(r.record_id) || !detail::valid_identifier(r.item_id)) {
      throw ValidationError(where + ": identifiers must be non-empty without ',' or whitespace");
    }
    if (!ids.insert(r.record_id).second) throw ValidationError(where + ": duplicate record_id");
    if (r.class_id < 0 || static_cast<std::size_t>(r.class_id) >= num_classes) {
      throw ValidationError(where + ": class_id " + std::to_string(r.class_id) +
                            " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (r.pose_id < 0) throw ValidationError(where + ": negative pose_id");
    if (r.features.size() != feature_dim) {
      throw ValidationError(where + ": " + std::to_string(r.features.size()) +
                            " features, expected " + std::to_string(feature_dim));
    }
    for (double f : r.features) {
      if (!std::isfinite(f)) throw ValidationError(where + ": non-finite feature");
    }
    if (!item_poses.insert({r.item_id, r.pose_id}).second) {
      throw ValidationError(where + ": duplicate (item_id, pose_id) = (" + r.item_id + ", " +
                            std::to_string(r.pose_id) + ")");
    }
    auto [it, inserted] = item_class.emplace(r.item_id, r.class_id);
    if (!inserted && it->second != r.class_id) {
      throw ValidationError(where + ": item '" + r.item_id + "' has class " +
                            std::to_string(r.class_id) + " but another record says " +
                            std::to_string(it->second));
    }
    if (r.split == SplitTag::gallery) gallery_items.insert(r.item_id);
  }
  for (const auto& r : records) {
    if (r.split == SplitTag::query && !gallery_items.contains(r.item_id)) {
      throw ValidationError("record '" + r.record_id + "': query item '" + r.item_id +
                            "' has no gallery record");
    }
  }
  std::size_t tagged = split.train.size() + split.test.size() + split.gallery.size() +
                       split.query.size();
  if (tagged != records.size()) throw ValidationError("dataset: split index out of date");
  for (auto tag : {SplitTag::train, SplitTag::test, SplitTag::gallery, SplitTag::query}) {
    for (auto idx : split.of(tag)) {
      if (idx >= records.size() || records[idx].split != tag) {
        throw ValidationError("dataset: split index out of date");
      }
    }
  }
}

Matrix Dataset::features(std::span<const std::size_t> indices) const {
  Matrix m(indices.size(), feature_dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& f = records.at(indices[r]).features;
    std::copy(f.begin(), f.end(), m.row(r).begin());
  }
  return m;
}

PairType pair_type(const ItemRecord& a, const ItemRecord& b) {
  if (a.item_id == b.item_id) return PairType::same_item;
  if (a.class_id == b.class_id) return PairType::same_class;
  return PairType::different_class;
}

void SynthConfig::validate() const {
  if (n_classes < 1 || items_per_class < 1 || poses_per_item < 1 || feature_dim < 1) {
    throw ConfigError("synth: all counts must be >= 1");
  }
  if (!(sigma_class >= 0.0 && sigma_item >= 0.0 && sigma_pose >= 0.0)) {
    throw ConfigError("synth: noise scales must be >= 0");
  }
  if (!(sigma_class > sigma_pose)) {
    throw ConfigError("synth: class separation (sigma_class) must exceed pose noise (sigma_pose)");
  }
  if (!(train_fraction >= 0.0 && test_fraction >= 0.0 && train_fraction + test_fraction <= 1.0)) {
    throw ConfigError("synth: train/test fractions must be >= 0 and sum to <= 1");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * items_per_class));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * items_per_class));
  if (n_train + n_test < items_per_class && poses_per_item < 2) {
    throw ConfigError("synth: query/gallery split needs poses_per_item >= 2");
  }
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const std::size_t D = cfg.feature_dim;
  const auto n_train = std::min<std::size_t>(
      cfg.items_per_class, static_cast<std::size_t>(std::llround(cfg.train_fraction * cfg.items_per_class)));
  const auto n_test = std::min<std::size_t>(
      cfg.items_per_class - n_train,
      static_cast<std::size_t>(std::llround(cfg.test_fraction * cfg.items_per_class)));

  std::vector<ItemRecord> records;
  records.reserve(cfg.n_classes * cfg.items_per_class * cfg.poses_per_item);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    std::vector<double> proto(D);
    for (double& v : proto) v = cfg.sigma_class * unit(rng);
    for (std::size_t item = 0; item < cfg.items_per_class; ++item) {
      std::vector<double> center(D);
      for (std::size_t k = 0; k < D; ++k) center[k] = proto[k] + cfg.sigma_item * unit(rng);
      SplitTag role = SplitTag::gallery;
      if (item < n_train) {
        role = SplitTag::train;
      } else if (item < n_train + n_test) {
        role = SplitTag::test;
      }
      std::size_t query_pose = cfg.poses_per_item;
      if (role == SplitTag::gallery) {
        query_pose = std::uniform_int_distribution<std::size_t>(0, cfg.poses_per_item - 1)(rng);
      }
      const std::string item_id = "c" + std::to_string(c) + "-i" + std::to_string(item);
      for (std::size_t pose = 0; pose < cfg.poses_per_item; ++pose) {
        ItemRecord r;
        r.item_id = item_id;
        r.class_id = static_cast<int>(c);
        r.pose_id = static_cast<int>(pose);
        r.split = pose == query_pose ? SplitTag::query : role;
        r.features.resize(D);
        for (std::size_t k = 0; k < D; ++k) r.features[k] = center[k] + cfg.sigma_pose * unit(rng);
        records.push_back(std::move(r));
      }
    }
  }
  std::shuffle(records.begin(), records.end(), rng);
  const std::size_t width = std::to_string(records.size()).size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::string n = std::to_string(i);
    records[i].record_id = "r" + std::string(width - n.size(), '0') + n;
  }

  Dataset data;
  data.feature_dim = D;
  data.num_classes = cfg.n_classes;
  data.seed = cfg.seed;
  data.records = std::move(records);
  data.index_splits();
  data.validate();
  return data;
}

std::size_t PairCounts::of(PairType t) const {
  switch (t) {
    case PairType::same_item: return same_item;
    case PairType::same_class: return same_class;
    case PairType::different_class: return different_class;
  }
  return 0;
}

std::vector<PairSample> sample_pairs(std::span<const ItemRecord> records,
                                     std::span<const std::size_t> pool, const PairCounts& counts,
                                     std::uint64_t seed) {
  // group pool positions by item and class
  std::map<std::string_view, std::vector<std::size_t>> by_item;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : pool) {
    if (idx >= records.size()) throw UsageError("sample_pairs: pool index out of range");
    by_item[records[idx].item_id].push_back(idx);
    by_class[records[idx].class_id].push_back(idx);
  }

  std::mt19937_64 rng(seed);
  std::vector<PairSample> out;
  out.reserve(counts.total());

  for (PairType t : {PairType::same_item, PairType::same_class, PairType::different_class}) {
    const std::size_t want = counts.of(t);
    if (want == 0) continue;
    // number of eligible partners of each pool member
    std::vector<double> weights(pool.size());
    double total = 0.0;
    for (std::size_t p = 0; p < pool.size(); ++p) {
      const auto& r = records[pool[p]];
      const double item_n = static_cast<double>(by_item[r.item_id].size());
      const double class_n = static_cast<double>(by_class[r.class_id].size());
      switch (t) {
        case PairType::same_item: weights[p] = item_n - 1.0; break;
        case PairType::same_class: weights[p] = class_n - item_n; break;
        case PairType::different_class:
          weights[p] = static_cast<double>(pool.size()) - class_n;
          break;
      }
      total += weights[p];
    }
    if (total <= 0.0) {
      throw ConfigError("sample_pairs: no eligible pairs of type " + std::to_string(to_int(t)) +
                        " in this record pool");
    }
    std::discrete_distribution<std::size_t> pick_first(weights.begin(), weights.end());
    for (std::size_t n = 0; n < want; ++n) {
      const std::size_t i = pool[pick_first(rng)];
      const auto& ri = records[i];
      std::size_t j = i;
      if (t == PairType::same_item) {
        const auto& members = by_item[ri.item_id];
        std::uniform_int_distribution<std::size_t> pick(0, members.size() - 2);
        const std::size_t self = static_cast<std::size_t>(
            std::find(members.begin(), members.end(), i) - members.begin());
        std::size_t k = pick(rng);
        if (k >= self) ++k;
        j = members[k];
      } else {
        const std::span<const std::size_t> candidates =
            t == PairType::same_class ? std::span<const std::size_t>(by_class[ri.class_id]) : pool;
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        do {
          j = candidates[pick(rng)];
        } while (pair_type(ri, records[j]) != t);
      }
      out.push_back(make_pair_sample(i, j, t));
    }
  }
  return out;
}

std::vector<PairSample> sample_pairs(std::span<const ItemRecord> records,
                                     const PairCounts& counts, std::uint64_t seed) {
  std::vector<std::size_t> pool(records.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  return sample_pairs(records, pool, counts, seed);
}

void write_manifest(std::ostream& out, const Dataset& data) {
  out << "semhash-manifest 1 dim=" << data.feature_dim << " classes=" << data.num_classes
      << " records=" << data.records.size() << " seed=" << data.seed << '\n';
  for (const auto& r : data.records) {
    out << r.record_id << ',' << r.item_id << ',' << r.class_id << ',' << r.pose_id << ','
        << to_string(r.split);
    for (double f : r.features) out << ',' << detail::format_double(f);
    out << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_manifest(out, data);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

template <typename T>
T header_field(std::string_view token, std::string_view key, std::string_view source) {
  const std::string prefix = std::string(key) + "=";
  T value{};
  if (token.substr(0, prefix.size()) != prefix ||
      !detail::parse_int(token.substr(prefix.size()), value)) {
    throw ParseError(std::string(source) + ":1: expected " + prefix + "<integer>, got '" +
                     std::string(token) + "'");
  }
  return value;
}

}  // namespace

Dataset read_manifest(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string(source) + ": empty manifest");
  const auto header = detail::split(detail::trim(line), ' ');
  if (header.size() != 6 || header[0] != "semhash-manifest") {
    throw ParseError(std::string(source) + ":1: not a semhash manifest header");
  }
  if (header[1] != "1") {
    throw IncompatibleError(std::string(source) + ": manifest version " + std::string(header[1]) +
                            " is not supported (expected 1)");
  }
  Dataset data;
  data.feature_dim = header_field<std::size_t>(header[2], "dim", source);
  data.num_classes = header_field<std::size_t>(header[3], "classes", source);
  const auto expected = header_field<std::size_t>(header[4], "records", source);
  data.seed = header_field<std::uint64_t>(header[5], "seed", source);
  data.records.reserve(expected);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != 5 + data.feature_dim) {
      throw ParseError(where + ": expected " + std::to_string(5 + data.feature_dim) +
                       " fields, got " + std::to_string(fields.size()));
    }
    ItemRecord r;
    r.record_id = std::string(fields[0]);
    r.item_id = std::string(fields[1]);
    if (!detail::parse_int(fields[2], r.class_id)) {
      throw ParseError(where + ": bad class_id '" + std::string(fields[2]) + "'");
    }
    if (!detail::parse_int(fields[3], r.pose_id)) {
      throw ParseError(where + ": bad pose_id '" + std::string(fields[3]) + "'");
    }
    try {
      r.split = parse_split_tag(fields[4]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    r.features.resize(data.feature_dim);
    for (std::size_t k = 0; k < data.feature_dim; ++k) {
      if (!detail::parse_double(fields[5 + k], r.features[k])) {
        throw ParseError(where + ": bad feature f_" + std::to_string(k) + " '" +
                         std::string(fields[5 + k]) + "'");
      }
    }
    data.records.push_back(std::move(r));
  }
  if (data.records.size() != expected) {
    throw ParseError(std::string(source) + ": header declares " + std::to_string(expected) +
                     " records, file has " + std::to_string(data.records.size()));
  }
  data.index_splits();
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
  return data;
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return read_manifest(in, path.string());
}

}  // namespace semhash
