#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semhash/numerics.hpp"
#include "semhash/pairs.hpp"

namespace semhash {

enum class SplitTag : std::uint8_t { train, test, gallery, query };

const char* to_string(SplitTag tag) noexcept;
SplitTag parse_split_tag(std::string_view text);

struct ItemRecord {
  std::string record_id;
  std::string item_id;
  int class_id = 0;
  int pose_id = 0;
  SplitTag split = SplitTag::train;
  std::vector<double> features;

  friend bool operator==(const ItemRecord&, const ItemRecord&) = default;
};

/// Record indices per partition; the four sets are pairwise disjoint.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::size_t> gallery;
  std::vector<std::size_t> query;

  const std::vector<std::size_t>& of(SplitTag tag) const;
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::uint64_t seed = 0;  // root seed of the generator, 0 if unknown
  std::vector<ItemRecord> records;
  DatasetSplit split;

  /// Rebuilds `split` from the records' tags.
  void index_splits();
  /// Checks every record and split invariant; throws ValidationError.
  void validate() const;
  Matrix features(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

PairType pair_type(const ItemRecord& a, const ItemRecord& b);

struct SynthConfig {
  std::size_t n_classes = 5;
  std::size_t items_per_class = 20;
  std::size_t poses_per_item = 6;
  std::size_t feature_dim = 16;
  // class : item : pose spread kept at 10 : 3 : 1 by default
  double sigma_class = 1.0;
  double sigma_item = 0.3;
  double sigma_pose = 0.1;
  // fractions of each class's items; the remainder provides query/gallery
  double train_fraction = 0.6;
  double test_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Class prototypes ~ N(0, sigma_class^2 I), items = prototype + N(0, sigma_item^2 I),
/// poses = item + N(0, sigma_pose^2 I). Items are split per class; each
/// evaluation item sends one pose to the query set and the rest to the gallery.
/// Records come out in a seeded random order.
Dataset generate_synthetic(const SynthConfig& config);

struct PairCounts {
  std::size_t same_item = 280;
  std::size_t same_class = 1000;
  std::size_t different_class = 2000;

  std::size_t of(PairType t) const;
  std::size_t total() const { return same_item + same_class + different_class; }
  friend bool operator==(const PairCounts&, const PairCounts&) = default;
};

/// Draws exactly the requested number of pairs per type, uniformly with
/// replacement over ordered eligible pairs (i != j) of `pool`. Indices in the
/// result refer to `records`. Output is grouped by type (0, 1, 2).
std::vector<PairSample> sample_pairs(std::span<const ItemRecord> records,
                                     std::span<const std::size_t> pool, const PairCounts& counts,
                                     std::uint64_t seed);
std::vector<PairSample> sample_pairs(std::span<const ItemRecord> records,
                                     const PairCounts& counts, std::uint64_t seed);

// Manifest text format:
//   line 1:   semhash-manifest 1 dim=<D> classes=<N> records=<R> seed=<S>
//   line 2..: record_id,item_id,class_id,pose_id,split,f_0,...,f_{D-1}
// split is one of train|test|gallery|query. Identifiers may not contain ',' or
// whitespace. Features use shortest round-trip decimal formatting.
void write_manifest(std::ostream& out, const Dataset& data);
void write_manifest(const std::filesystem::path& path, const Dataset& data);
Dataset read_manifest(std::istream& in, std::string_view source = "<stream>");
Dataset load_manifest(const std::filesystem::path& path);

}  // namespace semhash
