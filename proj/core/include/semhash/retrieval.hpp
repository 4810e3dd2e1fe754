#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semhash/model.hpp"
#include "semhash/numerics.hpp"

namespace semhash {

/// K-bit code packed into 64-bit words, bit k in word k/64 at position k%64.
/// Bit 1 stands for +1, bit 0 for -1. Padding bits past K are always zero.
class BinaryCode {
 public:
  BinaryCode() = default;
  explicit BinaryCode(std::size_t bits);
  BinaryCode(std::size_t bits, std::vector<std::uint64_t> words);

  static BinaryCode from_bits(std::span<const int> bits);
  /// Inverse of to_hex; throws ParseError on bad digits, wrong length or set
  /// padding bits.
  static BinaryCode from_hex(std::size_t bits, std::string_view hex);

  std::size_t bits() const noexcept { return bits_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }
  bool bit(std::size_t k) const;
  void set(std::size_t k, bool value);

  /// ceil(K/4) hex digits; digit n holds bits 4n..4n+3 with bit 4n as its LSB.
  std::string to_hex() const;

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t words_for_bits(std::size_t bits) noexcept;

/// Sign binarizer: bit k = 1 iff code[k] >= 0.
BinaryCode binarize(std::span<const double> code);

/// Popcount of the XOR. Throws UsageError when K differs.
std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b);

/// Continuous codes (tanh outputs) and their binarized form for a batch of inputs.
Matrix encode_continuous(const ModelParams& params, const Matrix& inputs);
std::vector<BinaryCode> encode_binary(const ModelParams& params, const Matrix& inputs);

struct IndexEntry {
  std::string id;
  std::string item_id;
  int class_id = 0;

  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct QueryHit {
  std::size_t position = 0;  // insertion order in the index
  std::size_t distance = 0;

  friend bool operator==(const QueryHit&, const QueryHit&) = default;
};

/// Immutable gallery of packed codes with per-entry metadata.
class HammingIndex {
 public:
  HammingIndex() = default;

  /// Throws UsageError on K = 0, length mismatch or mixed K, ValidationError on
  /// a duplicate id.
  static HammingIndex build(std::size_t bits, std::vector<IndexEntry> entries,
                            std::span<const BinaryCode> codes, std::uint64_t seed = 0);

  /// The p nearest entries by Hamming distance, ascending, ties in insertion
  /// order. p larger than the index returns every entry. Exact full scan.
  std::vector<QueryHit> query(const BinaryCode& probe, std::size_t p) const;

  std::size_t bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  const IndexEntry& entry(std::size_t position) const { return entries_.at(position); }
  BinaryCode code(std::size_t position) const;

  friend bool operator==(const HammingIndex&, const HammingIndex&) = default;

 private:
  std::size_t bits_ = 0;
  std::size_t words_per_code_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<IndexEntry> entries_;
  std::vector<std::uint64_t> arena_;
};

inline constexpr std::uint32_t kIndexVersion = 1;

// Binary, little-endian:
//   "SEMHINDX" u32 version u64 K u64 count u64 seed
//   count x { str id, str item_id, i64 class_id }
//   count * ceil(K/64) x u64 code words
void write_index(std::ostream& out, const HammingIndex& index);
void save_index(const std::filesystem::path& path, const HammingIndex& index);
HammingIndex read_index(std::istream& in, std::string_view source = "<stream>");
HammingIndex load_index(const std::filesystem::path& path);

struct CodeRecord {
  std::string record_id;
  BinaryCode code;

  friend bool operator==(const CodeRecord&, const CodeRecord&) = default;
};

struct CodesFile {
  std::size_t bits = 0;
  std::uint64_t seed = 0;
  std::vector<CodeRecord> records;

  friend bool operator==(const CodesFile&, const CodesFile&) = default;
};

// Codes text format:
//   # semhash-codes v1 K=<K> seed=<S>
//   record_id,K,hex
void write_codes(std::ostream& out, const CodesFile& codes);
void save_codes(const std::filesystem::path& path, const CodesFile& codes);
CodesFile read_codes(std::istream& in, std::string_view source = "<stream>");
CodesFile load_codes(const std::filesystem::path& path);

}  // namespace semhash
