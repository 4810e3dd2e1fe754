#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace semhash {

/// Relationship between two inventory records.
///   same_item:       same item under a different pose        (type 0)
///   same_class:      same class, different item              (type 1)
///   different_class: different classes                        (type 2)
enum class PairType : std::uint8_t { same_item = 0, same_class = 1, different_class = 2 };

inline constexpr std::size_t kPairTypeCount = 3;

struct PairLabels {
  int subjective;                 // s: 1 for types 0 and 1
  std::optional<int> relational;  // r: 1 for type 0, 0 for type 1, absent for type 2
  friend bool operator==(const PairLabels&, const PairLabels&) = default;
};

PairLabels labels_from_type(PairType t);
/// Integer overload for untrusted input; anything outside {0,1,2} is a usage error.
PairLabels labels_from_type(int t);

PairType pair_type_from_int(int t);

constexpr int to_int(PairType t) noexcept { return static_cast<int>(t); }

struct PairSample {
  std::size_t i = 0;
  std::size_t j = 0;
  PairType type = PairType::different_class;
  int subjective = 0;
  std::optional<int> relational;

  friend bool operator==(const PairSample&, const PairSample&) = default;
};

PairSample make_pair_sample(std::size_t i, std::size_t j, PairType t);

}  // namespace semhash
