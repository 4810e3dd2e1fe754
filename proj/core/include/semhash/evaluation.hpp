#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semhash/data.hpp"
#include "semhash/model.hpp"
#include "semhash/retrieval.hpp"

namespace semhash {

/// Relevance bits of one ranked list, rank 1 first.
using RelevanceList = std::vector<int>;

/// Hits in the first k / k. Needs 1 <= k <= size.
double precision_at_k(std::span<const int> relevance, std::size_t k);

/// Average precision over the first min(p, size) ranks; 0 when none of them
/// is relevant.
double ap_at_p(std::span<const int> relevance, std::size_t p);

double map_at_p(std::span<const RelevanceList> queries, std::size_t p);

/// Fraction of queries with at least h relevant items among the first p.
double map_top_p(std::span<const RelevanceList> queries, std::size_t p, std::size_t min_hits);

struct QueryResult {
  std::string record_id;
  int class_id = 0;
  double ap_at_10 = 0.0;       // class-level relevance
  double item_ap_at_10 = 0.0;  // same-item relevance
  std::size_t hits_at_15 = 0;

  friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

/// Fractions in [0, 1].
struct EvalReport {
  double map_at_10 = 0.0;
  double map_top_1 = 0.0;
  double map_top_3 = 0.0;
  double map_top_5 = 0.0;
  double map_top_15_3hits = 0.0;
  double map_top_15_5hits = 0.0;
  double item_map_at_10 = 0.0;
  std::size_t queries = 0;
  std::size_t gallery = 0;
  std::vector<QueryResult> per_query;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Class-level and item-level relevance of a query's ranked hits.
struct JudgedRanking {
  RelevanceList by_class;
  RelevanceList by_item;
};

JudgedRanking judge(const HammingIndex& index, std::span<const QueryHit> hits, int class_id,
                    const std::string& item_id);

/// Evaluates already-encoded queries against the index.
EvalReport evaluate_codes(const HammingIndex& index, std::span<const ItemRecord> queries,
                          std::span<const BinaryCode> codes);

/// Encodes the queries with `params` and evaluates them. Throws UsageError on
/// an empty gallery or query set, ValidationError when a query id is also in
/// the gallery.
EvalReport evaluate(const HammingIndex& index, std::span<const ItemRecord> queries,
                    const ModelParams& params);

/// One header and one row, values x100, after a `# seed=<S>` comment.
void write_report_csv(std::ostream& out, const EvalReport& report, std::uint64_t seed);
void write_per_query_csv(std::ostream& out, const EvalReport& report, std::uint64_t seed);

}  // namespace semhash
