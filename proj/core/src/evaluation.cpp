#include "semhash/evaluation.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_set>

#include "semhash/error.hpp"
#include "text_util.hpp"

namespace semhash {

namespace {

constexpr std::size_t kRankDepth = 15;

}  // namespace

double precision_at_k(std::span<const int> relevance, std::size_t k) {
  if (k == 0 || k > relevance.size()) {
    throw UsageError("precision@k: k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(relevance.size()) + "]");
  }
  std::size_t hits = 0;
  for (std::size_t n = 0; n < k; ++n) hits += relevance[n] != 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ap_at_p(std::span<const int> relevance, std::size_t p) {
  if (p == 0) throw UsageError("AP@p: p must be >= 1");
  const std::size_t depth = std::min(p, relevance.size());
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < depth; ++k) {
    if (!relevance[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double map_at_p(std::span<const RelevanceList> queries, std::size_t p) {
  if (queries.empty()) throw UsageError("mAP@p: empty query set");
  double sum = 0.0;
  for (const auto& q : queries) sum += ap_at_p(q, p);
  return sum / static_cast<double>(queries.size());
}

double map_top_p(std::span<const RelevanceList> queries, std::size_t p, std::size_t min_hits) {
  if (min_hits == 0) throw UsageError("mAP@top-p: min_hits must be >= 1");
  if (min_hits > p) {
    throw UsageError("mAP@top-p: min_hits " + std::to_string(min_hits) + " > p " + std::to_string(p));
  }
  if (queries.empty()) throw UsageError("mAP@top-p: empty query set");
  std::size_t ok = 0;
  for (const auto& q : queries) {
    const std::size_t depth = std::min(p, q.size());
    const auto hits = static_cast<std::size_t>(
        std::count_if(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(depth), [](int r) { return r != 0; }));
    ok += hits >= min_hits;
  }
  return static_cast<double>(ok) / static_cast<double>(queries.size());
}

JudgedRanking judge(const HammingIndex& index, std::span<const QueryHit> hits, int class_id,
                    const std::string& item_id) {
  JudgedRanking j;
  j.by_class.reserve(hits.size());
  j.by_item.reserve(hits.size());
  for (const auto& h : hits) {
    const auto& e = index.entry(h.position);
    j.by_class.push_back(e.class_id == class_id ? 1 : 0);
    j.by_item.push_back(e.item_id == item_id ? 1 : 0);
  }
  return j;
}

EvalReport evaluate_codes(const HammingIndex& index, std::span<const ItemRecord> queries,
                          std::span<const BinaryCode> codes) {
  if (index.empty()) throw UsageError("evaluate: empty gallery");
  if (queries.empty()) throw UsageError("evaluate: empty query set");
  if (codes.size() != queries.size()) throw UsageError("evaluate: one code per query required");
  std::unordered_set<std::string_view> gallery_ids;
  for (const auto& e : index.entries()) gallery_ids.insert(e.id);
  for (const auto& q : queries) {
    if (gallery_ids.count(q.record_id)) {
      throw ValidationError("evaluate: query '" + q.record_id + "' is also in the gallery");
    }
  }

  std::vector<RelevanceList> by_class;
  std::vector<RelevanceList> by_item;
  by_class.reserve(queries.size());
  by_item.reserve(queries.size());
  EvalReport report;
  report.queries = queries.size();
  report.gallery = index.size();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto hits = index.query(codes[i], kRankDepth);
    auto j = judge(index, hits, queries[i].class_id, queries[i].item_id);
    QueryResult row;
    row.record_id = queries[i].record_id;
    row.class_id = queries[i].class_id;
    row.ap_at_10 = ap_at_p(j.by_class, 10);
    row.item_ap_at_10 = ap_at_p(j.by_item, 10);
    row.hits_at_15 = static_cast<std::size_t>(std::count(j.by_class.begin(), j.by_class.end(), 1));
    report.per_query.push_back(std::move(row));
    by_class.push_back(std::move(j.by_class));
    by_item.push_back(std::move(j.by_item));
  }
  report.map_at_10 = map_at_p(by_class, 10);
  report.map_top_1 = map_top_p(by_class, 1, 1);
  report.map_top_3 = map_top_p(by_class, 3, 1);
  report.map_top_5 = map_top_p(by_class, 5, 1);
  report.map_top_15_3hits = map_top_p(by_class, 15, 3);
  report.map_top_15_5hits = map_top_p(by_class, 15, 5);
  report.item_map_at_10 = map_at_p(by_item, 10);
  return report;
}

EvalReport evaluate(const HammingIndex& index, std::span<const ItemRecord> queries,
                    const ModelParams& params) {
  if (index.empty()) throw UsageError("evaluate: empty gallery");
  if (queries.empty()) throw UsageError("evaluate: empty query set");
  if (params.config.code_bits != index.bits()) {
    throw IncompatibleError("evaluate: model K=" + std::to_string(params.config.code_bits) +
                            " but index K=" + std::to_string(index.bits()));
  }
  Matrix x(queries.size(), params.config.input_dim);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (queries[i].features.size() != params.config.input_dim) {
      throw ShapeError("evaluate: query '" + queries[i].record_id + "' has the wrong feature width");
    }
    std::copy(queries[i].features.begin(), queries[i].features.end(), x.row(i).begin());
  }
  const auto codes = encode_binary(params, x);
  return evaluate_codes(index, queries, codes);
}

void write_report_csv(std::ostream& out, const EvalReport& r, std::uint64_t seed) {
  using detail::format_double;
  out << "# seed=" << seed << " queries=" << r.queries << " gallery=" << r.gallery << '\n';
  out << "mAP@10,mAP@top-1,mAP@top-3,mAP@top-5,mAP@top-15(>=3 hits),mAP@top-15(>=5 hits),"
         "item mAP@10\n";
  out << format_double(100.0 * r.map_at_10) << ',' << format_double(100.0 * r.map_top_1) << ','
      << format_double(100.0 * r.map_top_3) << ',' << format_double(100.0 * r.map_top_5) << ','
      << format_double(100.0 * r.map_top_15_3hits) << ','
      << format_double(100.0 * r.map_top_15_5hits) << ','
      << format_double(100.0 * r.item_map_at_10) << '\n';
}

void write_per_query_csv(std::ostream& out, const EvalReport& r, std::uint64_t seed) {
  using detail::format_double;
  out << "# seed=" << seed << '\n';
  out << "record_id,class_id,AP@10,item AP@10,hits@15\n";
  for (const auto& q : r.per_query) {
    out << q.record_id << ',' << q.class_id << ',' << format_double(q.ap_at_10) << ','
        << format_double(q.item_ap_at_10) << ',' << q.hits_at_15 << '\n';
  }
}

}  // namespace semhash
