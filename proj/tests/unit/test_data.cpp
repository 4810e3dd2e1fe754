#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "gen.hpp"
#include "semhash/data.hpp"
#include "semhash/error.hpp"

using namespace semhash;
using namespace semhash::testing;

namespace {

ItemRecord rec(std::string id, std::string item, int cls, int pose, SplitTag split = SplitTag::train,
               std::size_t dim = 2) {
  return {std::move(id), std::move(item), cls, pose, split, std::vector<double>(dim, 0.5)};
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_CASE("pair types and labels") {
  const auto a = rec("a", "x", 0, 0), b = rec("b", "x", 0, 1), c = rec("c", "y", 0, 0),
             d = rec("d", "z", 1, 0);
  CHECK(pair_type(a, b) == PairType::same_item);
  CHECK(pair_type(a, c) == PairType::same_class);
  CHECK(pair_type(a, d) == PairType::different_class);
  for (const auto* p : {&a, &b, &c, &d}) {
    for (const auto* q : {&a, &b, &c, &d}) CHECK(pair_type(*p, *q) == pair_type(*q, *p));
  }
  CHECK(labels_from_type(0).subjective == 1);
  CHECK(labels_from_type(0).relational == 1);
  CHECK(labels_from_type(1).subjective == 1);
  CHECK(labels_from_type(1).relational == 0);
  CHECK(labels_from_type(2).subjective == 0);
  CHECK_FALSE(labels_from_type(2).relational.has_value());
  CHECK_THROWS_AS(labels_from_type(3), UsageError);
  CHECK_THROWS_AS(labels_from_type(-1), UsageError);
}

TEST_CASE("synthetic dataset") {
  const SynthConfig cfg;
  const Dataset a = generate_synthetic(cfg);
  const Dataset b = generate_synthetic(cfg);
  CHECK(a == b);
  SynthConfig other = cfg;
  other.seed = 2;
  CHECK_FALSE(generate_synthetic(other) == a);
  CHECK_NOTHROW(a.validate());
  CHECK(a.records.size() == 5 * 20 * 6);
  CHECK(a.feature_dim == 16);

  std::set<std::size_t> seen;
  std::size_t total = 0;
  for (auto tag : {SplitTag::train, SplitTag::test, SplitTag::gallery, SplitTag::query}) {
    for (auto i : a.split.of(tag)) {
      CHECK(a.records[i].split == tag);
      seen.insert(i);
      ++total;
    }
  }
  CHECK(total == a.records.size());
  CHECK(seen.size() == a.records.size());

  // every query item has gallery poses; train and test items are disjoint
  std::map<std::string, std::set<SplitTag>> tags;
  for (const auto& r : a.records) tags[r.item_id].insert(r.split);
  for (const auto& [item, t] : tags) {
    if (t.count(SplitTag::query)) CHECK(t.count(SplitTag::gallery) == 1);
    CHECK_FALSE((t.count(SplitTag::train) && t.count(SplitTag::test)));
  }
}

TEST_CASE("poses of one item sit closer than other items' records") {
  const Dataset d = generate_synthetic(SynthConfig{});
  Gen g(201);
  std::map<std::string, std::vector<std::size_t>> by_item;
  for (std::size_t i = 0; i < d.records.size(); ++i) by_item[d.records[i].item_id].push_back(i);
  std::size_t ok = 0;
  const std::size_t trials = 5000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t a = g.index(d.records.size());
    const auto& mates = by_item[d.records[a].item_id];
    std::size_t b = a;
    while (b == a) b = mates[g.index(mates.size())];
    std::size_t c = a;
    while (d.records[c].item_id == d.records[a].item_id) c = g.index(d.records.size());
    ok += sq_dist(d.records[a].features, d.records[b].features) <
          sq_dist(d.records[a].features, d.records[c].features);
  }
  CHECK(static_cast<double>(ok) / trials >= 0.99);
}

TEST_CASE("synthetic config errors") {
  SynthConfig c;
  c.poses_per_item = 1;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
  c = SynthConfig{};
  c.sigma_class = 0.05;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
  c = SynthConfig{};
  c.n_classes = 0;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
  c = SynthConfig{};
  c.train_fraction = 0.9;
  c.test_fraction = 0.3;
  CHECK_THROWS_AS(generate_synthetic(c), ConfigError);
}

TEST_CASE("pair sampler counts and labels") {
  const Dataset d = generate_synthetic(SynthConfig{});
  const PairCounts counts{37, 51, 73};
  const auto pairs = sample_pairs(d.records, d.split.train, counts, 5);
  CHECK(pairs.size() == counts.total());
  std::array<std::size_t, 3> hist{};
  const std::set<std::size_t> pool(d.split.train.begin(), d.split.train.end());
  for (const auto& p : pairs) {
    hist[static_cast<std::size_t>(p.type)] += 1;
    CHECK(p.i != p.j);
    CHECK(pool.count(p.i) == 1);
    CHECK(pool.count(p.j) == 1);
    CHECK(pair_type(d.records[p.i], d.records[p.j]) == p.type);
    const auto l = labels_from_type(p.type);
    CHECK(p.subjective == l.subjective);
    CHECK(p.relational == l.relational);
  }
  CHECK(hist[0] == 37);
  CHECK(hist[1] == 51);
  CHECK(hist[2] == 73);
  CHECK(sample_pairs(d.records, d.split.train, counts, 5) == pairs);
  CHECK_FALSE(sample_pairs(d.records, d.split.train, counts, 6) == pairs);

  const auto only2 = sample_pairs(d.records, PairCounts{0, 0, 10}, 1);
  CHECK(only2.size() == 10);
  for (const auto& p : only2) CHECK(p.subjective == 0);
}

TEST_CASE("pair sampler on degenerate pools") {
  std::vector<ItemRecord> one_item{rec("a", "x", 0, 0), rec("b", "x", 0, 1), rec("c", "x", 0, 2)};
  const auto pairs = sample_pairs(one_item, PairCounts{5, 0, 0}, 3);
  CHECK(pairs.size() == 5);
  for (const auto& p : pairs) {
    CHECK(p.subjective == 1);
    CHECK(p.relational == 1);
  }
  try {
    sample_pairs(one_item, PairCounts{0, 0, 1}, 3);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("type 2") != std::string::npos);
  }
  CHECK_THROWS_AS(sample_pairs(one_item, PairCounts{0, 1, 0}, 3), ConfigError);
}

TEST_CASE("pair sampler is uniform over ordered eligible pairs") {
  // 2 classes, items of uneven size
  std::vector<ItemRecord> rs{rec("a", "x", 0, 0), rec("b", "x", 0, 1), rec("c", "x", 0, 2),
                             rec("d", "y", 0, 0), rec("e", "z", 1, 0), rec("f", "z", 1, 1)};
  for (PairType t : {PairType::same_item, PairType::same_class, PairType::different_class}) {
    PairCounts c{0, 0, 0};
    const std::size_t n = 60000;
    if (t == PairType::same_item) c.same_item = n;
    if (t == PairType::same_class) c.same_class = n;
    if (t == PairType::different_class) c.different_class = n;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> hist;
    for (const auto& p : sample_pairs(rs, c, 11)) hist[{p.i, p.j}] += 1;
    std::size_t eligible = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      for (std::size_t j = 0; j < rs.size(); ++j) {
        if (i != j && pair_type(rs[i], rs[j]) == t) ++eligible;
      }
    }
    CHECK(hist.size() == eligible);
    const double expect = static_cast<double>(n) / static_cast<double>(eligible);
    for (const auto& [k, v] : hist) CHECK(std::abs(v - expect) < 5.0 * std::sqrt(expect));
  }
}

TEST_CASE("manifest round trip") {
  const Dataset d = generate_synthetic(SynthConfig{});
  std::stringstream s;
  write_manifest(s, d);
  const std::string text = s.str();
  const Dataset back = read_manifest(s, "mem");
  CHECK(back == d);
  std::stringstream again;
  write_manifest(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("manifest errors") {
  const std::string header = "semhash-manifest 1 dim=2 classes=2 records=2 seed=0\n";
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_manifest(in, "m.csv");
  };
  CHECK_NOTHROW(parse(header + "r0,x,0,0,train,1,2\nr1,y,1,0,train,3,4\n"));

  try {
    parse(header + "r0,x,0,0,train,1,2\nr1,y,1,0,train,3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("m.csv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\nr1,y,1,0,nowhere,3,4\n"), ParseError);
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\nr1,y,1,0,train,3,abc\n"), ParseError);
  CHECK_THROWS_AS(parse("semhash-manifest 2 dim=2 classes=2 records=0 seed=0\n"), IncompatibleError);
  CHECK_THROWS_AS(parse("hello\n"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
  // duplicate (item, pose)
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\nr1,x,0,0,train,3,4\n"), ValidationError);
  // class differs within an item
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\nr1,x,1,1,train,3,4\n"), ValidationError);
  // class out of range
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\nr1,y,2,0,train,3,4\n"), ValidationError);
  // record count mismatch
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,train,1,2\n"), ParseError);
  // query without gallery poses
  CHECK_THROWS_AS(parse(header + "r0,x,0,0,query,1,2\nr1,y,1,0,gallery,3,4\n"), ValidationError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/dir/m.csv"), IoError);
}
