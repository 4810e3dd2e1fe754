#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "semhash/error.hpp"
#include "semhash/losses.hpp"
#include "semhash/retrieval.hpp"

using namespace semhash;
using namespace semhash::testing;

TEST_CASE("continuous hamming hand cases") {
  const std::vector<double> a{1, 1, 1, 1}, b{1, 1, 1, -1};
  CHECK(continuous_hamming(a, b) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(continuous_hamming(a, a) == doctest::Approx(0.0));
  const std::vector<double> neg{-1, -1, -1, -1};
  CHECK(continuous_hamming(a, neg) == doctest::Approx(4.0));
  const std::vector<double> zero(4, 0.0);
  CHECK_THROWS_AS(continuous_hamming(a, zero), NumericError);
  CHECK_THROWS_AS(continuous_hamming(a, std::vector<double>{1, 1}), ShapeError);
}

TEST_CASE("continuous hamming properties") {
  Gen g(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t K = g.between(2, 48);
    const auto a = g.vec_away_from_zero(K), b = g.vec_away_from_zero(K);
    const double d = continuous_hamming(a, b);
    CHECK(d >= 0.0);
    CHECK(d <= static_cast<double>(K) + 1e-12);
    CHECK(d == doctest::Approx(continuous_hamming(b, a)).epsilon(1e-12));
    auto sa = a, sb = b;
    const double ca = g.uniform(0.01, 10.0), cb = g.uniform(0.01, 10.0);
    for (auto& v : sa) v *= ca;
    for (auto& v : sb) v *= cb;
    CHECK(continuous_hamming(sa, sb) == doctest::Approx(d).epsilon(1e-10));
  }
}

TEST_CASE("continuous hamming equals popcount on exact +-1 codes") {
  Gen g(103);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = g.pm_one(48), b = g.pm_one(48);
    const double d = continuous_hamming(a, b);
    const auto bits = hamming_distance(binarize(a), binarize(b));
    CHECK(std::abs(d - static_cast<double>(bits)) < 1e-9);
  }
}

TEST_CASE("continuous hamming gradient") {
  Gen g(107);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t K = g.between(2, 16);
    const auto a = g.vec_away_from_zero(K, 0.05), b = g.vec_away_from_zero(K, 0.05);
    const auto hg = continuous_hamming_with_grad(a, b);
    CHECK(hg.distance == doctest::Approx(continuous_hamming(a, b)));
    const auto na = finite_difference_grad([&](std::span<const double> v) { return continuous_hamming(v, b); }, a, 1e-6);
    const auto nb = finite_difference_grad([&](std::span<const double> v) { return continuous_hamming(a, v); }, b, 1e-6);
    for (std::size_t k = 0; k < K; ++k) {
      CHECK(rel_error(hg.d_first[k], na[k], 1e-6) < 1e-4);
      CHECK(rel_error(hg.d_second[k], nb[k], 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("cauchy similarity anchors") {
  const CauchyConfig cfg;
  CHECK(cauchy_similarity(0.0, cfg) == 1.0);
  CHECK(cauchy_similarity(3.0, cfg) == 0.5);
  CHECK(cauchy_similarity(9.0, cfg) == doctest::Approx(0.25).epsilon(1e-15));
  double prev = 2.0;
  for (int i = 0; i <= 480; ++i) {
    const double s = cauchy_similarity(0.1 * i, cfg);
    CHECK(s < prev);
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    prev = s;
  }
}

TEST_CASE("cauchy cross-entropy forms agree") {
  Gen g(109);
  const CauchyConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    const double d = g.uniform(0.1, 48.0);
    for (int s : {0, 1}) {
      CHECK(std::abs(cauchy_ce_term(d, s, cfg) - cauchy_ce_term_rewritten(d, s, cfg)) < 1e-9);
    }
  }
}

TEST_CASE("cauchy cross-entropy examples") {
  const CauchyConfig cfg;
  {
    const Matrix codes(2, 4, std::vector<double>{0.5, -0.2, 0.1, 0.9, 0.5, -0.2, 0.1, 0.9});
    const std::vector<LabeledPair> pairs{{0, 1, 1, 1.0}};
    const auto l = cauchy_ce(codes, pairs, cfg);
    CHECK(l.loss >= 0.0);
    CHECK(l.loss <= std::log1p(cfg.epsilon / cfg.gamma) + 1e-15);
  }
  {
    Gen g(113);
    const auto h = g.vec_away_from_zero(48, 0.1);
    Matrix codes(2, 48);
    for (std::size_t k = 0; k < 48; ++k) {
      codes(0, k) = h[k];
      codes(1, k) = -h[k];
    }
    const std::vector<LabeledPair> pairs{{0, 1, 0, 1.0}};
    CHECK(cauchy_ce(codes, pairs, cfg).loss == doctest::Approx(std::log(51.0 / 48.0)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(cauchy_ce(Matrix(2, 4), std::vector<LabeledPair>{}, cfg), UsageError);
}

TEST_CASE("cauchy cross-entropy monotone in distance") {
  const CauchyConfig cfg;
  for (double d = 0.2; d < 47.0; d += 0.37) {
    const double h = 1e-6;
    const double pos = (cauchy_ce_term(d + h, 1, cfg) - cauchy_ce_term(d - h, 1, cfg)) / (2 * h);
    const double neg = (cauchy_ce_term(d + h, 0, cfg) - cauchy_ce_term(d - h, 0, cfg)) / (2 * h);
    CHECK(pos > 0.0);
    CHECK(neg < 0.0);
  }
}

TEST_CASE("cauchy cross-entropy gradient away from the clamp") {
  Gen g(127);
  const CauchyConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t K = g.between(4, 16), P = g.between(1, 5);
    const Matrix codes = g.matrix(2 * P, K);
    std::vector<LabeledPair> pairs;
    for (std::size_t p = 0; p < P; ++p) pairs.push_back({p, P + p, g.coin() ? 1 : 0, g.uniform(0.5, 2.0)});
    const auto l = cauchy_ce(codes, pairs, cfg);
    const auto num = finite_difference_grad(
        [&](std::span<const double> v) { return cauchy_ce(Matrix(2 * P, K, {v.begin(), v.end()}), pairs, cfg).loss; },
        codes.values(), 1e-6);
    for (std::size_t i = 0; i < num.size(); ++i) CHECK(rel_error(l.code_grad.values()[i], num[i], 1e-6) < 1e-4);
  }
}

TEST_CASE("stage 2 loss composition") {
  const CauchyConfig cfg;
  Gen g(131);
  const Matrix codes = g.matrix(4, 8);
  const double d01 = continuous_hamming(codes.row(0), codes.row(1));
  const double d23 = continuous_hamming(codes.row(2), codes.row(3));

  SUBCASE("mixed hand case") {
    const std::vector<TypedPair> pairs{{0, 1, PairType::same_class}, {2, 3, PairType::different_class}};
    Stage2Options opt;
    opt.weights.alpha1 = 0.7;
    opt.weights.alpha2 = 1.3;
    const auto l = stage2_loss(codes, pairs, opt);
    const double j1 = 0.5 * (cauchy_ce_term(d01, 1, cfg) + cauchy_ce_term(d23, 0, cfg));
    const double j2 = cauchy_ce_term(d01, 0, cfg);
    CHECK(l.subjective == doctest::Approx(j1).epsilon(1e-12));
    CHECK(l.relational == doctest::Approx(j2).epsilon(1e-12));
    CHECK(l.total == doctest::Approx(0.7 * j1 + 1.3 * j2).epsilon(1e-12));
    CHECK(l.relational_pairs == 1);
  }
  SUBCASE("only type-2 pairs") {
    const std::vector<TypedPair> pairs{{0, 1, PairType::different_class}, {2, 3, PairType::different_class}};
    const auto l = stage2_loss(codes, pairs, Stage2Options{});
    CHECK(l.relational == 0.0);
    CHECK(l.relational_pairs == 0);
    CHECK(l.total == doctest::Approx(l.subjective));
  }
  SUBCASE("zero weights") {
    const std::vector<TypedPair> pairs{{0, 1, PairType::same_item}, {2, 3, PairType::same_class}};
    Stage2Options opt;
    opt.weights.alpha1 = 0.0;
    opt.weights.alpha2 = 0.0;
    const auto l = stage2_loss(codes, pairs, opt);
    CHECK(l.total == 0.0);
    for (double v : l.code_grad.values()) CHECK(v == 0.0);
  }
  SUBCASE("relational loss off") {
    const std::vector<TypedPair> pairs{{0, 1, PairType::same_item}, {2, 3, PairType::same_class}};
    Stage2Options opt;
    opt.relational = false;
    const auto l = stage2_loss(codes, pairs, opt);
    CHECK(l.total == doctest::Approx(l.subjective));
  }
  SUBCASE("reweighting gives each type equal mass") {
    const Matrix c6 = g.matrix(6, 8);
    const std::vector<TypedPair> pairs{{0, 1, PairType::different_class},
                                       {2, 3, PairType::different_class},
                                       {4, 5, PairType::same_item}};
    Stage2Options opt;
    opt.reweight_types = true;
    opt.relational = false;
    const auto l = stage2_loss(c6, pairs, opt);
    const double t2 = 0.5 * (cauchy_ce_term(continuous_hamming(c6.row(0), c6.row(1)), 0, cfg) +
                             cauchy_ce_term(continuous_hamming(c6.row(2), c6.row(3)), 0, cfg));
    const double t0 = cauchy_ce_term(continuous_hamming(c6.row(4), c6.row(5)), 1, cfg);
    CHECK(l.subjective == doctest::Approx(0.5 * (t2 + t0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(stage2_loss(codes, std::vector<TypedPair>{}, Stage2Options{}), UsageError);
}

TEST_CASE("classification cross-entropy") {
  ClassPrediction sure{{}, {0.0, 1.0, 0.0}};
  CHECK(classification_ce(sure, 1).loss == doctest::Approx(0.0));
  ClassPrediction uniform{{0, 0, 0, 0}, {0.25, 0.25, 0.25, 0.25}};
  const auto l = classification_ce(uniform, 2);
  CHECK(l.loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  double s = 0.0;
  for (double v : l.logit_grad) s += v;
  CHECK(std::abs(s) < 1e-15);
  CHECK_THROWS_AS(classification_ce(uniform, 4), UsageError);
  CHECK_THROWS_AS(classification_ce(uniform, -1), UsageError);
}

TEST_CASE("adversarial BCE") {
  CHECK(adversarial_bce(0.5, 0).loss == doctest::Approx(std::log(2.0)));
  CHECK(adversarial_bce(0.5, 1).loss == doctest::Approx(std::log(2.0)));
  CHECK(adversarial_bce(0.9, 0).loss == doctest::Approx(-std::log(0.1)).epsilon(1e-12));
  CHECK(adversarial_bce(1.0 - 1e-9, 1).loss < 1e-5);
  CHECK(std::isfinite(adversarial_bce(1.0, 0).loss));
  CHECK(adversarial_bce(1.0, 0).grad == 0.0);
  for (double p = 0.05; p < 1.0; p += 0.1) {
    for (int y : {0, 1}) {
      const double h = 1e-7;
      const double num = (adversarial_bce(p + h, y).loss - adversarial_bce(p - h, y).loss) / (2 * h);
      CHECK(rel_error(adversarial_bce(p, y).grad, num, 1e-6) < 1e-5);
    }
  }
  CHECK_THROWS_AS(adversarial_bce(0.5, 2), UsageError);
}

TEST_CASE("config validation") {
  CauchyConfig c;
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.gamma = 3.0;
  c.epsilon = 1e-2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  StageWeights w;
  w.beta = -0.1;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}
