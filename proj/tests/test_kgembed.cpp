#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "test_helpers.hpp"

using namespace kgalign;
using Catch::Matchers::WithinAbs;

namespace {

KgEmbedding hand_kg() {
  KgEmbedding kg;
  kg.dim = 2;
  kg.entities = EmbeddingMatrix(3, 2, {0.0, 0.0, 1.0, 0.0, -2.0, -4.0}, "e", {"h", "t", "far"});
  kg.relations = EmbeddingMatrix(2, 2, {1.0, 0.0, 1.0, 0.0}, "r", {"r", "r2"});
  kg.config.dim = 2;
  return kg;
}

std::vector<Triple> chain() { return {{"a", "next", "b"}, {"b", "next", "c"}}; }

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("score_triple evaluates the translation distance", "[kgembed][score]") {
  auto kg = hand_kg();
  CHECK(score_triple(kg, {"h", "r", "t"}) == 0.0);
  CHECK_THAT(score_triple(kg, {"t", "r", "t"}), WithinAbs(-1.0, 1e-15));
  KgEmbedding k2 = kg;
  k2.entities = EmbeddingMatrix(2, 2, {0.0, 0.0, -2.0, -4.0}, "e", {"h", "t"});
  // h + r - t = (3, 4)
  CHECK_THAT(score_triple(k2, {"h", "r", "t"}, Norm::L2), WithinAbs(-5.0, 1e-15));
  CHECK_THAT(score_triple(k2, {"h", "r", "t"}, Norm::L1), WithinAbs(-7.0, 1e-15));
  CHECK_THROWS_AS(score_triple(kg, {"nobody", "r", "t"}), LookupError);
  CHECK_THROWS_AS(score_triple(kg, {"h", "missing", "t"}), LookupError);
}

TEST_CASE("margin_ranking_loss hinges on the margin", "[kgembed][loss]") {
  auto kg = hand_kg();
  // d(pos) = 0, d(neg) = |(1,0)+(1,0)-(-2,-4)| = sqrt(32)
  double loss = margin_ranking_loss(kg, {{"h", "r", "t"}}, {{"t", "r", "far"}}, 1.0, Norm::L2);
  CHECK(loss == 0.0);
  // swapped: 1 + sqrt(32) - 0
  double swapped = margin_ranking_loss(kg, {{"t", "r", "far"}}, {{"h", "r", "t"}}, 1.0, Norm::L2);
  CHECK_THAT(swapped, WithinAbs(1.0 + std::sqrt(32.0), 1e-12));
  CHECK_THROWS_AS(margin_ranking_loss(kg, {}, {}, 1.0, Norm::L2), ValidationError);
}

TEST_CASE("TransE learns a two-step chain", "[kgembed][train]") {
  TransEConfig cfg{.dim = 8, .epochs = 200, .margin = 0.5, .learning_rate = 0.1, .seed = 1};
  auto kg = train_transe(chain(), cfg);
  REQUIRE(kg.entities.rows() == 3);
  REQUIRE(kg.relations.rows() == 1);
  for (const auto& t : chain()) {
    const double truth = score_triple(kg, t);
    for (const auto& e : kg.entities.index()) {
      if (e != t.tail) CHECK(score_triple(kg, {t.head, t.relation, e}) < truth);
      if (e != t.head) CHECK(score_triple(kg, {e, t.relation, t.tail}) < truth);
    }
    CHECK(corruption_rank(kg, t, true) == 1);
    CHECK(corruption_rank(kg, t, false) == 1);
  }
  CHECK(link_prediction_hits(kg, chain(), 1) == 1.0);
}

TEST_CASE("TransE output shape, norms, and determinism", "[kgembed][train]") {
  std::vector<Triple> triples;
  for (int i = 0; i < 30; ++i)
    triples.push_back({"e" + std::to_string(i), "r" + std::to_string(i % 3), "e" + std::to_string((i * 7 + 3) % 30)});
  TransEConfig cfg{.dim = 300, .epochs = 5, .seed = 3};
  auto kg = train_transe(triples, cfg);
  CHECK(kg.dim == 300);
  CHECK(kg.entities.dim() == 300);
  CHECK(kg.relations.dim() == 300);
  CHECK(kg.loss_history.size() == 5);
  for (std::size_t i = 0; i < kg.entities.rows(); ++i) CHECK_THAT(norm_of(kg.entities.row(i)), WithinAbs(1.0, 1e-9));
  CHECK(std::is_sorted(kg.entities.index().begin(), kg.entities.index().end()));
  auto again = train_transe(triples, cfg);
  CHECK(again.entities == kg.entities);
  CHECK(again.relations == kg.relations);
  CHECK(again.loss_history == kg.loss_history);
  cfg.seed = 4;
  CHECK_FALSE(train_transe(triples, cfg).entities == kg.entities);
}

TEST_CASE("TransE probe loss decreases over training", "[kgembed][train]") {
  auto data = make_synthetic({.relations = 4, .entities = 40, .triples_per_relation = 30, .seed = 2});
  TransEConfig cfg{.dim = 16, .epochs = 60, .seed = 5};
  auto kg = train_transe(data.triples, cfg);
  REQUIRE(kg.loss_history.size() == 60);
  double early = 0.0, late = 0.0;
  for (std::size_t e = 0; e < 10; ++e) early += kg.loss_history[e];
  for (std::size_t e = 50; e < 60; ++e) late += kg.loss_history[e];
  CHECK(late < early);
  CHECK(kg.loss_history.back() < kg.initial_probe_loss);
}

TEST_CASE("trained relations act as translations", "[kgembed][train]") {
  auto data = make_synthetic({.relations = 3, .entities = 30, .triples_per_relation = 25, .seed = 8});
  auto kg = train_transe(data.triples, {.dim = 16, .epochs = 150, .seed = 8});
  // True triples should on average sit closer than random corruptions.
  Rng rng(99);
  double pos = 0.0, neg = 0.0;
  for (const auto& t : data.triples) {
    pos += score_triple(kg, t);
    const auto& ids = kg.entities.index();
    neg += score_triple(kg, {t.head, t.relation, ids[uniform_index(rng, ids.size())]});
  }
  CHECK(pos > neg);
}

TEST_CASE("train_transe rejects bad inputs", "[kgembed][train]") {
  CHECK_THROWS_AS(train_transe({}, {}), ValidationError);
  CHECK_THROWS_AS(train_transe(chain(), {.dim = 0}), ValidationError);
  CHECK_THROWS_AS(train_transe(chain(), {.margin = 0.0}), ValidationError);
  CHECK_THROWS_AS(train_transe({{"a", "", "b"}}, {}), ValidationError);
}

TEST_CASE("triple keys round trip", "[kgembed][keys]") {
  Triple t{"/m/a", "/people/person/born", "/m/b"};
  CHECK(triple_key(t) == "/m/a|/people/person/born|/m/b");
  CHECK(parse_triple_key(triple_key(t)) == t);
  CHECK_THROWS_AS(triple_key({"a|b", "r", "c"}), ValidationError);
  CHECK_THROWS_AS(parse_triple_key("a|b"), ValidationError);
  CHECK_THROWS_AS(parse_triple_key("a|b|c|d"), ValidationError);
}

TEST_CASE("concat_triples stacks head, relation and tail", "[kgembed][concat]") {
  auto kg = train_transe(chain(), {.dim = 300, .epochs = 2, .seed = 1});
  auto dup = chain();
  dup.push_back(chain()[0]);
  auto m = concat_triples(kg, dup);
  CHECK(m.rows() == 2);
  CHECK(m.dim() == 900);
  CHECK(m.method() == "transe-concat");
  CHECK(m.index()[0] == triple_key(chain()[0]));
  for (std::size_t c = 0; c < 300; ++c) {
    CHECK(m.row(0)[c] == kg.entity("a")[c]);
    CHECK(m.row(0)[300 + c] == kg.relation("next")[c]);
    CHECK(m.row(0)[600 + c] == kg.entity("b")[c]);
    CHECK(m.row(0)[300 + c] == m.row(1)[300 + c]);
  }
  CHECK_THROWS_AS(concat_triples(kg, {{"a", "next", "zz"}}), LookupError);
}

TEST_CASE("save_kg and load_kg round trip", "[kgembed][io]") {
  auto dir = kgalign::testing::scratch_dir("kg_io");
  auto kg = train_transe(chain(), {.dim = 4, .epochs = 3, .norm = Norm::L1, .seed = 11});
  save_kg(dir, kg);
  auto back = load_kg(dir);
  CHECK(back.dim == 4);
  CHECK(back.config.norm == Norm::L1);
  CHECK(back.config.seed == 11);
  CHECK(back.entities.index() == kg.entities.index());
  for (std::size_t i = 0; i < kg.entities.data().size(); ++i)
    CHECK_THAT(back.entities.data()[i], WithinAbs(kg.entities.data()[i], 1e-6));
}
