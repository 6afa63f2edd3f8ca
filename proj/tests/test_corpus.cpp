#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "test_helpers.hpp"

using namespace kgalign;
using kgalign::testing::sentence;

namespace {

WordVectorTable vectors_from(const std::string& text) {
  std::istringstream in(text);
  return load_word_vectors(in);
}

std::vector<AnnotatedSentence> corpus_from(const std::string& text) {
  std::istringstream in(text);
  return load_corpus(in);
}

const char* kRecord =
    R"({"sentence": "Tolkien wrote The Hobbit", "head": {"mid": "/m/x", "text": "Tolkien"}, )"
    R"("tail": {"mid": "/m/y", "text": "The Hobbit"}, "relation": "author_of"})";

}  // namespace

TEST_CASE("load_word_vectors reads token lines", "[corpus][vectors]") {
  auto table = vectors_from("a 1.0 0.0\nb 0.0 1.0\n");
  CHECK(table.dim == 2);
  CHECK(table.size() == 2);
  CHECK(*table.find("b") == std::vector<double>{0.0, 1.0});
}

TEST_CASE("load_word_vectors error paths", "[corpus][vectors]") {
  CHECK_THROWS_AS(vectors_from(""), ValidationError);
  CHECK_THROWS_AS(vectors_from("a 1 0\nb 1 0 0\n"), DimensionMismatchError);
  try {
    vectors_from("a 1 0\nb 1 0 0\n");
  } catch (const DimensionMismatchError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 2"));
  }
  CHECK_THROWS_AS(vectors_from("a 1 x\n"), ParseError);
  CHECK_THROWS_AS(vectors_from("a\n"), ParseError);
  CHECK_THROWS_AS(vectors_from("a 1 2\na 3 4\n"), DuplicateError);
  try {
    vectors_from("a 1 2\nb 1 nope\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("lowercasing is applied only when requested", "[corpus]") {
  std::istringstream in("Apple 1\n");
  auto table = load_word_vectors(in, {true});
  CHECK(table.find("apple"));
  CHECK_FALSE(vectors_from("Apple 1\n").find("apple"));
}

TEST_CASE("load_corpus parses records in file order", "[corpus]") {
  auto one = corpus_from(std::string(kRecord) + "\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].id == 0);
  CHECK(one[0].tokens == std::vector<std::string>{"Tolkien", "wrote", "The", "Hobbit"});
  CHECK(one[0].head == EntityMention{"Tolkien", "/m/x"});
  CHECK(one[0].relation == "author_of");

  auto three = corpus_from(std::string(kRecord) + "\n" + kRecord + "\n\n" + kRecord + "\n");
  REQUIRE(three.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(three[i].id == i);
}

TEST_CASE("load_corpus reports missing fields and empty sentences", "[corpus]") {
  std::string no_relation = R"({"sentence": "a b", "head": {"mid": "/m/x", "text": "a"}, "tail": {"mid": "/m/y", "text": "b"}})";
  try {
    corpus_from(std::string(kRecord) + "\n" + no_relation + "\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("relation"));
  }
  std::string no_mid = R"({"sentence": "a b", "head": {"text": "a"}, "tail": {"mid": "/m/y", "text": "b"}, "relation": "r"})";
  CHECK_THROWS_WITH(corpus_from(no_mid), Catch::Matchers::ContainsSubstring("head.mid"));
  std::string empty = R"({"sentence": "  ", "head": {"mid": "/m/x", "text": "a"}, "tail": {"mid": "/m/y", "text": "b"}, "relation": "r"})";
  CHECK_THROWS_AS(corpus_from(empty), ValidationError);
  CHECK_THROWS_AS(corpus_from("{not json\n"), ParseError);
}

TEST_CASE("corpus serialisation round-trips", "[corpus][property]") {
  auto data = make_synthetic({.relations = 3, .entities = 10, .triples_per_relation = 4, .sentences_per_triple = 2,
                              .extra_kg_triples = 2, .word_dim = 4, .seed = 3});
  std::stringstream ss;
  save_corpus(ss, data.sentences);
  CHECK(load_corpus(ss) == data.sentences);

  std::stringstream ts;
  save_triples(ts, data.triples);
  CHECK(load_triples(ts) == data.triples);

  std::stringstream vs;
  save_word_vectors(vs, data.vectors);
  auto back = load_word_vectors(vs);
  CHECK(back.dim == data.vectors.dim);
  CHECK(back.entries == data.vectors.entries);
}

TEST_CASE("load_triples validates field count", "[corpus]") {
  std::istringstream ok("/m/a\tr\t/m/b\n");
  CHECK(load_triples(ok) == std::vector<Triple>{{"/m/a", "r", "/m/b"}});
  std::istringstream bad("/m/a\tr\n");
  CHECK_THROWS_AS(load_triples(bad), ParseError);
}

namespace {

std::vector<AnnotatedSentence> labelled(const std::vector<std::pair<std::string, std::size_t>>& counts) {
  std::vector<AnnotatedSentence> out;
  for (const auto& [rel, n] : counts)
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence(out.size(), {"w"}, rel));
  return out;
}

std::size_t count_rel(const std::set<SentenceId>& part, const std::vector<AnnotatedSentence>& s, const std::string& rel) {
  std::size_t n = 0;
  for (auto id : part) n += s[id].relation == rel;
  return n;
}

}  // namespace

TEST_CASE("stratified_split takes per-relation floors", "[corpus][split]") {
  auto s = labelled({{"A", 80}, {"B", 20}});
  auto split = stratified_split(s, 0.25, 0.0, 1);
  // floor(0.25 * 80) = 20, floor(0.25 * 20) = 5
  CHECK(count_rel(split.test, s, "A") == 20);
  CHECK(count_rel(split.test, s, "B") == 5);
  CHECK(split.valid.empty());
  CHECK(split.train.size() == 75);

  auto with_valid = stratified_split(s, 0.25, 0.35, 1);
  // A: remaining 60 -> floor(21.0) = 21; B: remaining 15 -> floor(5.25) = 5
  CHECK(count_rel(with_valid.valid, s, "A") == 21);
  CHECK(count_rel(with_valid.valid, s, "B") == 5);
}

TEST_CASE("stratified_split keeps a training sentence per relation", "[corpus][split]") {
  auto s = labelled({{"rare", 1}, {"pair", 2}, {"common", 30}});
  auto split = stratified_split(s, 0.9, 0.9, 4);
  CHECK(count_rel(split.train, s, "rare") == 1);
  CHECK(count_rel(split.train, s, "pair") >= 1);
  CHECK(count_rel(split.train, s, "common") >= 1);
}

TEST_CASE("stratified_split validates fractions", "[corpus][split]") {
  auto s = labelled({{"A", 4}});
  CHECK_THROWS_AS(stratified_split(s, 0.0, 0.1, 0), ValidationError);
  CHECK_THROWS_AS(stratified_split(s, 1.0, 0.1, 0), ValidationError);
  CHECK_THROWS_AS(stratified_split(s, 0.5, 1.0, 0), ValidationError);
  CHECK_THROWS_AS(stratified_split(s, 0.5, -0.1, 0), ValidationError);
}

TEST_CASE("stratified_split properties over random corpora", "[corpus][split][property]") {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::pair<std::string, std::size_t>> counts;
    std::size_t n_rel = 1 + uniform_index(rng, 6);
    for (std::size_t r = 0; r < n_rel; ++r) counts.push_back({"r" + std::to_string(r), 1 + uniform_index(rng, 60)});
    auto s = labelled(counts);
    double tf = 0.05 + 0.9 * uniform01(rng), vf = 0.9 * uniform01(rng);
    std::uint64_t seed = rng();
    auto split = stratified_split(s, tf, vf, seed);

    // disjoint and covering
    CHECK(split.train.size() + split.valid.size() + split.test.size() == s.size());
    std::set<SentenceId> all;
    for (auto* part : {&split.train, &split.valid, &split.test}) all.insert(part->begin(), part->end());
    CHECK(all.size() == s.size());

    // stratification within one sentence per relation
    for (const auto& [rel, n] : counts) {
      double frac = static_cast<double>(count_rel(split.test, s, rel)) / static_cast<double>(n);
      CHECK(std::abs(frac - tf) <= 1.0 / static_cast<double>(n) + 1e-12);
      CHECK(count_rel(split.train, s, rel) >= 1);
    }

    CHECK(stratified_split(s, tf, vf, seed) == split);
  }
}

TEST_CASE("different seeds give different splits", "[corpus][split]") {
  auto s = labelled({{"A", 50}, {"B", 50}});
  CHECK_FALSE(stratified_split(s, 0.25, 0.35, 1) == stratified_split(s, 0.25, 0.35, 2));
}

TEST_CASE("pair_sentences_with_triples uses head mid, relation, tail mid", "[corpus]") {
  auto pairs = pair_sentences_with_triples({sentence(0, {"a"}, "author_of", "/m/x", "/m/y")});
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == SentenceTriple{0, {"/m/x", "author_of", "/m/y"}});

  auto two = pair_sentences_with_triples({sentence(0, {"a"}, "r", "/m/x", "/m/y"), sentence(1, {"b"}, "r", "/m/x", "/m/y")});
  CHECK(two[0].triple == two[1].triple);
  CHECK(two[1].sentence == 1);

  CHECK(pair_sentences_with_triples({}).empty());
}
