#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "test_helpers.hpp"

using namespace kgalign;
using kgalign::testing::matrix_of;

namespace {

std::string serialize(const EmbeddingMatrix& m) {
  std::ostringstream out(std::ios::binary);
  write_matrix(out, m);
  return out.str();
}

EmbeddingMatrix deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_matrix(in);
}

}  // namespace

TEST_CASE("EmbeddingMatrix enforces its invariants", "[matrix]") {
  CHECK_THROWS_AS(EmbeddingMatrix(2, 2, {1, 2, 3}, "m", {"a", "b"}), DimensionMismatchError);
  CHECK_THROWS_AS(EmbeddingMatrix(2, 1, {1, 2}, "m", {"a"}), DimensionMismatchError);
  CHECK_THROWS_AS(EmbeddingMatrix(2, 1, {1, 2}, "m", {"a", "a"}), DuplicateError);
  CHECK_THROWS_AS(EmbeddingMatrix(1, 1, {1}, "", {"a"}), ValidationError);
  CHECK_THROWS_AS(EmbeddingMatrix(1, 1, {std::nan("")}, "m", {"a"}), ValidationError);

  EmbeddingMatrix m(2, 2, {1, 2, 3, 4}, "m", {"x", "y"});
  CHECK(m.find("y") == 1u);
  CHECK_FALSE(m.find("z"));
  CHECK(m.row(1)[0] == 3.0);
}

TEST_CASE("binary matrix format has the documented byte layout", "[matrix][format]") {
  auto bytes = serialize(EmbeddingMatrix(1, 2, {1.0, -2.0}, "ab", {"k"}));
  // magic 5 + label len 4 + label 2 + rows 8 + dim 8 + values 8 + index (4 + 1)
  REQUIRE(bytes.size() == 5 + 4 + 2 + 8 + 8 + 8 + 5);
  CHECK(bytes.substr(0, 5) == "EMBX1");
  CHECK(bytes[5] == 2);
  CHECK(bytes.substr(9, 2) == "ab");
  CHECK(bytes[11] == 1);  // rows, little-endian
  CHECK(bytes[19] == 2);  // dim
  float first = 0;
  std::memcpy(&first, bytes.data() + 27, 4);
  CHECK(first == 1.0f);
  CHECK(bytes.substr(bytes.size() - 1) == "k");
}

TEST_CASE("write then ingest reproduces the matrix", "[matrix][format]") {
  auto m = matrix_of({{0.5, 1.0, -2.0}, {4.0, 0.25, 8.0}}, "laser");
  auto dir = kgalign::testing::scratch_dir("matrix_roundtrip");
  write_matrix(dir / "m.embx", m);
  CHECK(ingest_external(dir / "m.embx") == m);
}

TEST_CASE("round trip holds for float-representable random matrices", "[matrix][format][property]") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t rows = 1 + uniform_index(rng, 6), dim = 1 + uniform_index(rng, 9);
    std::vector<double> data(rows * dim);
    for (auto& v : data) v = static_cast<float>(uniform(rng, -100, 100));
    std::vector<std::string> index;
    for (std::size_t i = 0; i < rows; ++i) index.push_back("item-" + std::to_string(uniform_index(rng, 1000)) + "-" + std::to_string(i));
    EmbeddingMatrix m(rows, dim, data, "method-" + std::to_string(trial), index);
    CHECK(deserialize(serialize(m)) == m);
  }
}

TEST_CASE("matrix reader rejects damaged files", "[matrix][format]") {
  auto bytes = serialize(matrix_of({{1, 2, 3}, {4, 5, 6}}));
  SECTION("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(deserialize(bad), FormatError);
  }
  SECTION("truncated anywhere") {
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{20}, std::size_t{40}, bytes.size() - 1})
      CHECK_THROWS_AS(deserialize(bytes.substr(0, cut)), FormatError);
  }
  SECTION("trailing garbage") { CHECK_THROWS_AS(deserialize(bytes + "zz"), FormatError); }
  SECTION("header promising an absurd shape") {
    auto bad = bytes;
    bad[5 + 4 + 4 + 7] = 0x7f;  // high byte of rows
    CHECK_THROWS_AS(deserialize(bad), FormatError);
  }
}

TEST_CASE("ingest keeps a SentBERT-shaped header dimension", "[matrix][format]") {
  auto m = kgalign::testing::random_matrix(3, 768, 5, -1, 1, "sentbert");
  auto dir = kgalign::testing::scratch_dir("matrix_768");
  write_matrix(dir / "sb.embx", m);
  auto back = ingest_external(dir / "sb.embx");
  CHECK(back.dim() == 768);
  CHECK(back.method() == "sentbert");
}
