#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "test_helpers.hpp"

using namespace kgalign;
using kgalign::testing::read_file;

namespace {

PipelineConfig small_config(const std::filesystem::path& dir, std::uint64_t seed = 0) {
  auto data = make_synthetic({.relations = 3, .entities = 24, .triples_per_relation = 8, .sentences_per_triple = 3,
                              .extra_kg_triples = 10, .word_dim = 12, .seed = 4});
  auto files = write_fixture(dir / "input", data);
  PipelineConfig c;
  c.word_vectors = files.word_vectors;
  c.corpus = files.corpus;
  c.triples = files.triples;
  c.out_dir = dir / "run";
  c.random_dim = 20;
  c.kg.dim = 8;
  c.kg.epochs = 20;
  c.align.batch_size = 16;
  c.align.max_epochs = 8;
  c.align.patience = 4;
  c.reference_sets = 5;
  c.cluster_threads = 1;
  c.ann_trees = 3;
  c.ann_leaf_capacity = 8;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config files parse into the pipeline configuration", "[pipeline][config]") {
  std::istringstream in(
      "# comment line\n"
      "paths.corpus = data/corpus.jsonl   # trailing comment\n"
      "compose.methods = glove-mean, random\n"
      "kg.dim = 50\n"
      "kg.norm = L1\n"
      "align.batch_size=128\n"
      "cluster.svg = false\n"
      "seed = 99\n"
      "\n");
  auto c = parse_config(in);
  CHECK(c.corpus == "data/corpus.jsonl");
  CHECK(c.methods == std::vector<std::string>{"glove-mean", "random"});
  CHECK(c.kg.dim == 50);
  CHECK(c.kg.norm == Norm::L1);
  CHECK(c.align.batch_size == 128);
  CHECK_FALSE(c.scatter_svg);
  CHECK(c.seed == 99);
  CHECK(c.align.learning_rate == 0.001);
  CHECK(c.bins == 20);
  CHECK(c.reference_sets == 500);
}

TEST_CASE("config errors name the offending key or line", "[pipeline][config]") {
  std::istringstream unknown("kg.dimension = 3\n");
  try {
    parse_config(unknown);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("kg.dimension") != std::string::npos);
  }
  std::istringstream bad_value("kg.dim = 3\nkg.epochs = many\n");
  try {
    parse_config(bad_value);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream no_eq("just words\n");
  CHECK_THROWS_AS(parse_config(no_eq), ParseError);
}

TEST_CASE("overrides and config round trip", "[pipeline][config]") {
  PipelineConfig c;
  apply_override(c, "align.max_epochs=7");
  apply_override(c, "compose.dct_k=3");
  CHECK(c.align.max_epochs == 7);
  CHECK(c.dct_k == 3);
  CHECK_THROWS_AS(apply_override(c, "nonsense"), ValidationError);
  CHECK_THROWS_AS(apply_override(c, "no.such.key=1"), ValidationError);

  std::ostringstream out;
  write_config(out, c);
  std::istringstream back_in(out.str());
  auto back = parse_config(back_in);
  std::ostringstream again;
  write_config(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("unknown compose methods list the valid ones", "[pipeline][compose]") {
  auto dir = kgalign::testing::scratch_dir("pipe_method");
  Pipeline p(small_config(dir));
  try {
    p.run_compose("word2vec-mean");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("word2vec-mean") != std::string::npos);
    CHECK(msg.find("glove-mean") != std::string::npos);
    CHECK(msg.find("gem-glove") != std::string::npos);
  }
  auto m = p.run_compose("random");
  CHECK(m.dim() == 20);
  CHECK(std::filesystem::exists(p.layout().matrix("random")));
}

TEST_CASE("validation rejects bad configurations", "[pipeline][config]") {
  auto c = small_config(kgalign::testing::scratch_dir("pipe_validate"));
  c.test_fraction = 1.5;
  CHECK_THROWS_AS(Pipeline(c), ValidationError);
  c = small_config(kgalign::testing::scratch_dir("pipe_validate2"));
  c.dct_k = 9;
  CHECK_THROWS_AS(Pipeline(c), ValidationError);
}

TEST_CASE("run_all produces every artefact and reruns byte-identically", "[pipeline][run]") {
  auto dir = kgalign::testing::scratch_dir("pipe_run");
  auto config = small_config(dir, 3);
  Pipeline p(config);
  p.run_all();
  const auto& L = p.layout();
  for (const auto& name : p.method_names()) {
    CHECK(std::filesystem::exists(L.matrix(name)));
    CHECK(std::filesystem::exists(std::filesystem::path(L.map_stem(name).string() + ".embx")));
    CHECK(std::filesystem::exists(L.figures() / ("pca_" + name + ".svg")));
  }
  CHECK(std::filesystem::exists(L.triples_matrix()));
  auto manifest = read_file(L.manifest());
  for (const char* stage : {"split", "compose", "train-kg", "cluster", "align", "evaluate"})
    CHECK(manifest.find(std::string("stage.") + stage + " = completed") != std::string::npos);
  CHECK(manifest.find("seed = 3") != std::string::npos);

  auto table1 = read_file(L.table1_csv());
  auto table2 = read_file(L.table2_csv());
  CHECK(table1.rfind("method,kl_mean,kl_std,bins,reference_sets\n", 0) == 0);
  CHECK(table2.rfind("method,dim,hits_at_5,hits_at_10,avg_similarity,n_test\n", 0) == 0);
  CHECK(std::count(table2.begin(), table2.end(), '\n') == 5);
  CHECK(std::filesystem::exists(L.root / "correlations.csv"));

  auto rerun = config;
  rerun.out_dir = dir / "run2";
  Pipeline q(rerun);
  q.run_all();
  CHECK(read_file(q.layout().table1_csv()) == table1);
  CHECK(read_file(q.layout().table2_csv()) == table2);
  CHECK(read_file(q.layout().split()) == read_file(L.split()));
}

TEST_CASE("stages can run individually after their inputs exist", "[pipeline][run]") {
  auto dir = kgalign::testing::scratch_dir("pipe_stages");
  auto config = small_config(dir, 1);
  config.methods = {"glove-mean"};
  config.scatter_svg = false;
  Pipeline p(config);
  CHECK_THROWS(p.run_align());  // nothing composed yet
  p.run_compose_all();
  p.run_train_kg();
  auto maps = p.run_align();  // creates the split on demand
  CHECK(std::filesystem::exists(p.layout().split()));
  REQUIRE(maps.size() == 1);
  auto reports = p.run_evaluate();
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].hits_at_10 >= reports[0].hits_at_5);
  CHECK_FALSE(std::filesystem::exists(p.layout().root / "correlations.csv"));
}

TEST_CASE("a failing stage is named in the error", "[pipeline][run]") {
  auto dir = kgalign::testing::scratch_dir("pipe_fail");
  auto config = small_config(dir);
  config.corpus = dir / "missing.jsonl";
  Pipeline p(config);
  try {
    p.run_all();
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage 'split' failed") != std::string::npos);
  }
}
