// Command-line driver for the sentence/knowledge-graph alignment pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "kgalign/kgalign.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Pipeline config file (flat key = value)");
  cmd->add_option("--out-dir", flags.out_dir, "Run directory (overrides paths.out_dir)");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&flags](std::uint64_t s) {
        flags.seed = s;
        flags.seed_set = true;
      },
      "Global seed (overrides seed)");
  cmd->add_option("--stage-override", flags.overrides, "key=value applied after the config file")->take_all();
}

kgalign::PipelineConfig resolve(const CommonFlags& flags) {
  kgalign::PipelineConfig config = flags.config.empty() ? kgalign::PipelineConfig{} : kgalign::load_config(flags.config);
  for (const auto& o : flags.overrides) kgalign::apply_override(config, o);
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
  if (flags.seed_set) config.seed = flags.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence embedding composition, TransE, clusterability and sentence-to-triple alignment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kgalign::kVersion);

  CommonFlags flags;
  std::string method;
  auto* compose = app.add_subcommand("compose", "Compose sentence embeddings with one method");
  compose->add_option("--method", method, "glove-mean | glove-dct | gem-glove | random")->required();
  auto* train_kg = app.add_subcommand("train-kg", "Train TransE and write [h:r:t] triple embeddings");
  auto* cluster = app.add_subcommand("cluster", "Clusterability table for composed matrices");
  auto* align = app.add_subcommand("align", "Learn linear maps from sentence space to triple space");
  auto* evaluate = app.add_subcommand("evaluate", "Hits@5/Hits@10 and average similarity table");
  auto* run_all = app.add_subcommand("run-all", "Run every stage and write the manifest");
  for (auto* cmd : {compose, train_kg, cluster, align, evaluate, run_all}) add_common(cmd, flags);

  std::string fixture_dir;
  kgalign::SyntheticSpec synth_spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic relation-grouped fixture and a matching config");
  synth->add_option("--dir", fixture_dir, "Output directory")->required();
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--relations", synth_spec.relations, "Relation count");
  synth->add_option("--entities", synth_spec.entities, "Entity count");
  synth->add_option("--word-dim", synth_spec.word_dim, "Word vector dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      auto paths = kgalign::write_fixture(fixture_dir, kgalign::make_synthetic(synth_spec));
      std::ofstream cfg(std::filesystem::path(fixture_dir) / "pipeline.cfg");
      cfg << "paths.word_vectors = " << paths.word_vectors.string() << "\npaths.corpus = " << paths.corpus.string()
          << "\npaths.triples = " << paths.triples.string() << "\npaths.out_dir = "
          << (std::filesystem::path(fixture_dir) / "run").string() << "\ncompose.random_dim = " << synth_spec.word_dim
          << "\nkg.dim = 16\nkg.epochs = 200\nalign.batch_size = 64\ncluster.reference_sets = 50\n";
      std::cout << "fixture written to " << fixture_dir << '\n';
      return 0;
    }
    kgalign::Pipeline pipeline(resolve(flags), &std::cout);
    if (compose->parsed()) {
      pipeline.run_compose(method);
    } else if (train_kg->parsed()) {
      pipeline.run_train_kg();
    } else if (cluster->parsed()) {
      pipeline.run_cluster();
    } else if (align->parsed()) {
      pipeline.run_align();
    } else if (evaluate->parsed()) {
      pipeline.run_evaluate();
    } else if (run_all->parsed()) {
      pipeline.run_all();
      std::cout << "manifest: " << pipeline.layout().manifest().string() << '\n';
    }
  } catch (const kgalign::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const kgalign::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
