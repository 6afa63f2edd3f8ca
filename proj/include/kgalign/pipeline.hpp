#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/align.hpp"
#include "kgalign/annindex.hpp"
#include "kgalign/clusterability.hpp"
#include "kgalign/compose.hpp"
#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/kgembed.hpp"
#include "kgalign/report.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

inline constexpr const char* kVersion = "kgalign 0.1.0";

struct PipelineConfig {
  std::filesystem::path word_vectors;
  std::filesystem::path corpus;
  std::filesystem::path triples;
  std::filesystem::path out_dir = "kgalign-out";
  bool lowercase = false;

  double test_fraction = 0.25;
  double valid_fraction = 0.35;

  std::vector<std::string> methods = {"glove-mean", "glove-dct", "gem-glove", "random"};
  std::vector<std::filesystem::path> external_matrices;
  std::size_t dct_k = 0;
  std::size_t gem_window = 7;
  std::size_t gem_components = 1;
  std::size_t random_dim = 300;

  TransEConfig kg;
  TrainConfig align;

  std::size_t bins = 20;
  std::size_t reference_sets = 500;
  unsigned cluster_threads = 0;
  bool scatter_svg = true;

  std::size_t ann_trees = 10;
  std::size_t ann_leaf_capacity = 32;
  std::size_t ann_search_k = 0;
  bool relation_level = false;

  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& native_methods() {
  static const std::vector<std::string> names = {"glove-mean", "glove-dct", "gem-glove", "random"};
  return names;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("expected a boolean, got '" + v + "'");
}

inline std::size_t parse_count(const std::string& v) {
  std::size_t pos = 0;
  if (v.empty() || v[0] == '-') throw ValidationError("expected a non-negative integer, got '" + v + "'");
  auto n = std::stoull(v, &pos);
  if (pos != v.size()) throw ValidationError("expected an integer, got '" + v + "'");
  return n;
}

inline double parse_real(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size()) throw ValidationError("expected a number, got '" + v + "'");
  return d;
}

inline std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ConfigKey {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define KGALIGN_KEY(name, field, parse, render)                                                   \
  {                                                                                               \
    name, ConfigKey {                                                                             \
      [=](PipelineConfig& c, const std::string& v) { c.field = parse(v); },                       \
          [=](const PipelineConfig& c) { return render(c.field); }                                \
    }                                                                                             \
  }

inline const std::map<std::string, ConfigKey>& config_keys() {
  auto path = [](const std::string& v) { return std::filesystem::path(v); };
  auto path_str = [](const std::filesystem::path& p) { return p.string(); };
  auto boolean = [](bool b) { return std::string(b ? "true" : "false"); };
  auto count = [](std::size_t n) { return std::to_string(n); };
  auto uns = [](const std::string& v) { return static_cast<unsigned>(parse_count(v)); };
  auto parse_seed = [](const std::string& v) { return static_cast<std::uint64_t>(parse_count(v)); };
  auto paths = [](const std::string& v) {
    std::vector<std::filesystem::path> out;
    for (auto& s : split_list(v)) out.emplace_back(s);
    return out;
  };
  auto paths_str = [](const std::vector<std::filesystem::path>& ps) {
    std::vector<std::string> s;
    for (auto& p : ps) s.push_back(p.string());
    return join_list(s);
  };
  auto norm_str = [](Norm n) { return to_string(n); };
  auto norm = [](const std::string& v) { return parse_norm(v); };
  static const std::map<std::string, ConfigKey> keys = {
      KGALIGN_KEY("paths.word_vectors", word_vectors, path, path_str),
      KGALIGN_KEY("paths.corpus", corpus, path, path_str),
      KGALIGN_KEY("paths.triples", triples, path, path_str),
      KGALIGN_KEY("paths.out_dir", out_dir, path, path_str),
      KGALIGN_KEY("corpus.lowercase", lowercase, parse_bool, boolean),
      KGALIGN_KEY("split.test_fraction", test_fraction, parse_real, show),
      KGALIGN_KEY("split.valid_fraction", valid_fraction, parse_real, show),
      KGALIGN_KEY("compose.methods", methods, split_list, join_list),
      KGALIGN_KEY("compose.external", external_matrices, paths, paths_str),
      KGALIGN_KEY("compose.dct_k", dct_k, parse_count, count),
      KGALIGN_KEY("compose.gem_window", gem_window, parse_count, count),
      KGALIGN_KEY("compose.gem_components", gem_components, parse_count, count),
      KGALIGN_KEY("compose.random_dim", random_dim, parse_count, count),
      KGALIGN_KEY("kg.dim", kg.dim, parse_count, count),
      KGALIGN_KEY("kg.epochs", kg.epochs, parse_count, count),
      KGALIGN_KEY("kg.margin", kg.margin, parse_real, show),
      KGALIGN_KEY("kg.learning_rate", kg.learning_rate, parse_real, show),
      KGALIGN_KEY("kg.negatives", kg.negatives_per_positive, parse_count, count),
      KGALIGN_KEY("kg.norm", kg.norm, norm, norm_str),
      KGALIGN_KEY("align.learning_rate", align.learning_rate, parse_real, show),
      KGALIGN_KEY("align.batch_size", align.batch_size, parse_count, count),
      KGALIGN_KEY("align.max_epochs", align.max_epochs, parse_count, count),
      KGALIGN_KEY("align.patience", align.patience, parse_count, count),
      KGALIGN_KEY("align.weight_decay", align.weight_decay, parse_real, show),
      KGALIGN_KEY("align.lr_decay", align.lr_decay, parse_real, show),
      KGALIGN_KEY("cluster.bins", bins, parse_count, count),
      KGALIGN_KEY("cluster.reference_sets", reference_sets, parse_count, count),
      KGALIGN_KEY("cluster.threads", cluster_threads, uns, count),
      KGALIGN_KEY("cluster.svg", scatter_svg, parse_bool, boolean),
      KGALIGN_KEY("ann.n_trees", ann_trees, parse_count, count),
      KGALIGN_KEY("ann.leaf_capacity", ann_leaf_capacity, parse_count, count),
      KGALIGN_KEY("ann.search_k", ann_search_k, parse_count, count),
      KGALIGN_KEY("eval.relation_level", relation_level, parse_bool, boolean),
      KGALIGN_KEY("seed", seed, parse_seed, count),
  };
  return keys;
}

#undef KGALIGN_KEY

}  // namespace detail

inline void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
  const auto& keys = detail::config_keys();
  auto it = keys.find(key);
  if (it == keys.end()) throw ValidationError("unknown config key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const std::logic_error&) {
    throw ValidationError("bad value '" + value + "' for config key '" + key + "'");
  } catch (const ValidationError& e) {
    throw ValidationError("config key '" + key + "': " + e.what());
  }
}

/// Applies a `key=value` override.
inline void apply_override(PipelineConfig& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' is not key=value");
  set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

/// Flat `key = value` lines; `#` starts a comment. Unknown keys are errors.
inline PipelineConfig parse_config(std::istream& in, PipelineConfig config = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    auto trim = [](std::string s) {
      auto l = s.find_first_not_of(" \t\r");
      auto r = s.find_last_not_of(" \t\r");
      return l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
    };
    try {
      set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return config;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

inline void write_config(std::ostream& out, const PipelineConfig& config) {
  for (const auto& [key, handler] : detail::config_keys()) out << key << " = " << handler.get(config) << '\n';
}

inline void validate_config(const PipelineConfig& c) {
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ValidationError("split.test_fraction must lie in (0,1)");
  if (!(c.valid_fraction >= 0.0 && c.valid_fraction < 1.0))
    throw ValidationError("split.valid_fraction must lie in [0,1)");
  for (const auto& m : c.methods)
    if (std::find(native_methods().begin(), native_methods().end(), m) == native_methods().end())
      throw ValidationError("unknown compose method '" + m + "' (valid: " + detail::join_list(native_methods()) + ")");
  if (c.dct_k > 6) throw ValidationError("compose.dct_k must be at most 6");
  if (c.gem_window < 1) throw ValidationError("compose.gem_window must be >= 1");
  if (c.bins < 1 || c.reference_sets < 1) throw ValidationError("cluster.bins and cluster.reference_sets must be >= 1");
  if (c.ann_trees < 1 || c.ann_leaf_capacity < 1) throw ValidationError("ann.n_trees and ann.leaf_capacity must be >= 1");
  c.align.validate();
}

/// Output layout under the run directory.
struct RunLayout {
  std::filesystem::path root;
  std::filesystem::path split() const { return root / "split.tsv"; }
  std::filesystem::path embeddings() const { return root / "embeddings"; }
  std::filesystem::path matrix(const std::string& name) const { return embeddings() / (name + ".embx"); }
  std::filesystem::path excluded(const std::string& name) const { return embeddings() / (name + ".excluded.txt"); }
  std::filesystem::path kg() const { return root / "kg"; }
  std::filesystem::path triples_matrix() const { return kg() / "triples.embx"; }
  std::filesystem::path maps() const { return root / "maps"; }
  std::filesystem::path map_stem(const std::string& name) const { return maps() / name; }
  std::filesystem::path figures() const { return root / "figures"; }
  std::filesystem::path table1_csv() const { return root / "table1_clusterability.csv"; }
  std::filesystem::path table2_csv() const { return root / "table2_alignment.csv"; }
  std::filesystem::path manifest() const { return root / "manifest.txt"; }
};

/// Stage runner holding the effective configuration. Each stage reads its
/// inputs from the configured paths or from earlier stages' outputs under the
/// run directory, so any stage can be re-run alone.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream* log = nullptr)
      : config_(std::move(config)), layout_{config_.out_dir}, log_(log) {
    validate_config(config_);
  }

  const PipelineConfig& config() const noexcept { return config_; }
  const RunLayout& layout() const noexcept { return layout_; }

  std::uint64_t stage_seed(const std::string& stage) const { return derive_seed(config_.seed, stage); }

  // ---- inputs -------------------------------------------------------------
  std::vector<AnnotatedSentence> load_sentences() const {
    require_path(config_.corpus, "paths.corpus");
    return load_corpus(config_.corpus, {config_.lowercase});
  }

  WordVectorTable load_vectors() const {
    require_path(config_.word_vectors, "paths.word_vectors");
    return load_word_vectors(config_.word_vectors, {config_.lowercase});
  }

  /// KG facts: the triple store followed by corpus facts it lacks.
  std::vector<Triple> load_kg_triples(const std::vector<AnnotatedSentence>& sentences) const {
    std::vector<Triple> triples;
    if (!config_.triples.empty()) {
      require_path(config_.triples, "paths.triples");
      triples = load_triples(config_.triples);
    }
    std::set<Triple> known(triples.begin(), triples.end());
    for (const auto& p : pair_sentences_with_triples(sentences))
      if (known.insert(p.triple).second) triples.push_back(p.triple);
    return triples;
  }

  // ---- stages -------------------------------------------------------------
  SplitAssignment run_split() const {
    auto sentences = load_sentences();
    auto split = stratified_split(sentences, config_.test_fraction, config_.valid_fraction, stage_seed("split"));
    std::filesystem::create_directories(layout_.root);
    std::ofstream out(layout_.split());
    if (!out) throw IoError("cannot write " + layout_.split().string());
    for (const auto& s : sentences) {
      const char* part = split.test.count(s.id) ? "test" : split.valid.count(s.id) ? "valid" : "train";
      out << s.id << '\t' << part << '\n';
    }
    note("split: " + std::to_string(split.train.size()) + " train, " + std::to_string(split.valid.size()) +
         " valid, " + std::to_string(split.test.size()) + " test");
    return split;
  }

  /// Reads split.tsv, creating it first when absent.
  SplitAssignment load_split() const {
    if (!std::filesystem::exists(layout_.split())) return run_split();
    std::ifstream in(layout_.split());
    if (!in) throw IoError("cannot open " + layout_.split().string());
    SplitAssignment split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ParseError("expected id<TAB>part", line_no);
      SentenceId id = std::stoull(line.substr(0, tab));
      std::string part = line.substr(tab + 1);
      if (part == "train") split.train.insert(id);
      else if (part == "valid") split.valid.insert(id);
      else if (part == "test") split.test.insert(id);
      else throw ParseError("unknown split part '" + part + "'", line_no);
    }
    return split;
  }

  /// Composes (or ingests) one method and writes its matrix plus the list of
  /// sentences excluded for having no in-vocabulary tokens.
  EmbeddingMatrix run_compose(const std::string& method) const {
    auto sentences = load_sentences();
    Composition comp;
    if (method == "random") {
      comp = compose_random(sentences, config_.random_dim, stage_seed("compose-random"));
    } else if (method == "glove-mean" || method == "glove-dct" || method == "gem-glove") {
      auto table = load_vectors();
      if (method == "glove-mean") comp = compose_mean(sentences, table);
      else if (method == "glove-dct") comp = compose_dct(sentences, table, config_.dct_k);
      else comp = compose_gem(sentences, table, config_.gem_window, config_.gem_components);
    } else {
      throw ValidationError("unknown compose method '" + method + "' (valid: " +
                            detail::join_list(native_methods()) + ")");
    }
    std::filesystem::create_directories(layout_.embeddings());
    write_matrix(layout_.matrix(method), comp.matrix);
    std::ofstream ex(layout_.excluded(method));
    for (auto id : comp.excluded) ex << id << '\n';
    note("compose " + method + ": " + std::to_string(comp.matrix.rows()) + " rows, dim " +
         std::to_string(comp.matrix.dim()) + ", " + std::to_string(comp.excluded.size()) + " excluded");
    return comp.matrix;
  }

  /// Native methods followed by external matrices, by file-name key.
  std::vector<std::string> method_names() const {
    std::vector<std::string> names = config_.methods;
    for (const auto& p : config_.external_matrices) names.push_back(p.stem().string());
    return names;
  }

  void run_compose_all() const {
    for (const auto& m : config_.methods) run_compose(m);
    for (const auto& p : config_.external_matrices) {
      require_path(p, "compose.external");
      auto matrix = ingest_external(p);
      std::filesystem::create_directories(layout_.embeddings());
      write_matrix(layout_.matrix(p.stem().string()), matrix);
      std::ofstream(layout_.excluded(p.stem().string()));
      note("ingest " + p.string() + ": " + std::to_string(matrix.rows()) + " rows, dim " + std::to_string(matrix.dim()));
    }
  }

  KgEmbedding run_train_kg() const {
    auto sentences = load_sentences();
    auto triples = load_kg_triples(sentences);
    TransEConfig cfg = config_.kg;
    cfg.seed = stage_seed("kg");
    auto kg = train_transe(triples, cfg);
    save_kg(layout_.kg(), kg);
    write_matrix(layout_.triples_matrix(), concat_triples(kg, triples));
    note("train-kg: " + std::to_string(kg.entities.rows()) + " entities, " + std::to_string(kg.relations.rows()) +
         " relations, " + std::to_string(triples.size()) + " triples, probe loss " + fixed(kg.initial_probe_loss, 4) +
         " -> " + fixed(kg.loss_history.empty() ? kg.initial_probe_loss : kg.loss_history.back(), 4));
    return kg;
  }

  std::vector<SpatialHistogramReport> run_cluster() const {
    std::vector<SpatialHistogramReport> reports;
    for (const auto& name : method_names()) {
      auto matrix = read_matrix(layout_.matrix(name));
      ClusterabilityOptions opts;
      opts.bins_per_axis = config_.bins;
      opts.reference_sets = config_.reference_sets;
      opts.seed = stage_seed("cluster:" + name);
      opts.threads = config_.cluster_threads;
      reports.push_back(clusterability(matrix, opts));
      note("cluster " + name + ": kl_mean " + fixed(reports.back().kl_mean, 4) + " kl_std " +
           fixed(reports.back().kl_std, 4));
      if (config_.scatter_svg) {
        std::filesystem::create_directories(layout_.figures());
        std::ofstream svg(layout_.figures() / ("pca_" + name + ".svg"));
        write_scatter_svg(svg, pca_project(matrix, 2), matrix.method());
      }
    }
    write_file(layout_.table1_csv(), [&](std::ostream& o) { write_clusterability_csv(o, reports); });
    write_file(layout_.root / "table1_clusterability.txt", [&](std::ostream& o) { write_clusterability_table(o, reports); });
    return reports;
  }

  /// Source rows paired with the target row of their sentence's triple.
  std::vector<RowPair> sentence_triple_pairs(const EmbeddingMatrix& source, const EmbeddingMatrix& triples,
                                             const std::vector<AnnotatedSentence>& sentences) const {
    std::vector<RowPair> pairs;
    for (const auto& p : pair_sentences_with_triples(sentences)) {
      auto s = source.find(sentence_key(p.sentence));
      if (!s) continue;
      auto t = triples.find(triple_key(p.triple));
      if (!t) throw ValidationError("triple " + triple_key(p.triple) + " missing from the KG matrix");
      pairs.push_back({*s, *t});
    }
    return pairs;
  }

  std::vector<LinearMap> run_align() const {
    auto sentences = load_sentences();
    auto split = load_split();
    auto triples = normalize(read_matrix(layout_.triples_matrix()));
    std::vector<LinearMap> maps;
    std::filesystem::create_directories(layout_.maps());
    for (const auto& name : method_names()) {
      auto source = normalize(read_matrix(layout_.matrix(name)));
      auto parts = partition_pairs(sentence_triple_pairs(source, triples, sentences), split, source);
      TrainConfig cfg = config_.align;
      cfg.seed = stage_seed("align:" + name);
      maps.push_back(train_alignment(source, triples, parts.train, parts.valid, cfg));
      save_linear_map(layout_.map_stem(name), maps.back());
      const auto& last = maps.back().loss_history.back();
      note("align " + name + ": stopped at epoch " + std::to_string(maps.back().stopped_epoch) + ", best epoch " +
           std::to_string(maps.back().best_epoch) + ", valid loss " + fixed(last.valid_loss, 4));
    }
    return maps;
  }

  std::vector<EvalReport> run_evaluate() const {
    auto sentences = load_sentences();
    auto split = load_split();
    auto triples = normalize(read_matrix(layout_.triples_matrix()));
    auto index = build_index(triples, config_.ann_trees, config_.ann_leaf_capacity, stage_seed("ann"));
    std::vector<EvalReport> reports;
    std::vector<std::vector<std::string>> relation_rows;
    for (const auto& name : method_names()) {
      auto source = normalize(read_matrix(layout_.matrix(name)));
      auto map = load_linear_map(layout_.map_stem(name));
      std::vector<TruthPair> truth;
      for (const auto& p : pair_sentences_with_triples(sentences))
        if (split.test.count(p.sentence) && source.find(sentence_key(p.sentence)))
          truth.push_back({sentence_key(p.sentence), triple_key(p.triple)});
      EvalOptions opts;
      opts.search_k = config_.ann_search_k;
      opts.relation_level = config_.relation_level;
      auto report = evaluate_alignment(map, source, truth, triples, index, opts);
      reports.push_back(report);
      note("evaluate " + name + ": hits@5 " + fixed(report.hits_at_5, 4) + " hits@10 " + fixed(report.hits_at_10, 4) +
           " avg sim " + fixed(report.avg_similarity, 4));
    }
    write_file(layout_.table2_csv(), [&](std::ostream& o) { write_alignment_csv(o, reports); });
    write_file(layout_.root / "table2_alignment.txt", [&](std::ostream& o) { write_alignment_table(o, reports); });
    if (config_.relation_level)
      write_file(layout_.root / "table2_relation_level.csv", [&](std::ostream& o) {
        o << "method,relation_hits_at_5,relation_hits_at_10\n";
        for (const auto& r : reports)
          o << csv_field(r.method) << ',' << fixed(r.relation_hits_at_5) << ',' << fixed(r.relation_hits_at_10) << '\n';
      });
    if (std::filesystem::exists(layout_.table1_csv())) {
      auto clusters = read_clusterability_csv(layout_.table1_csv());
      write_file(layout_.root / "correlations.csv",
                 [&](std::ostream& o) { write_correlation_csv(o, correlate_reports(clusters, reports)); });
    }
    return reports;
  }

  /// split -> compose -> train-kg -> cluster -> align -> evaluate, then the manifest.
  void run_all() {
    std::vector<std::string> done;
    auto stage = [&](const std::string& name, auto&& fn) {
      try {
        fn();
      } catch (const std::exception& e) {
        throw Error("stage '" + name + "' failed: " + e.what());
      }
      done.push_back(name);
      write_manifest(done);
    };
    stage("split", [&] { run_split(); });
    stage("compose", [&] { run_compose_all(); });
    stage("train-kg", [&] { run_train_kg(); });
    stage("cluster", [&] { run_cluster(); });
    stage("align", [&] { run_align(); });
    stage("evaluate", [&] { run_evaluate(); });
  }

  void write_manifest(const std::vector<std::string>& completed) const {
    write_file(layout_.manifest(), [&](std::ostream& o) {
      o << "version = " << kVersion << '\n';
      for (const auto& s : completed) o << "stage." << s << " = completed\n";
      for (const char* s : {"split", "compose-random", "kg", "ann"}) o << "seed." << s << " = " << stage_seed(s) << '\n';
      for (const auto& m : method_names()) {
        o << "seed.cluster:" << m << " = " << stage_seed("cluster:" + m) << '\n';
        o << "seed.align:" << m << " = " << stage_seed("align:" + m) << '\n';
      }
      o << "# effective configuration\n";
      write_config(o, config_);
    });
  }

  static std::vector<SpatialHistogramReport> read_clusterability_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<SpatialHistogramReport> rows;
    std::getline(in, line);
    while (std::getline(in, line)) {
      auto fields = detail::split_list(line);
      if (fields.size() != 5) continue;
      rows.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2]), std::stoull(fields[3]), std::stoull(fields[4])});
    }
    return rows;
  }

 private:
  static void require_path(const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ValidationError(std::string(key) + " is not set");
    if (!std::filesystem::exists(p)) throw IoError(std::string(key) + ": " + p.string() + " does not exist");
  }

  template <typename Fn>
  static void write_file(const std::filesystem::path& path, Fn&& fn) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    fn(out);
  }

  void note(const std::string& msg) const {
    if (log_) *log_ << msg << '\n';
  }

  PipelineConfig config_;
  RunLayout layout_;
  std::ostream* log_;
};

}  // namespace kgalign
