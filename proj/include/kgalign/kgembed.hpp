#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

enum class Norm { L1, L2 };

inline std::string to_string(Norm n) { return n == Norm::L1 ? "L1" : "L2"; }

inline Norm parse_norm(std::string_view s) {
  if (s == "L1" || s == "l1") return Norm::L1;
  if (s == "L2" || s == "l2") return Norm::L2;
  throw ValidationError("unknown norm '" + std::string(s) + "' (expected L1 or L2)");
}

// Training defaults other than dim are not given by the source experiment; they
// are the usual TransE settings.
struct TransEConfig {
  std::size_t dim = 300;
  std::size_t epochs = 100;
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t negatives_per_positive = 1;
  Norm norm = Norm::L2;
  std::uint64_t seed = 0;
};

struct KgEmbedding {
  std::size_t dim = 0;
  EmbeddingMatrix entities;
  EmbeddingMatrix relations;
  TransEConfig config;
  double initial_probe_loss = 0.0;
  std::vector<double> loss_history;  // probe-batch margin loss after each epoch

  std::span<const double> entity(const std::string& id) const {
    auto row = entities.find(id);
    if (!row) throw LookupError(id);
    return entities.row(*row);
  }
  std::span<const double> relation(const std::string& id) const {
    auto row = relations.find(id);
    if (!row) throw LookupError(id);
    return relations.row(*row);
  }
};

namespace detail {

inline double translation_distance(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                                   Norm norm) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double x = h[i] + r[i] - t[i];
    acc += norm == Norm::L1 ? std::abs(x) : x * x;
  }
  return norm == Norm::L1 ? acc : std::sqrt(acc);
}

}  // namespace detail

/// -||h + r - t|| under the chosen norm; higher is more plausible.
inline double score_triple(const KgEmbedding& kg, const Triple& triple, Norm norm = Norm::L2) {
  return -detail::translation_distance(kg.entity(triple.head), kg.relation(triple.relation), kg.entity(triple.tail),
                                       norm);
}

/// Mean of max(0, margin + d(pos) - d(neg)) over aligned positive/negative lists.
inline double margin_ranking_loss(const KgEmbedding& kg, const std::vector<Triple>& positives,
                                  const std::vector<Triple>& negatives, double margin, Norm norm) {
  if (positives.size() != negatives.size() || positives.empty())
    throw ValidationError("margin_ranking_loss needs equally sized, non-empty batches");
  double total = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i)
    total += std::max(0.0, margin - score_triple(kg, positives[i], norm) + score_triple(kg, negatives[i], norm));
  return total / static_cast<double>(positives.size());
}

namespace detail {

struct IndexedTriple {
  std::size_t h, r, t;
};

struct TransEState {
  std::vector<std::string> entity_ids;
  std::vector<std::string> relation_ids;
  RowMatrix entities;
  RowMatrix relations;
};

inline void normalize_rows(RowMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double n = m.row(i).norm();
    if (n > 0) m.row(i) /= n;
  }
}

inline IndexedTriple corrupt(const IndexedTriple& t, std::size_t n_entities, Rng& rng) {
  IndexedTriple out = t;
  std::size_t e = static_cast<std::size_t>(uniform_index(rng, n_entities));
  if (uniform_index(rng, 2) == 0)
    out.h = e;
  else
    out.t = e;
  return out;
}

// d||x|| / dx for x = h + r - t.
inline void distance_gradient(const TransEState& s, const IndexedTriple& t, Norm norm, Eigen::RowVectorXd& g) {
  g = s.entities.row(t.h) + s.relations.row(t.r) - s.entities.row(t.t);
  if (norm == Norm::L1) {
    g = g.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
  } else {
    double n = g.norm();
    if (n > 0)
      g /= n;
    else
      g.setZero();
  }
}

inline KgEmbedding freeze(const TransEState& s, const TransEConfig& cfg) {
  KgEmbedding kg;
  kg.dim = cfg.dim;
  kg.entities = EmbeddingMatrix::from_eigen(s.entities, "transe-entities", s.entity_ids);
  kg.relations = EmbeddingMatrix::from_eigen(s.relations, "transe-relations", s.relation_ids);
  kg.config = cfg;
  return kg;
}

}  // namespace detail

struct ProbeBatch {
  std::vector<Triple> positives;
  std::vector<Triple> negatives;
};

/// Margin-ranking TransE trained with plain SGD and uniform head/tail corruption.
///
/// Entities and relations are initialised uniformly in +-6/sqrt(dim) and
/// normalised; entity rows are renormalised to unit length after every epoch.
/// A fixed probe batch (one corruption per training triple, at most 4096)
/// tracks the loss; `loss_history[e]` is the probe loss after epoch e+1.
inline KgEmbedding train_transe(const std::vector<Triple>& triples, const TransEConfig& cfg,
                                ProbeBatch* probe_out = nullptr) {
  if (triples.empty()) throw ValidationError("train_transe: no triples");
  if (cfg.dim < 1) throw ValidationError("train_transe: dim must be >= 1");
  if (!(cfg.margin > 0.0)) throw ValidationError("train_transe: margin must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("train_transe: learning_rate must be positive");
  if (cfg.negatives_per_positive < 1) throw ValidationError("train_transe: need at least one negative per positive");

  detail::TransEState s;
  {
    std::set<std::string> ents, rels;
    for (const auto& t : triples) {
      if (t.head.empty() || t.relation.empty() || t.tail.empty())
        throw ValidationError("train_transe: triple with empty identifier");
      ents.insert(t.head);
      ents.insert(t.tail);
      rels.insert(t.relation);
    }
    s.entity_ids.assign(ents.begin(), ents.end());
    s.relation_ids.assign(rels.begin(), rels.end());
  }
  std::map<std::string, std::size_t> ent_row, rel_row;
  for (std::size_t i = 0; i < s.entity_ids.size(); ++i) ent_row[s.entity_ids[i]] = i;
  for (std::size_t i = 0; i < s.relation_ids.size(); ++i) rel_row[s.relation_ids[i]] = i;
  std::vector<detail::IndexedTriple> data;
  data.reserve(triples.size());
  for (const auto& t : triples) data.push_back({ent_row[t.head], rel_row[t.relation], ent_row[t.tail]});

  const auto d = static_cast<Eigen::Index>(cfg.dim);
  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  Rng init_rng(derive_seed(cfg.seed, "transe-init"));
  s.entities.resize(static_cast<Eigen::Index>(s.entity_ids.size()), d);
  s.relations.resize(static_cast<Eigen::Index>(s.relation_ids.size()), d);
  for (Eigen::Index i = 0; i < s.entities.size(); ++i) s.entities.data()[i] = uniform(init_rng, -bound, bound);
  for (Eigen::Index i = 0; i < s.relations.size(); ++i) s.relations.data()[i] = uniform(init_rng, -bound, bound);
  detail::normalize_rows(s.relations);
  detail::normalize_rows(s.entities);

  const std::size_t n_ent = s.entity_ids.size();
  ProbeBatch probe;
  {
    Rng probe_rng(derive_seed(cfg.seed, "transe-probe"));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(std::span<std::size_t>(order), probe_rng);
    order.resize(std::min<std::size_t>(order.size(), 4096));
    for (std::size_t i : order) {
      auto neg = detail::corrupt(data[i], n_ent, probe_rng);
      probe.positives.push_back(triples[i]);
      probe.negatives.push_back({s.entity_ids[neg.h], s.relation_ids[neg.r], s.entity_ids[neg.t]});
    }
  }

  auto probe_loss = [&] {
    return margin_ranking_loss(detail::freeze(s, cfg), probe.positives, probe.negatives, cfg.margin, cfg.norm);
  };
  const double initial = probe_loss();
  std::vector<double> history;
  history.reserve(cfg.epochs);

  Rng rng(derive_seed(cfg.seed, "transe-sgd"));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Eigen::RowVectorXd g_pos(d), g_neg(d);
  const double lr = cfg.learning_rate;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t i : order) {
      const auto& pos = data[i];
      for (std::size_t k = 0; k < cfg.negatives_per_positive; ++k) {
        auto neg = detail::corrupt(pos, n_ent, rng);
        auto dist = [&](const detail::IndexedTriple& t) {
          Eigen::RowVectorXd x = s.entities.row(t.h) + s.relations.row(t.r) - s.entities.row(t.t);
          return cfg.norm == Norm::L1 ? x.lpNorm<1>() : x.norm();
        };
        if (cfg.margin + dist(pos) - dist(neg) <= 0.0) continue;
        detail::distance_gradient(s, pos, cfg.norm, g_pos);
        detail::distance_gradient(s, neg, cfg.norm, g_neg);
        s.entities.row(pos.h) -= lr * g_pos;
        s.entities.row(pos.t) += lr * g_pos;
        s.relations.row(pos.r) -= lr * (g_pos - g_neg);
        s.entities.row(neg.h) += lr * g_neg;
        s.entities.row(neg.t) -= lr * g_neg;
      }
    }
    detail::normalize_rows(s.entities);
    history.push_back(probe_loss());
  }

  KgEmbedding kg = detail::freeze(s, cfg);
  kg.initial_probe_loss = initial;
  kg.loss_history = std::move(history);
  if (probe_out) *probe_out = std::move(probe);
  return kg;
}

/// Raw rank (1 = best) of the true entity when the head or tail is replaced by every entity.
inline std::size_t corruption_rank(const KgEmbedding& kg, const Triple& triple, bool corrupt_head,
                                   Norm norm = Norm::L2) {
  const double truth = score_triple(kg, triple, norm);
  auto r = kg.relation(triple.relation);
  auto fixed = corrupt_head ? kg.entity(triple.tail) : kg.entity(triple.head);
  const auto& ids = kg.entities.index();
  std::size_t better = 0;
  for (std::size_t e = 0; e < ids.size(); ++e) {
    if (ids[e] == (corrupt_head ? triple.head : triple.tail)) continue;
    auto cand = kg.entities.row(e);
    double s = corrupt_head ? -detail::translation_distance(cand, r, fixed, norm)
                            : -detail::translation_distance(fixed, r, cand, norm);
    if (s > truth) ++better;
  }
  return better + 1;
}

/// Fraction of head and tail rankings (two per triple) that land in the top k.
inline double link_prediction_hits(const KgEmbedding& kg, const std::vector<Triple>& triples, std::size_t k,
                                   Norm norm = Norm::L2) {
  if (triples.empty()) throw ValidationError("link_prediction_hits: no triples");
  std::size_t hits = 0;
  for (const auto& t : triples) {
    hits += corruption_rank(kg, t, true, norm) <= k;
    hits += corruption_rank(kg, t, false, norm) <= k;
  }
  return static_cast<double>(hits) / static_cast<double>(2 * triples.size());
}

inline constexpr char kTripleKeySeparator = '|';

inline std::string triple_key(const Triple& t) {
  for (const auto* part : {&t.head, &t.relation, &t.tail})
    if (part->find(kTripleKeySeparator) != std::string::npos)
      throw ValidationError("identifier '" + *part + "' contains the triple key separator");
  return t.head + kTripleKeySeparator + t.relation + kTripleKeySeparator + t.tail;
}

inline Triple parse_triple_key(std::string_view key) {
  auto a = key.find(kTripleKeySeparator);
  auto b = a == std::string_view::npos ? a : key.find(kTripleKeySeparator, a + 1);
  if (b == std::string_view::npos || key.find(kTripleKeySeparator, b + 1) != std::string_view::npos)
    throw ValidationError("malformed triple key '" + std::string(key) + "'");
  return {std::string(key.substr(0, a)), std::string(key.substr(a + 1, b - a - 1)), std::string(key.substr(b + 1))};
}

/// One [h : r : t] row per distinct triple, in order of first appearance.
inline EmbeddingMatrix concat_triples(const KgEmbedding& kg, const std::vector<Triple>& triples) {
  std::set<std::string> seen;
  std::vector<std::string> index;
  std::vector<double> data;
  for (const auto& t : triples) {
    std::string key = triple_key(t);
    if (!seen.insert(key).second) continue;
    for (auto part : {kg.entity(t.head), kg.relation(t.relation), kg.entity(t.tail)})
      data.insert(data.end(), part.begin(), part.end());
    index.push_back(std::move(key));
  }
  std::size_t rows = index.size();
  return EmbeddingMatrix(rows, 3 * kg.dim, std::move(data), "transe-concat", std::move(index));
}

inline void save_kg(const std::filesystem::path& dir, const KgEmbedding& kg) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "entities.embx", kg.entities);
  write_matrix(dir / "relations.embx", kg.relations);
  std::ofstream meta(dir / "kg.meta");
  if (!meta) throw IoError("cannot write " + (dir / "kg.meta").string());
  meta.precision(17);
  meta << "dim=" << kg.dim << "\nseed=" << kg.config.seed << "\nepochs=" << kg.config.epochs
       << "\nmargin=" << kg.config.margin << "\nlearning_rate=" << kg.config.learning_rate
       << "\nnegatives_per_positive=" << kg.config.negatives_per_positive << "\nnorm=" << to_string(kg.config.norm)
       << "\n";
}

inline KgEmbedding load_kg(const std::filesystem::path& dir) {
  KgEmbedding kg;
  kg.entities = read_matrix(dir / "entities.embx");
  kg.relations = read_matrix(dir / "relations.embx");
  std::ifstream meta(dir / "kg.meta");
  if (!meta) throw IoError("cannot open " + (dir / "kg.meta").string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value in kg.meta", line_no);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "dim") kg.dim = std::stoull(value);
      else if (key == "seed") kg.config.seed = std::stoull(value);
      else if (key == "epochs") kg.config.epochs = std::stoull(value);
      else if (key == "margin") kg.config.margin = std::stod(value);
      else if (key == "learning_rate") kg.config.learning_rate = std::stod(value);
      else if (key == "negatives_per_positive") kg.config.negatives_per_positive = std::stoull(value);
      else if (key == "norm") kg.config.norm = parse_norm(value);
      else throw ParseError("unknown kg.meta key '" + key + "'", line_no);
    } catch (const std::logic_error&) {
      throw ParseError("bad value for '" + key + "'", line_no);
    }
  }
  kg.config.dim = kg.dim;
  if (kg.entities.dim() != kg.dim || kg.relations.dim() != kg.dim)
    throw DimensionMismatchError("kg.meta dim disagrees with stored matrices");
  return kg;
}

}  // namespace kgalign
