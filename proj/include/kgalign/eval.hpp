#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgalign/align.hpp"
#include "kgalign/annindex.hpp"
#include "kgalign/error.hpp"
#include "kgalign/kgembed.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

struct RankedQuery {
  std::string truth;
  std::vector<std::string> retrieved;
};

/// Fraction of queries whose true key is among the first min(k, |retrieved|) keys.
inline double hits_at_k(const std::vector<RankedQuery>& ranked, std::size_t k) {
  if (ranked.empty()) throw ValidationError("hits_at_k: no queries");
  std::size_t hits = 0;
  for (const auto& q : ranked) {
    const std::size_t limit = std::min(k, q.retrieved.size());
    for (std::size_t i = 0; i < limit; ++i)
      if (q.retrieved[i] == q.truth) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

struct EvalReport {
  std::string method;
  std::size_t embedding_dim = 0;
  double hits_at_5 = 0.0;
  double hits_at_10 = 0.0;
  double avg_similarity = 0.0;
  std::size_t n_test = 0;
  // Hits where any retrieved triple with the true relation counts; analysis only.
  double relation_hits_at_5 = 0.0;
  double relation_hits_at_10 = 0.0;
};

struct TruthPair {
  std::string sentence;  // index key of the sentence row
  std::string triple;    // canonical triple key
};

struct EvalOptions {
  std::size_t search_k = 0;  // 0: index default for k = 10
  bool relation_level = false;
};

/// Projects test sentences through the map, retrieves the top 10 candidate
/// triples for each, and scores exact-key Hits@5/@10 together with the mean
/// cosine between each projected sentence and its true triple row.
inline EvalReport evaluate_alignment(const LinearMap& map, const EmbeddingMatrix& test_sentences,
                                     const std::vector<TruthPair>& truth, const EmbeddingMatrix& candidates,
                                     const AnnForest& index, const EvalOptions& opts = {}) {
  if (truth.empty()) throw ValidationError("evaluate_alignment: no test pairs");
  if (index.items().rows() != candidates.rows() || index.items().dim() != candidates.dim())
    throw ValidationError("evaluate_alignment: index was not built over the candidate matrix");
  EmbeddingMatrix projected = project(map, test_sentences);

  std::vector<RankedQuery> ranked;
  ranked.reserve(truth.size());
  std::vector<RankedQuery> relation_ranked;
  double sim_total = 0.0;
  for (const auto& pair : truth) {
    auto cand_row = candidates.find(pair.triple);
    if (!cand_row) throw ValidationError("evaluate_alignment: truth triple '" + pair.triple + "' not among candidates");
    auto sent_row = projected.find(pair.sentence);
    if (!sent_row) throw ValidationError("evaluate_alignment: sentence '" + pair.sentence + "' not in test matrix");
    auto query = projected.row(*sent_row);
    sim_total += cosine(query, candidates.row(*cand_row));
    auto hits = index.query(query, 10, opts.search_k);
    RankedQuery rq{pair.triple, {}};
    for (const auto& h : hits) rq.retrieved.push_back(candidates.index()[h.id]);
    if (opts.relation_level) {
      RankedQuery rel{parse_triple_key(pair.triple).relation, {}};
      for (const auto& key : rq.retrieved) rel.retrieved.push_back(parse_triple_key(key).relation);
      relation_ranked.push_back(std::move(rel));
    }
    ranked.push_back(std::move(rq));
  }

  EvalReport report;
  report.method = test_sentences.method();
  report.embedding_dim = test_sentences.dim();
  report.hits_at_5 = hits_at_k(ranked, 5);
  report.hits_at_10 = hits_at_k(ranked, 10);
  report.avg_similarity = sim_total / static_cast<double>(truth.size());
  report.n_test = truth.size();
  if (opts.relation_level) {
    report.relation_hits_at_5 = hits_at_k(relation_ranked, 5);
    report.relation_hits_at_10 = hits_at_k(relation_ranked, 10);
  }
  return report;
}

/// Pearson product-moment correlation.
inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("pearson_correlation: length mismatch");
  if (x.size() < 2) throw ValidationError("pearson_correlation: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson_correlation: undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace kgalign
