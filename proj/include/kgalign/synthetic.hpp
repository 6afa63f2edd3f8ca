#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

// Desk-scale stand-in for a distantly supervised corpus: every relation owns a
// cluster of topic words, entities have their own surface tokens, and each
// sentence mixes head and tail tokens, topic words of its relation and shared
// filler words.
struct SyntheticSpec {
  std::size_t relations = 6;
  std::size_t entities = 60;
  std::size_t triples_per_relation = 20;
  std::size_t sentences_per_triple = 4;
  std::size_t extra_kg_triples = 40;  // triples present in the KG but never mentioned
  std::size_t word_dim = 32;
  std::size_t topic_words_per_relation = 8;
  std::size_t topic_words_per_sentence = 3;
  std::size_t filler_words = 40;
  std::size_t filler_words_per_sentence = 3;
  double topic_spread = 0.35;  // topic-word noise relative to the relation centre
  std::uint64_t seed = 0;
};

struct SyntheticData {
  WordVectorTable vectors;
  std::vector<AnnotatedSentence> sentences;
  std::vector<Triple> triples;  // full KG, corpus facts first
};

inline SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.relations < 1 || spec.entities < 2 || spec.word_dim < 1 || spec.topic_words_per_relation < 1)
    throw ValidationError("synthetic spec needs relations, entities, topic words and a positive dimension");
  Rng rng(spec.seed);
  SyntheticData out;
  out.vectors.dim = spec.word_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.word_dim));
  auto random_vector = [&](double s) {
    std::vector<double> v(spec.word_dim);
    for (auto& x : v) x = s * standard_normal(rng);
    return v;
  };

  for (std::size_t e = 0; e < spec.entities; ++e) out.vectors.entries["ent" + std::to_string(e)] = random_vector(scale);
  for (std::size_t f = 0; f < spec.filler_words; ++f) out.vectors.entries["w" + std::to_string(f)] = random_vector(scale);
  for (std::size_t r = 0; r < spec.relations; ++r) {
    auto centre = random_vector(scale);
    for (std::size_t j = 0; j < spec.topic_words_per_relation; ++j) {
      auto v = random_vector(scale * spec.topic_spread);
      for (std::size_t c = 0; c < spec.word_dim; ++c) v[c] += centre[c];
      out.vectors.entries["r" + std::to_string(r) + "t" + std::to_string(j)] = std::move(v);
    }
  }

  auto mid = [](std::size_t e) { return "/m/e" + std::to_string(e); };
  auto rel = [](std::size_t r) { return "/synthetic/rel" + std::to_string(r); };
  std::set<Triple> seen;
  auto draw_triple = [&](std::size_t r) {
    for (;;) {
      auto h = static_cast<std::size_t>(uniform_index(rng, spec.entities));
      auto t = static_cast<std::size_t>(uniform_index(rng, spec.entities));
      if (h == t) continue;
      Triple triple{mid(h), rel(r), mid(t)};
      if (seen.insert(triple).second) return std::pair{triple, std::pair{h, t}};
    }
  };
  const std::size_t max_pairs = spec.entities * (spec.entities - 1);
  if (spec.relations * spec.triples_per_relation + spec.extra_kg_triples > max_pairs * spec.relations)
    throw ValidationError("synthetic spec asks for more triples than entity pairs allow");

  for (std::size_t r = 0; r < spec.relations; ++r) {
    for (std::size_t i = 0; i < spec.triples_per_relation; ++i) {
      auto [triple, ends] = draw_triple(r);
      out.triples.push_back(triple);
      for (std::size_t s = 0; s < spec.sentences_per_triple; ++s) {
        std::vector<std::string> middle;
        for (std::size_t j = 0; j < spec.topic_words_per_sentence; ++j)
          middle.push_back("r" + std::to_string(r) + "t" + std::to_string(uniform_index(rng, spec.topic_words_per_relation)));
        for (std::size_t j = 0; j < spec.filler_words_per_sentence && spec.filler_words > 0; ++j)
          middle.push_back("w" + std::to_string(uniform_index(rng, spec.filler_words)));
        shuffle(std::span<std::string>(middle), rng);
        AnnotatedSentence sent;
        sent.id = out.sentences.size();
        std::string head_tok = "ent" + std::to_string(ends.first), tail_tok = "ent" + std::to_string(ends.second);
        sent.tokens.push_back(head_tok);
        sent.tokens.insert(sent.tokens.end(), middle.begin(), middle.end());
        sent.tokens.push_back(tail_tok);
        sent.head = {head_tok, triple.head};
        sent.tail = {tail_tok, triple.tail};
        sent.relation = triple.relation;
        out.sentences.push_back(std::move(sent));
      }
    }
  }
  for (std::size_t i = 0; i < spec.extra_kg_triples; ++i)
    out.triples.push_back(draw_triple(static_cast<std::size_t>(uniform_index(rng, spec.relations))).first);
  return out;
}

struct FixturePaths {
  std::filesystem::path word_vectors;
  std::filesystem::path corpus;
  std::filesystem::path triples;
};

inline FixturePaths write_fixture(const std::filesystem::path& dir, const SyntheticData& data) {
  std::filesystem::create_directories(dir);
  FixturePaths paths{dir / "vectors.txt", dir / "corpus.jsonl", dir / "triples.tsv"};
  std::ofstream v(paths.word_vectors), c(paths.corpus), t(paths.triples);
  if (!v || !c || !t) throw IoError("cannot write fixture under " + dir.string());
  save_word_vectors(v, data.vectors);
  save_corpus(c, data.sentences);
  save_triples(t, data.triples);
  return paths;
}

}  // namespace kgalign
