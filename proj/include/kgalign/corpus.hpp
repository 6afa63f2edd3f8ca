#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

using SentenceId = std::size_t;

struct WordVectorTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
  std::size_t size() const noexcept { return entries.size(); }
};

struct EntityMention {
  std::string text;
  std::string mid;
  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct AnnotatedSentence {
  SentenceId id = 0;
  std::vector<std::string> tokens;
  EntityMention head;
  EntityMention tail;
  std::string relation;
  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct SplitAssignment {
  std::set<SentenceId> train;
  std::set<SentenceId> valid;
  std::set<SentenceId> test;
  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

struct LoadOptions {
  bool lowercase = false;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace detail

/// Reads `token v1 ... vd` lines. Blank lines are skipped.
inline WordVectorTable load_word_vectors(std::istream& in, const LoadOptions& opts = {}) {
  WordVectorTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw ParseError("word vector line has no values", line_no);
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(fields[f].data(), fields[f].data() + fields[f].size(), v);
      if (ec != std::errc{} || ptr != fields[f].data() + fields[f].size() || !std::isfinite(v))
        throw ParseError("non-numeric value '" + std::string(fields[f]) + "'", line_no);
      values.push_back(v);
    }
    if (table.dim == 0) {
      table.dim = values.size();
    } else if (values.size() != table.dim) {
      throw DimensionMismatchError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.dim) +
                                   " values, found " + std::to_string(values.size()));
    }
    std::string token(fields[0]);
    if (opts.lowercase) token = detail::to_lower(std::move(token));
    if (!table.entries.emplace(token, std::move(values)).second)
      throw DuplicateError("line " + std::to_string(line_no) + ": duplicate token '" + token + "'");
  }
  if (table.entries.empty()) throw ValidationError("word vector file has no entries");
  return table;
}

inline WordVectorTable load_word_vectors(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  auto in = detail::open_text(path);
  return load_word_vectors(in, opts);
}

/// Writes one line per token in lexicographic token order.
inline void save_word_vectors(std::ostream& out, const WordVectorTable& table) {
  std::vector<const std::string*> tokens;
  for (const auto& [token, _] : table.entries) tokens.push_back(&token);
  std::sort(tokens.begin(), tokens.end(), [](auto* a, auto* b) { return *a < *b; });
  out.precision(17);
  for (const auto* token : tokens) {
    out << *token;
    for (double v : table.entries.at(*token)) out << ' ' << v;
    out << '\n';
  }
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* name, std::size_t line_no,
                                           const std::string& prefix = "") {
  if (!obj.is_object() || !obj.contains(name)) throw ParseError("missing field '" + prefix + name + "'", line_no);
  return obj.at(name);
}

inline std::string require_string(const nlohmann::json& obj, const char* name, std::size_t line_no,
                                  const std::string& prefix = "") {
  const auto& v = require_field(obj, name, line_no, prefix);
  if (!v.is_string()) throw ParseError("field '" + prefix + name + "' is not a string", line_no);
  return v.get<std::string>();
}

inline EntityMention parse_mention(const nlohmann::json& obj, const char* name, std::size_t line_no) {
  const auto& m = require_field(obj, name, line_no);
  std::string prefix = std::string(name) + ".";
  EntityMention mention{require_string(m, "text", line_no, prefix), require_string(m, "mid", line_no, prefix)};
  if (mention.mid.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty " + prefix + "mid");
  return mention;
}

}  // namespace detail

/// Reads one JSON object per line:
/// {"sentence": "...", "head": {"mid", "text"}, "tail": {"mid", "text"}, "relation": "..."}.
/// Tokens are the whitespace-separated words of `sentence`; ids follow file order.
inline std::vector<AnnotatedSentence> load_corpus(std::istream& in, const LoadOptions& opts = {}) {
  std::vector<AnnotatedSentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::split_ws(line).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    AnnotatedSentence s;
    s.id = sentences.size();
    std::string text = detail::require_string(record, "sentence", line_no);
    if (opts.lowercase) text = detail::to_lower(std::move(text));
    for (auto tok : detail::split_ws(text)) s.tokens.emplace_back(tok);
    s.head = detail::parse_mention(record, "head", line_no);
    s.tail = detail::parse_mention(record, "tail", line_no);
    s.relation = detail::require_string(record, "relation", line_no);
    if (s.tokens.empty()) throw ValidationError("line " + std::to_string(line_no) + ": sentence has no tokens");
    if (s.relation.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty relation label");
    sentences.push_back(std::move(s));
  }
  return sentences;
}

inline std::vector<AnnotatedSentence> load_corpus(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  auto in = detail::open_text(path);
  return load_corpus(in, opts);
}

inline void save_corpus(std::ostream& out, const std::vector<AnnotatedSentence>& sentences) {
  for (const auto& s : sentences) {
    std::string text;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) text += (i ? " " : "") + s.tokens[i];
    nlohmann::ordered_json record;
    record["sentence"] = text;
    record["head"] = {{"mid", s.head.mid}, {"text", s.head.text}};
    record["tail"] = {{"mid", s.tail.mid}, {"text", s.tail.text}};
    record["relation"] = s.relation;
    out << record.dump() << '\n';
  }
}

/// Tab-separated `h<TAB>r<TAB>t` lines.
inline std::vector<Triple> load_triples(std::istream& in) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) throw ParseError("expected 3 tab-separated fields, found " + std::to_string(fields.size()), line_no);
    for (const auto& f : fields)
      if (f.empty()) throw ParseError("empty triple field", line_no);
    triples.push_back({fields[0], fields[1], fields[2]});
  }
  return triples;
}

inline std::vector<Triple> load_triples(const std::filesystem::path& path) {
  auto in = detail::open_text(path);
  return load_triples(in);
}

inline void save_triples(std::ostream& out, const std::vector<Triple>& triples) {
  for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

/// Per-relation stratified partition.
///
/// Within each relation (visited in label order) ids are shuffled from the
/// seed; test takes floor(test_fraction * count) and valid takes
/// floor(valid_fraction_of_train * remaining), both capped so that every
/// relation keeps at least one training sentence.
inline SplitAssignment stratified_split(const std::vector<AnnotatedSentence>& sentences, double test_fraction,
                                        double valid_fraction_of_train, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in (0, 1)");
  if (!(valid_fraction_of_train >= 0.0 && valid_fraction_of_train < 1.0))
    throw ValidationError("valid_fraction_of_train must lie in [0, 1)");

  std::map<std::string, std::vector<SentenceId>> by_relation;
  for (const auto& s : sentences) by_relation[s.relation].push_back(s.id);

  SplitAssignment split;
  Rng rng(seed);
  for (auto& [relation, ids] : by_relation) {
    std::sort(ids.begin(), ids.end());
    shuffle(std::span<SentenceId>(ids), rng);
    const std::size_t count = ids.size();
    auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(count)));
    n_test = std::min(n_test, count - 1);
    const std::size_t remaining = count - n_test;
    auto n_valid = static_cast<std::size_t>(std::floor(valid_fraction_of_train * static_cast<double>(remaining)));
    n_valid = std::min(n_valid, remaining - 1);
    for (std::size_t i = 0; i < count; ++i) {
      if (i < n_test)
        split.test.insert(ids[i]);
      else if (i < n_test + n_valid)
        split.valid.insert(ids[i]);
      else
        split.train.insert(ids[i]);
    }
  }
  return split;
}

struct SentenceTriple {
  SentenceId sentence;
  Triple triple;
  friend bool operator==(const SentenceTriple&, const SentenceTriple&) = default;
};

inline std::vector<SentenceTriple> pair_sentences_with_triples(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<SentenceTriple> pairs;
  pairs.reserve(sentences.size());
  for (const auto& s : sentences) pairs.push_back({s.id, {s.head.mid, s.relation, s.tail.mid}});
  return pairs;
}

}  // namespace kgalign
