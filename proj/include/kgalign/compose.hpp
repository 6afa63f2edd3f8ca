#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/pca.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

/// Rows for every sentence that composed, plus the ids dropped because none
/// of their tokens were in the vocabulary.
struct Composition {
  EmbeddingMatrix matrix;
  std::vector<SentenceId> excluded;
};

inline std::string sentence_key(SentenceId id) { return std::to_string(id); }

namespace detail {

// In-vocabulary word vectors of a sentence, in token order. OOV tokens are skipped.
inline std::vector<const std::vector<double>*> known_vectors(const AnnotatedSentence& s,
                                                             const WordVectorTable& table) {
  std::vector<const std::vector<double>*> out;
  out.reserve(s.tokens.size());
  for (const auto& tok : s.tokens)
    if (const auto* v = table.find(tok)) out.push_back(v);
  return out;
}

template <typename RowFn>
Composition compose_rows(const std::vector<AnnotatedSentence>& sentences, const WordVectorTable& table,
                         std::size_t dim, std::string method, RowFn&& row_fn) {
  std::vector<double> data;
  std::vector<std::string> index;
  std::vector<SentenceId> excluded;
  data.reserve(sentences.size() * dim);
  std::vector<double> row(dim);
  for (const auto& s : sentences) {
    auto words = known_vectors(s, table);
    if (words.empty()) {
      excluded.push_back(s.id);
      continue;
    }
    std::fill(row.begin(), row.end(), 0.0);
    row_fn(words, row);
    data.insert(data.end(), row.begin(), row.end());
    index.push_back(sentence_key(s.id));
  }
  std::size_t rows = index.size();
  return {EmbeddingMatrix(rows, dim, std::move(data), std::move(method), std::move(index)), std::move(excluded)};
}

}  // namespace detail

inline Composition compose_mean(const std::vector<AnnotatedSentence>& sentences, const WordVectorTable& table) {
  const std::size_t d = table.dim;
  return detail::compose_rows(sentences, table, d, "glove-mean", [d](const auto& words, std::vector<double>& row) {
    for (const auto* w : words)
      for (std::size_t c = 0; c < d; ++c) row[c] += (*w)[c];
    for (auto& v : row) v /= static_cast<double>(words.size());
  });
}

/// Column-wise DCT-II of the stacked word vectors, keeping coefficients 0..K.
/// Output is coefficient-major: [coef0 block | coef1 block | ... | coefK block].
/// Coefficients k >= N (sentence shorter than K+1) are zero.
inline Composition compose_dct(const std::vector<AnnotatedSentence>& sentences, const WordVectorTable& table,
                               std::size_t max_coefficient) {
  if (max_coefficient > 6) throw ValidationError("compose_dct: K must lie in [0, 6]");
  const std::size_t d = table.dim;
  const std::size_t blocks = max_coefficient + 1;
  return detail::compose_rows(
      sentences, table, blocks * d, "glove-dct-" + std::to_string(max_coefficient),
      [d, blocks](const auto& words, std::vector<double>& row) {
        const std::size_t n = words.size();
        const double nd = static_cast<double>(n);
        for (std::size_t k = 0; k < blocks && k < n; ++k) {
          const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / nd);
          for (std::size_t pos = 0; pos < n; ++pos) {
            const double basis =
                k == 0 ? 1.0 : std::cos(std::numbers::pi / nd * (static_cast<double>(pos) + 0.5) * static_cast<double>(k));
            const auto& w = *words[pos];
            for (std::size_t c = 0; c < d; ++c) row[k * d + c] += w[c] * basis;
          }
          for (std::size_t c = 0; c < d; ++c) row[k * d + c] *= scale;
        }
      });
}

struct GemWeights {
  double novelty = 0.0;
  double significance = 0.0;
  double uniqueness = 0.0;
  double total() const { return novelty + significance + uniqueness; }
};

/// Weight of the last column of `window` (d x m, context words first, the
/// scored word last) from a QR factorisation of the window.
///
///   novelty      = norm of the word's component orthogonal to its context (|R(m-1, m-1)|)
///   significance = novelty / m
///   uniqueness   = exp(-||R(:, m-1)|| / m) = exp(-||w|| / m)
///
/// The context is factorised with column pivoting so repeated or dependent
/// context words do not leak into the residual.
inline GemWeights gem_word_weights(const Eigen::MatrixXd& window) {
  const auto m = window.cols();
  const Eigen::VectorXd word = window.col(m - 1);
  const double m_d = static_cast<double>(m);
  const double column_norm = word.norm();
  double residual = column_norm;
  if (m > 1) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(window.leftCols(m - 1));
    const auto rank = qr.rank();
    if (rank > 0) {
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(window.rows(), rank);
      residual = (word - q * (q.transpose() * word)).norm();
    }
  }
  return {residual, residual / m_d, std::exp(-column_norm / m_d)};
}

/// Sum of each word vector scaled by its windowed-QR weight, followed by
/// corpus-level removal of the top `top_components` principal directions.
inline Composition compose_gem(const std::vector<AnnotatedSentence>& sentences, const WordVectorTable& table,
                               std::size_t window, std::size_t top_components);

/// Subtracts from every row the projection of its centred value onto the top-k
/// principal directions: x - sum_j ((x - mean) . u_j) u_j.
inline EmbeddingMatrix remove_common_components(const EmbeddingMatrix& matrix, std::size_t k) {
  if (k >= matrix.dim() && k > 0)
    throw ValidationError("remove_common_components: k=" + std::to_string(k) + " must be below dimension " +
                          std::to_string(matrix.dim()));
  if (k == 0) return matrix;
  if (matrix.rows() < 2) throw ValidationError("remove_common_components needs at least 2 rows");
  auto x = matrix.as_eigen();
  auto pc = principal_components(x, static_cast<Eigen::Index>(k));
  RowMatrix coords = project_onto(x, pc);
  RowMatrix out = x - coords * pc.directions;
  return EmbeddingMatrix::from_eigen(out, matrix.method(), matrix.index());
}

inline Composition compose_gem(const std::vector<AnnotatedSentence>& sentences, const WordVectorTable& table,
                               std::size_t window, std::size_t top_components) {
  if (window < 1) throw ValidationError("compose_gem: window must be >= 1");
  const std::size_t d = table.dim;
  auto raw = detail::compose_rows(sentences, table, d, "gem-glove", [d, window](const auto& words, std::vector<double>& row) {
    for (std::size_t pos = 0; pos < words.size(); ++pos) {
      const std::size_t context = std::min(window, pos);
      Eigen::MatrixXd win(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(context + 1));
      for (std::size_t j = 0; j <= context; ++j) {
        const auto& w = *words[pos - context + j];
        for (std::size_t c = 0; c < d; ++c) win(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = w[c];
      }
      const double weight = gem_word_weights(win).total();
      const auto& w = *words[pos];
      for (std::size_t c = 0; c < d; ++c) row[c] += weight * w[c];
    }
  });
  if (top_components == 0) return raw;
  return {remove_common_components(raw.matrix, top_components), std::move(raw.excluded)};
}

/// Rows uniform on [-1, 1]^dim, drawn in sentence order from Rng(seed).
inline Composition compose_random(const std::vector<AnnotatedSentence>& sentences, std::size_t dim,
                                  std::uint64_t seed) {
  if (dim < 1) throw ValidationError("compose_random: dim must be >= 1");
  Rng rng(seed);
  std::vector<double> data(sentences.size() * dim);
  for (auto& v : data) v = uniform(rng, -1.0, 1.0);
  std::vector<std::string> index;
  index.reserve(sentences.size());
  for (const auto& s : sentences) index.push_back(sentence_key(s.id));
  return {EmbeddingMatrix(sentences.size(), dim, std::move(data), "random", std::move(index)), {}};
}

/// Loads a matrix produced by an external encoder (binary matrix format).
inline EmbeddingMatrix ingest_external(const std::filesystem::path& path) { return read_matrix(path); }

}  // namespace kgalign
