#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

struct Neighbor {
  std::size_t id = 0;
  double similarity = 0.0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Cosine similarity in double precision; 0 when either vector is zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

namespace detail {

inline void check_query_dim(const EmbeddingMatrix& m, std::span<const double> q) {
  if (q.size() != m.dim())
    throw DimensionMismatchError("query has dimension " + std::to_string(q.size()) + ", index has " +
                          std::to_string(m.dim()));
}

inline bool by_similarity(const Neighbor& a, const Neighbor& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.id < b.id;
}

inline std::vector<Neighbor> top_k(std::vector<Neighbor> all, std::size_t k) {
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), by_similarity);
  all.resize(k);
  return all;
}

}  // namespace detail

/// Exact top-k rows by cosine similarity, ties broken by ascending row id.
inline std::vector<Neighbor> brute_force_knn(const EmbeddingMatrix& matrix, std::span<const double> query,
                                             std::size_t k) {
  detail::check_query_dim(matrix, query);
  std::vector<Neighbor> all(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) all[i] = {i, cosine(matrix.row(i), query)};
  return detail::top_k(std::move(all), k);
}

/// Forest of random-projection trees over unit-normalised copies of the rows.
///
/// Each internal node splits on the hyperplane bisecting two sampled items;
/// when that leaves a side empty a few times in a row the node falls back to
/// an even random split. Queries walk all trees best-first by hyperplane
/// margin, collect candidates, and rank them by exact cosine.
class AnnForest {
 public:
  struct Node {
    static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t plane = kNone;  // row in `planes`; kNone for leaves and random splits
    double offset = 0.0;
    std::uint32_t left = kNone;
    std::uint32_t right = kNone;
    std::uint32_t leaf_begin = 0;
    std::uint32_t leaf_end = 0;
    bool is_leaf() const { return left == kNone; }
  };

  struct Tree {
    std::vector<Node> nodes;  // nodes[0] is the root
    std::vector<double> planes;
    std::vector<std::size_t> leaf_items;
  };

  AnnForest(EmbeddingMatrix items, std::size_t n_trees, std::size_t leaf_capacity, std::uint64_t seed)
      : items_(std::move(items)), n_trees_(n_trees), leaf_capacity_(leaf_capacity), seed_(seed) {
    if (n_trees_ < 1) throw ValidationError("build_index: n_trees must be >= 1");
    if (leaf_capacity_ < 1) throw ValidationError("build_index: leaf_capacity must be >= 1");
    if (items_.rows() < 1) throw ValidationError("build_index: no rows to index");
    if (items_.rows() >= Node::kNone) throw ValidationError("build_index: too many rows");
    const std::size_t d = items_.dim();
    unit_.resize(items_.rows() * d);
    for (std::size_t i = 0; i < items_.rows(); ++i) {
      auto r = items_.row(i);
      double n = 0.0;
      for (double v : r) n += v * v;
      n = std::sqrt(n);
      for (std::size_t c = 0; c < d; ++c) unit_[i * d + c] = n > 0.0 ? r[c] / n : 0.0;
    }
    trees_.reserve(n_trees_);
    for (std::size_t t = 0; t < n_trees_; ++t) trees_.push_back(build_tree(splitmix64(seed_ + t)));
  }

  const EmbeddingMatrix& items() const noexcept { return items_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }
  std::size_t n_trees() const noexcept { return n_trees_; }
  std::size_t leaf_capacity() const noexcept { return leaf_capacity_; }
  std::uint64_t seed() const noexcept { return seed_; }

  static std::size_t default_search_k(std::size_t k, std::size_t n_trees) { return 50 * k * n_trees; }

  /// Top-k by cosine among candidates gathered until at least `search_k`
  /// distinct items are collected (0 selects 50 * k * n_trees).
  std::vector<Neighbor> query(std::span<const double> vector, std::size_t k, std::size_t search_k = 0) const {
    detail::check_query_dim(items_, vector);
    if (k < 1) throw ValidationError("query: k must be >= 1");
    if (search_k == 0) search_k = default_search_k(k, n_trees_);
    const std::size_t d = items_.dim();
    std::vector<double> q(vector.begin(), vector.end());
    double qn = 0.0;
    for (double v : q) qn += v * v;
    qn = std::sqrt(qn);
    if (qn > 0.0)
      for (double& v : q) v /= qn;

    struct Entry {
      double priority;
      std::uint32_t tree;
      std::uint32_t node;
      bool operator<(const Entry& o) const {
        if (priority != o.priority) return priority < o.priority;
        if (tree != o.tree) return tree > o.tree;
        return node > o.node;
      }
    };
    std::priority_queue<Entry> frontier;
    for (std::uint32_t t = 0; t < trees_.size(); ++t)
      frontier.push({std::numeric_limits<double>::infinity(), t, 0});

    std::vector<char> seen(items_.rows(), 0);
    std::vector<std::size_t> candidates;
    while (!frontier.empty() && candidates.size() < search_k) {
      Entry top = frontier.top();
      frontier.pop();
      const Tree& tree = trees_[top.tree];
      const Node& node = tree.nodes[top.node];
      if (node.is_leaf()) {
        for (std::uint32_t i = node.leaf_begin; i < node.leaf_end; ++i) {
          std::size_t id = tree.leaf_items[i];
          if (!seen[id]) {
            seen[id] = 1;
            candidates.push_back(id);
          }
        }
        continue;
      }
      if (node.plane == Node::kNone) {
        frontier.push({top.priority, top.tree, node.left});
        frontier.push({top.priority, top.tree, node.right});
        continue;
      }
      const double* plane = tree.planes.data() + static_cast<std::size_t>(node.plane) * d;
      double margin = -node.offset;
      for (std::size_t c = 0; c < d; ++c) margin += plane[c] * q[c];
      frontier.push({std::min(top.priority, margin), top.tree, node.left});
      frontier.push({std::min(top.priority, -margin), top.tree, node.right});
    }

    std::vector<Neighbor> scored;
    scored.reserve(candidates.size());
    for (std::size_t id : candidates) scored.push_back({id, cosine(items_.row(id), vector)});
    return detail::top_k(std::move(scored), k);
  }

 private:
  std::span<const double> unit(std::size_t i) const { return {unit_.data() + i * items_.dim(), items_.dim()}; }

  Tree build_tree(std::uint64_t tree_seed) const {
    Rng rng(tree_seed);
    Tree tree;
    const std::size_t d = items_.dim();
    std::vector<std::size_t> all(items_.rows());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    struct Work {
      std::uint32_t node;
      std::vector<std::size_t> ids;
    };
    std::vector<Work> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(all)});
    std::vector<double> dir(d);
    std::vector<std::size_t> left_ids, right_ids;

    while (!stack.empty()) {
      Work work = std::move(stack.back());
      stack.pop_back();
      auto& ids = work.ids;
      if (ids.size() <= leaf_capacity_) {
        Node& leaf = tree.nodes[work.node];
        leaf.leaf_begin = static_cast<std::uint32_t>(tree.leaf_items.size());
        tree.leaf_items.insert(tree.leaf_items.end(), ids.begin(), ids.end());
        leaf.leaf_end = static_cast<std::uint32_t>(tree.leaf_items.size());
        continue;
      }

      bool split = false;
      double offset = 0.0;
      for (int attempt = 0; attempt < 3 && !split; ++attempt) {
        std::size_t a = ids[uniform_index(rng, ids.size())];
        std::size_t b = ids[uniform_index(rng, ids.size() - 1)];
        if (b == a) b = ids.back();
        auto ua = unit(a), ub = unit(b);
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          dir[c] = ua[c] - ub[c];
          norm += dir[c] * dir[c];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        offset = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          dir[c] /= norm;
          offset += dir[c] * 0.5 * (ua[c] + ub[c]);
        }
        left_ids.clear();
        right_ids.clear();
        for (std::size_t id : ids) {
          auto u = unit(id);
          double s = -offset;
          for (std::size_t c = 0; c < d; ++c) s += dir[c] * u[c];
          (s > 0.0 ? left_ids : right_ids).push_back(id);
        }
        split = !left_ids.empty() && !right_ids.empty();
      }

      Node node;
      if (split) {
        node.plane = static_cast<std::uint32_t>(tree.planes.size() / (d == 0 ? 1 : d));
        node.offset = offset;
        tree.planes.insert(tree.planes.end(), dir.begin(), dir.end());
      } else {
        shuffle(std::span<std::size_t>(ids), rng);
        std::size_t half = ids.size() / 2;
        left_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(half));
        right_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(half), ids.end());
      }
      node.left = static_cast<std::uint32_t>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes[work.node] = node;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stack.push_back({node.right, std::move(right_ids)});
      stack.push_back({node.left, std::move(left_ids)});
      left_ids = {};
      right_ids = {};
    }
    return tree;
  }

  EmbeddingMatrix items_;
  std::size_t n_trees_;
  std::size_t leaf_capacity_;
  std::uint64_t seed_;
  std::vector<double> unit_;
  std::vector<Tree> trees_;
};

inline AnnForest build_index(const EmbeddingMatrix& matrix, std::size_t n_trees = 10, std::size_t leaf_capacity = 32,
                             std::uint64_t seed = 0) {
  return AnnForest(matrix, n_trees, leaf_capacity, seed);
}

}  // namespace kgalign
