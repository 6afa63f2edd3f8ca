#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kgalign/corpus.hpp"
#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

/// Unit-normalise rows, subtract the column mean, unit-normalise again.
/// Rows that are zero at either normalisation step stay zero.
inline EmbeddingMatrix normalize(const EmbeddingMatrix& matrix) {
  if (matrix.rows() < 1) throw ValidationError("normalize needs at least one row");
  RowMatrix x = matrix.to_eigen();
  auto unit_rows = [](RowMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double n = m.row(i).norm();
      if (n > 0.0) m.row(i) /= n;
    }
  };
  unit_rows(x);
  x.rowwise() -= x.colwise().mean();
  unit_rows(x);
  return EmbeddingMatrix::from_eigen(x, matrix.method(), matrix.index());
}

/// Nearest (semi-)orthogonal matrix in Frobenius norm: U V^T from the thin SVD.
inline RowMatrix orthogonalize(const Eigen::Ref<const RowMatrix>& w) {
  if (!w.allFinite()) throw ValidationError("orthogonalize: non-finite entries");
  Eigen::MatrixXd m = w;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] < 1e-12)
    throw NumericalRankError("orthogonalize: rank-deficient matrix (smallest singular value " +
                             std::to_string(sv.size() ? sv[sv.size() - 1] : 0.0) + ")");
  return svd.matrixU() * svd.matrixV().transpose();
}

/// Largest absolute deviation of the smaller-side Gram matrix from the identity.
inline double orthogonality_error(const Eigen::Ref<const RowMatrix>& w) {
  Eigen::MatrixXd g = w.rows() <= w.cols() ? Eigen::MatrixXd(w * w.transpose()) : Eigen::MatrixXd(w.transpose() * w);
  return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  // Decoupled weight decay; this is how the "optimizer beta 0.01" setting is read.
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Learning rate at epoch e (0-based) is learning_rate / (1 + lr_decay * e).
  double lr_decay = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("batch_size must be positive");
    if (max_epochs < 1) throw ValidationError("max_epochs must be positive");
    if (patience < 1 || patience > max_epochs) throw ValidationError("patience must lie in [1, max_epochs]");
    if (weight_decay < 0.0 || lr_decay < 0.0) throw ValidationError("decay rates must be non-negative");
  }
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct LinearMap {
  RowMatrix weights;  // target dim x source dim
  std::string source_method;
  std::string target_method;
  std::vector<EpochLoss> loss_history;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  TrainConfig config;
};

struct RowPair {
  std::size_t source_row = 0;
  std::size_t target_row = 0;
};

/// (1/b) sum_i ||W x_i - y_i||^2 over the rows of x and y.
inline double batch_loss(const Eigen::Ref<const RowMatrix>& w, const Eigen::Ref<const RowMatrix>& x,
                         const Eigen::Ref<const RowMatrix>& y) {
  return (x * w.transpose() - y).squaredNorm() / static_cast<double>(x.rows());
}

/// Gradient of batch_loss with respect to W: (2/b) (X W^T - Y)^T X.
inline RowMatrix batch_gradient(const Eigen::Ref<const RowMatrix>& w, const Eigen::Ref<const RowMatrix>& x,
                                const Eigen::Ref<const RowMatrix>& y) {
  return (2.0 / static_cast<double>(x.rows())) * (x * w.transpose() - y).transpose() * x;
}

struct PairPartition {
  std::vector<RowPair> train;
  std::vector<RowPair> valid;
  std::vector<RowPair> test;
};

/// Routes pairs by the split membership of the sentence id stored in the
/// source row's index entry.
inline PairPartition partition_pairs(const std::vector<RowPair>& pairs, const SplitAssignment& split,
                                     const EmbeddingMatrix& source) {
  PairPartition out;
  for (const auto& p : pairs) {
    if (p.source_row >= source.rows()) throw ValidationError("pair references missing source row");
    SentenceId id = 0;
    try {
      id = std::stoull(source.index()[p.source_row]);
    } catch (const std::logic_error&) {
      throw ValidationError("source index entry '" + source.index()[p.source_row] + "' is not a sentence id");
    }
    if (split.train.count(id))
      out.train.push_back(p);
    else if (split.valid.count(id))
      out.valid.push_back(p);
    else if (split.test.count(id))
      out.test.push_back(p);
  }
  return out;
}

struct TrainHooks {
  // Called with the weights after every batch's orthogonality re-adjustment.
  std::function<void(const RowMatrix&)> after_batch;
};

namespace detail {

inline void gather(const EmbeddingMatrix& source, const EmbeddingMatrix& target, const std::vector<RowPair>& pairs,
                   RowMatrix& x, RowMatrix& y) {
  x.resize(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(source.dim()));
  y.resize(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(target.dim()));
  auto s = source.as_eigen();
  auto t = target.as_eigen();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].source_row >= source.rows() || pairs[i].target_row >= target.rows())
      throw ValidationError("pair references a row outside the matrices");
    x.row(static_cast<Eigen::Index>(i)) = s.row(static_cast<Eigen::Index>(pairs[i].source_row));
    y.row(static_cast<Eigen::Index>(i)) = t.row(static_cast<Eigen::Index>(pairs[i].target_row));
  }
}

}  // namespace detail

/// Learns W minimising the mean squared pair error with Adam (decoupled weight
/// decay), re-orthogonalising W after every batch, and early stopping on the
/// validation loss. Returns the weights from the best validation epoch.
///
/// With no validation pairs the training loss drives early stopping. For square
/// maps the initial orthogonal W is reflected, if needed, into the same
/// determinant-sign component as the training cross-covariance, since
/// orthogonality-preserving steps cannot change det(W).
inline LinearMap train_alignment(const EmbeddingMatrix& source, const EmbeddingMatrix& target,
                                 const std::vector<RowPair>& train_pairs, const std::vector<RowPair>& valid_pairs,
                                 const TrainConfig& config, const TrainHooks& hooks = {}) {
  config.validate();
  if (train_pairs.empty()) throw ValidationError("train_alignment: no training pairs");
  const auto ds = static_cast<Eigen::Index>(source.dim());
  const auto dt = static_cast<Eigen::Index>(target.dim());
  if (ds < 1 || dt < 1) throw ValidationError("train_alignment: empty embedding dimension");

  RowMatrix x_train, y_train, x_valid, y_valid;
  detail::gather(source, target, train_pairs, x_train, y_train);
  detail::gather(source, target, valid_pairs, x_valid, y_valid);

  Rng init_rng(derive_seed(config.seed, "align-init"));
  const double bound = 1.0 / std::sqrt(static_cast<double>(ds));
  RowMatrix w(dt, ds);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(init_rng, -bound, bound);
  w = orthogonalize(w);
  if (ds == dt) {
    Eigen::MatrixXd cross = y_train.transpose() * x_train;
    double target_sign = cross.partialPivLu().determinant();
    if (target_sign * Eigen::MatrixXd(w).partialPivLu().determinant() < 0.0) w.row(dt - 1) *= -1.0;
  }

  RowMatrix m = RowMatrix::Zero(dt, ds);
  RowMatrix v = RowMatrix::Zero(dt, ds);
  std::size_t step = 0;

  LinearMap result;
  result.source_method = source.method();
  result.target_method = target.method();
  result.config = config;
  RowMatrix best = w;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  Rng order_rng(derive_seed(config.seed, "align-order"));
  std::vector<Eigen::Index> order(train_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  RowMatrix xb, yb;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const double lr = config.learning_rate / (1.0 + config.lr_decay * static_cast<double>(epoch));
    shuffle(std::span<Eigen::Index>(order), order_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      xb.resize(static_cast<Eigen::Index>(len), ds);
      yb.resize(static_cast<Eigen::Index>(len), dt);
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x_train.row(order[start + i]);
        yb.row(static_cast<Eigen::Index>(i)) = y_train.row(order[start + i]);
      }
      RowMatrix g = batch_gradient(w, xb, yb);
      if (!g.allFinite()) throw DivergenceError("non-finite gradient", epoch + 1);
      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      RowMatrix update = (m / c1).array() / ((v / c2).array().sqrt() + config.adam_epsilon);
      w -= lr * (update + config.weight_decay * w);
      w = orthogonalize(w);
      if (hooks.after_batch) hooks.after_batch(w);
    }

    const double train_loss = batch_loss(w, x_train, y_train);
    const double valid_loss = valid_pairs.empty() ? train_loss : batch_loss(w, x_valid, y_valid);
    if (!std::isfinite(train_loss) || !std::isfinite(valid_loss))
      throw DivergenceError("non-finite loss", epoch + 1);
    result.loss_history.push_back({epoch + 1, train_loss, valid_loss});
    result.stopped_epoch = epoch + 1;
    if (valid_loss < best_loss) {
      best_loss = valid_loss;
      best = w;
      result.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  result.weights = std::move(best);
  return result;
}

inline LinearMap train_alignment(const EmbeddingMatrix& source, const EmbeddingMatrix& target,
                                 const std::vector<RowPair>& pairs, const SplitAssignment& split,
                                 const TrainConfig& config, const TrainHooks& hooks = {}) {
  auto parts = partition_pairs(pairs, split, source);
  return train_alignment(source, target, parts.train, parts.valid, config, hooks);
}

/// Row i of the result is W times row i of the input.
inline EmbeddingMatrix project(const LinearMap& map, const EmbeddingMatrix& matrix) {
  if (static_cast<Eigen::Index>(matrix.dim()) != map.weights.cols())
    throw ValidationError("project: matrix dim " + std::to_string(matrix.dim()) + " does not match map source dim " +
                          std::to_string(map.weights.cols()));
  RowMatrix out = matrix.as_eigen() * map.weights.transpose();
  return EmbeddingMatrix::from_eigen(out, matrix.method() + "+aligned", matrix.index());
}

inline void write_loss_history(std::ostream& out, const LinearMap& map) {
  out.precision(10);
  out << "epoch,train_loss,valid_loss\n";
  for (const auto& e : map.loss_history) out << e.epoch << ',' << e.train_loss << ',' << e.valid_loss << '\n';
}

/// Writes <stem>.embx, <stem>.meta and <stem>.loss.csv.
inline void save_linear_map(const std::filesystem::path& stem, const LinearMap& map) {
  std::vector<std::string> rows;
  for (Eigen::Index i = 0; i < map.weights.rows(); ++i) rows.push_back(std::to_string(i));
  write_matrix(std::filesystem::path(stem.string() + ".embx"),
               EmbeddingMatrix::from_eigen(map.weights, "linear-map", std::move(rows)));
  std::ofstream meta(stem.string() + ".meta");
  if (!meta) throw IoError("cannot write " + stem.string() + ".meta");
  const auto& c = map.config;
  meta.precision(17);
  meta << "source_method=" << map.source_method << "\ntarget_method=" << map.target_method
       << "\nstopped_epoch=" << map.stopped_epoch << "\nbest_epoch=" << map.best_epoch
       << "\nlearning_rate=" << c.learning_rate << "\nbatch_size=" << c.batch_size << "\nmax_epochs=" << c.max_epochs
       << "\npatience=" << c.patience << "\nweight_decay=" << c.weight_decay << "\nbeta1=" << c.beta1
       << "\nbeta2=" << c.beta2 << "\nlr_decay=" << c.lr_decay << "\nseed=" << c.seed << "\n";
  std::ofstream loss(stem.string() + ".loss.csv");
  if (!loss) throw IoError("cannot write " + stem.string() + ".loss.csv");
  write_loss_history(loss, map);
}

inline LinearMap load_linear_map(const std::filesystem::path& stem) {
  LinearMap map;
  map.weights = read_matrix(std::filesystem::path(stem.string() + ".embx")).to_eigen();
  std::ifstream meta(stem.string() + ".meta");
  if (!meta) throw IoError("cannot open " + stem.string() + ".meta");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto& c = map.config;
    try {
      if (key == "source_method") map.source_method = value;
      else if (key == "target_method") map.target_method = value;
      else if (key == "stopped_epoch") map.stopped_epoch = std::stoull(value);
      else if (key == "best_epoch") map.best_epoch = std::stoull(value);
      else if (key == "learning_rate") c.learning_rate = std::stod(value);
      else if (key == "batch_size") c.batch_size = std::stoull(value);
      else if (key == "max_epochs") c.max_epochs = std::stoull(value);
      else if (key == "patience") c.patience = std::stoull(value);
      else if (key == "weight_decay") c.weight_decay = std::stod(value);
      else if (key == "beta1") c.beta1 = std::stod(value);
      else if (key == "beta2") c.beta2 = std::stod(value);
      else if (key == "lr_decay") c.lr_decay = std::stod(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else throw ParseError("unknown key '" + key + "'", line_no);
    } catch (const std::logic_error&) {
      throw ParseError("bad value for '" + key + "'", line_no);
    }
  }
  return map;
}

}  // namespace kgalign
