#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nct/errors.hpp"
#include "nct/matrix.hpp"
#include "nct/rng.hpp"
#include "nct/stats.hpp"

namespace nct::mlbench {

enum class TransformerKind { variance_threshold, mean_impute, robust_scale, pca, percentile_select };
enum class EstimatorKind { least_squares, ridge, bagged_trees };

struct TransformerSpec {
  TransformerKind kind = TransformerKind::variance_threshold;
  std::vector<int> components;      // pca grid
  std::vector<double> percentiles;  // percentile_select grid
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::least_squares;
  std::vector<double> alphas = {1.0};  // ridge grid
  std::vector<int> n_trees = {25};     // bagged-trees grid
  int max_depth = 3;
  int min_leaf = 2;
};

/// One pipeline: a transformer chain in the canonical order
/// threshold -> impute -> scale -> (pca | percentile select), then an
/// estimator with a hyperparameter grid.
struct PipelineSpec {
  std::string name;
  std::vector<TransformerSpec> transformers;
  EstimatorSpec estimator;
};

inline int chain_rank(TransformerKind k) {
  switch (k) {
    case TransformerKind::variance_threshold: return 0;
    case TransformerKind::mean_impute: return 1;
    case TransformerKind::robust_scale: return 2;
    case TransformerKind::pca: return 3;
    case TransformerKind::percentile_select: return 3;
  }
  return 4;
}

inline void validate_spec(const PipelineSpec& spec) {
  int last = -1;
  for (const auto& t : spec.transformers) {
    const int rank = chain_rank(t.kind);
    if (rank <= last)
      throw input_error("pipeline '" + spec.name + "': transformer chain out of order");
    last = rank;
    if (t.kind == TransformerKind::pca && t.components.empty())
      throw input_error("pipeline '" + spec.name + "': pca needs a component grid");
    if (t.kind == TransformerKind::percentile_select && t.percentiles.empty())
      throw input_error("pipeline '" + spec.name + "': percentile select needs a grid");
  }
  if (spec.estimator.kind == EstimatorKind::ridge && spec.estimator.alphas.empty())
    throw input_error("pipeline '" + spec.name + "': ridge needs an alpha grid");
  if (spec.estimator.kind == EstimatorKind::bagged_trees && spec.estimator.n_trees.empty())
    throw input_error("pipeline '" + spec.name + "': bagged trees need a tree-count grid");
}

/// One point of a pipeline's hyperparameter grid.
struct PipelineConfig {
  std::optional<int> pca_components;
  std::optional<double> percentile;
  std::optional<double> alpha;
  std::optional<int> n_trees;

  std::string describe() const {
    std::string s;
    if (pca_components) s += "pca=" + std::to_string(*pca_components) + " ";
    if (percentile) s += "select=" + format_double(*percentile) + "% ";
    if (alpha) s += "alpha=" + format_double(*alpha) + " ";
    if (n_trees) s += "trees=" + std::to_string(*n_trees) + " ";
    if (s.empty()) return "default";
    s.pop_back();
    return s;
  }
};

inline std::vector<PipelineConfig> enumerate_configs(const PipelineSpec& spec) {
  std::vector<PipelineConfig> configs{PipelineConfig{}};
  auto cross = [&configs](auto&& assign, const auto& grid) {
    std::vector<PipelineConfig> next;
    next.reserve(configs.size() * grid.size());
    for (const auto& c : configs)
      for (const auto& g : grid) {
        PipelineConfig copy = c;
        assign(copy, g);
        next.push_back(copy);
      }
    configs = std::move(next);
  };
  for (const auto& t : spec.transformers) {
    if (t.kind == TransformerKind::pca)
      cross([](PipelineConfig& c, int k) { c.pca_components = k; }, t.components);
    else if (t.kind == TransformerKind::percentile_select)
      cross([](PipelineConfig& c, double p) { c.percentile = p; }, t.percentiles);
  }
  if (spec.estimator.kind == EstimatorKind::ridge)
    cross([](PipelineConfig& c, double a) { c.alpha = a; }, spec.estimator.alphas);
  else if (spec.estimator.kind == EstimatorKind::bagged_trees)
    cross([](PipelineConfig& c, int t) { c.n_trees = t; }, spec.estimator.n_trees);
  return configs;
}

// ---------------------------------------------------------------------------
// Fitted transformer chain
// ---------------------------------------------------------------------------

namespace detail {

inline double column_variance_ignoring_nan(const Matrix& x, Eigen::Index col) {
  double sum = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (!std::isnan(x(i, col))) {
      sum += x(i, col);
      ++count;
    }
  if (count == 0) return 0.0;
  const double mean = sum / static_cast<double>(count);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (!std::isnan(x(i, col))) acc += (x(i, col) - mean) * (x(i, col) - mean);
  return acc / static_cast<double>(count);
}

struct FittedChain {
  bool has_variance_threshold = false;
  std::vector<Eigen::Index> keep_variance;

  bool has_impute = false;
  Vector impute_means;

  bool has_scale = false;
  Vector scale_center, scale_width;

  std::optional<Matrix> pca_basis;  // columns = components
  Vector pca_center;

  bool has_select = false;
  std::vector<Eigen::Index> keep_select;

  bool clipped = false;  // pca component count was reduced to the data rank

  Matrix apply(const Matrix& input) const {
    Matrix x = input;
    if (has_variance_threshold) {
      Matrix kept(x.rows(), static_cast<Eigen::Index>(keep_variance.size()));
      for (std::size_t j = 0; j < keep_variance.size(); ++j)
        kept.col(static_cast<Eigen::Index>(j)) = x.col(keep_variance[j]);
      x = std::move(kept);
    }
    if (has_impute) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          if (std::isnan(x(i, j))) x(i, j) = impute_means(j);
    }
    if (has_scale) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        x.col(j) = (x.col(j).array() - scale_center(j)) / scale_width(j);
    }
    if (pca_basis) x = (x.rowwise() - pca_center.transpose()) * (*pca_basis);
    if (has_select) {
      Matrix kept(x.rows(), static_cast<Eigen::Index>(keep_select.size()));
      for (std::size_t j = 0; j < keep_select.size(); ++j)
        kept.col(static_cast<Eigen::Index>(j)) = x.col(keep_select[j]);
      x = std::move(kept);
    }
    return x;
  }
};

inline FittedChain fit_chain(const PipelineSpec& spec, const PipelineConfig& config,
                             const Matrix& x_train, const Vector& y_train) {
  FittedChain chain;
  Matrix x = x_train;
  for (const auto& t : spec.transformers) {
    switch (t.kind) {
      case TransformerKind::variance_threshold: {
        chain.has_variance_threshold = true;
        for (Eigen::Index j = 0; j < x.cols(); ++j)
          if (column_variance_ignoring_nan(x, j) >= 1e-12) chain.keep_variance.push_back(j);
        if (chain.keep_variance.empty())
          throw analysis_error("variance threshold dropped every feature");
        Matrix kept(x.rows(), static_cast<Eigen::Index>(chain.keep_variance.size()));
        for (std::size_t j = 0; j < chain.keep_variance.size(); ++j)
          kept.col(static_cast<Eigen::Index>(j)) = x.col(chain.keep_variance[j]);
        x = std::move(kept);
        break;
      }
      case TransformerKind::mean_impute: {
        chain.has_impute = true;
        chain.impute_means = Vector::Zero(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          double sum = 0.0;
          long count = 0;
          for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (!std::isnan(x(i, j))) {
              sum += x(i, j);
              ++count;
            }
          chain.impute_means(j) = count ? sum / static_cast<double>(count) : 0.0;
          for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (std::isnan(x(i, j))) x(i, j) = chain.impute_means(j);
        }
        break;
      }
      case TransformerKind::robust_scale: {
        chain.has_scale = true;
        chain.scale_center = Vector::Zero(x.cols());
        chain.scale_width = Vector::Zero(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
          std::vector<double> column(x.col(j).begin(), x.col(j).end());
          std::sort(column.begin(), column.end());
          chain.scale_center(j) = quantile_sorted(column, 0.5);
          const double iqr = quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
          chain.scale_width(j) = std::max(iqr, 1e-12);
          x.col(j) = (x.col(j).array() - chain.scale_center(j)) / chain.scale_width(j);
        }
        break;
      }
      case TransformerKind::pca: {
        const int requested = config.pca_components.value_or(1);
        chain.pca_center = x.colwise().mean();
        const Matrix centered = x.rowwise() - chain.pca_center.transpose();
        Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        Eigen::Index rank = 0;
        const double cutoff = sv.size() ? 1e-10 * sv(0) : 0.0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
          if (sv(i) > cutoff) ++rank;
        Eigen::Index k = std::min<Eigen::Index>(requested, rank);
        if (k < 1) k = 1;
        if (k < requested) chain.clipped = true;
        Matrix basis = svd.matrixV().leftCols(k);
        // deterministic component orientation
        for (Eigen::Index j = 0; j < basis.cols(); ++j) {
          Eigen::Index imax = 0;
          for (Eigen::Index i = 1; i < basis.rows(); ++i)
            if (std::abs(basis(i, j)) > std::abs(basis(imax, j))) imax = i;
          if (basis(imax, j) < 0.0) basis.col(j) = -basis.col(j);
        }
        chain.pca_basis = basis;
        x = centered * basis;
        break;
      }
      case TransformerKind::percentile_select: {
        chain.has_select = true;
        const double pct = config.percentile.value_or(10.0);
        const Eigen::Index d = x.cols();
        const Eigen::Index n = x.rows();
        std::vector<std::pair<double, Eigen::Index>> scored;
        scored.reserve(static_cast<std::size_t>(d));
        const double y_mean = y_train.mean();
        const double y_ss = (y_train.array() - y_mean).square().sum();
        for (Eigen::Index j = 0; j < d; ++j) {
          const double x_mean = x.col(j).mean();
          const double x_ss = (x.col(j).array() - x_mean).square().sum();
          double f = 0.0;
          if (x_ss > 0.0 && y_ss > 0.0) {
            const double cov = ((x.col(j).array() - x_mean) * (y_train.array() - y_mean)).sum();
            const double r2 = (cov * cov) / (x_ss * y_ss);
            // squared-correlation F statistic for one regressor
            f = r2 >= 1.0 ? std::numeric_limits<double>::infinity()
                          : r2 / (1.0 - r2) * static_cast<double>(n - 2);
          }
          scored.emplace_back(f, j);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(d))));
        for (std::size_t j = 0; j < keep && j < scored.size(); ++j)
          chain.keep_select.push_back(scored[j].second);
        std::sort(chain.keep_select.begin(), chain.keep_select.end());
        Matrix kept(x.rows(), static_cast<Eigen::Index>(chain.keep_select.size()));
        for (std::size_t j = 0; j < chain.keep_select.size(); ++j)
          kept.col(static_cast<Eigen::Index>(j)) = x.col(chain.keep_select[j]);
        x = std::move(kept);
        break;
      }
    }
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1, right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::RowVectorXd& row) const {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
      const auto& node = nodes[static_cast<std::size_t>(idx)];
      idx = row(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
  }
};

/// Deterministic CART split search: best SSE reduction, ties resolved by
/// lowest feature index, then lowest threshold.
inline int build_tree_node(RegressionTree& tree, const Matrix& x, const Vector& y,
                           std::vector<Eigen::Index>& rows, int depth, int max_depth,
                           int min_leaf) {
  const auto make_leaf = [&]() {
    double mean = 0.0;
    for (auto r : rows) mean += y(r);
    mean /= static_cast<double>(rows.size());
    TreeNode leaf;
    leaf.value = mean;
    tree.nodes.push_back(leaf);
    return static_cast<int>(tree.nodes.size()) - 1;
  };
  if (depth >= max_depth || rows.size() < 2 * static_cast<std::size_t>(min_leaf))
    return make_leaf();

  double total = 0.0, total_sq = 0.0;
  for (auto r : rows) {
    total += y(r);
    total_sq += y(r) * y(r);
  }
  const double parent_sse = total_sq - total * total / static_cast<double>(rows.size());
  if (parent_sse <= 1e-14) return make_leaf();

  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
  std::vector<Eigen::Index> sorted = rows;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::sort(sorted.begin(), sorted.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
      return a < b;
    });
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const double yi = y(sorted[i]);
      left_sum += yi;
      left_sq += yi * yi;
      if (x(sorted[i], f) == x(sorted[i + 1], f)) continue;
      const std::size_t left_n = i + 1;
      const std::size_t right_n = sorted.size() - left_n;
      if (left_n < static_cast<std::size_t>(min_leaf) ||
          right_n < static_cast<std::size_t>(min_leaf))
        continue;
      const double right_sum = total - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse = (left_sq - left_sum * left_sum / static_cast<double>(left_n)) +
                         (right_sq - right_sum * right_sum / static_cast<double>(right_n));
      const double gain = parent_sse - sse;
      const double threshold = 0.5 * (x(sorted[i], f) + x(sorted[i + 1], f));
      if (gain > best_gain + 1e-15 ||
          (std::abs(gain - best_gain) <= 1e-15 && best_feature >= 0 &&
           (f < best_feature || (f == best_feature && threshold < best_threshold)))) {
        best_gain = gain;
        best_feature = static_cast<int>(f);
        best_threshold = threshold;
      }
    }
  }
  if (best_feature < 0) return make_leaf();

  std::vector<Eigen::Index> left_rows, right_rows;
  for (auto r : rows)
    (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);

  TreeNode node;
  node.feature = best_feature;
  node.threshold = best_threshold;
  tree.nodes.push_back(node);
  const int self = static_cast<int>(tree.nodes.size()) - 1;
  tree.nodes[static_cast<std::size_t>(self)].left =
      build_tree_node(tree, x, y, left_rows, depth + 1, max_depth, min_leaf);
  tree.nodes[static_cast<std::size_t>(self)].right =
      build_tree_node(tree, x, y, right_rows, depth + 1, max_depth, min_leaf);
  return self;
}

struct FittedEstimator {
  EstimatorKind kind = EstimatorKind::least_squares;
  Vector coef;  // linear family: [intercept, slopes...]
  std::vector<RegressionTree> trees;

  double predict(const Eigen::RowVectorXd& row) const {
    if (kind == EstimatorKind::bagged_trees) {
      double acc = 0.0;
      for (const auto& t : trees) acc += t.predict(row);
      return acc / static_cast<double>(trees.size());
    }
    double value = coef(0);
    for (Eigen::Index j = 0; j < row.size(); ++j) value += coef(j + 1) * row(j);
    return value;
  }
};

inline FittedEstimator fit_estimator(const EstimatorSpec& spec, const PipelineConfig& config,
                                     const Matrix& x, const Vector& y, std::uint64_t fit_seed) {
  const Eigen::Index n = x.rows();
  if ((y.array() == y(0)).all())
    throw analysis_error("degenerate fold: constant training target");

  FittedEstimator est;
  est.kind = spec.kind;
  switch (spec.kind) {
    case EstimatorKind::least_squares: {
      Matrix design(n, x.cols() + 1);
      design.col(0).setOnes();
      design.rightCols(x.cols()) = x;
      Eigen::ColPivHouseholderQR<Matrix> qr(design);
      est.coef = qr.solve(y);
      break;
    }
    case EstimatorKind::ridge: {
      const double alpha = config.alpha.value_or(1.0);
      const Vector x_mean = x.colwise().mean();
      const double y_mean = y.mean();
      const Matrix xc = x.rowwise() - x_mean.transpose();
      const Vector yc = y.array() - y_mean;
      Matrix gram = xc.transpose() * xc;
      gram.diagonal().array() += alpha;
      const Vector beta = gram.ldlt().solve(xc.transpose() * yc);
      est.coef = Vector(x.cols() + 1);
      est.coef(0) = y_mean - x_mean.dot(beta);
      est.coef.tail(x.cols()) = beta;
      break;
    }
    case EstimatorKind::bagged_trees: {
      const int n_trees = config.n_trees.value_or(25);
      est.trees.reserve(static_cast<std::size_t>(n_trees));
      for (int t = 0; t < n_trees; ++t) {
        auto engine = rng::stream(fit_seed, 0x7EEEu, static_cast<std::uint64_t>(t));
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        std::vector<Eigen::Index> sample(static_cast<std::size_t>(n));
        for (auto& s : sample) s = pick(engine);
        RegressionTree tree;
        build_tree_node(tree, x, y, sample, 0, spec.max_depth, spec.min_leaf);
        est.trees.push_back(std::move(tree));
      }
      break;
    }
  }
  return est;
}

struct FittedPipeline {
  FittedChain chain;
  FittedEstimator estimator;

  double predict(const Eigen::RowVectorXd& row) const {
    const Matrix transformed = chain.apply(row);
    return estimator.predict(transformed.row(0));
  }
};

inline FittedPipeline fit_pipeline(const PipelineSpec& spec, const PipelineConfig& config,
                                   const Matrix& x_train, const Vector& y_train,
                                   std::uint64_t fit_seed) {
  FittedPipeline fitted;
  fitted.chain = fit_chain(spec, config, x_train, y_train);
  fitted.estimator =
      fit_estimator(spec.estimator, config, fitted.chain.apply(x_train), y_train, fit_seed);
  return fitted;
}

inline Matrix drop_row(const Matrix& x, Eigen::Index row) {
  Matrix out(x.rows() - 1, x.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (i == row) continue;
    out.row(r++) = x.row(i);
  }
  return out;
}

inline Vector drop_element(const Vector& v, Eigen::Index idx) {
  Vector out(v.size() - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i == idx) continue;
    out(r++) = v(i);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Nested leave-one-out cross-validation
// ---------------------------------------------------------------------------

struct FoldChoice {
  int config_index = 0;
  double inner_mae = 0.0;
};

struct BenchmarkResult {
  std::string pipeline;
  std::vector<double> outer_predictions;  // one per subject
  std::vector<FoldChoice> inner_trace;    // chosen config per outer fold
  std::vector<std::string> configs;       // the grid actually executed
  double variance_explained = 0.0;        // percent, sign-preserving
  double mse = 0.0;
  double mae = 0.0;
  bool clipped = false;
};

namespace detail {

/// Prediction for one outer fold. The held-out row's target never enters
/// the inner selection or the final fit.
inline double predict_one_fold(const PipelineSpec& spec,
                               const std::vector<PipelineConfig>& configs, const Matrix& x,
                               const Vector& y, Eigen::Index hold, std::uint64_t seed,
                               FoldChoice* choice, bool* clipped) {
  const Matrix x_train = drop_row(x, hold);
  const Vector y_train = drop_element(y, hold);
  const Eigen::Index n_train = x_train.rows();

  int best_config = 0;
  double best_mae = 0.0;
  if (configs.size() > 1) {
    best_mae = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < configs.size(); ++c) {
      double abs_err = 0.0;
      for (Eigen::Index j = 0; j < n_train; ++j) {
        const auto fitted = fit_pipeline(
            spec, configs[c], drop_row(x_train, j), drop_element(y_train, j),
            rng::mix(seed, static_cast<std::uint64_t>(hold), static_cast<std::uint64_t>(c),
                     static_cast<std::uint64_t>(j) + 1));
        abs_err += std::abs(fitted.predict(x_train.row(j)) - y_train(j));
        if (clipped && fitted.chain.clipped) *clipped = true;
      }
      const double mae = abs_err / static_cast<double>(n_train);
      if (mae < best_mae) {
        best_mae = mae;
        best_config = static_cast<int>(c);
      }
    }
  }

  const auto fitted = fit_pipeline(
      spec, configs[static_cast<std::size_t>(best_config)], x_train, y_train,
      rng::mix(seed, static_cast<std::uint64_t>(hold), static_cast<std::uint64_t>(best_config),
               0));
  if (clipped && fitted.chain.clipped) *clipped = true;
  if (choice) {
    choice->config_index = best_config;
    choice->inner_mae = best_mae;
  }
  return fitted.predict(x.row(hold));
}

}  // namespace detail

/// Outer leave-one-out evaluation with inner leave-one-out grid search
/// selecting by mean absolute error. The reported score is percent variance
/// explained by the rank correlation of pooled outer predictions vs truth.
inline BenchmarkResult run_pipeline(const PipelineSpec& spec, const Matrix& x, const Vector& y,
                                    std::uint64_t seed = 0) {
  validate_spec(spec);
  const Eigen::Index n = x.rows();
  if (n < 4) throw input_error("run_pipeline: need at least 4 subjects");
  if (x.cols() < 1) throw input_error("run_pipeline: need at least 1 feature");
  if (y.size() != n) throw input_error("run_pipeline: target length mismatch");

  const auto configs = enumerate_configs(spec);
  BenchmarkResult result;
  result.pipeline = spec.name;
  for (const auto& c : configs) result.configs.push_back(c.describe());
  result.outer_predictions.resize(static_cast<std::size_t>(n));
  result.inner_trace.resize(static_cast<std::size_t>(n));

  for (Eigen::Index hold = 0; hold < n; ++hold)
    result.outer_predictions[static_cast<std::size_t>(hold)] = detail::predict_one_fold(
        spec, configs, x, y, hold, seed, &result.inner_trace[static_cast<std::size_t>(hold)],
        &result.clipped);

  std::vector<double> truth(y.begin(), y.end());
  result.variance_explained = stats::sign_preserving_r2_percent(result.outer_predictions, truth);
  double se = 0.0, ae = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double err = result.outer_predictions[static_cast<std::size_t>(i)] - y(i);
    se += err * err;
    ae += std::abs(err);
  }
  result.mse = se / static_cast<double>(n);
  result.mae = ae / static_cast<double>(n);
  return result;
}

// ---------------------------------------------------------------------------
// Benchmark over modalities
// ---------------------------------------------------------------------------

struct BenchmarkEntry {
  std::string modality;
  std::string pipeline;
  double variance_explained = 0.0;
  double mse = 0.0;
  double mae = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkEntry> entries;
  std::vector<std::pair<std::string, double>> single_features;  // name -> percent
};

inline BenchmarkTable run_benchmark(const std::vector<PipelineSpec>& specs,
                                    const std::vector<std::pair<std::string, Matrix>>& modalities,
                                    const Vector& y,
                                    const std::vector<std::pair<std::string, Vector>>&
                                        single_features = {},
                                    std::uint64_t seed = 0) {
  BenchmarkTable table;
  for (const auto& [modality, x] : modalities) {
    if (x.rows() != y.size())
      throw input_error("run_benchmark: modality '" + modality + "' misaligned with targets");
    for (const auto& spec : specs) {
      const auto result = run_pipeline(spec, x, y, seed);
      table.entries.push_back(
          {modality, spec.name, result.variance_explained, result.mse, result.mae});
    }
  }
  for (const auto& [name, feature] : single_features) {
    if (feature.size() != y.size())
      throw input_error("run_benchmark: feature '" + name + "' misaligned with targets");
    const auto predictions = stats::detail::loocv_linear_predictions(feature, y);
    std::vector<double> truth(y.begin(), y.end());
    table.single_features.emplace_back(name,
                                       stats::sign_preserving_r2_percent(predictions, truth));
  }
  return table;
}

/// The canonical pipeline family: {none, pca, percentile select} crossed
/// with {least squares, ridge, bagged trees}. Counts are configurable
/// through the JSON spec file; this is just a sound default.
inline std::vector<PipelineSpec> default_pipelines(std::vector<int> pca_components = {2, 5, 10}) {
  const std::vector<TransformerSpec> base = {
      {TransformerKind::variance_threshold, {}, {}},
      {TransformerKind::mean_impute, {}, {}},
      {TransformerKind::robust_scale, {}, {}},
  };
  auto with = [&base](std::optional<TransformerSpec> extra) {
    auto chain = base;
    if (extra) chain.push_back(*extra);
    return chain;
  };
  const TransformerSpec pca{TransformerKind::pca, pca_components, {}};
  const TransformerSpec select{TransformerKind::percentile_select, {}, {5.0, 10.0}};

  EstimatorSpec ls;
  EstimatorSpec ridge;
  ridge.kind = EstimatorKind::ridge;
  ridge.alphas = {1e-4, 1e-2, 1.0, 100.0};
  EstimatorSpec trees;
  trees.kind = EstimatorKind::bagged_trees;
  trees.n_trees = {25, 100};

  std::vector<PipelineSpec> specs;
  specs.push_back({"ls", with(std::nullopt), ls});
  specs.push_back({"ridge", with(std::nullopt), ridge});
  specs.push_back({"trees", with(std::nullopt), trees});
  specs.push_back({"pca_ls", with(pca), ls});
  specs.push_back({"pca_ridge", with(pca), ridge});
  specs.push_back({"pca_trees", with(pca), trees});
  specs.push_back({"select_ls", with(select), ls});
  specs.push_back({"select_ridge", with(select), ridge});
  specs.push_back({"select_trees", with(select), trees});
  return specs;
}

// ---------------------------------------------------------------------------
// Declarative spec files and result export
// ---------------------------------------------------------------------------

inline TransformerKind transformer_kind_from_string(const std::string& s) {
  if (s == "variance_threshold") return TransformerKind::variance_threshold;
  if (s == "mean_impute") return TransformerKind::mean_impute;
  if (s == "robust_scale") return TransformerKind::robust_scale;
  if (s == "pca") return TransformerKind::pca;
  if (s == "percentile_select") return TransformerKind::percentile_select;
  throw input_error("unknown transformer kind: " + s);
}

inline EstimatorKind estimator_kind_from_string(const std::string& s) {
  if (s == "least_squares") return EstimatorKind::least_squares;
  if (s == "ridge") return EstimatorKind::ridge;
  if (s == "bagged_trees") return EstimatorKind::bagged_trees;
  throw input_error("unknown estimator kind: " + s);
}

inline std::vector<PipelineSpec> pipelines_from_json(const nlohmann::json& j) {
  std::vector<PipelineSpec> specs;
  if (!j.contains("pipelines") || !j["pipelines"].is_array())
    throw input_error("pipeline spec file needs a 'pipelines' array");
  for (const auto& pj : j["pipelines"]) {
    PipelineSpec spec;
    spec.name = pj.value("name", "pipeline-" + std::to_string(specs.size()));
    if (pj.contains("transformers"))
      for (const auto& tj : pj["transformers"]) {
        TransformerSpec t;
        t.kind = transformer_kind_from_string(tj.at("kind").get<std::string>());
        if (tj.contains("components")) t.components = tj["components"].get<std::vector<int>>();
        if (tj.contains("percentiles"))
          t.percentiles = tj["percentiles"].get<std::vector<double>>();
        spec.transformers.push_back(std::move(t));
      }
    const auto& ej = pj.at("estimator");
    spec.estimator.kind = estimator_kind_from_string(ej.at("kind").get<std::string>());
    if (ej.contains("alphas")) spec.estimator.alphas = ej["alphas"].get<std::vector<double>>();
    if (ej.contains("n_trees")) spec.estimator.n_trees = ej["n_trees"].get<std::vector<int>>();
    if (ej.contains("max_depth")) spec.estimator.max_depth = ej["max_depth"].get<int>();
    if (ej.contains("min_leaf")) spec.estimator.min_leaf = ej["min_leaf"].get<int>();
    validate_spec(spec);
    specs.push_back(std::move(spec));
  }
  return specs;
}

inline nlohmann::json benchmark_to_json(const BenchmarkTable& table) {
  nlohmann::json j;
  j["pipelines"] = nlohmann::json::array();
  for (const auto& e : table.entries)
    j["pipelines"].push_back({{"modality", e.modality},
                              {"pipeline", e.pipeline},
                              {"variance_explained_percent", e.variance_explained},
                              {"mse", e.mse},
                              {"mae", e.mae}});
  j["single_features"] = nlohmann::json::array();
  for (const auto& [name, score] : table.single_features)
    j["single_features"].push_back({{"feature", name}, {"variance_explained_percent", score}});
  return j;
}

inline std::string benchmark_to_csv(const BenchmarkTable& table) {
  std::string out = "modality,pipeline,variance_explained_percent,mse,mae\n";
  for (const auto& e : table.entries)
    out += e.modality + "," + e.pipeline + "," + format_double(e.variance_explained) + "," +
           format_double(e.mse) + "," + format_double(e.mae) + "\n";
  for (const auto& [name, score] : table.single_features)
    out += "single_feature," + name + "," + format_double(score) + ",,\n";
  return out;
}

}  // namespace nct::mlbench
