#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nct/errors.hpp"
#include "nct/matrix.hpp"
#include "nct/spectral.hpp"
#include "nct/util.hpp"

namespace nct::connectome {

/// A subject's raw tractography output: streamline counts between region
/// pairs, optionally with per-edge fractional anisotropy and mean
/// diffusivity. Always symmetric with a zero diagonal after ingestion.
struct RawConnectome {
  int n = 0;
  Matrix weights;
  std::optional<Matrix> fa;
  std::optional<Matrix> md;
  std::vector<std::string> warnings;
};

/// Processed adjacency matrix: binarized and/or spectrally stabilized.
struct ConnectomeMatrix {
  int n = 0;
  Matrix adjacency;
  bool binary = false;
  double spectral_radius = 0.0;
  long edge_count = 0;
};

namespace detail {

inline void check_square(const Matrix& w, const char* what) {
  if (w.rows() == 0 || w.rows() != w.cols())
    throw input_error(std::string(what) + ": matrix must be square and nonempty");
}

inline Matrix symmetrize_checked(const Matrix& w, double tol, const char* what) {
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (std::abs(w(i, j) - w(j, i)) > tol)
        throw input_error(std::string(what) + ": symmetry violation beyond tolerance at (" +
                          std::to_string(i) + "," + std::to_string(j) + ")");
  Matrix out = w;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j) {
      const double v = 0.5 * (w(i, j) + w(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

}  // namespace detail

inline constexpr double kSymmetryTolerance = 1e-9;

/// Validate and normalize a raw weight matrix: reject non-square, NaN or
/// negative input and asymmetry beyond tolerance; force the diagonal to zero
/// (with a warning when it was not already zero).
inline RawConnectome make_raw(const Matrix& weights, std::optional<Matrix> fa = std::nullopt,
                              std::optional<Matrix> md = std::nullopt) {
  detail::check_square(weights, "connectome");
  if (weights.hasNaN()) throw input_error("connectome: NaN entries");
  if ((weights.array() < 0.0).any()) throw input_error("connectome: negative streamline counts");

  RawConnectome raw;
  raw.n = static_cast<int>(weights.rows());
  raw.weights = detail::symmetrize_checked(weights, kSymmetryTolerance, "connectome");
  for (Eigen::Index i = 0; i < raw.weights.rows(); ++i) {
    if (raw.weights(i, i) != 0.0) {
      raw.warnings.push_back("nonzero diagonal entry at node " + std::to_string(i) +
                             " forced to zero");
      raw.weights(i, i) = 0.0;
    }
  }
  auto take_aux = [&](std::optional<Matrix>& dst, std::optional<Matrix>&& src, const char* name) {
    if (!src) return;
    if (src->rows() != raw.weights.rows() || src->cols() != raw.weights.cols())
      throw input_error(std::string("connectome: ") + name + " matrix size mismatch");
    if (src->hasNaN() || (src->array() < 0.0).any())
      throw input_error(std::string("connectome: invalid ") + name + " entries");
    dst = detail::symmetrize_checked(*src, kSymmetryTolerance, name);
    for (Eigen::Index i = 0; i < dst->rows(); ++i) (*dst)(i, i) = 0.0;
  };
  take_aux(raw.fa, std::move(fa), "FA");
  take_aux(raw.md, std::move(md), "MD");
  return raw;
}

inline RawConnectome load_raw(const std::filesystem::path& path,
                              std::optional<std::filesystem::path> fa_path = std::nullopt,
                              std::optional<std::filesystem::path> md_path = std::nullopt) {
  std::optional<Matrix> fa, md;
  if (fa_path) fa = load_matrix_csv(*fa_path);
  if (md_path) md = load_matrix_csv(*md_path);
  return make_raw(load_matrix_csv(path), std::move(fa), std::move(md));
}

inline void save_raw(const std::filesystem::path& path, const RawConnectome& raw) {
  save_matrix_csv(path, raw.weights);
}

/// Wrap an arbitrary symmetric zero-diagonal matrix, computing its spectral
/// radius and edge count.
inline ConnectomeMatrix make_connectome(const Matrix& adjacency) {
  detail::check_square(adjacency, "connectome");
  if (!adjacency.allFinite()) throw input_error("connectome: non-finite entries");
  ConnectomeMatrix m;
  m.n = static_cast<int>(adjacency.rows());
  m.adjacency = detail::symmetrize_checked(adjacency, kSymmetryTolerance, "connectome");
  for (Eigen::Index i = 0; i < m.adjacency.rows(); ++i)
    if (m.adjacency(i, i) != 0.0) throw input_error("connectome: nonzero diagonal");
  m.spectral_radius = control::spectral_radius(m.adjacency);
  m.edge_count = count_positive_upper(m.adjacency);
  m.binary = ((m.adjacency.array() == 0.0) || (m.adjacency.array() == 1.0)).all();
  return m;
}

/// Edge present iff the streamline count reaches `min_streamlines`.
inline ConnectomeMatrix threshold_binarize(const RawConnectome& raw, int min_streamlines = 3) {
  if (min_streamlines < 1) throw input_error("threshold_binarize: min_streamlines must be >= 1");
  Matrix adj =
      (raw.weights.array() >= static_cast<double>(min_streamlines)).cast<double>().matrix();
  adj.diagonal().setZero();
  ConnectomeMatrix m = make_connectome(adj);
  m.binary = true;
  return m;
}

/// Scale the adjacency by 1/(1 + lambda_max) so the spectral radius becomes
/// lambda_max/(1 + lambda_max) < 1. The zero matrix maps to itself.
inline ConnectomeMatrix stabilize(const ConnectomeMatrix& m) {
  ConnectomeMatrix out = m;
  const double lambda_max = m.spectral_radius;
  out.adjacency = m.adjacency / (1.0 + lambda_max);
  out.spectral_radius = lambda_max / (1.0 + lambda_max);
  out.binary = false;
  return out;
}

inline long edge_count(const ConnectomeMatrix& m) { return count_positive_upper(m.adjacency); }

// ---------------------------------------------------------------------------
// Cohort quality control
// ---------------------------------------------------------------------------

struct QcOptions {
  int presence_threshold = 3;  // streamline count that makes a connection "present"
  // FA metric: auto (used iff every subject carries FA), or forced on/off.
  std::optional<bool> use_fa;
};

struct QcSubjectMetrics {
  double mean_streamlines = 0.0;
  std::optional<double> mean_fa;
  double connection_prevalence = 0.0;
  double region_prevalence = 0.0;
};

struct QcFence {
  std::string metric;
  double q1 = 0.0, q2 = 0.0, q3 = 0.0, iqr = 0.0;
  double lo = 0.0, hi = 0.0;
};

struct QcReport {
  std::vector<QcSubjectMetrics> metrics;       // per subject
  std::vector<QcFence> fences;                 // per metric
  std::vector<std::vector<bool>> flags;        // [subject][metric]
  std::vector<bool> outlier;                   // any-metric flag per subject
  bool fa_used = false;
  long n_outliers = 0;
};

/// Interquartile-fence outlier screen over four subject-level metrics:
/// average streamline count, average FA, average prevalence of the
/// subject's connections, and average prevalence of the subject's connected
/// regions. Prevalences are computed on graphs binarized at the presence
/// threshold. A subject is an outlier when any metric falls strictly
/// outside [Q1 - 1.5*IQR, Q3 + 1.5*IQR].
inline QcReport qc_outliers(std::span<const RawConnectome> cohort, const QcOptions& opt = {}) {
  const std::size_t s = cohort.size();
  if (s < 4) throw input_error("qc_outliers: need at least 4 subjects for quartiles");
  const int n = cohort[0].n;
  for (const auto& raw : cohort)
    if (raw.n != n) throw input_error("qc_outliers: node counts differ across subjects");

  bool use_fa;
  if (opt.use_fa.has_value()) {
    use_fa = *opt.use_fa;
    if (use_fa)
      for (const auto& raw : cohort)
        if (!raw.fa) throw input_error("qc_outliers: FA metric requested but FA data missing");
  } else {
    use_fa = true;
    for (const auto& raw : cohort)
      if (!raw.fa) use_fa = false;
  }

  const double thr = static_cast<double>(opt.presence_threshold);
  std::vector<Matrix> present(s);
  for (std::size_t k = 0; k < s; ++k)
    present[k] = (cohort[k].weights.array() >= thr).cast<double>().matrix();

  // group-level prevalence of each connection and of each region being connected
  Matrix conn_prev = Matrix::Zero(n, n);
  Vector region_prev = Vector::Zero(n);
  for (std::size_t k = 0; k < s; ++k) {
    conn_prev += present[k];
    for (int i = 0; i < n; ++i)
      if (present[k].row(i).sum() > 0.0) region_prev(i) += 1.0;
  }
  conn_prev /= static_cast<double>(s);
  region_prev /= static_cast<double>(s);

  QcReport report;
  report.fa_used = use_fa;
  report.metrics.resize(s);
  for (std::size_t k = 0; k < s; ++k) {
    auto& m = report.metrics[k];
    double streamline_sum = 0.0, fa_sum = 0.0, prev_sum = 0.0;
    long edges = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (present[k](i, j) > 0.0) {
          ++edges;
          streamline_sum += cohort[k].weights(i, j);
          prev_sum += conn_prev(i, j);
          if (use_fa) fa_sum += (*cohort[k].fa)(i, j);
        }
    m.mean_streamlines = edges ? streamline_sum / static_cast<double>(edges) : 0.0;
    m.connection_prevalence = edges ? prev_sum / static_cast<double>(edges) : 0.0;
    if (use_fa) m.mean_fa = edges ? fa_sum / static_cast<double>(edges) : 0.0;
    double reg_sum = 0.0;
    int connected = 0;
    for (int i = 0; i < n; ++i)
      if (present[k].row(i).sum() > 0.0) {
        ++connected;
        reg_sum += region_prev(i);
      }
    m.region_prevalence = connected ? reg_sum / static_cast<double>(connected) : 0.0;
  }

  std::vector<std::pair<std::string, std::vector<double>>> columns;
  auto collect = [&](const std::string& name, auto getter) {
    std::vector<double> v(s);
    for (std::size_t k = 0; k < s; ++k) v[k] = getter(report.metrics[k]);
    columns.emplace_back(name, std::move(v));
  };
  collect("mean_streamlines", [](const QcSubjectMetrics& m) { return m.mean_streamlines; });
  if (use_fa) collect("mean_fa", [](const QcSubjectMetrics& m) { return *m.mean_fa; });
  collect("connection_prevalence",
          [](const QcSubjectMetrics& m) { return m.connection_prevalence; });
  collect("region_prevalence", [](const QcSubjectMetrics& m) { return m.region_prevalence; });

  report.flags.assign(s, std::vector<bool>(columns.size(), false));
  report.outlier.assign(s, false);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    QcFence fence;
    fence.metric = columns[c].first;
    fence.q1 = quantile(columns[c].second, 0.25);
    fence.q2 = quantile(columns[c].second, 0.50);
    fence.q3 = quantile(columns[c].second, 0.75);
    fence.iqr = fence.q3 - fence.q1;
    fence.lo = fence.q1 - 1.5 * fence.iqr;
    fence.hi = fence.q3 + 1.5 * fence.iqr;
    for (std::size_t k = 0; k < s; ++k) {
      const double v = columns[c].second[k];
      if (v < fence.lo || v > fence.hi) {
        report.flags[k][c] = true;
        report.outlier[k] = true;
      }
    }
    report.fences.push_back(fence);
  }
  for (bool f : report.outlier)
    if (f) ++report.n_outliers;
  return report;
}

inline nlohmann::json qc_to_json(const QcReport& report,
                                 const std::vector<std::string>& subject_ids = {}) {
  nlohmann::json j;
  j["fa_used"] = report.fa_used;
  j["n_outliers"] = report.n_outliers;
  j["fences"] = nlohmann::json::array();
  for (const auto& f : report.fences)
    j["fences"].push_back({{"metric", f.metric},
                           {"q1", f.q1},
                           {"q2", f.q2},
                           {"q3", f.q3},
                           {"iqr", f.iqr},
                           {"lo", f.lo},
                           {"hi", f.hi}});
  j["subjects"] = nlohmann::json::array();
  for (std::size_t k = 0; k < report.metrics.size(); ++k) {
    nlohmann::json sj;
    sj["id"] = k < subject_ids.size() ? subject_ids[k] : ("sub-" + std::to_string(k));
    sj["mean_streamlines"] = report.metrics[k].mean_streamlines;
    if (report.metrics[k].mean_fa) sj["mean_fa"] = *report.metrics[k].mean_fa;
    sj["connection_prevalence"] = report.metrics[k].connection_prevalence;
    sj["region_prevalence"] = report.metrics[k].region_prevalence;
    sj["outlier"] = static_cast<bool>(report.outlier[k]);
    nlohmann::json flags = nlohmann::json::array();
    for (std::size_t c = 0; c < report.flags[k].size(); ++c)
      if (report.flags[k][c]) flags.push_back(report.fences[c].metric);
    sj["flagged_metrics"] = flags;
    j["subjects"].push_back(sj);
  }
  return j;
}

}  // namespace nct::connectome
