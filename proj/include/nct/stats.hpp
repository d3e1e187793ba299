#pragma once

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "nct/cohort.hpp"
#include "nct/errors.hpp"
#include "nct/matrix.hpp"
#include "nct/rng.hpp"
#include "nct/util.hpp"

namespace nct::stats {

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct OlsFit {
  Vector coef;
  Vector residuals;
  double rss = 0.0;
  long df_resid = 0;
};

/// Least squares through a rank-revealing orthogonal decomposition. Rank
/// deficiency is an error rather than a silent pseudo-inverse.
inline OlsFit ols_fit(const Matrix& design, const Vector& y) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (y.size() != n) throw input_error("ols_fit: dimension mismatch");
  if (n <= p) throw analysis_error("ols_fit: need more observations than parameters");
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < p) throw analysis_error("ols_fit: design matrix is rank deficient");
  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.residuals = y - design * fit.coef;
  fit.rss = fit.residuals.squaredNorm();
  fit.df_resid = static_cast<long>(n - p);
  return fit;
}

namespace detail {

/// Upper tail of the F distribution through the regularized incomplete beta
/// function: P(F_{d1,d2} > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2).
inline double f_survival(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  const double x = df2 / (df2 + df1 * f);
  return boost::math::ibeta(df2 / 2.0, df1 / 2.0, x);
}

inline double normal_cdf(double z) {
  static const boost::math::normal_distribution<double> dist;
  return boost::math::cdf(dist, z);
}

inline double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> dist;
  return boost::math::quantile(dist, p);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ANCOVA
// ---------------------------------------------------------------------------

enum class Direction { positive, negative };

inline Direction direction_from_string(const std::string& s) {
  if (s == "positive" || s == "pos" || s == "+") return Direction::positive;
  if (s == "negative" || s == "neg" || s == "-") return Direction::negative;
  throw input_error("unknown direction '" + s + "' (use positive|negative)");
}

struct AncovaResult {
  double f_value = 0.0;
  long df1 = 1;
  long df2 = 0;
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  double partial_eta_sq = 0.0;
  double coefficient = 0.0;  // fitted effect of the independent variable
  long n_used = 0;
};

/// F test of the independent variable's added sum of squares over the
/// covariate-only model, with partial eta squared as the effect size and a
/// directed one-sided p-value.
inline AncovaResult ancova(const CohortTable& cohort, const std::string& dependent,
                           const std::string& independent,
                           const std::vector<std::string>& covariates, Direction direction) {
  std::vector<std::string> columns{dependent, independent};
  columns.insert(columns.end(), covariates.begin(), covariates.end());
  const auto [data, kept] = cohort.assemble(columns);
  const Eigen::Index n = data.rows();
  const Eigen::Index p_full = 2 + static_cast<Eigen::Index>(covariates.size());
  if (n < p_full + 2) throw analysis_error("ancova: too few complete rows");

  const Vector y = data.col(0);
  Matrix full(n, p_full);
  full.col(0).setOnes();
  for (std::size_t c = 0; c < covariates.size(); ++c)
    full.col(1 + static_cast<Eigen::Index>(c)) = data.col(2 + static_cast<Eigen::Index>(c));
  full.col(p_full - 1) = data.col(1);  // independent variable last
  const Matrix reduced = full.leftCols(p_full - 1);

  const OlsFit fit_full = ols_fit(full, y);
  const OlsFit fit_reduced = ols_fit(reduced, y);
  if (fit_full.rss <= 0.0) throw analysis_error("ancova: zero residual variance");

  AncovaResult r;
  r.df1 = 1;
  r.df2 = fit_full.df_resid;
  r.n_used = static_cast<long>(n);
  const double ss_effect = std::max(0.0, fit_reduced.rss - fit_full.rss);
  r.f_value = ss_effect / (fit_full.rss / static_cast<double>(r.df2));
  r.partial_eta_sq = ss_effect / (ss_effect + fit_full.rss);
  r.coefficient = fit_full.coef(p_full - 1);
  r.p_two_sided = detail::f_survival(r.f_value, 1.0, static_cast<double>(r.df2));
  const bool matches = direction == Direction::positive ? r.coefficient >= 0.0
                                                        : r.coefficient <= 0.0;
  r.p_one_sided = matches ? r.p_two_sided / 2.0 : 1.0 - r.p_two_sided / 2.0;
  return r;
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// Ranks with ties sharing their average rank (1-based).
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw input_error("correlation: need matched vectors, length >= 3");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw analysis_error("correlation: constant input");
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

/// Percent variance explained with the sign of the correlation preserved,
/// so anticorrelated predictions never report positive skill.
inline double sign_preserving_r2_percent(std::span<const double> predictions,
                                         std::span<const double> truth) {
  const double rho = spearman(predictions, truth);
  return (rho < 0.0 ? -1.0 : 1.0) * rho * rho * 100.0;
}

// ---------------------------------------------------------------------------
// Mediation
// ---------------------------------------------------------------------------

struct MediationOptions {
  long n_boot = 10000;
  long n_perm = 10000;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
};

struct MediationResult {
  double a = 0.0;        // x -> m
  double b = 0.0;        // m -> y adjusted for x
  double c_total = 0.0;  // x -> y
  double c_prime = 0.0;  // x -> y adjusted for m
  double ab = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_perm = 1.0;
  long n_boot = 0;
  long n_perm = 0;
  std::uint64_t seed = 0;
  long n_redraws = 0;     // degenerate bootstrap draws that were redrawn
  bool degenerate = false;  // bootstrap distribution collapsed on one side
};

namespace detail {

struct MediationData {
  Vector x, m, y;
  Matrix covariates;  // n x k, no intercept column

  Eigen::Index n() const { return x.size(); }
};

struct PathEstimates {
  double a = 0.0, b = 0.0, c_total = 0.0, c_prime = 0.0;
};

/// a from m ~ x + C, b and c' from y ~ x + m + C, c from y ~ x + C.
inline PathEstimates mediation_paths(const MediationData& d, bool with_total) {
  const Eigen::Index n = d.n();
  const Eigen::Index k = d.covariates.cols();
  Matrix design_a(n, 2 + k);
  design_a.col(0).setOnes();
  design_a.col(1) = d.x;
  design_a.rightCols(k) = d.covariates;
  Matrix design_b(n, 3 + k);
  design_b.col(0).setOnes();
  design_b.col(1) = d.x;
  design_b.col(2) = d.m;
  design_b.rightCols(k) = d.covariates;

  PathEstimates est;
  est.a = ols_fit(design_a, d.m).coef(1);
  const OlsFit fit_b = ols_fit(design_b, d.y);
  est.b = fit_b.coef(2);
  est.c_prime = fit_b.coef(1);
  if (with_total) est.c_total = ols_fit(design_a, d.y).coef(1);
  return est;
}

inline MediationData resample(const MediationData& d, std::mt19937_64& engine) {
  const Eigen::Index n = d.n();
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  MediationData out;
  out.x.resize(n);
  out.m.resize(n);
  out.y.resize(n);
  out.covariates.resize(n, d.covariates.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = pick(engine);
    out.x(i) = d.x(j);
    out.m(i) = d.m(j);
    out.y(i) = d.y(j);
    out.covariates.row(i) = d.covariates.row(j);
  }
  return out;
}

}  // namespace detail

/// Product-of-coefficients mediation with a bias-corrected nonparametric
/// bootstrap CI for the indirect effect and a permutation p-value that
/// re-pairs the independent variable's covariate-adjusted residuals
/// against the mediator and outcome. Fully deterministic for a fixed
/// seed: every bootstrap and permutation iteration draws from its own
/// counter-derived substream.
inline MediationResult mediate(const CohortTable& cohort, const std::string& x_col,
                               const std::string& m_col, const std::string& y_col,
                               const std::vector<std::string>& covariates,
                               const MediationOptions& opt = {}) {
  if (opt.n_boot < 1 || opt.n_perm < 1) throw input_error("mediate: n_boot and n_perm must be >= 1");
  std::vector<std::string> columns{x_col, m_col, y_col};
  columns.insert(columns.end(), covariates.begin(), covariates.end());
  const auto [table_data, kept] = cohort.assemble(columns);
  const Eigen::Index n = table_data.rows();
  const Eigen::Index k = static_cast<Eigen::Index>(covariates.size());
  if (n < k + 4) throw analysis_error("mediate: too few complete rows");

  detail::MediationData data;
  data.x = table_data.col(0);
  data.m = table_data.col(1);
  data.y = table_data.col(2);
  data.covariates = table_data.rightCols(k);

  const auto paths = detail::mediation_paths(data, true);
  MediationResult r;
  r.a = paths.a;
  r.b = paths.b;
  r.c_total = paths.c_total;
  r.c_prime = paths.c_prime;
  r.ab = paths.a * paths.b;
  r.n_boot = opt.n_boot;
  r.n_perm = opt.n_perm;
  r.seed = opt.seed;

  // --- bias-corrected percentile bootstrap -------------------------------
  std::vector<double> ab_boot;
  ab_boot.reserve(static_cast<std::size_t>(opt.n_boot));
  const long redraw_cap = 10 * opt.n_boot;
  for (long i = 0; i < opt.n_boot; ++i) {
    auto engine = rng::stream(opt.seed, 0xB007u, static_cast<std::uint64_t>(i));
    for (;;) {
      try {
        const auto boot = detail::resample(data, engine);
        const auto est = detail::mediation_paths(boot, false);
        ab_boot.push_back(est.a * est.b);
        break;
      } catch (const analysis_error&) {
        if (++r.n_redraws > redraw_cap)
          throw analysis_error("mediate: bootstrap redraw budget exhausted");
      }
    }
  }
  long below = 0;
  for (double v : ab_boot)
    if (v < r.ab) ++below;
  double prop = static_cast<double>(below) / static_cast<double>(opt.n_boot);
  if (prop <= 0.0 || prop >= 1.0) {
    r.degenerate = true;
    const double eps = 0.5 / static_cast<double>(opt.n_boot);
    prop = std::clamp(prop, eps, 1.0 - eps);
  }
  const double z0 = detail::normal_quantile(prop);
  const double alpha = 1.0 - opt.ci_level;
  const double z_lo = detail::normal_quantile(alpha / 2.0);
  const double z_hi = detail::normal_quantile(1.0 - alpha / 2.0);
  std::sort(ab_boot.begin(), ab_boot.end());
  r.ci_low = quantile_sorted(ab_boot, detail::normal_cdf(2.0 * z0 + z_lo));
  r.ci_high = quantile_sorted(ab_boot, detail::normal_cdf(2.0 * z0 + z_hi));

  // --- permutation test of the indirect effect ---------------------------
  // Break only the x <-> mediator pairing: shuffle the independent
  // variable's covariate-adjusted residuals and recompute ab. The
  // mediator-outcome structure stays intact, so the null distribution of
  // ab keeps the observed b scale; a permutation fit that degenerates
  // counts as extreme, which is conservative.
  Matrix cov_design(n, 1 + k);
  cov_design.col(0).setOnes();
  cov_design.rightCols(k) = data.covariates;
  const OlsFit x_fit = ols_fit(cov_design, data.x);
  const Vector x_fitted = data.x - x_fit.residuals;
  long extreme = 0;
  const double observed = std::abs(r.ab);
  for (long i = 0; i < opt.n_perm; ++i) {
    auto engine = rng::stream(opt.seed, 0x9E42u, static_cast<std::uint64_t>(i));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::shuffle(perm.begin(), perm.end(), engine);
    detail::MediationData shuffled = data;
    for (Eigen::Index row = 0; row < n; ++row)
      shuffled.x(row) = x_fitted(row) + x_fit.residuals(perm[static_cast<std::size_t>(row)]);
    try {
      const auto est = detail::mediation_paths(shuffled, false);
      if (std::abs(est.a * est.b) >= observed) ++extreme;
    } catch (const analysis_error&) {
      ++extreme;
    }
  }
  r.p_perm = static_cast<double>(1 + extreme) / static_cast<double>(opt.n_perm + 1);
  return r;
}

// ---------------------------------------------------------------------------
// Single-feature LOOCV
// ---------------------------------------------------------------------------

namespace detail {

/// Leave-one-out predictions of a simple linear regression (intercept +
/// one feature).
inline std::vector<double> loocv_linear_predictions(const Vector& x, const Vector& y) {
  const Eigen::Index n = x.size();
  std::vector<double> predictions(static_cast<std::size_t>(n));
  Matrix design(n - 1, 2);
  Vector target(n - 1);
  for (Eigen::Index hold = 0; hold < n; ++hold) {
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == hold) continue;
      design(row, 0) = 1.0;
      design(row, 1) = x(i);
      target(row) = y(i);
      ++row;
    }
    const OlsFit fit = ols_fit(design, target);
    predictions[static_cast<std::size_t>(hold)] = fit.coef(0) + fit.coef(1) * x(hold);
  }
  return predictions;
}

}  // namespace detail

/// Leave-one-out evaluation of a single-feature linear model, scored as
/// sign-preserving percent variance explained between held-out predictions
/// and the truth.
inline double loocv_single_feature(const CohortTable& cohort, const std::string& feature,
                                   const std::string& target) {
  const auto [data, kept] = cohort.assemble({feature, target});
  const Eigen::Index n = data.rows();
  if (n < 3) throw analysis_error("loocv_single_feature: need at least 3 complete rows");
  const Vector x = data.col(0);
  const Vector y = data.col(1);
  if ((x.array() == x(0)).all()) throw analysis_error("loocv_single_feature: constant feature");
  const auto predictions = detail::loocv_linear_predictions(x, y);
  std::vector<double> truth(y.begin(), y.end());
  return sign_preserving_r2_percent(predictions, truth);
}

}  // namespace nct::stats
