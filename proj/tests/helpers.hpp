#pragma once

// Shared test utilities and the independent oracles the suites check
// against. Everything here is deliberately written without reusing the
// library's own computation paths.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "nct/cohort.hpp"
#include "nct/connectome.hpp"
#include "nct/matrix.hpp"
#include "nct/synth.hpp"

namespace testutil {

/// Cohort table from plain vectors, mapping x -> mc_mean, m -> ac_mean,
/// y -> response. Covariate columns default to mild deterministic values.
inline nct::stats::CohortTable make_table(const std::vector<double>& x,
                                          const std::vector<double>& m,
                                          const std::vector<double>& y,
                                          const std::vector<double>& age = {},
                                          const std::vector<double>& psi = {}) {
  nct::stats::CohortTable table;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nct::stats::CohortRow row;
    row.subject = "sub-" + std::to_string(i);
    row.age = age.empty() ? 40.0 + static_cast<double>(i % 7) : age[i];
    row.sex = static_cast<int>(i % 2);
    row.pre_severity = 24.0 + static_cast<double>(i % 5);
    row.mc_mean = x[i];
    row.ac_mean = m[i];
    row.response = y[i];
    row.post_severity = row.pre_severity + row.response;
    row.edge_count = 100 + static_cast<long>(i);
    if (!psi.empty()) row.psi = psi[i];
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Random dense symmetric matrix with zero diagonal, entries in [-1, 1].
inline nct::Matrix random_symmetric(int n, std::mt19937_64& engine) {
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  nct::Matrix m = nct::Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = draw(engine);
  return m;
}

/// Random binarized + stabilized connectome.
inline nct::connectome::ConnectomeMatrix random_stabilized(int n, double density,
                                                           std::uint64_t seed) {
  const auto raw = nct::synth::generate_connectome(n, density, seed);
  return nct::connectome::stabilize(nct::connectome::threshold_binarize(raw));
}

/// Power-iteration estimate of the largest eigenvalue magnitude.
inline double power_iteration_radius(const nct::Matrix& a, int iterations = 5000) {
  std::mt19937_64 engine(12345);
  std::uniform_real_distribution<double> draw(-1.0, 1.0);
  nct::Vector v(a.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = draw(engine);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    nct::Vector w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = norm;
    v = w / norm;
  }
  return lambda;
}

/// Kolmogorov-Smirnov distance of a sample to the uniform(0,1) CDF.
inline double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - p[i]);
    d = std::max(d, p[i] - static_cast<double>(i) / n);
  }
  return d;
}

/// Normal-equations least squares via plain Gauss-Jordan elimination with
/// partial pivoting. Independent of the library's QR-based path.
inline nct::Vector normal_equations_solve(const nct::Matrix& x, const nct::Vector& y) {
  const Eigen::Index p = x.cols();
  nct::Matrix a = x.transpose() * x;
  nct::Vector b = x.transpose() * y;
  for (Eigen::Index col = 0; col < p; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < p; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    a.row(col).swap(a.row(pivot));
    std::swap(b(col), b(pivot));
    const double diag = a(col, col);
    for (Eigen::Index r = 0; r < p; ++r) {
      if (r == col) continue;
      const double factor = a(r, col) / diag;
      a.row(r) -= factor * a.row(col);
      b(r) -= factor * b(col);
    }
  }
  nct::Vector beta(p);
  for (Eigen::Index i = 0; i < p; ++i) beta(i) = b(i) / a(i, i);
  return beta;
}

/// Continued-fraction regularized incomplete beta (Lentz), the independent
/// route to F-distribution tail probabilities.
inline double betacf(double a, double b, double x) {
  const int max_iterations = 300;
  const double eps = 3e-14, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

inline double ibeta_oracle(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                    b * std::log(1.0 - x);
  const double bt = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

inline double f_sf_oracle(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  return ibeta_oracle(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

}  // namespace testutil
