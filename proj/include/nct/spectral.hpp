#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nct/errors.hpp"
#include "nct/matrix.hpp"

namespace nct::control {

/// Full eigensystem of a symmetric matrix. Eigenvalues are ascending and
/// `eigenvectors.col(j)` pairs with `eigenvalues(j)`. Signs are fixed so the
/// largest-magnitude component of every eigenvector is nonnegative, which
/// makes repeated decompositions of the same matrix identical.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;

  Eigen::Index n() const { return eigenvalues.size(); }
};

struct JacobiOptions {
  double tol = 1e-12;   // converged when offdiag Frobenius mass < tol * ||A||_F
  int max_sweeps = 64;  // iteration cap; exceeding it signals pathology
};

namespace detail {

inline void fix_eigenvector_signs(Matrix& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = std::abs(v(0, j));
    for (Eigen::Index i = 1; i < v.rows(); ++i) {
      const double a = std::abs(v(i, j));
      if (a > best) {
        best = a;
        imax = i;
      }
    }
    if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
  }
}

inline double offdiag_frobenius(const Matrix& w) {
  double acc = 0.0;
  for (Eigen::Index p = 0; p < w.rows(); ++p)
    for (Eigen::Index q = p + 1; q < w.cols(); ++q) acc += 2.0 * w(p, q) * w(p, q);
  return std::sqrt(acc);
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of a symmetric matrix.
inline SpectralDecomposition spectral_decompose(const Matrix& a,
                                                const JacobiOptions& opt = {}) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw input_error("spectral_decompose: matrix must be square");
  if (!a.allFinite()) throw input_error("spectral_decompose: non-finite entries");
  if (!is_symmetric(a, 1e-9 * (1.0 + a.cwiseAbs().maxCoeff())))
    throw input_error("spectral_decompose: matrix is not symmetric");

  Matrix w = a;
  // enforce exact symmetry of the working copy so both triangles agree
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) w(j, i) = w(i, j);

  Matrix v = Matrix::Identity(n, n);
  const double norm = w.norm();

  SpectralDecomposition out;
  if (norm == 0.0) {
    out.eigenvalues = Vector::Zero(n);
    out.eigenvectors = std::move(v);
    return out;
  }

  const double threshold = opt.tol * norm;
  // rotations this small cannot lift the offdiagonal mass above threshold
  const double skip = 0.1 * threshold / static_cast<double>(n);

  bool converged = false;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (std::abs(apq) <= skip) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double wip = w(i, p);
          const double wiq = w(i, q);
          w(i, p) = w(p, i) = c * wip - s * wiq;
          w(i, q) = w(q, i) = s * wip + c * wiq;
        }
        w(p, p) -= t * apq;
        w(q, q) += t * apq;
        w(p, q) = w(q, p) = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    converged = detail::offdiag_frobenius(w) < threshold;
  }
  if (!converged)
    throw analysis_error("spectral_decompose: Jacobi iteration failed to converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return w(i, i) < w(j, j); });

  out.eigenvalues = Vector(n);
  out.eigenvectors = Matrix(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.eigenvalues(j) = w(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    out.eigenvectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }
  detail::fix_eigenvector_signs(out.eigenvectors);
  return out;
}

inline double spectral_radius_of(const SpectralDecomposition& d) {
  return d.eigenvalues.cwiseAbs().maxCoeff();
}

inline double spectral_radius(const Matrix& a, const JacobiOptions& opt = {}) {
  return spectral_radius_of(spectral_decompose(a, opt));
}

/// ||A - V diag(xi) V^T||_F, the self-check used by the test suites.
inline double reconstruction_residual(const Matrix& a, const SpectralDecomposition& d) {
  return (a - d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose()).norm();
}

/// ||V^T V - I||_F.
inline double orthonormality_defect(const SpectralDecomposition& d) {
  const Eigen::Index n = d.n();
  return (d.eigenvectors.transpose() * d.eigenvectors - Matrix::Identity(n, n)).norm();
}

}  // namespace nct::control
