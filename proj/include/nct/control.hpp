#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nct/connectome.hpp"
#include "nct/errors.hpp"
#include "nct/matrix.hpp"
#include "nct/spectral.hpp"

namespace nct::control {

/// Eigenvalues this close to +-1 make average controllability blow up; we
/// refuse to report such values instead of returning huge numbers.
inline constexpr double kUnitEigenvalueMargin = 1e-9;

inline SpectralDecomposition spectral_decompose(const connectome::ConnectomeMatrix& m,
                                                const JacobiOptions& opt = {}) {
  return spectral_decompose(m.adjacency, opt);
}

namespace detail {

inline void require_stable(const SpectralDecomposition& d, const char* what) {
  if (spectral_radius_of(d) >= 1.0)
    throw analysis_error(std::string(what) + ": eigenvalue magnitude >= 1 (unstable system)");
}

inline void require_conditioned(const SpectralDecomposition& d, const char* what) {
  if (spectral_radius_of(d) > 1.0 - kUnitEigenvalueMargin)
    throw analysis_error(std::string(what) +
                         ": eigenvalue within 1e-9 of unit magnitude (ill-conditioned)");
}

}  // namespace detail

/// MC_i = sum_j (1 - xi_j^2) v_ij^2. A node scores high when it loads onto
/// fast-decaying modes.
inline Vector modal_controllability_nodal(const SpectralDecomposition& d) {
  detail::require_stable(d, "modal_controllability");
  const Vector weights = 1.0 - d.eigenvalues.array().square();
  return d.eigenvectors.array().square().matrix() * weights;
}

/// AC_i = sum_j v_ij^2 / (1 - xi_j^2), the trace of the single-node
/// controllability Gramian in closed form.
inline Vector average_controllability_nodal(const SpectralDecomposition& d) {
  detail::require_stable(d, "average_controllability");
  detail::require_conditioned(d, "average_controllability");
  const Vector weights = (1.0 - d.eigenvalues.array().square()).inverse();
  return d.eigenvectors.array().square().matrix() * weights;
}

/// Whole-brain modal controllability, a function of the eigenvalues only:
/// 1 - mean(xi^2).
inline double whole_brain_mc(const SpectralDecomposition& d) {
  detail::require_stable(d, "whole_brain_mc");
  return 1.0 - d.eigenvalues.array().square().mean();
}

/// Whole-brain average controllability: mean(1 / (1 - xi^2)).
inline double whole_brain_ac(const SpectralDecomposition& d) {
  detail::require_stable(d, "whole_brain_ac");
  detail::require_conditioned(d, "whole_brain_ac");
  return (1.0 - d.eigenvalues.array().square()).inverse().mean();
}

struct GramianOptions {
  std::optional<long> horizon;  // fixed number of terms; unset = adaptive
  double tol = 1e-14;           // adaptive mode stops when an increment drops below tol
  long max_terms = 100000;
  // callers that already know rho(A) can skip the eigensolve
  std::optional<double> known_spectral_radius;
};

/// Tr(B^T sum_t A^{2t} B) accumulated term by term, where B selects the
/// control nodes. Symmetric A makes every increment ||A^t B||_F^2, which
/// decays geometrically for a stable system.
inline double gramian_trace(const Matrix& a, std::span<const int> control_nodes,
                            const GramianOptions& opt = {}) {
  const Eigen::Index n = a.rows();
  if (n == 0 || a.cols() != n) throw input_error("gramian_trace: matrix must be square");
  if (control_nodes.empty()) throw input_error("gramian_trace: control node set is empty");
  for (int node : control_nodes)
    if (node < 0 || node >= n) throw input_error("gramian_trace: control node out of range");

  const double rho =
      opt.known_spectral_radius ? *opt.known_spectral_radius : spectral_radius(a);
  if (rho >= 1.0) throw analysis_error("gramian_trace: spectral radius >= 1 (unstable system)");

  Matrix x(n, static_cast<Eigen::Index>(control_nodes.size()));
  x.setZero();
  for (std::size_t j = 0; j < control_nodes.size(); ++j) x(control_nodes[j], static_cast<Eigen::Index>(j)) = 1.0;

  double acc = 0.0;
  const long terms = opt.horizon.value_or(opt.max_terms);
  if (terms < 1) throw input_error("gramian_trace: horizon must be >= 1");
  for (long t = 0; t < terms; ++t) {
    const double inc = x.squaredNorm();
    acc += inc;
    if (!opt.horizon && inc < opt.tol) return acc;
    if (t + 1 < terms) x = a * x;
  }
  if (!opt.horizon)
    throw analysis_error("gramian_trace: horizon exhausted before reaching tolerance");
  return acc;
}

inline double gramian_trace(const connectome::ConnectomeMatrix& m,
                            std::span<const int> control_nodes, GramianOptions opt = {}) {
  if (!opt.known_spectral_radius) opt.known_spectral_radius = m.spectral_radius;
  return gramian_trace(m.adjacency, control_nodes, opt);
}

/// Nodal and whole-brain controllability of one subject.
struct ControllabilityProfile {
  Vector mc_nodal;
  Vector ac_nodal;
  double mc_mean = 0.0;
  double ac_mean = 0.0;
  long edge_count = 0;
};

inline ControllabilityProfile controllability_profile(const connectome::ConnectomeMatrix& m,
                                                      const JacobiOptions& opt = {}) {
  const SpectralDecomposition d = spectral_decompose(m, opt);
  ControllabilityProfile p;
  p.mc_nodal = modal_controllability_nodal(d);
  p.ac_nodal = average_controllability_nodal(d);
  p.mc_mean = whole_brain_mc(d);
  p.ac_mean = whole_brain_ac(d);
  p.edge_count = m.edge_count;
  return p;
}

inline nlohmann::json profile_to_json(const ControllabilityProfile& p,
                                      const std::string& subject_id,
                                      bool include_nodal = false) {
  nlohmann::json j;
  j["subject"] = subject_id;
  j["mc_mean"] = p.mc_mean;
  j["ac_mean"] = p.ac_mean;
  j["edge_count"] = p.edge_count;
  if (include_nodal) {
    j["mc_nodal"] = std::vector<double>(p.mc_nodal.begin(), p.mc_nodal.end());
    j["ac_nodal"] = std::vector<double>(p.ac_nodal.begin(), p.ac_nodal.end());
  }
  return j;
}

inline std::string profile_csv_header() { return "subject,mc_mean,ac_mean,edge_count"; }

inline std::string profile_csv_row(const ControllabilityProfile& p,
                                   const std::string& subject_id) {
  return subject_id + "," + format_double(p.mc_mean) + "," + format_double(p.ac_mean) + "," +
         std::to_string(p.edge_count);
}

}  // namespace nct::control
