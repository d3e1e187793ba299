#pragma once

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nct/errors.hpp"
#include "nct/util.hpp"

namespace nct {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

/// Number of strictly positive entries in the upper triangle (undirected
/// edge count).
inline long count_positive_upper(const Matrix& m) {
  long count = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (m(i, j) > 0.0) ++count;
  return count;
}

/// Load a numeric CSV matrix. A first row that fails to parse as numbers is
/// treated as a header and skipped. Rows must all have the same width.
inline Matrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open matrix file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto tokens = split_csv_line(line);
    std::vector<double> row;
    row.reserve(tokens.size());
    bool ok = true;
    for (const auto& t : tokens) {
      try {
        row.push_back(parse_double(t));
      } catch (const input_error&) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw input_error("non-numeric row in matrix file: " + path.string());
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw input_error("ragged rows in matrix file: " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw input_error("empty matrix file: " + path.string());
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void save_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write matrix file: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace nct
