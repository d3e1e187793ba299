#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nct/errors.hpp"
#include "nct/matrix.hpp"
#include "nct/util.hpp"

namespace nct::stats {

/// One subject of an analysis cohort. `response` is post minus pre symptom
/// severity, so improvement is a more negative value. `psi` is on the 0-100
/// percent scale and may be missing.
struct CohortRow {
  std::string subject;
  double age = 0.0;
  int sex = 0;  // binary code
  double pre_severity = 0.0;
  double post_severity = 0.0;
  double response = 0.0;
  std::optional<double> psi;
  double mc_mean = 0.0;
  double ac_mean = 0.0;
  long edge_count = 0;
};

struct CohortTable {
  std::vector<CohortRow> rows;

  static const std::vector<std::string>& column_names() {
    static const std::vector<std::string> names = {
        "age",      "sex",      "pre_severity", "post_severity", "response",
        "psi",      "mc_mean",  "ac_mean",      "edge_count"};
    return names;
  }

  static bool is_column(const std::string& name) {
    for (const auto& c : column_names())
      if (c == name) return true;
    return false;
  }

  std::size_t size() const { return rows.size(); }

  /// Column value for one row; empty only for a missing PSI.
  static std::optional<double> value(const CohortRow& r, const std::string& column) {
    if (column == "age") return r.age;
    if (column == "sex") return static_cast<double>(r.sex);
    if (column == "pre_severity") return r.pre_severity;
    if (column == "post_severity") return r.post_severity;
    if (column == "response") return r.response;
    if (column == "psi") return r.psi;
    if (column == "mc_mean") return r.mc_mean;
    if (column == "ac_mean") return r.ac_mean;
    if (column == "edge_count") return static_cast<double>(r.edge_count);
    throw input_error("unknown cohort column: " + column);
  }

  /// Rows where every listed column is present, as a matrix with one column
  /// per name. Rows with a missing value in any listed column are dropped.
  std::pair<Matrix, std::vector<std::size_t>> assemble(
      const std::vector<std::string>& columns) const {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      bool complete = true;
      for (const auto& c : columns)
        if (!value(rows[i], c)) {
          complete = false;
          break;
        }
      if (complete) kept.push_back(i);
    }
    Matrix m(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = 0; j < columns.size(); ++j)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            *value(rows[kept[i]], columns[j]);
    return {m, kept};
  }

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (std::abs(r.response - (r.post_severity - r.pre_severity)) > 1e-9)
        throw input_error("cohort row " + std::to_string(i) +
                          ": response must equal post_severity - pre_severity");
      if (r.psi && (*r.psi < 0.0 || *r.psi > 100.0))
        throw input_error("cohort row " + std::to_string(i) + ": psi outside [0, 100]");
      if (r.sex != 0 && r.sex != 1)
        throw input_error("cohort row " + std::to_string(i) + ": sex must be 0 or 1");
    }
  }

  static CohortTable load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open cohort file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw input_error("empty cohort file: " + path.string());
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required :
         {"subject", "age", "sex", "pre_severity", "post_severity", "mc_mean", "ac_mean",
          "edge_count"})
      if (!col.count(required))
        throw input_error("cohort file missing column '" + std::string(required) + "'");

    CohortTable table;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != header.size())
        throw input_error("cohort row has wrong field count: " + line);
      auto field = [&](const std::string& name) -> const std::string& {
        return fields[col.at(name)];
      };
      CohortRow r;
      r.subject = field("subject");
      r.age = parse_double(field("age"));
      r.sex = static_cast<int>(std::lround(parse_double(field("sex"))));
      r.pre_severity = parse_double(field("pre_severity"));
      r.post_severity = parse_double(field("post_severity"));
      r.mc_mean = parse_double(field("mc_mean"));
      r.ac_mean = parse_double(field("ac_mean"));
      r.edge_count = std::lround(parse_double(field("edge_count")));
      if (col.count("psi") && !field("psi").empty()) r.psi = parse_double(field("psi"));
      if (col.count("response") && !field("response").empty())
        r.response = parse_double(field("response"));
      else
        r.response = r.post_severity - r.pre_severity;
      table.rows.push_back(std::move(r));
    }
    table.validate();
    return table;
  }

  void save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write cohort file: " + path.string());
    out << "subject,age,sex,pre_severity,post_severity,response,psi,mc_mean,ac_mean,edge_count\n";
    for (const auto& r : rows) {
      out << r.subject << ',' << format_double(r.age) << ',' << r.sex << ','
          << format_double(r.pre_severity) << ',' << format_double(r.post_severity) << ','
          << format_double(r.response) << ',' << (r.psi ? format_double(*r.psi) : std::string())
          << ',' << format_double(r.mc_mean) << ',' << format_double(r.ac_mean) << ','
          << r.edge_count << '\n';
    }
  }
};

}  // namespace nct::stats
