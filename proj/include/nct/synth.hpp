#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nct/cohort.hpp"
#include "nct/connectome.hpp"
#include "nct/control.hpp"
#include "nct/errors.hpp"
#include "nct/rng.hpp"
#include "nct/version.hpp"

namespace nct::synth {

struct ConnectomeGenOptions {
  int count_min = 3;  // streamline counts for present edges start at the
  int count_max = 30; // default binarization threshold, so thresholding is controlled
  bool with_fa_md = false;
};

/// Erdos-Renyi G(n, p) connectome with integer streamline counts on present
/// edges. `density` may be 1.0 (complete graph).
inline connectome::RawConnectome generate_connectome(int n, double density, std::uint64_t seed,
                                                     const ConnectomeGenOptions& opt = {}) {
  if (n < 2) throw input_error("generate_connectome: need at least 2 nodes");
  if (density <= 0.0 || density > 1.0)
    throw input_error("generate_connectome: density must be in (0, 1]");
  if (opt.count_min < 1 || opt.count_max < opt.count_min)
    throw input_error("generate_connectome: bad streamline count range");

  auto engine = rng::stream(seed, 0xED6Eu);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> count(opt.count_min, opt.count_max);
  std::uniform_real_distribution<double> fa_draw(0.2, 0.8);
  std::uniform_real_distribution<double> md_draw(4e-4, 12e-4);

  Matrix w = Matrix::Zero(n, n);
  Matrix fa = Matrix::Zero(n, n);
  Matrix md = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (coin(engine) < density) {
        const double c = static_cast<double>(count(engine));
        w(i, j) = w(j, i) = c;
        if (opt.with_fa_md) {
          fa(i, j) = fa(j, i) = fa_draw(engine);
          md(i, j) = md(j, i) = md_draw(engine);
        }
      } else if (opt.with_fa_md) {
        // keep the stream position independent of topology
        count(engine);
        fa_draw(engine);
        md_draw(engine);
      } else {
        count(engine);
      }
    }
  if (opt.with_fa_md) return connectome::make_raw(w, fa, md);
  return connectome::make_raw(w);
}

/// Expected-degree (Chung-Lu) connectome: per-node propensities drawn from
/// uniform(0.5, 1.5) induce a heterogeneous degree sequence at the same
/// overall density.
inline connectome::RawConnectome generate_connectome_degree_sequence(
    int n, double density, std::uint64_t seed, const ConnectomeGenOptions& opt = {}) {
  if (n < 2) throw input_error("generate_connectome: need at least 2 nodes");
  if (density <= 0.0 || density > 1.0)
    throw input_error("generate_connectome: density must be in (0, 1]");

  auto engine = rng::stream(seed, 0xDE64u);
  std::uniform_real_distribution<double> prop_draw(0.5, 1.5);
  std::vector<double> propensity(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& p : propensity) {
    p = prop_draw(engine);
    total += p;
  }
  const double mean_prop = total / static_cast<double>(n);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> count(opt.count_min, opt.count_max);
  std::uniform_real_distribution<double> fa_draw(0.2, 0.8);
  std::uniform_real_distribution<double> md_draw(4e-4, 12e-4);

  Matrix w = Matrix::Zero(n, n);
  Matrix fa = Matrix::Zero(n, n);
  Matrix md = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double pij = std::min(
          1.0, density * propensity[static_cast<std::size_t>(i)] *
                   propensity[static_cast<std::size_t>(j)] / (mean_prop * mean_prop));
      if (coin(engine) < pij) {
        const double c = static_cast<double>(count(engine));
        w(i, j) = w(j, i) = c;
        if (opt.with_fa_md) {
          fa(i, j) = fa(j, i) = fa_draw(engine);
          md(i, j) = md(j, i) = md_draw(engine);
        }
      } else if (opt.with_fa_md) {
        count(engine);
        fa_draw(engine);
        md_draw(engine);
      } else {
        count(engine);
      }
    }
  if (opt.with_fa_md) return connectome::make_raw(w, fa, md);
  return connectome::make_raw(w);
}

/// Synthetic cohort recipe with a planted effect chain:
///   psi      = beta0 + beta1 * (AC - mean AC) + noise(sigma_m)
///   response = gamma0 + gamma1 * psi + gamma2 * (MC - mean MC) + noise(sigma_y)
/// Whole-brain controllability varies across subjects through a density
/// sweep; centering AC/MC at the cohort means keeps the mediator inside its
/// clinical range without touching the planted slopes.
struct CohortGenSpec {
  long n_subjects = 50;
  int n_nodes = 114;
  enum class GraphModel { erdos_renyi, degree_sequence };
  GraphModel model = GraphModel::erdos_renyi;
  double density_min = 0.15;
  double density_max = 0.60;
  int threshold = 3;  // binarization threshold of the processing chain
  ConnectomeGenOptions connectome;

  double beta0 = 60.0, beta1 = 400.0, sigma_m = 6.0;
  double gamma0 = 8.0, gamma1 = -0.35, gamma2 = 120.0, sigma_y = 3.0;

  double age_min = 20.0, age_max = 70.0;
  double pre_mean = 24.0, pre_sd = 4.0;

  // Replace the mediator noise by its component orthogonal to [1, AC]
  // (in-sample), which makes the fitted a-path equal beta1 exactly.
  bool orthogonalize_mediator_noise = false;

  std::uint64_t seed = 0;

  void validate() const {
    if (n_subjects < 4) throw input_error("cohort spec: need at least 4 subjects");
    if (density_min <= 0.0 || density_max > 1.0 || density_min > density_max)
      throw input_error("cohort spec: bad density range");
    if (sigma_m < 0.0 || sigma_y < 0.0) throw input_error("cohort spec: negative noise scale");
    if (pre_sd < 0.0 || age_max < age_min) throw input_error("cohort spec: bad covariate range");
  }
};

struct SyntheticCohort {
  stats::CohortTable table;
  std::vector<connectome::RawConnectome> raws;
  std::vector<connectome::ConnectomeMatrix> processed;  // binarized + stabilized
  nlohmann::json provenance;
};

inline SyntheticCohort generate_cohort(const CohortGenSpec& spec) {
  spec.validate();
  const long s = spec.n_subjects;
  SyntheticCohort cohort;
  cohort.raws.reserve(static_cast<std::size_t>(s));
  cohort.processed.reserve(static_cast<std::size_t>(s));

  std::vector<double> density(static_cast<std::size_t>(s));
  std::vector<double> ac(static_cast<std::size_t>(s)), mc(static_cast<std::size_t>(s));
  std::vector<long> edges(static_cast<std::size_t>(s));
  for (long i = 0; i < s; ++i) {
    auto engine = rng::stream(spec.seed, 0xD1CEu, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> density_draw(spec.density_min, spec.density_max);
    density[static_cast<std::size_t>(i)] = density_draw(engine);
    const std::uint64_t subject_seed = rng::mix(spec.seed, 0x5EEDu, static_cast<std::uint64_t>(i));
    auto raw = spec.model == CohortGenSpec::GraphModel::erdos_renyi
                   ? generate_connectome(spec.n_nodes, density[static_cast<std::size_t>(i)],
                                         subject_seed, spec.connectome)
                   : generate_connectome_degree_sequence(
                         spec.n_nodes, density[static_cast<std::size_t>(i)], subject_seed,
                         spec.connectome);
    auto stabilized = connectome::stabilize(connectome::threshold_binarize(raw, spec.threshold));
    const auto d = control::spectral_decompose(stabilized);
    ac[static_cast<std::size_t>(i)] = control::whole_brain_ac(d);
    mc[static_cast<std::size_t>(i)] = control::whole_brain_mc(d);
    edges[static_cast<std::size_t>(i)] = stabilized.edge_count;
    cohort.raws.push_back(std::move(raw));
    cohort.processed.push_back(std::move(stabilized));
  }

  double ac_mean = 0.0, mc_mean = 0.0;
  for (long i = 0; i < s; ++i) {
    ac_mean += ac[static_cast<std::size_t>(i)];
    mc_mean += mc[static_cast<std::size_t>(i)];
  }
  ac_mean /= static_cast<double>(s);
  mc_mean /= static_cast<double>(s);

  std::vector<double> noise_m(static_cast<std::size_t>(s));
  for (long i = 0; i < s; ++i) {
    auto engine = rng::stream(spec.seed, 0x401Eu, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> draw(0.0, 1.0);
    noise_m[static_cast<std::size_t>(i)] = spec.sigma_m * draw(engine);
  }
  if (spec.orthogonalize_mediator_noise) {
    // project out [1, ac_centered]
    double mean_e = 0.0;
    for (double e : noise_m) mean_e += e;
    mean_e /= static_cast<double>(s);
    for (auto& e : noise_m) e -= mean_e;
    double dot = 0.0, ss = 0.0;
    for (long i = 0; i < s; ++i) {
      const double a = ac[static_cast<std::size_t>(i)] - ac_mean;
      dot += noise_m[static_cast<std::size_t>(i)] * a;
      ss += a * a;
    }
    if (ss > 0.0)
      for (long i = 0; i < s; ++i)
        noise_m[static_cast<std::size_t>(i)] -= dot / ss * (ac[static_cast<std::size_t>(i)] - ac_mean);
  }

  for (long i = 0; i < s; ++i) {
    auto engine = rng::stream(spec.seed, 0xC0F5u, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> age_draw(spec.age_min, spec.age_max);
    std::uniform_int_distribution<int> sex_draw(0, 1);
    std::normal_distribution<double> pre_draw(spec.pre_mean, spec.pre_sd);
    std::normal_distribution<double> unit(0.0, 1.0);

    stats::CohortRow row;
    char name[16];
    std::snprintf(name, sizeof(name), "sub-%03ld", i);
    row.subject = name;
    row.age = age_draw(engine);
    row.sex = sex_draw(engine);
    row.pre_severity = std::clamp(pre_draw(engine), 7.0, 52.0);
    row.mc_mean = mc[static_cast<std::size_t>(i)];
    row.ac_mean = ac[static_cast<std::size_t>(i)];
    row.edge_count = edges[static_cast<std::size_t>(i)];

    const double psi = spec.beta0 +
                       spec.beta1 * (row.ac_mean - ac_mean) +
                       noise_m[static_cast<std::size_t>(i)];
    if (psi < 0.0 || psi > 100.0)
      throw input_error("generate_cohort: planted psi left [0, 100]; adjust coefficients");
    row.psi = psi;
    row.response = spec.gamma0 + spec.gamma1 * psi +
                   spec.gamma2 * (row.mc_mean - mc_mean) + spec.sigma_y * unit(engine);
    row.post_severity = row.pre_severity + row.response;
    cohort.table.rows.push_back(std::move(row));
  }

  nlohmann::json prov;
  prov["tool"] = "nct";
  prov["version"] = kVersion;
  prov["seed"] = spec.seed;
  prov["n_subjects"] = spec.n_subjects;
  prov["n_nodes"] = spec.n_nodes;
  prov["model"] =
      spec.model == CohortGenSpec::GraphModel::erdos_renyi ? "erdos_renyi" : "degree_sequence";
  prov["density_range"] = {spec.density_min, spec.density_max};
  prov["threshold"] = spec.threshold;
  prov["planted"] = {{"beta0", spec.beta0},   {"beta1", spec.beta1},   {"sigma_m", spec.sigma_m},
                     {"gamma0", spec.gamma0}, {"gamma1", spec.gamma1}, {"gamma2", spec.gamma2},
                     {"sigma_y", spec.sigma_y}};
  prov["orthogonalize_mediator_noise"] = spec.orthogonalize_mediator_noise;
  prov["subjects"] = nlohmann::json::array();
  for (long i = 0; i < s; ++i)
    prov["subjects"].push_back({{"id", cohort.table.rows[static_cast<std::size_t>(i)].subject},
                                {"density", density[static_cast<std::size_t>(i)]},
                                {"mc_mean", mc[static_cast<std::size_t>(i)]},
                                {"ac_mean", ac[static_cast<std::size_t>(i)]},
                                {"edge_count", edges[static_cast<std::size_t>(i)]}});
  cohort.provenance = std::move(prov);
  return cohort;
}

/// Directory layout: cohort.csv, matrices/sub-XXX.csv (raw streamline
/// counts, plus .fa/.md companions when generated), provenance.json.
inline void write_cohort_dir(const std::filesystem::path& dir, const SyntheticCohort& cohort) {
  std::filesystem::create_directories(dir / "matrices");
  cohort.table.save_csv(dir / "cohort.csv");
  for (std::size_t i = 0; i < cohort.raws.size(); ++i) {
    const auto& id = cohort.table.rows[i].subject;
    save_matrix_csv(dir / "matrices" / (id + ".csv"), cohort.raws[i].weights);
    if (cohort.raws[i].fa) save_matrix_csv(dir / "matrices" / (id + ".fa.csv"), *cohort.raws[i].fa);
    if (cohort.raws[i].md) save_matrix_csv(dir / "matrices" / (id + ".md.csv"), *cohort.raws[i].md);
  }
  std::ofstream out(dir / "provenance.json");
  out << cohort.provenance.dump(2) << '\n';
}

}  // namespace nct::synth
