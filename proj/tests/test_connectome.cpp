#include "nct/connectome.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "nct/synth.hpp"

using namespace nct;
using namespace nct::connectome;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST(LoadRaw, ParsesTwoByTwo) {
  const auto path = write_temp("nct_raw_2x2.csv", "0,3\n3,0\n");
  const auto raw = load_raw(path);
  EXPECT_EQ(raw.n, 2);
  EXPECT_EQ(raw.weights(0, 1), 3.0);
  EXPECT_EQ(raw.weights(1, 0), 3.0);
  EXPECT_TRUE(raw.warnings.empty());
}

TEST(LoadRaw, OptionalHeaderRow) {
  const auto path = write_temp("nct_raw_hdr.csv", "a,b\n0,2\n2,0\n");
  const auto raw = load_raw(path);
  EXPECT_EQ(raw.n, 2);
  EXPECT_EQ(raw.weights(0, 1), 2.0);
}

TEST(LoadRaw, RejectsNegativeEntries) {
  const auto path = write_temp("nct_raw_neg.csv", "0,-1\n-1,0\n");
  EXPECT_THROW(load_raw(path), input_error);
}

TEST(LoadRaw, RejectsNaN) {
  const auto path = write_temp("nct_raw_nan.csv", "0,nan\nnan,0\n");
  EXPECT_THROW(load_raw(path), input_error);
}

TEST(LoadRaw, RejectsNonSquare) {
  const auto path = write_temp("nct_raw_rect.csv", "0,1,2\n1,0,3\n");
  EXPECT_THROW(load_raw(path), input_error);
}

TEST(LoadRaw, RejectsAsymmetryBeyondTolerance) {
  const auto path = write_temp("nct_raw_asym.csv", "0,1\n1.001,0\n");
  EXPECT_THROW(load_raw(path), input_error);
}

TEST(LoadRaw, ZeroesDiagonalWithWarning) {
  const auto path = write_temp("nct_raw_diag.csv", "5,1\n1,5\n");
  const auto raw = load_raw(path);
  EXPECT_EQ(raw.weights(0, 0), 0.0);
  EXPECT_EQ(raw.weights(1, 1), 0.0);
  EXPECT_EQ(raw.warnings.size(), 2u);
}

TEST(LoadRaw, RoundTripsBitExactly) {
  const auto raw = synth::generate_connectome(114, 0.3, 42);
  const auto path = std::filesystem::temp_directory_path() / "nct_raw_rt.csv";
  save_raw(path, raw);
  const auto back = load_raw(path);
  EXPECT_EQ((back.weights - raw.weights).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ThresholdBinarize, AppliesMinimumStreamlineRule) {
  Matrix w(2, 2);
  w << 0, 2, 2, 0;
  EXPECT_EQ(threshold_binarize(make_raw(w), 3).adjacency(0, 1), 0.0);
  w(0, 1) = w(1, 0) = 3;
  const auto m = threshold_binarize(make_raw(w), 3);
  EXPECT_EQ(m.adjacency(0, 1), 1.0);
  EXPECT_TRUE(m.binary);
  EXPECT_EQ(m.edge_count, 1);
}

TEST(ThresholdBinarize, AllZeroGivesEmptyGraph) {
  const auto m = threshold_binarize(make_raw(Matrix::Zero(6, 6)), 3);
  EXPECT_EQ(m.edge_count, 0);
  EXPECT_EQ(m.adjacency.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ThresholdBinarize, IdempotentAtThresholdOneOnBinaryInput) {
  const auto raw = synth::generate_connectome(20, 0.4, 5);
  const auto binary = threshold_binarize(raw, 3);
  const auto again = threshold_binarize(make_raw(binary.adjacency), 1);
  EXPECT_EQ((again.adjacency - binary.adjacency).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ThresholdBinarize, RejectsBadThreshold) {
  EXPECT_THROW(threshold_binarize(make_raw(Matrix::Zero(2, 2)), 0), input_error);
}

TEST(Stabilize, ZeroMatrixMapsToItself) {
  const auto m = stabilize(make_connectome(Matrix::Zero(4, 4)));
  EXPECT_EQ(m.spectral_radius, 0.0);
  EXPECT_EQ(m.adjacency.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stabilize, SingleEdgeAnalytic) {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;  // lambda_max = 1
  const auto m = stabilize(make_connectome(a));
  EXPECT_NEAR(m.adjacency(0, 1), 0.5, 1e-14);
  EXPECT_NEAR(m.spectral_radius, 0.5, 1e-14);
  EXPECT_FALSE(m.binary);
}

TEST(Stabilize, RandomGraphStableWithinTolerance) {
  const auto raw = synth::generate_connectome(114, 0.3, 11);
  const auto m = stabilize(threshold_binarize(raw));
  EXPECT_LT(m.spectral_radius, 1.0);
  const double oracle = testutil::power_iteration_radius(m.adjacency);
  EXPECT_NEAR(m.spectral_radius, oracle, 1e-8);
  EXPECT_LT(oracle, 1.0 - 1e-12);
}

TEST(Stabilize, PreservesEigenvectorsAndScalesEigenvalues) {
  const auto raw = synth::generate_connectome(30, 0.4, 13);
  const auto binary = threshold_binarize(raw);
  const auto stabilized = stabilize(binary);
  const auto before = control::spectral_decompose(binary.adjacency);
  const auto after = control::spectral_decompose(stabilized.adjacency);
  const double scale = 1.0 + binary.spectral_radius;
  for (int j = 0; j < 30; ++j) {
    EXPECT_NEAR(after.eigenvalues(j), before.eigenvalues(j) / scale, 1e-10);
    EXPECT_LT((after.eigenvectors.col(j) - before.eigenvectors.col(j)).norm(), 1e-8);
  }
}

TEST(EdgeCount, MatchesBruteForce) {
  EXPECT_EQ(edge_count(make_connectome(Matrix::Zero(5, 5))), 0);
  Matrix complete = Matrix::Ones(5, 5);
  complete.diagonal().setZero();
  EXPECT_EQ(edge_count(make_connectome(complete)), 10);

  const auto m = threshold_binarize(synth::generate_connectome(40, 0.35, 17));
  long brute = 0;
  for (int i = 0; i < 40; ++i)
    for (int j = i + 1; j < 40; ++j)
      if (m.adjacency(i, j) > 0.0) ++brute;
  EXPECT_EQ(edge_count(m), brute);
  EXPECT_EQ(m.edge_count, brute);
}

// ---------------------------------------------------------------------------
// QC
// ---------------------------------------------------------------------------

namespace {

/// Ring graph over n nodes with constant weight.
RawConnectome ring_subject(int n, double weight) {
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    w(i, j) = w(j, i) = weight;
  }
  return make_raw(w);
}

}  // namespace

TEST(Qc, IdenticalSubjectsProduceNoOutliers) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 10; ++s) cohort.push_back(ring_subject(8, 10));
  const auto report = qc_outliers(cohort);
  EXPECT_EQ(report.n_outliers, 0);
}

TEST(Qc, FlagsSingleExtremeMeanStreamlineSubject) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 9; ++s) cohort.push_back(ring_subject(8, 10));
  cohort.push_back(ring_subject(8, 100));
  const auto report = qc_outliers(cohort);
  EXPECT_EQ(report.n_outliers, 1);
  EXPECT_TRUE(report.outlier[9]);
  // quartiles of {10 x9, 100}: Q1 = Q3 = 10, IQR = 0
  EXPECT_EQ(report.fences[0].q1, 10.0);
  EXPECT_EQ(report.fences[0].q3, 10.0);
}

TEST(Qc, FlagDecisionInvariantUnderReordering) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 9; ++s) cohort.push_back(ring_subject(8, 10));
  cohort.push_back(ring_subject(8, 100));
  std::vector<RawConnectome> shuffled;
  shuffled.push_back(cohort[9]);
  for (int s = 0; s < 9; ++s) shuffled.push_back(cohort[s]);
  const auto report = qc_outliers(shuffled);
  EXPECT_EQ(report.n_outliers, 1);
  EXPECT_TRUE(report.outlier[0]);
}

TEST(Qc, ThreeOfFiftyThreeFixture) {
  // 50 identical subjects plus three planted extremes, mirroring a cohort
  // screen that drops exactly three subjects.
  std::vector<RawConnectome> cohort;
  const auto base = synth::generate_connectome(20, 0.5, 123);
  for (int s = 0; s < 50; ++s) cohort.push_back(base);
  // (1) inflated streamline counts
  cohort.push_back(make_raw(base.weights * 20.0));
  // (2) complement topology: connections nobody else has
  {
    Matrix w = Matrix::Zero(20, 20);
    for (int i = 0; i < 20; ++i)
      for (int j = i + 1; j < 20; ++j)
        if (base.weights(i, j) == 0.0) w(i, j) = w(j, i) = 10.0;
    cohort.push_back(make_raw(w));
  }
  // (3) implausibly low streamline counts
  cohort.push_back(make_raw((base.weights.array() > 0.0).cast<double>().matrix() * 3.0));

  const auto report = qc_outliers(cohort);
  EXPECT_EQ(report.n_outliers, 3);
  EXPECT_TRUE(report.outlier[50]);
  EXPECT_TRUE(report.outlier[51]);
  EXPECT_TRUE(report.outlier[52]);
}

TEST(Qc, UsesFaWhenAvailable) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 8; ++s)
    cohort.push_back(synth::generate_connectome(12, 0.5, 200 + s,
                                                {.count_min = 3, .count_max = 30, .with_fa_md = true}));
  const auto report = qc_outliers(cohort);
  EXPECT_TRUE(report.fa_used);
  EXPECT_TRUE(report.metrics[0].mean_fa.has_value());
}

TEST(Qc, ErrorsOnSmallCohortAndMissingFa) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 3; ++s) cohort.push_back(ring_subject(6, 5));
  EXPECT_THROW(qc_outliers(cohort), input_error);

  for (int s = 0; s < 3; ++s) cohort.push_back(ring_subject(6, 5));
  QcOptions opt;
  opt.use_fa = true;
  EXPECT_THROW(qc_outliers(cohort, opt), input_error);
}

TEST(Qc, JsonReportShape) {
  std::vector<RawConnectome> cohort;
  for (int s = 0; s < 9; ++s) cohort.push_back(ring_subject(8, 10));
  cohort.push_back(ring_subject(8, 100));
  const auto j = qc_to_json(qc_outliers(cohort));
  EXPECT_EQ(j["n_outliers"], 1);
  EXPECT_EQ(j["subjects"].size(), 10u);
  EXPECT_TRUE(j["subjects"][9]["outlier"].get<bool>());
}
