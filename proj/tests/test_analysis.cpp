#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gapkit/analysis.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/transferlab.hpp"
#include "oracles.hpp"

using namespace gapkit;

namespace {

// Corpus whose differences carry the given rows in their first coordinates.
// Text is e_d; image is e_d + row before normalization. Coordinate d then
// varies only at second order in |row|, and coordinate d + 1 is identically
// zero on both sides.
PairedCorpus CorpusWithDifferences(const oracle::Mat& diffs) {
  const std::size_t d = diffs.front().size();
  oracle::Mat t, im;
  for (const auto& row : diffs) {
    oracle::Vec tv(d + 2, 0.0), iv(d + 2, 0.0);
    tv[d] = 1.0;
    for (std::size_t k = 0; k < d; ++k) iv[k] = row[k];
    iv[d] = 1.0;
    t.push_back(tv);
    im.push_back(iv);
  }
  return oracle::MakeCorpus(t, im);
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("PCA eigenvalues match a Jacobi oracle") {
  std::mt19937_64 gen(61);
  oracle::Mat t, im;
  for (int i = 0; i < 200; ++i) {
    t.push_back(oracle::GaussianVec(8, gen));
    im.push_back(oracle::GaussianVec(8, gen));
  }
  const auto c = oracle::MakeCorpus(t, im);
  const PcaReport r = DiffPca(c, 8);
  const auto cov = oracle::Covariance(oracle::ToMat(DifferenceVectors(c)));
  const auto ev = oracle::JacobiEigenvalues(cov);
  double trace = 0.0;
  for (int i = 0; i < 8; ++i) trace += cov[i][i];
  CHECK(r.total_variance == doctest::Approx(trace).epsilon(1e-10));
  double sum = 0.0;
  for (int i = 0; i < 8; ++i) {
    CHECK(r.explained_variance[i] == doctest::Approx(ev[i]).epsilon(1e-9));
    sum += r.explained_ratio[i];
    if (i > 0) CHECK(r.explained_ratio[i] <= r.explained_ratio[i - 1]);
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);
  const Matrix gram = r.components * r.components.transpose();
  CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-6);
  for (int i = 0; i < 8; ++i) {
    Eigen::Index arg;
    r.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(r.components(i, arg) > 0.0);
  }

  // full reconstruction of every difference vector
  const RowMatrix d = DifferenceVectors(c);
  for (Eigen::Index j = 0; j < d.rows(); ++j) {
    const Vector centered = d.row(j).transpose() - r.mean;
    const Vector back = r.mean + r.components.transpose() * (r.components * centered);
    CHECK((back - d.row(j).transpose()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("PCA of isotropic differences spreads variance evenly") {
  std::mt19937_64 gen(62);
  oracle::Mat diffs;
  for (int i = 0; i < 10000; ++i) diffs.push_back(oracle::GaussianVec(8, gen, 0.05));
  const PcaReport r = DiffPca(CorpusWithDifferences(diffs), 8);
  for (double ratio : r.explained_ratio) CHECK(std::abs(ratio - 0.125) < 0.02);
}

TEST_CASE("planted rank-3 structure dominates") {
  std::mt19937_64 gen(63);
  const std::size_t dim = 16;
  const auto basis = oracle::RandomOrthogonal(dim, 64);
  std::normal_distribution<double> nd;
  oracle::Mat diffs;
  for (int i = 0; i < 2000; ++i) {
    oracle::Vec d = oracle::GaussianVec(dim, gen, 0.01 * 0.1);
    for (int k = 0; k < 3; ++k) {
      const double a = 0.1 * nd(gen);
      for (std::size_t j = 0; j < dim; ++j) d[j] += a * basis[k][j];
    }
    diffs.push_back(d);
  }
  const PcaReport r = DiffPca(CorpusWithDifferences(diffs), 3);
  CHECK(r.explained_ratio[0] + r.explained_ratio[1] + r.explained_ratio[2] > 0.9);
}

TEST_CASE("PCA argument checks and row-order invariance") {
  std::mt19937_64 gen(65);
  oracle::Mat t, im;
  for (int i = 0; i < 12; ++i) {
    t.push_back(oracle::GaussianVec(4, gen));
    im.push_back(oracle::GaussianVec(4, gen));
  }
  const auto c = oracle::MakeCorpus(t, im);
  CHECK_THROWS_AS(DiffPca(c, 0), ParameterError);
  CHECK_THROWS_AS(DiffPca(c, 5), ParameterError);
  std::vector<std::size_t> idx(12);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::reverse(idx.begin(), idx.end());
  const PcaReport a = DiffPca(c, 4), b = DiffPca(c.Select(idx), 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.explained_variance[i] == doctest::Approx(b.explained_variance[i]).epsilon(1e-12));
  }
  CHECK((a.components - b.components).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("feature correlations") {
  std::mt19937_64 gen(66);
  std::normal_distribution<double> nd;
  SUBCASE("duplicated and negated features") {
    oracle::Mat diffs;
    for (int i = 0; i < 300; ++i) {
      const double x = nd(gen), y = nd(gen), z = nd(gen);
      diffs.push_back({0.1 * x, 0.1 * x, -0.1 * x, 0.1 * y, 0.1 * z});
    }
    const auto c = CorpusWithDifferences(diffs);
    const CorrelationReport r = FeatureCorrelations(c, 3);
    REQUIRE(r.top.size() == 3);
    CHECK(r.top[0].feature_i == 0);
    CHECK(r.top[0].feature_j == 1);
    CHECK(std::abs(r.top[0].pearson_r - 1.0) < 1e-9);
    bool neg = false;
    for (const auto& f : r.top) {
      neg |= f.feature_i == 0 && f.feature_j == 2 && std::abs(f.pearson_r + 1.0) < 1e-9;
    }
    CHECK(neg);
    CHECK(r.excluded == std::vector<std::size_t>{6});
  }
  SUBCASE("independent features stay uncorrelated") {
    oracle::Mat diffs;
    for (int i = 0; i < 10000; ++i) diffs.push_back(oracle::GaussianVec(6, gen, 0.05));
    const CorrelationReport r = FeatureCorrelations(CorpusWithDifferences(diffs), 100);
    for (const auto& f : r.top) CHECK(std::abs(f.pearson_r) < 0.05);
    CHECK(r.top.size() == 21);
    CHECK(r.excluded == std::vector<std::size_t>{7});
  }
  SUBCASE("matches a naive Pearson oracle") {
    oracle::Mat t, im;
    for (int i = 0; i < 50; ++i) {
      t.push_back(oracle::GaussianVec(4, gen));
      im.push_back(oracle::GaussianVec(4, gen));
    }
    const auto c = oracle::MakeCorpus(t, im);
    const auto d = oracle::ToMat(DifferenceVectors(c));
    const CorrelationReport r = FeatureCorrelations(c, 6);
    for (const auto& f : r.top) {
      oracle::Vec x, y;
      for (const auto& row : d) {
        x.push_back(row[f.feature_i]);
        y.push_back(row[f.feature_j]);
      }
      CHECK(f.pearson_r == doctest::Approx(oracle::Pearson(x, y)).epsilon(1e-10));
      CHECK(std::abs(f.pearson_r) <= 1.0 + 1e-9);
    }
    for (std::size_t i = 1; i < r.top.size(); ++i) {
      CHECK(std::abs(r.top[i].pearson_r) <= std::abs(r.top[i - 1].pearson_r));
    }
  }
}

TEST_CASE("shift condition names") {
  CHECK(ShiftCondition::Parse("none").kind == ShiftCondition::Kind::kNone);
  CHECK(ShiftCondition::Parse("mean").kind == ShiftCondition::Kind::kMean);
  CHECK(ShiftCondition::Parse("neg_mean").kind == ShiftCondition::Kind::kNegMean);
  const auto r = ShiftCondition::Parse("rng:2.5");
  CHECK(r.kind == ShiftCondition::Kind::kRandom);
  CHECK(r.magnitude == 2.5);
  CHECK(r.Name() == "rng:2.5");
  CHECK_THROWS_AS(ShiftCondition::Parse("rng:-1"), ParameterError);
  CHECK_THROWS_AS(ShiftCondition::Parse("sideways"), ParameterError);
}

TEST_CASE("sensitivity sweep") {
  SyntheticCorpusSpec spec;
  spec.rows = 400;
  spec.dim = 12;
  spec.n_classes = 4;
  const PairedCorpus c = GenerateSyntheticCorpus(spec);
  TrainConfig hyper;
  hyper.epochs = 3;
  hyper.learning_rate = 1e-2;
  const std::vector<ShiftCondition> conds = {ShiftCondition::None(), ShiftCondition::Random(0.0),
                                             ShiftCondition::Random(1.0), ShiftCondition::Mean()};
  const auto rows = SensitivitySweep(c, conds, 0.08, 3, 5, hyper);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mean_metric == rows[1].mean_metric);
  CHECK(rows[0].per_run == rows[1].per_run);
  for (const auto& r : rows) {
    CHECK(r.runs == 3);
    CHECK(r.per_run.size() == 3);
    CHECK(r.std_metric >= 0.0);
  }
  const auto again = SensitivitySweep(c, conds, 0.08, 3, 5, hyper);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].per_run == again[i].per_run);

  const auto seeds = SensitivitySeeds(5, 3);
  CHECK(seeds.size() == 3);
  CHECK(seeds[0] != seeds[1]);

  PairedCorpus unlabeled = c;
  unlabeled.labels.reset();
  CHECK_THROWS_AS(SensitivitySweep(unlabeled, conds, 0.08, 1, 5, hyper), ValidationError);
}

}  // TEST_SUITE
