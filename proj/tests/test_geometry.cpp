#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "gapkit/adapters.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/geometry.hpp"
#include "oracles.hpp"

using namespace gapkit;

TEST_SUITE("geometry") {

TEST_CASE("cosine similarity") {
  Vector a(2), b(2), c(2);
  a << 1, 0;
  b << 0, 1;
  c << 1, 1;
  CHECK(CosineSimilarity(a, a) == doctest::Approx(1.0));
  CHECK(std::abs(CosineSimilarity(a, b)) < 1e-15);
  CHECK(CosineSimilarity(c, a) == doctest::Approx(0.7071).epsilon(1e-4));
  CHECK_THROWS_AS(CosineSimilarity(a, Vector::Zero(2)), DegenerateVectorError);
}

TEST_CASE("gap stats on hand-computed corpora") {
  SUBCASE("swapped 2-pair corpus") {
    const auto c = oracle::MakeCorpus({{1, 0}, {0, 1}}, {{0, 1}, {1, 0}});
    const GapReport r = GapStats(c, 100, 1);
    CHECK(std::abs(r.mean_paired_cos) < 1e-12);
    CHECK(r.gap_vector.norm() < 1e-12);
    CHECK(r.gap_norm < 1e-12);
    // the only unpaired pairs are (0,1) and (1,0), both with cosine 1
    CHECK(r.mean_unpaired_cos == doctest::Approx(1.0));
    CHECK(r.pairs_sampled == 100);
  }
  SUBCASE("identical modalities") {
    std::mt19937_64 gen(5);
    oracle::Mat rows;
    for (int i = 0; i < 20; ++i) rows.push_back(oracle::GaussianVec(6, gen));
    const auto c = oracle::MakeCorpus(rows, rows);
    const GapReport r = GapStats(c, 500, 2);
    CHECK(r.mean_paired_cos == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.gap_norm < 1e-9);
    CHECK(RetrievalRecallAtK(c, 1) == 1.0);
  }
  SUBCASE("one row is not enough") {
    const auto c = oracle::MakeCorpus({{1, 0}}, {{0, 1}});
    CHECK_THROWS_AS(GapStats(c, 10, 0), InsufficientDataError);
  }
}

TEST_CASE("gap stats oracle: paired mean and gap vector by hand") {
  std::mt19937_64 gen(8);
  oracle::Mat t, im;
  for (int i = 0; i < 25; ++i) {
    t.push_back(oracle::GaussianVec(5, gen));
    im.push_back(oracle::GaussianVec(5, gen));
  }
  const auto c = oracle::MakeCorpus(t, im);
  const auto t32 = oracle::ToMat(c.text.ToF64());
  const auto i32 = oracle::ToMat(c.image.ToF64());
  double paired = 0.0;
  oracle::Vec gap(5, 0.0);
  for (int i = 0; i < 25; ++i) {
    const auto a = oracle::Unit(t32[i]), b = oracle::Unit(i32[i]);
    paired += oracle::Dot(a, b) / 25.0;
    for (int k = 0; k < 5; ++k) gap[k] += (b[k] - a[k]) / 25.0;
  }
  const GapReport r = GapStats(c, 1000, 3);
  CHECK(r.mean_paired_cos == doctest::Approx(paired).epsilon(1e-12));
  for (int k = 0; k < 5; ++k) CHECK(r.gap_vector[k] == doctest::Approx(gap[k]).epsilon(1e-12));
  CHECK(std::abs(r.gap_norm - oracle::Norm(gap)) < 1e-9);
  CHECK(r.mean_unpaired_cos >= -1.0);
  CHECK(r.mean_unpaired_cos <= 1.0);

  // unpaired mean stays near the all-pairs average
  double all = 0.0;
  for (int i = 0; i < 25; ++i) {
    for (int j = 0; j < 25; ++j) {
      if (i != j) all += oracle::Dot(oracle::Unit(t32[i]), oracle::Unit(i32[j]));
    }
  }
  all /= 25.0 * 24.0;
  const GapReport big = GapStats(c, 200000, 4);
  CHECK(std::abs(big.mean_unpaired_cos - all) < 0.01);
}

TEST_CASE("gap stats determinism and rotation invariance") {
  std::mt19937_64 gen(9);
  oracle::Mat t, im;
  for (int i = 0; i < 40; ++i) {
    t.push_back(oracle::GaussianVec(6, gen));
    im.push_back(oracle::GaussianVec(6, gen));
  }
  const auto c = oracle::MakeCorpus(t, im);
  const GapReport a = GapStats(c, 2000, 77), b = GapStats(c, 2000, 77);
  CHECK(a.mean_unpaired_cos == b.mean_unpaired_cos);
  CHECK(a.gap_vector == b.gap_vector);

  const auto q = oracle::RandomOrthogonal(6, 10);
  oracle::Mat rt, ri;
  for (int i = 0; i < 40; ++i) {
    rt.push_back(oracle::MatVec(q, t[i]));
    ri.push_back(oracle::MatVec(q, im[i]));
  }
  const GapReport r = GapStats(oracle::MakeCorpus(rt, ri), 2000, 77);
  CHECK(std::abs(r.mean_paired_cos - a.mean_paired_cos) < 1e-6);
  CHECK(std::abs(r.mean_unpaired_cos - a.mean_unpaired_cos) < 1e-6);
  CHECK(std::abs(r.gap_norm - a.gap_norm) < 1e-6);
}

TEST_CASE("recall@k against a brute-force permutation count") {
  const std::size_t n = 7;
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), gen);
    oracle::Mat t(n, oracle::Vec(n, 0.0)), im(n, oracle::Vec(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      t[i][i] = 1.0;
      im[i][perm[i]] = 1.0;
    }
    std::size_t fixed = 0;
    for (std::size_t i = 0; i < n; ++i) fixed += perm[i] == i;
    const auto c = oracle::MakeCorpus(t, im);
    CHECK(RetrievalRecallAtK(c, 1) == doctest::Approx(double(fixed) / n));
    CHECK(RetrievalRecallAtK(c, n) == 1.0);
  }
  const auto c = oracle::MakeCorpus({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}});
  CHECK_THROWS_AS(RetrievalRecallAtK(c, 3), ParameterError);
  CHECK_THROWS_AS(RetrievalRecallAtK(c, 0), ParameterError);
}

TEST_CASE("recall with an adapter") {
  // swapped pairs; a linear map that swaps coordinates repairs retrieval
  const auto c = oracle::MakeCorpus({{1, 0}, {0, 1}}, {{0, 1}, {1, 0}});
  CHECK(RetrievalRecallAtK(c, 1) == 0.0);
  LinearMap swap{Matrix::Zero(2, 2), Vector::Zero(2)};
  swap.W << 0, 1, 1, 0;
  const AdapterPipeline p{{swap}};
  CHECK(RetrievalRecallAtK(c, 1, &p, 0) == 1.0);
}

}  // TEST_SUITE
