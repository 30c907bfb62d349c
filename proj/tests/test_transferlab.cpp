#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gapkit/conditions.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/geometry.hpp"
#include "gapkit/reports.hpp"
#include "gapkit/transferlab.hpp"
#include "oracles.hpp"

using namespace gapkit;

namespace {

SyntheticCorpusSpec SmallSpec() {
  SyntheticCorpusSpec s;
  s.n_classes = 4;
  s.rows = 400;
  s.dim = 16;
  s.class_sep = 1.0;
  return s;
}

HeadModel RandomHead(std::size_t k, std::size_t dim, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  HeadModel h;
  h.W = Matrix(k, dim);
  h.b = Vector(k);
  for (Eigen::Index i = 0; i < h.W.size(); ++i) h.W.data()[i] = nd(gen);
  for (Eigen::Index i = 0; i < h.b.size(); ++i) h.b[i] = nd(gen);
  return h;
}

}  // namespace

TEST_SUITE("transferlab") {

TEST_CASE("synthetic corpus generation") {
  const SyntheticCorpusSpec spec = SmallSpec();
  const PairedCorpus a = GenerateSyntheticCorpus(spec), b = GenerateSyntheticCorpus(spec);
  CHECK(a == b);
  CHECK(ValidateCorpus(a).ok());
  CHECK(a.rows() == 400);
  CHECK(a.dim() == 16);
  CHECK((*a.labels)[5] == 1);
  CHECK(a.ids[7] == "syn-000007");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (float x : a.text.row(i)) s += double(x) * x;
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-6);
  }
  const GapReport g = GapStats(a, 1000, 0);
  CHECK(g.mean_paired_cos < 1.0);
  CHECK(g.gap_norm > 0.0);

  SyntheticCorpusSpec other = spec;
  other.seed = 8;
  CHECK_FALSE(GenerateSyntheticCorpus(other) == a);

  SyntheticCorpusSpec flat = spec;
  flat.text_offset_norm = flat.image_offset_norm = 0.0;
  flat.text_noise_sd = 0.0;
  flat.image_noise = ImageNoiseSpec::Isotropic(0.0);
  CHECK(GapStats(GenerateSyntheticCorpus(flat), 100, 0).gap_norm < 1e-6);

  SyntheticCorpusSpec bad = spec;
  bad.n_classes = 1;
  CHECK_THROWS_AS(GenerateSyntheticCorpus(bad), ParameterError);
  bad = spec;
  bad.class_sep = -1.0;
  CHECK_THROWS_AS(GenerateSyntheticCorpus(bad), ParameterError);
}

TEST_CASE("standard corpus reference gap") {
  const ExperimentConfig cfg = LoadExperimentConfig(std::string(GAPKIT_CONFIG_DIR) + "/standard.json");
  const PairedCorpus c = GenerateSyntheticCorpus(cfg.corpus);
  CHECK(c.rows() == 5000);
  CHECK(c.dim() == 64);
  // recorded once from this implementation; guards cross-machine reproducibility
  CHECK(std::abs(GapStats(c, 10, 0).gap_norm - 1.1408289464230466) < 1e-9);
}

TEST_CASE("structured noise is no worse than plain noise on the standard corpus") {
  const ExperimentConfig cfg = LoadExperimentConfig(std::string(GAPKIT_CONFIG_DIR) + "/standard.json");
  const PairedCorpus c = GenerateSyntheticCorpus(cfg.corpus);
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const TransferReport r = CrossModalExperiment(c, ParseConditionList("noise:0.08,cov"), cfg.train, seeds);
  CHECK(r.conditions[1].image_eval_acc.mean >= r.conditions[0].image_eval_acc.mean - 0.01);
}

TEST_CASE("label checks") {
  const std::vector<std::int32_t> ok = {0, 2, 1, 2};
  CHECK(CheckContiguousLabels(ok) == 3);
  const std::vector<std::int32_t> gap = {0, 2};
  CHECK_THROWS_AS(CheckContiguousLabels(gap), ValidationError);
  const std::vector<std::int32_t> neg = {0, -1};
  CHECK_THROWS_AS(CheckContiguousLabels(neg), ValidationError);
}

TEST_CASE("loss and gradient against written-out oracles") {
  std::mt19937_64 gen(71);
  oracle::Mat x;
  std::vector<std::int32_t> y;
  for (int i = 0; i < 12; ++i) {
    x.push_back(oracle::GaussianVec(5, gen));
    y.push_back(i % 3);
  }
  const HeadModel h = RandomHead(3, 5, gen);
  oracle::Mat w(3, oracle::Vec(5));
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 5; ++j) w[k][j] = h.W(k, j);
  }
  const oracle::Vec b(h.b.data(), h.b.data() + 3);
  const RowMatrix xm = oracle::FromMat(x);
  CHECK(HeadLoss(xm, y, h) == doctest::Approx(oracle::CrossEntropy(x, y, w, b)).epsilon(1e-12));

  // central differences on every coordinate, written independently
  const HeadGradient g = HeadLossGradient(xm, y, h);
  const double step = 1e-5;
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 5; ++j) {
      auto wp = w, wm = w;
      wp[k][j] += step;
      wm[k][j] -= step;
      const double fd = (oracle::CrossEntropy(x, y, wp, b) - oracle::CrossEntropy(x, y, wm, b)) / (2 * step);
      CHECK(g.dW(k, j) == doctest::Approx(fd).epsilon(1e-6));
    }
    auto bp = b, bm = b;
    bp[k] += step;
    bm[k] -= step;
    const double fd = (oracle::CrossEntropy(x, y, w, bp) - oracle::CrossEntropy(x, y, w, bm)) / (2 * step);
    CHECK(g.db[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("gradient of a zero head on one sample is softmax(b) - onehot") {
  HeadModel h;
  h.W = Matrix::Zero(3, 4);
  h.b = Vector(3);
  h.b << 0.5, -1.0, 2.0;
  RowMatrix x(1, 4);
  x << 0.1, 0.2, -0.3, 0.4;
  const std::vector<std::int32_t> y = {1};
  const HeadGradient g = HeadLossGradient(x, y, h);
  const double z = std::exp(0.5) + std::exp(-1.0) + std::exp(2.0);
  CHECK(g.db[0] == doctest::Approx(std::exp(0.5) / z).epsilon(1e-14));
  CHECK(g.db[1] == doctest::Approx(std::exp(-1.0) / z - 1.0).epsilon(1e-14));
  CHECK(g.db[2] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-14));
}

TEST_CASE("numerical gradient check") {
  std::mt19937_64 gen(72);
  oracle::Mat x;
  std::vector<std::int32_t> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(oracle::GaussianVec(4, gen));
    y.push_back(i % 3);
  }
  const RowMatrix xm = oracle::FromMat(x);
  const HeadModel h = RandomHead(3, 4, gen);
  const double fine = NumericalGradientCheck(xm, y, h, 15, 1e-5, 1);
  const double coarse = NumericalGradientCheck(xm, y, h, 15, 1e-1, 1);
  CHECK(fine < 1e-6);
  CHECK(coarse > fine);
  CHECK_THROWS_AS(NumericalGradientCheck(xm, y, h, 0, 1e-5), ParameterError);
  CHECK_THROWS_AS(NumericalGradientCheck(xm, y, h, 3, 0.0), ParameterError);
}

TEST_CASE("training separates separable data") {
  std::mt19937_64 gen(73);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  oracle::Mat x;
  std::vector<std::int32_t> y;
  while (x.size() < 200) {
    const double a = u(gen), b = u(gen);
    if (std::abs(a - b) < 0.2) continue;  // keep a margin around the line a = b
    // mirrored pairs keep the classes balanced
    x.push_back({a, b});
    y.push_back(a > b ? 1 : 0);
    x.push_back({b, a});
    y.push_back(b > a ? 1 : 0);
  }
  const RowMatrix xm = oracle::FromMat(x);
  const HeadModel h = TrainHead(xm, y, nullptr, TrainConfig{}, 3);
  CHECK(h.trained_epochs == 8);
  CHECK(EvaluateHead(h, xm, y) == 1.0);
}

TEST_CASE("loss decreases monotonically with full-batch small steps") {
  const PairedCorpus c = GenerateSyntheticCorpus(SmallSpec());
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kSgd;
  cfg.learning_rate = 1e-2;
  cfg.linear_decay = false;
  cfg.batch_size = 0;
  cfg.epochs = 30;
  const HeadModel h = TrainHead(c.text.ToF64(), *c.labels, nullptr, cfg, 1);
  REQUIRE(h.loss_history.size() == 30);
  for (std::size_t e = 1; e < h.loss_history.size(); ++e) {
    CHECK(h.loss_history[e] < h.loss_history[e - 1]);
  }
}

TEST_CASE("zero-noise pipeline reproduces the plain run bit-for-bit") {
  const PairedCorpus c = GenerateSyntheticCorpus(SmallSpec());
  const RowMatrix x = c.text.ToF64();
  const AdapterPipeline p{{GaussianNoise{0.0}}};
  const HeadModel a = TrainHead(x, *c.labels, nullptr, TrainConfig{}, 9);
  const HeadModel b = TrainHead(x, *c.labels, &p, TrainConfig{}, 9);
  CHECK(a.W == b.W);
  CHECK(a.b == b.b);
  const HeadModel again = TrainHead(x, *c.labels, nullptr, TrainConfig{}, 9);
  CHECK(a.W == again.W);
}

TEST_CASE("noise is resampled at every presentation") {
  const PairedCorpus c = GenerateSyntheticCorpus(SmallSpec());
  TrainConfig cfg;
  cfg.epochs = 3;
  std::vector<std::vector<Vector>> seen(3);
  cfg.on_presentation = [&](std::size_t epoch, std::size_t row, const Vector& v) {
    if (row == 17) seen[epoch].push_back(v);
  };
  const AdapterPipeline p{{GaussianNoise{0.08}}};
  TrainHead(c.text.ToF64(), *c.labels, &p, cfg, 4);
  for (const auto& s : seen) REQUIRE(s.size() == 1);
  CHECK(seen[0][0] != seen[1][0]);
  CHECK(seen[1][0] != seen[2][0]);
}

TEST_CASE("evaluation") {
  std::mt19937_64 gen(74);
  // prototypes on coordinate axes, identity head
  oracle::Mat x;
  std::vector<std::int32_t> y;
  for (int k = 0; k < 4; ++k) {
    oracle::Vec v(4, 0.0);
    v[k] = 1.0;
    x.push_back(v);
    y.push_back(k);
  }
  HeadModel id;
  id.W = Matrix::Identity(4, 4);
  id.b = Vector::Zero(4);
  CHECK(EvaluateHead(id, oracle::FromMat(x), y) == 1.0);

  // ties go to the lowest class
  HeadModel flat;
  flat.W = Matrix::Zero(4, 4);
  flat.b = Vector::Zero(4);
  CHECK(PredictHead(flat, oracle::FromMat(x)) == std::vector<std::int32_t>{0, 0, 0, 0});

  // chance level and scale invariance
  oracle::Mat many;
  std::vector<std::int32_t> labels;
  std::uniform_int_distribution<int> cls(0, 4);
  for (int i = 0; i < 5000; ++i) {
    many.push_back(oracle::GaussianVec(8, gen));
    labels.push_back(cls(gen));
  }
  const RowMatrix mm = oracle::FromMat(many);
  const HeadModel h = RandomHead(5, 8, gen);
  const double acc = EvaluateHead(h, mm, labels);
  CHECK(std::abs(acc - 0.2) < 0.05);
  HeadModel scaled = h;
  scaled.W *= 3.7;
  scaled.b *= 3.7;
  CHECK(PredictHead(scaled, mm) == PredictHead(h, mm));
}

TEST_CASE("splits") {
  const SplitIndices s = SplitRows(1003, 5);
  CHECK(s.train.size() == 802);
  CHECK(s.val.size() == 100);
  CHECK(s.test.size() == 101);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 1003);
  CHECK(SplitRows(1003, 5).test == s.test);
  CHECK(SplitRows(1003, 6).test != s.test);
}

TEST_CASE("cross-modal experiment shape and determinism") {
  const PairedCorpus c = GenerateSyntheticCorpus(SmallSpec());
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto conds = ParseConditionList("none,noise:0.08,mean+noise:0.08,cov");
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const TransferReport r = CrossModalExperiment(c, conds, cfg, seeds);
  REQUIRE(r.conditions.size() == 4);
  CHECK(r.conditions[2].name == "mean+noise:0.08");
  for (const auto& cond : r.conditions) {
    REQUIRE(cond.cells.size() == 3);
    for (const auto& cell : cond.cells) {
      CHECK(cell.train_acc >= 0.0);
      CHECK(cell.image_eval_acc <= 1.0);
    }
  }
  const TransferReport again = CrossModalExperiment(c, conds, cfg, seeds);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(r.conditions[i].cells[j].image_eval_acc == again.conditions[i].cells[j].image_eval_acc);
      CHECK(r.conditions[i].cells[j].text_eval_acc == again.conditions[i].cells[j].text_eval_acc);
    }
  }
  const std::vector<double> vals = {1.0, 2.0, 4.0};
  const MeanStd ms = Summarize(vals);
  CHECK(ms.mean == doctest::Approx(7.0 / 3.0));
  CHECK(ms.std == doctest::Approx(std::sqrt(((1 - 7.0 / 3) * (1 - 7.0 / 3) + (2 - 7.0 / 3) * (2 - 7.0 / 3) +
                                             (4 - 7.0 / 3) * (4 - 7.0 / 3)) / 2.0)));

  PairedCorpus unlabeled = c;
  unlabeled.labels.reset();
  CHECK_THROWS_AS(CrossModalExperiment(unlabeled, conds, cfg, seeds), ValidationError);
}

}  // TEST_SUITE
