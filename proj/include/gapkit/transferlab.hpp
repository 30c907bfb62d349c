#pragma once

// Desk-scale cross-modal transfer: synthetic two-modality corpora with a
// planted gap, a linear softmax head trained on (adapted) text vectors, and the
// train-on-text / evaluate-on-image protocol.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gapkit/adapters.hpp"
#include "gapkit/embedstore.hpp"

namespace gapkit {

struct ImageNoiseSpec {
  enum class Kind { kIsotropic, kLowRank };
  Kind kind = Kind::kIsotropic;
  double sd = 0.0;        // isotropic
  std::size_t rank = 0;   // low rank: `rank` random orthonormal directions
  double sd_major = 0.0;  //   with this sd each,
  double sd_minor = 0.0;  //   plus isotropic noise with this sd

  static ImageNoiseSpec Isotropic(double sd);
  static ImageNoiseSpec LowRank(std::size_t rank, double sd_major, double sd_minor);
};

struct SyntheticCorpusSpec {
  std::size_t n_classes = 10;
  std::size_t rows = 5000;
  std::size_t dim = 64;
  double class_sep = 1.0;
  // Per-row sd of the semantic vector around its class prototype.
  double semantic_jitter_sd = 0.1;
  double text_offset_norm = 0.6;
  double image_offset_norm = 0.6;
  double text_noise_sd = 0.02;
  ImageNoiseSpec image_noise = ImageNoiseSpec::LowRank(5, 0.25, 0.05);
  std::uint64_t seed = 7;

  void Validate() const;
};

// Rows are labelled round-robin (row r has class r mod n_classes).
// Deterministic in spec.seed.
PairedCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec);

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 3e-4;
  bool linear_decay = true;  // lr_t = lr * (1 - t / total_steps)
  std::size_t batch_size = 128;  // 0 means full batch
  std::size_t epochs = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Observes every adapted training vector as it is presented
  // (epoch, row index, vector). Instrumentation only.
  std::function<void(std::size_t, std::size_t, const Vector&)> on_presentation;
};

struct HeadModel {
  Matrix W;  // n_classes x dim
  Vector b;  // n_classes
  std::size_t trained_epochs = 0;
  // Mean cross-entropy on the clean (unadapted) training vectors at the end
  // of each epoch.
  std::vector<double> loss_history;

  std::size_t n_classes() const { return static_cast<std::size_t>(b.size()); }
};

// Number of classes K, requiring labels to be exactly {0, ..., K-1}.
// Throws ValidationError otherwise.
std::size_t CheckContiguousLabels(std::span<const std::int32_t> labels);

// Mean cross-entropy of softmax(W x + b) over the rows of `x` (used as is).
double HeadLoss(const RowMatrix& x, std::span<const std::int32_t> labels,
                const HeadModel& head);

// Analytic gradient of HeadLoss.
struct HeadGradient {
  Matrix dW;
  Vector db;
};
HeadGradient HeadLossGradient(const RowMatrix& x, std::span<const std::int32_t> labels,
                              const HeadModel& head);

// Mini-batch training from a zero-initialized head. Rows are normalized, then
// adapted with fresh randomness at every presentation when a nonempty
// pipeline is given. Shuffling and noise use separate streams derived from
// `seed`, so a pipeline of identity steps reproduces the no-pipeline run
// bit-for-bit.
HeadModel TrainHead(const RowMatrix& vectors, std::span<const std::int32_t> labels,
                    const AdapterPipeline* pipeline, const TrainConfig& hyper,
                    std::uint64_t seed);

// Fraction of rows with argmax(W x + b) == label; rows are normalized first;
// ties go to the lowest class index.
double EvaluateHead(const HeadModel& head, const RowMatrix& vectors,
                    std::span<const std::int32_t> labels);

std::vector<std::int32_t> PredictHead(const HeadModel& head, const RowMatrix& vectors);

// Central finite differences of HeadLoss at `probes` randomly chosen parameter
// coordinates, against the analytic gradient. Returns
//   max |g_analytic - g_fd| / max(|g_analytic|, |g_fd|, 1e-8).
double NumericalGradientCheck(const RowMatrix& x, std::span<const std::int32_t> labels,
                              const HeadModel& head, std::size_t probes, double step,
                              std::uint64_t seed = 0);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then floor(80%) train, floor(10%) val, remainder test.
SplitIndices SplitRows(std::size_t rows, std::uint64_t seed);

// A named adapter condition. `build` receives the paired validation split
// (the held-out data adapters may be fit on) and a condition seed, and
// returns the pipeline; an empty pipeline means "no adapter".
struct Condition {
  std::string name;
  std::function<AdapterPipeline(const PairedCorpus& fit_split, std::uint64_t seed)> build;

  static Condition Fixed(std::string name, AdapterPipeline pipeline);
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for one value
};
MeanStd Summarize(std::span<const double> values);

struct TransferCell {
  std::uint64_t seed = 0;
  double train_acc = 0.0;
  double text_eval_acc = 0.0;
  double image_eval_acc = 0.0;
};

struct ConditionResult {
  std::string name;
  std::vector<TransferCell> cells;  // one per seed, in seed order
  MeanStd train_acc;
  MeanStd text_eval_acc;
  MeanStd image_eval_acc;
};

struct TransferReport {
  std::vector<std::uint64_t> seeds;
  std::vector<ConditionResult> conditions;  // declaration order
};

// For every (condition, seed): split rows, fit the condition's adapter on the
// validation split, train on adapted training TEXT, and report accuracy on
// the test split's text and image rows.
TransferReport CrossModalExperiment(const PairedCorpus& corpus,
                                    std::span<const Condition> conditions,
                                    const TrainConfig& hyper,
                                    std::span<const std::uint64_t> seeds);

}  // namespace gapkit
