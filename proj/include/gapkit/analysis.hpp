#pragma once

// Difference-vector analysis (centered PCA, Pearson feature correlations) and
// the constant-shift sensitivity sweep.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gapkit/adapters.hpp"
#include "gapkit/embedstore.hpp"
#include "gapkit/transferlab.hpp"

namespace gapkit {

struct PcaReport {
  std::vector<double> explained_variance;  // descending
  std::vector<double> explained_ratio;     // share of total variance
  Matrix components;                       // n_components x dim, orthonormal rows
  Vector mean;                             // mean difference vector
  double total_variance = 0.0;
};

// PCA of d_j = normalize(image_j) - normalize(text_j) through the symmetric
// eigendecomposition of their sample covariance (divisor rows - 1). Component
// signs are fixed so that each component's largest-magnitude entry is
// positive.
PcaReport DiffPca(const PairedCorpus& corpus, std::size_t n_components);

struct FeatureCorrelation {
  std::size_t feature_i = 0;
  std::size_t feature_j = 0;  // feature_i < feature_j
  double pearson_r = 0.0;
};

struct CorrelationReport {
  std::vector<FeatureCorrelation> top;      // sorted by |r| descending
  std::vector<std::size_t> excluded;        // zero-variance features
};

// Pearson r between difference-vector coordinates; the `top_k` strongest
// pairs. Ties in |r| are ordered by (feature_i, feature_j).
CorrelationReport FeatureCorrelations(const PairedCorpus& corpus, std::size_t top_k);

struct ShiftCondition {
  enum class Kind { kNone, kRandom, kMean, kNegMean };
  Kind kind = Kind::kNone;
  double magnitude = 0.0;  // kRandom only

  static ShiftCondition None() { return {Kind::kNone, 0.0}; }
  static ShiftCondition Random(double magnitude) { return {Kind::kRandom, magnitude}; }
  static ShiftCondition Mean() { return {Kind::kMean, 0.0}; }
  static ShiftCondition NegMean() { return {Kind::kNegMean, 0.0}; }

  // "none", "rng:<magnitude>", "mean", "neg_mean"
  std::string Name() const;
  static ShiftCondition Parse(const std::string& text);
};

struct SensitivityRow {
  ShiftCondition condition;
  std::size_t runs = 0;
  double mean_metric = 0.0;  // mean image_eval_acc over runs
  double std_metric = 0.0;
  std::vector<double> per_run;
};

// Builds [shift, GaussianNoise(noise_w)] per condition and runs the transfer
// experiment `runs` times with seeds DeriveSeed(seed, "sensitivity/run", r).
// Random shifts are redrawn per run; mean shifts are fit on each run's
// held-out paired split.
std::vector<SensitivityRow> SensitivitySweep(const PairedCorpus& corpus,
                                             std::span<const ShiftCondition> conditions,
                                             double noise_w, std::size_t runs,
                                             std::uint64_t seed,
                                             const TrainConfig& hyper = {});

// The per-run seeds SensitivitySweep uses.
std::vector<std::uint64_t> SensitivitySeeds(std::uint64_t seed, std::size_t runs);

}  // namespace gapkit
