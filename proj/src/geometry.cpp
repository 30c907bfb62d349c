#include "gapkit/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "gapkit/errors.hpp"

namespace gapkit {

double CosineSimilarity(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw ParameterError("cosine similarity of vectors with different dims");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu >= kZeroNormThreshold) || !(nv >= kZeroNormThreshold)) {
    throw DegenerateVectorError();
  }
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

GapReport GapStats(const PairedCorpus& corpus, std::size_t unpaired_samples,
                   std::uint64_t seed) {
  RequireValid(corpus);
  const std::size_t n = corpus.rows();
  if (n < 2) throw InsufficientDataError("gap statistics need at least 2 pairs");

  const RowMatrix text = NormalizedRows(corpus.text);
  const RowMatrix image = NormalizedRows(corpus.image);

  GapReport r;
  double paired = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    paired += std::clamp(text.row(j).dot(image.row(j)), -1.0, 1.0);
  }
  r.mean_paired_cos = paired / static_cast<double>(n);

  Rng rng(DeriveSeed(seed, "gap_stats/unpaired"));
  double unpaired = 0.0;
  for (std::size_t s = 0; s < unpaired_samples; ++s) {
    const std::size_t i = rng.UniformInt(n);
    std::size_t j = rng.UniformInt(n - 1);
    if (j >= i) ++j;
    unpaired += std::clamp(text.row(i).dot(image.row(j)), -1.0, 1.0);
  }
  r.mean_unpaired_cos =
      unpaired_samples > 0 ? unpaired / static_cast<double>(unpaired_samples) : 0.0;
  r.pairs_sampled = unpaired_samples;

  r.gap_vector = (image - text).colwise().mean().transpose();
  r.gap_norm = r.gap_vector.norm();
  return r;
}

double RetrievalRecallAtK(const PairedCorpus& corpus, std::size_t k,
                          const AdapterPipeline* adapter, std::uint64_t seed) {
  RequireValid(corpus);
  const std::size_t n = corpus.rows();
  if (k < 1 || k > n) {
    throw ParameterError("recall k must be in [1, rows=" + std::to_string(n) + "]");
  }
  RowMatrix text = NormalizedRows(corpus.text);
  if (adapter != nullptr) {
    Rng rng(DeriveSeed(seed, "recall/adapter"));
    text = ApplyPipelineRows(text, *adapter, rng);
  }
  const RowMatrix image = NormalizedRows(corpus.image);
  const RowMatrix sims = text * image.transpose();

  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = sims(i, i);
    std::size_t better = 0;
    for (std::size_t j = 0; j < n && better < k; ++j) {
      if (j != i && sims(i, j) > target) ++better;
    }
    if (better < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace gapkit
