#pragma once

// Modality-gap statistics and retrieval diagnostics. Everything is computed on
// normalized f64 copies; inputs are never modified.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "gapkit/adapters.hpp"
#include "gapkit/embedstore.hpp"

namespace gapkit {

inline constexpr std::size_t kDefaultUnpairedSamples = 10000;

struct GapReport {
  double mean_paired_cos = 0.0;
  double mean_unpaired_cos = 0.0;
  // mean normalized image vector - mean normalized text vector
  Vector gap_vector;
  double gap_norm = 0.0;
  std::size_t pairs_sampled = 0;
};

// dot(u, v) / (|u| |v|), clamped to [-1, 1].
double CosineSimilarity(const Vector& u, const Vector& v);

// Paired cosines over every row; unpaired cosines over `unpaired_samples`
// uniformly drawn (text_i, image_j), i != j, from a stream derived from `seed`.
GapReport GapStats(const PairedCorpus& corpus,
                   std::size_t unpaired_samples = kDefaultUnpairedSamples,
                   std::uint64_t seed = 0);

// Fraction of text rows (adapted when a pipeline is given) whose paired image
// ranks in the top k images by cosine. Rank counts strictly more similar
// images, so ties favour the paired image.
double RetrievalRecallAtK(const PairedCorpus& corpus, std::size_t k,
                          const AdapterPipeline* adapter = nullptr,
                          std::uint64_t seed = 0);

}  // namespace gapkit
