#pragma once

// Text-side adaptation steps. Every step consumes a unit vector and returns a
// unit vector; steps compose into pipelines.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "gapkit/embedstore.hpp"
#include "gapkit/rng.hpp"

namespace gapkit {

using Matrix = Eigen::MatrixXd;

// normalize(v + w * z), z ~ N(0, I).
struct GaussianNoise {
  double w = 0.0;
};

// normalize(v + shift).
struct ConstantShift {
  Vector shift;
};

// normalize(W * v + b).
struct LinearMap {
  Matrix W;
  Vector b;
};

// normalize(v + scale * (mu + L * z)), z ~ N(0, I), L lower triangular.
struct CovarianceNoise {
  Vector mu;
  Matrix chol_L;
  double scale = 1.0;
};

using Adapter = std::variant<GaussianNoise, ConstantShift, LinearMap, CovarianceNoise>;

struct AdapterPipeline {
  std::vector<Adapter> steps;
};

inline constexpr double kDefaultRidgeLambda = 1e-4;
inline constexpr double kDefaultCholeskyJitter = 1e-6;
inline constexpr double kDefaultNoiseW = 0.08;

// "gaussian_noise", "constant_shift", "linear_map", "covariance_noise".
std::string AdapterKindName(const Adapter& a);

// Embedding dimension the adapter expects, or 0 for dimension-free steps
// (GaussianNoise).
std::size_t AdapterDim(const Adapter& a);

// Throws ValidationError when entries are non-finite, dimensions disagree,
// chol_L is not lower triangular with a nonnegative diagonal, or w / scale
// are negative.
void ValidateAdapter(const Adapter& a);

// Nonempty, every step valid, uniform dimension. Returns that dimension
// (0 if only dimension-free steps are present).
std::size_t ValidatePipeline(const AdapterPipeline& p);

// True when the step maps every unit vector to itself (zero noise, zero
// shift, zero-scale covariance noise). Pipelines skip such steps; a skipped
// step draws nothing from the stream.
bool IsIdentityStep(const Adapter& a);

Vector ApplyGaussianNoise(const Vector& v, double w, Rng& rng);
Vector ApplyShift(const Vector& v, const Vector& shift);
Vector ApplyLinear(const Vector& v, const LinearMap& map);
Vector ApplyCovarianceNoise(const Vector& v, const CovarianceNoise& a, Rng& rng);

// One unnormalized perturbation scale * (mu + L z), z standard normal.
Vector SampleCovarianceNoise(const CovarianceNoise& a, Rng& rng);

// Applies one step to a unit vector.
Vector ApplyAdapter(const Vector& v, const Adapter& a, Rng& rng);

// Normalizes `v`, then applies each step in order.
Vector ApplyPipeline(const Vector& v, const AdapterPipeline& p, Rng& rng);

// Applies the pipeline to every row of `m` (rows normalized first), drawing
// from one stream in row order.
RowMatrix ApplyPipelineRows(const RowMatrix& m, const AdapterPipeline& p, Rng& rng);

// Mean of normalize(image_j) - normalize(text_j).
ConstantShift FitMeanShift(const PairedCorpus& corpus);

// Standard-normal direction scaled to `magnitude`.
ConstantShift RandomShift(std::size_t dim, double magnitude, Rng& rng);

// Least-squares map from normalized text rows to normalized image rows:
//   minimize sum_j ||W t_j + b - i_j||^2 + lambda ||W||_F^2
// solved through the regularized normal equations on mean-centered data.
// Throws SingularityError when the system cannot be solved (advising
// lambda > 0).
LinearMap FitLinear(const PairedCorpus& corpus, double ridge_lambda = kDefaultRidgeLambda);

// The fitting objective above, evaluated for arbitrary (W, b).
double LinearObjective(const PairedCorpus& corpus, const Matrix& W,
                       const Vector& b, double ridge_lambda);

// Mean and (n-1)-divisor covariance of the difference vectors, plus jitter*I,
// factored by Cholesky. Throws NotPsdError when factoring fails.
CovarianceNoise FitCovarianceNoise(const PairedCorpus& corpus,
                                   double jitter = kDefaultCholeskyJitter,
                                   double scale = 1.0);

// Lower-triangular L with L L^T = a, for symmetric positive semidefinite a.
// Zero pivots (relative to the largest diagonal entry) produce zero columns;
// clearly negative pivots throw NotPsdError.
Matrix CholeskyLower(const Matrix& a);

// d_j = normalize(image_j) - normalize(text_j), one row per pair.
RowMatrix DifferenceVectors(const PairedCorpus& corpus);

}  // namespace gapkit
