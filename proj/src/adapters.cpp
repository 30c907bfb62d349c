#include "gapkit/adapters.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::span<double> AsSpan(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void RequireUnit(const Vector& v) {
  if (std::abs(v.norm() - 1.0) > 1e-5) {
    throw ParameterError("adapter input must be unit-norm within 1e-5, got norm " +
                         std::to_string(v.norm()));
  }
}

void RequireDim(const Vector& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    throw ParameterError(std::string(what) + ": vector dim " +
                         std::to_string(v.size()) + " != adapter dim " +
                         std::to_string(dim));
  }
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }
bool AllFinite(const Vector& v) { return v.allFinite(); }

// Normalized f64 text and image rows, corpus validated.
std::pair<RowMatrix, RowMatrix> NormalizedPair(const PairedCorpus& corpus) {
  RequireValid(corpus);
  return {NormalizedRows(corpus.text), NormalizedRows(corpus.image)};
}

}  // namespace

std::string AdapterKindName(const Adapter& a) {
  return std::visit(Overloaded{
                        [](const GaussianNoise&) { return "gaussian_noise"; },
                        [](const ConstantShift&) { return "constant_shift"; },
                        [](const LinearMap&) { return "linear_map"; },
                        [](const CovarianceNoise&) { return "covariance_noise"; },
                    },
                    a);
}

std::size_t AdapterDim(const Adapter& a) {
  return std::visit(
      Overloaded{
          [](const GaussianNoise&) -> std::size_t { return 0; },
          [](const ConstantShift& s) -> std::size_t { return s.shift.size(); },
          [](const LinearMap& m) -> std::size_t { return m.b.size(); },
          [](const CovarianceNoise& c) -> std::size_t { return c.mu.size(); },
      },
      a);
}

void ValidateAdapter(const Adapter& a) {
  std::visit(
      Overloaded{
          [](const GaussianNoise& g) {
            if (!std::isfinite(g.w) || g.w < 0.0) {
              throw ValidationError("gaussian noise w must be finite and >= 0");
            }
          },
          [](const ConstantShift& s) {
            if (s.shift.size() == 0) throw ValidationError("empty shift vector");
            if (!AllFinite(s.shift)) throw ValidationError("non-finite shift entry");
          },
          [](const LinearMap& m) {
            const auto d = m.b.size();
            if (d == 0 || m.W.rows() != d || m.W.cols() != d) {
              throw ValidationError("linear map must be dim x dim with a dim bias");
            }
            if (!AllFinite(m.W) || !AllFinite(m.b)) {
              throw ValidationError("non-finite linear map entry");
            }
          },
          [](const CovarianceNoise& c) {
            const auto d = c.mu.size();
            if (d == 0 || c.chol_L.rows() != d || c.chol_L.cols() != d) {
              throw ValidationError("covariance noise must have dim mu and dim x dim L");
            }
            if (!AllFinite(c.mu) || !AllFinite(c.chol_L)) {
              throw ValidationError("non-finite covariance noise entry");
            }
            if (!std::isfinite(c.scale) || c.scale < 0.0) {
              throw ValidationError("covariance noise scale must be finite and >= 0");
            }
            for (Eigen::Index i = 0; i < d; ++i) {
              if (c.chol_L(i, i) < 0.0) {
                throw ValidationError("chol_L has a negative diagonal entry");
              }
              for (Eigen::Index j = i + 1; j < d; ++j) {
                if (c.chol_L(i, j) != 0.0) {
                  throw ValidationError("chol_L is not lower triangular");
                }
              }
            }
          },
      },
      a);
}

std::size_t ValidatePipeline(const AdapterPipeline& p) {
  if (p.steps.empty()) throw ValidationError("adapter pipeline is empty");
  std::size_t dim = 0;
  for (const auto& step : p.steps) {
    ValidateAdapter(step);
    const std::size_t d = AdapterDim(step);
    if (d == 0) continue;
    if (dim != 0 && d != dim) {
      throw ValidationError("pipeline steps disagree on dimension: " +
                            std::to_string(dim) + " vs " + std::to_string(d));
    }
    dim = d;
  }
  return dim;
}

bool IsIdentityStep(const Adapter& a) {
  return std::visit(
      Overloaded{
          [](const GaussianNoise& g) { return g.w == 0.0; },
          [](const ConstantShift& s) { return (s.shift.array() == 0.0).all(); },
          [](const LinearMap&) { return false; },
          [](const CovarianceNoise& c) { return c.scale == 0.0; },
      },
      a);
}

Vector ApplyGaussianNoise(const Vector& v, double w, Rng& rng) {
  RequireUnit(v);
  if (w < 0.0) throw ParameterError("noise w must be >= 0");
  Vector out = v;
  if (w > 0.0) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += w * rng.Normal();
  }
  NormalizeInPlace(AsSpan(out));
  return out;
}

Vector ApplyShift(const Vector& v, const Vector& shift) {
  RequireUnit(v);
  RequireDim(v, shift.size(), "shift");
  Vector out = v + shift;
  NormalizeInPlace(AsSpan(out));
  return out;
}

Vector ApplyLinear(const Vector& v, const LinearMap& map) {
  RequireUnit(v);
  RequireDim(v, map.b.size(), "linear map");
  Vector out = map.W * v + map.b;
  NormalizeInPlace(AsSpan(out));
  return out;
}

Vector SampleCovarianceNoise(const CovarianceNoise& a, Rng& rng) {
  Vector z(a.mu.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.Normal();
  Vector perturb = a.mu + a.chol_L.triangularView<Eigen::Lower>() * z;
  return a.scale * perturb;
}

Vector ApplyCovarianceNoise(const Vector& v, const CovarianceNoise& a, Rng& rng) {
  RequireUnit(v);
  RequireDim(v, a.mu.size(), "covariance noise");
  Vector out = v;
  if (a.scale != 0.0) out += SampleCovarianceNoise(a, rng);
  NormalizeInPlace(AsSpan(out));
  return out;
}

Vector ApplyAdapter(const Vector& v, const Adapter& a, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const GaussianNoise& g) { return ApplyGaussianNoise(v, g.w, rng); },
          [&](const ConstantShift& s) { return ApplyShift(v, s.shift); },
          [&](const LinearMap& m) { return ApplyLinear(v, m); },
          [&](const CovarianceNoise& c) { return ApplyCovarianceNoise(v, c, rng); },
      },
      a);
}

Vector ApplyPipeline(const Vector& v, const AdapterPipeline& p, Rng& rng) {
  Vector cur = Normalized(v);
  for (const auto& step : p.steps) {
    if (IsIdentityStep(step)) continue;
    cur = ApplyAdapter(cur, step, rng);
  }
  return cur;
}

RowMatrix ApplyPipelineRows(const RowMatrix& m, const AdapterPipeline& p, Rng& rng) {
  const std::size_t dim = ValidatePipeline(p);
  if (dim != 0 && dim != static_cast<std::size_t>(m.cols())) {
    throw ParameterError("pipeline dim " + std::to_string(dim) +
                         " != corpus dim " + std::to_string(m.cols()));
  }
  RowMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Vector row = m.row(i).transpose();
    try {
      out.row(i) = ApplyPipeline(row, p, rng).transpose();
    } catch (const DegenerateVectorError&) {
      throw DegenerateVectorError(static_cast<std::size_t>(i));
    }
  }
  return out;
}

RowMatrix DifferenceVectors(const PairedCorpus& corpus) {
  auto [text, image] = NormalizedPair(corpus);
  return image - text;
}

ConstantShift FitMeanShift(const PairedCorpus& corpus) {
  const RowMatrix diff = DifferenceVectors(corpus);
  return ConstantShift{diff.colwise().mean().transpose()};
}

ConstantShift RandomShift(std::size_t dim, double magnitude, Rng& rng) {
  if (!(magnitude >= 0.0)) throw ParameterError("shift magnitude must be >= 0");
  if (dim == 0) throw ParameterError("shift dim must be >= 1");
  Vector s(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = rng.Normal();
  NormalizeInPlace(AsSpan(s));
  return ConstantShift{magnitude * s};
}

LinearMap FitLinear(const PairedCorpus& corpus, double ridge_lambda) {
  if (!(ridge_lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
  auto [text, image] = NormalizedPair(corpus);
  const Eigen::Index d = text.cols();

  const Vector t_mean = text.colwise().mean().transpose();
  const Vector i_mean = image.colwise().mean().transpose();
  const Matrix tc = text.rowwise() - t_mean.transpose();
  const Matrix ic = image.rowwise() - i_mean.transpose();

  // (Tc^T Tc + lambda I) W^T = Tc^T Ic
  Matrix gram = tc.transpose() * tc;
  gram.diagonal().array() += ridge_lambda;
  const Matrix rhs = tc.transpose() * ic;

  Eigen::LLT<Matrix> llt(gram);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() != Eigen::Success || !(rcond > 1e-13)) {
    throw SingularityError(
        "normal equations are singular (rows=" + std::to_string(text.rows()) +
        ", dim=" + std::to_string(d) + ", lambda=" + std::to_string(ridge_lambda) +
        "); use a ridge lambda > 0");
  }
  LinearMap out;
  out.W = llt.solve(rhs).transpose();
  out.b = i_mean - out.W * t_mean;
  return out;
}

double LinearObjective(const PairedCorpus& corpus, const Matrix& W,
                       const Vector& b, double ridge_lambda) {
  auto [text, image] = NormalizedPair(corpus);
  const Matrix pred = (text * W.transpose()).rowwise() + b.transpose();
  return (pred - Matrix(image)).squaredNorm() + ridge_lambda * W.squaredNorm();
}

Matrix CholeskyLower(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw ParameterError("Cholesky input must be square");
  if (!a.allFinite()) throw NotPsdError("covariance has non-finite entries");
  const double max_diag = n > 0 ? a.diagonal().cwiseAbs().maxCoeff() : 0.0;
  const double pivot_tol = 1e-12 * max_diag;
  const double offdiag_tol = 1e-6 * max_diag;

  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
    if (s > pivot_tol) {
      const double ljj = std::sqrt(s);
      L(j, j) = ljj;
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double r = a(i, j);
        for (Eigen::Index k = 0; k < j; ++k) r -= L(i, k) * L(j, k);
        L(i, j) = r / ljj;
      }
    } else if (s >= -pivot_tol) {
      // Zero pivot: a PSD matrix has a zero residual column here as well.
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double r = a(i, j);
        for (Eigen::Index k = 0; k < j; ++k) r -= L(i, k) * L(j, k);
        if (std::abs(r) > offdiag_tol) {
          throw NotPsdError("covariance is not positive semidefinite at column " +
                            std::to_string(j) + "; increase the jitter");
        }
      }
    } else {
      throw NotPsdError("covariance is not positive semidefinite (pivot " +
                        std::to_string(s) + " at column " + std::to_string(j) +
                        "); increase the jitter");
    }
  }
  return L;
}

CovarianceNoise FitCovarianceNoise(const PairedCorpus& corpus, double jitter,
                                   double scale) {
  if (!(jitter >= 0.0)) throw ParameterError("jitter must be >= 0");
  if (!(scale >= 0.0)) throw ParameterError("scale must be >= 0");
  if (corpus.rows() < 2) {
    throw InsufficientDataError("covariance noise needs at least 2 pairs");
  }
  const RowMatrix diff = DifferenceVectors(corpus);
  const Vector mu = diff.colwise().mean().transpose();
  const Matrix centered = diff.rowwise() - mu.transpose();
  Matrix sigma = centered.transpose() * centered /
                 static_cast<double>(diff.rows() - 1);
  sigma.diagonal().array() += jitter;

  CovarianceNoise out;
  out.mu = mu;
  out.chol_L = CholeskyLower(sigma);
  out.scale = scale;
  return out;
}

}  // namespace gapkit
