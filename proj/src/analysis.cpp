#include "gapkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

#include "gapkit/errors.hpp"
#include "gapkit/rng.hpp"

namespace gapkit {

PcaReport DiffPca(const PairedCorpus& corpus, std::size_t n_components) {
  RequireValid(corpus);
  const std::size_t n = corpus.rows();
  const std::size_t d = corpus.dim();
  if (n < 2) throw InsufficientDataError("PCA needs at least 2 pairs");
  if (n_components < 1 || n_components > std::min(n - 1, d)) {
    throw ParameterError("n_components must be in [1, min(rows-1, dim) = " +
                         std::to_string(std::min(n - 1, d)) + "]");
  }

  const RowMatrix diff = DifferenceVectors(corpus);
  PcaReport r;
  r.mean = diff.colwise().mean().transpose();
  const Matrix centered = diff.rowwise() - r.mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::kParameter, "eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues.
  const Vector values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Matrix vectors = eig.eigenvectors().rowwise().reverse();
  r.total_variance = values.sum();

  r.components.resize(static_cast<Eigen::Index>(n_components), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < n_components; ++k) {
    Vector v = vectors.col(static_cast<Eigen::Index>(k));
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    r.components.row(static_cast<Eigen::Index>(k)) = v.transpose();
    const double ev = values[static_cast<Eigen::Index>(k)];
    r.explained_variance.push_back(ev);
    r.explained_ratio.push_back(r.total_variance > 0.0 ? ev / r.total_variance : 0.0);
  }
  return r;
}

CorrelationReport FeatureCorrelations(const PairedCorpus& corpus, std::size_t top_k) {
  RequireValid(corpus);
  const std::size_t n = corpus.rows();
  if (n < 3) throw InsufficientDataError("feature correlations need at least 3 pairs");

  const RowMatrix diff = DifferenceVectors(corpus);
  const Vector mean = diff.colwise().mean().transpose();
  Matrix z = diff.rowwise() - mean.transpose();

  CorrelationReport r;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double ss = z.col(j).squaredNorm();
    if (ss <= 1e-24 * static_cast<double>(n)) {
      r.excluded.push_back(static_cast<std::size_t>(j));
    } else {
      z.col(j) /= std::sqrt(ss);
      kept.push_back(j);
    }
  }

  const Matrix zk = z(Eigen::all, kept);
  const Matrix corr = zk.transpose() * zk;
  std::vector<FeatureCorrelation> all;
  all.reserve(kept.size() * (kept.size() - (kept.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = a + 1; b < kept.size(); ++b) {
      const double rho = std::clamp(corr(static_cast<Eigen::Index>(a),
                                         static_cast<Eigen::Index>(b)), -1.0, 1.0);
      all.push_back({static_cast<std::size_t>(kept[a]), static_cast<std::size_t>(kept[b]), rho});
    }
  }
  const std::size_t k = std::min(top_k, all.size());
  auto stronger = [](const FeatureCorrelation& x, const FeatureCorrelation& y) {
    const double ax = std::abs(x.pearson_r), ay = std::abs(y.pearson_r);
    if (ax != ay) return ax > ay;
    if (x.feature_i != y.feature_i) return x.feature_i < y.feature_i;
    return x.feature_j < y.feature_j;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    stronger);
  all.resize(k);
  r.top = std::move(all);
  return r;
}

std::string ShiftCondition::Name() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kMean: return "mean";
    case Kind::kNegMean: return "neg_mean";
    case Kind::kRandom: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "rng:%g", magnitude);
      return buf;
    }
  }
  return "?";
}

ShiftCondition ShiftCondition::Parse(const std::string& text) {
  if (text == "none") return None();
  if (text == "mean") return Mean();
  if (text == "neg_mean" || text == "-mean") return NegMean();
  if (text.rfind("rng:", 0) == 0) {
    try {
      std::size_t used = 0;
      const double m = std::stod(text.substr(4), &used);
      if (used != text.size() - 4 || !(m >= 0.0)) throw std::invalid_argument("");
      return Random(m);
    } catch (const std::exception&) {
      throw ParameterError("bad random-shift magnitude in '" + text + "'");
    }
  }
  throw ParameterError("unknown shift condition '" + text +
                       "' (expected none, rng:<magnitude>, mean, neg_mean)");
}

std::vector<std::uint64_t> SensitivitySeeds(std::uint64_t seed, std::size_t runs) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < runs; ++r) {
    seeds.push_back(DeriveSeed(seed, "sensitivity/run", r));
  }
  return seeds;
}

std::vector<SensitivityRow> SensitivitySweep(const PairedCorpus& corpus,
                                             std::span<const ShiftCondition> conditions,
                                             double noise_w, std::size_t runs,
                                             std::uint64_t seed,
                                             const TrainConfig& hyper) {
  if (!corpus.labels) throw ValidationError("sensitivity sweep needs a labelled corpus");
  if (runs < 1) throw ParameterError("runs must be >= 1");
  if (!(noise_w >= 0.0)) throw ParameterError("noise w must be >= 0");

  std::vector<Condition> built;
  for (const auto& sc : conditions) {
    built.push_back(Condition{
        sc.Name(), [sc, noise_w](const PairedCorpus& fit, std::uint64_t cond_seed) {
          AdapterPipeline p;
          switch (sc.kind) {
            case ShiftCondition::Kind::kNone:
              break;
            case ShiftCondition::Kind::kRandom: {
              Rng rng(DeriveSeed(cond_seed, "sensitivity/random_shift"));
              p.steps.push_back(RandomShift(fit.dim(), sc.magnitude, rng));
              break;
            }
            case ShiftCondition::Kind::kMean:
              p.steps.push_back(FitMeanShift(fit));
              break;
            case ShiftCondition::Kind::kNegMean: {
              ConstantShift s = FitMeanShift(fit);
              s.shift = -s.shift;
              p.steps.push_back(std::move(s));
              break;
            }
          }
          p.steps.push_back(GaussianNoise{noise_w});
          return p;
        }});
  }

  const auto seeds = SensitivitySeeds(seed, runs);
  const TransferReport report = CrossModalExperiment(corpus, built, hyper, seeds);

  std::vector<SensitivityRow> rows;
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    const auto& cr = report.conditions[c];
    SensitivityRow row;
    row.condition = conditions[c];
    row.runs = runs;
    row.mean_metric = cr.image_eval_acc.mean;
    row.std_metric = cr.image_eval_acc.std;
    for (const auto& cell : cr.cells) row.per_run.push_back(cell.image_eval_acc);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace gapkit
