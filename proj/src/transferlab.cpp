#include "gapkit/transferlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gapkit/errors.hpp"
#include "gapkit/rng.hpp"

namespace gapkit {
namespace {

Vector RandomUnit(std::size_t dim, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(dim));
  for (;;) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.Normal();
    if (v.norm() >= kZeroNormThreshold) return v / v.norm();
  }
}

// `rank` orthonormal columns by Gram-Schmidt over Gaussian draws.
Matrix RandomOrthonormal(std::size_t dim, std::size_t rank, Rng& rng) {
  Matrix q(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rank));
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    for (;;) {
      Vector v = RandomUnit(dim, rng);
      for (Eigen::Index j = 0; j < k; ++j) v -= q.col(j).dot(v) * q.col(j);
      const double n = v.norm();
      if (n > 1e-6) {
        q.col(k) = v / n;
        break;
      }
    }
  }
  return q;
}

// Numerically stable softmax of each row of `logits`, in place.
void SoftmaxRows(RowMatrix& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    const double m = row.maxCoeff();
    row.array() = (row.array() - m).exp();
    row /= row.sum();
  }
}

RowMatrix Logits(const RowMatrix& x, const HeadModel& head) {
  RowMatrix z = x * head.W.transpose();
  z.rowwise() += head.b.transpose();
  return z;
}

void CheckShapes(const RowMatrix& x, std::span<const std::int32_t> labels,
                 const HeadModel& head) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ParameterError("labels length " + std::to_string(labels.size()) +
                         " != rows " + std::to_string(x.rows()));
  }
  if (head.W.cols() != x.cols() || head.W.rows() != head.b.size()) {
    throw ParameterError("head shape does not match input dim");
  }
  for (auto l : labels) {
    if (l < 0 || l >= head.b.size()) {
      throw ParameterError("label " + std::to_string(l) + " outside head classes");
    }
  }
}

}  // namespace

ImageNoiseSpec ImageNoiseSpec::Isotropic(double sd) {
  ImageNoiseSpec s;
  s.kind = Kind::kIsotropic;
  s.sd = sd;
  return s;
}

ImageNoiseSpec ImageNoiseSpec::LowRank(std::size_t rank, double sd_major,
                                       double sd_minor) {
  ImageNoiseSpec s;
  s.kind = Kind::kLowRank;
  s.rank = rank;
  s.sd_major = sd_major;
  s.sd_minor = sd_minor;
  return s;
}

void SyntheticCorpusSpec::Validate() const {
  if (n_classes < 2) throw ParameterError("n_classes must be >= 2");
  if (rows < n_classes) throw ParameterError("rows must be >= n_classes");
  if (dim < 2) throw ParameterError("dim must be >= 2");
  const double scales[] = {class_sep, semantic_jitter_sd, text_offset_norm,
                           image_offset_norm, text_noise_sd, image_noise.sd,
                           image_noise.sd_major, image_noise.sd_minor};
  for (double s : scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ParameterError("synthetic corpus scales must be finite and >= 0");
    }
  }
  if (image_noise.kind == ImageNoiseSpec::Kind::kLowRank && image_noise.rank > dim) {
    throw ParameterError("low-rank image noise rank exceeds dim");
  }
}

PairedCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec) {
  spec.Validate();
  const std::size_t d = spec.dim;
  const auto di = static_cast<Eigen::Index>(d);

  Rng proto_rng(DeriveSeed(spec.seed, "synth/prototypes"));
  std::vector<Vector> prototypes;
  prototypes.reserve(spec.n_classes);
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    prototypes.push_back(spec.class_sep * RandomUnit(d, proto_rng));
  }

  Rng offset_rng(DeriveSeed(spec.seed, "synth/offsets"));
  const Vector u_text = RandomUnit(d, offset_rng);
  const Vector u_image = RandomUnit(d, offset_rng);

  Matrix image_basis;
  if (spec.image_noise.kind == ImageNoiseSpec::Kind::kLowRank && spec.image_noise.rank > 0) {
    Rng basis_rng(DeriveSeed(spec.seed, "synth/image_basis"));
    image_basis = RandomOrthonormal(d, spec.image_noise.rank, basis_rng);
  }

  Rng row_rng(DeriveSeed(spec.seed, "synth/rows"));
  auto gaussian = [&](double sd) {
    Vector v(di);
    for (Eigen::Index i = 0; i < di; ++i) v[i] = sd * row_rng.Normal();
    return v;
  };
  auto image_noise = [&]() -> Vector {
    const auto& n = spec.image_noise;
    if (n.kind == ImageNoiseSpec::Kind::kIsotropic) return gaussian(n.sd);
    Vector e = gaussian(n.sd_minor);
    for (Eigen::Index k = 0; k < image_basis.cols(); ++k) {
      e += n.sd_major * row_rng.Normal() * image_basis.col(k);
    }
    return e;
  };

  RowMatrix text(spec.rows, di);
  RowMatrix image(spec.rows, di);
  PairedCorpus corpus;
  corpus.labels.emplace(spec.rows);
  corpus.ids.reserve(spec.rows);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const std::size_t c = r % spec.n_classes;
    bool ok = false;
    for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
      const Vector s = prototypes[c] + gaussian(spec.semantic_jitter_sd);
      Vector t = s + spec.text_offset_norm * u_text + gaussian(spec.text_noise_sd);
      Vector im = s + spec.image_offset_norm * u_image + image_noise();
      if (t.norm() < 1e-6 || im.norm() < 1e-6) continue;
      text.row(r) = (t / t.norm()).transpose();
      image.row(r) = (im / im.norm()).transpose();
      ok = true;
    }
    if (!ok) {
      throw DegenerateVectorError(r);
    }
    (*corpus.labels)[r] = static_cast<std::int32_t>(c);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", r);
    corpus.ids.emplace_back(id);
  }
  corpus.text = EmbeddingMatrix::FromF64(text);
  corpus.image = EmbeddingMatrix::FromF64(image);
  return corpus;
}

std::size_t CheckContiguousLabels(std::span<const std::int32_t> labels) {
  if (labels.empty()) throw ValidationError("no labels");
  std::int32_t max_label = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      throw ValidationError("negative label at row " + std::to_string(i), i);
    }
    max_label = std::max(max_label, labels[i]);
  }
  std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
  for (auto l : labels) seen[static_cast<std::size_t>(l)] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) {
      throw ValidationError("labels are not contiguous: class " + std::to_string(c) +
                            " is missing below max label " + std::to_string(max_label));
    }
  }
  return seen.size();
}

double HeadLoss(const RowMatrix& x, std::span<const std::int32_t> labels,
                const HeadModel& head) {
  CheckShapes(x, labels, head);
  const RowMatrix z = Logits(x, head);
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const auto row = z.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += lse - row[labels[i]];
  }
  return total / static_cast<double>(z.rows());
}

HeadGradient HeadLossGradient(const RowMatrix& x, std::span<const std::int32_t> labels,
                              const HeadModel& head) {
  CheckShapes(x, labels, head);
  RowMatrix p = Logits(x, head);
  SoftmaxRows(p);
  for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, labels[i]) -= 1.0;
  p /= static_cast<double>(x.rows());
  HeadGradient g;
  g.dW = p.transpose() * x;
  g.db = p.colwise().sum().transpose();
  return g;
}

HeadModel TrainHead(const RowMatrix& vectors, std::span<const std::int32_t> labels,
                    const AdapterPipeline* pipeline, const TrainConfig& hyper,
                    std::uint64_t seed) {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size()) {
    throw ValidationError("labels length " + std::to_string(labels.size()) +
                          " != rows " + std::to_string(vectors.rows()));
  }
  const std::size_t k = CheckContiguousLabels(labels);
  if (!(hyper.learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  if (pipeline != nullptr && pipeline->steps.empty()) pipeline = nullptr;
  if (pipeline != nullptr) {
    const std::size_t pd = ValidatePipeline(*pipeline);
    if (pd != 0 && pd != static_cast<std::size_t>(vectors.cols())) {
      throw ParameterError("pipeline dim does not match training vectors");
    }
  }

  const RowMatrix clean = NormalizedRows(vectors);
  const auto n = static_cast<std::size_t>(clean.rows());
  const Eigen::Index d = clean.cols();
  const std::size_t batch = hyper.batch_size == 0 ? n : std::min(hyper.batch_size, n);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;
  const double total_steps = static_cast<double>(steps_per_epoch * hyper.epochs);

  HeadModel head;
  head.W = Matrix::Zero(static_cast<Eigen::Index>(k), d);
  head.b = Vector::Zero(static_cast<Eigen::Index>(k));

  Matrix m_w = Matrix::Zero(head.W.rows(), d), v_w = m_w;
  Vector m_b = Vector::Zero(head.b.size()), v_b = m_b;

  Rng shuffle_rng(DeriveSeed(seed, "train/shuffle"));
  Rng noise_rng(DeriveSeed(seed, "train/noise"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t step = 0;
  RowMatrix xb;
  std::vector<std::int32_t> yb;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.UniformInt(i)]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t bsz = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(bsz), d);
      yb.resize(bsz);
      for (std::size_t j = 0; j < bsz; ++j) {
        const std::size_t row = order[start + j];
        yb[j] = labels[row];
        if (pipeline != nullptr) {
          // ApplyPipeline normalizes the raw row exactly as `clean` was built.
          const Vector adapted =
              ApplyPipeline(vectors.row(row).transpose(), *pipeline, noise_rng);
          xb.row(static_cast<Eigen::Index>(j)) = adapted.transpose();
        } else {
          xb.row(static_cast<Eigen::Index>(j)) = clean.row(row);
        }
        if (hyper.on_presentation) {
          hyper.on_presentation(epoch, row, xb.row(static_cast<Eigen::Index>(j)).transpose());
        }
      }

      const HeadGradient g = HeadLossGradient(xb, yb, head);
      double lr = hyper.learning_rate;
      if (hyper.linear_decay) lr *= 1.0 - static_cast<double>(step) / total_steps;
      ++step;

      if (hyper.optimizer == Optimizer::kSgd) {
        head.W -= lr * g.dW;
        head.b -= lr * g.db;
        continue;
      }
      const double b1 = hyper.beta1, b2 = hyper.beta2;
      m_w = b1 * m_w + (1.0 - b1) * g.dW;
      v_w = b2 * v_w + (1.0 - b2) * g.dW.cwiseProduct(g.dW);
      m_b = b1 * m_b + (1.0 - b1) * g.db;
      v_b = b2 * v_b + (1.0 - b2) * g.db.cwiseProduct(g.db);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      head.W.array() -=
          lr * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + hyper.adam_eps);
      head.b.array() -=
          lr * (m_b.array() / c1) / ((v_b.array() / c2).sqrt() + hyper.adam_eps);
    }
    head.trained_epochs = epoch + 1;
    head.loss_history.push_back(HeadLoss(clean, labels, head));
  }
  return head;
}

std::vector<std::int32_t> PredictHead(const HeadModel& head, const RowMatrix& vectors) {
  if (head.W.cols() != vectors.cols()) {
    throw ParameterError("head dim does not match input dim");
  }
  const RowMatrix z = Logits(NormalizedRows(vectors), head);
  std::vector<std::int32_t> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      if (z(i, c) > z(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(best);
  }
  return out;
}

double EvaluateHead(const HeadModel& head, const RowMatrix& vectors,
                    std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(vectors.rows()) != labels.size()) {
    throw ParameterError("labels length does not match rows");
  }
  if (labels.empty()) return 0.0;
  const auto pred = PredictHead(head, vectors);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double NumericalGradientCheck(const RowMatrix& x, std::span<const std::int32_t> labels,
                              const HeadModel& head, std::size_t probes, double step,
                              std::uint64_t seed) {
  if (probes < 1) throw ParameterError("probes must be >= 1");
  if (!(step > 0.0)) throw ParameterError("step must be > 0");
  const HeadGradient g = HeadLossGradient(x, labels, head);
  const auto k = head.W.rows();
  const auto d = head.W.cols();
  const auto n_params = static_cast<std::uint64_t>(k * d + k);

  Rng rng(DeriveSeed(seed, "gradcheck"));
  HeadModel probe = head;
  double worst = 0.0;
  for (std::size_t p = 0; p < probes; ++p) {
    const auto idx = static_cast<Eigen::Index>(rng.UniformInt(n_params));
    double* param;
    double analytic;
    if (idx < k * d) {
      param = &probe.W(idx / d, idx % d);
      analytic = g.dW(idx / d, idx % d);
    } else {
      param = &probe.b[idx - k * d];
      analytic = g.db[idx - k * d];
    }
    const double saved = *param;
    *param = saved + step;
    const double up = HeadLoss(x, labels, probe);
    *param = saved - step;
    const double down = HeadLoss(x, labels, probe);
    *param = saved;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
    worst = std::max(worst, std::abs(analytic - fd) / denom);
  }
  return worst;
}

SplitIndices SplitRows(std::size_t rows, std::uint64_t seed) {
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(DeriveSeed(seed, "split"));
  for (std::size_t i = rows; i > 1; --i) std::swap(order[i - 1], order[rng.UniformInt(i)]);
  const std::size_t n_train = rows * 8 / 10;
  const std::size_t n_val = rows / 10;
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

Condition Condition::Fixed(std::string name, AdapterPipeline pipeline) {
  return Condition{std::move(name),
                   [p = std::move(pipeline)](const PairedCorpus&, std::uint64_t) { return p; }};
}

MeanStd Summarize(std::span<const double> values) {
  MeanStd s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

TransferReport CrossModalExperiment(const PairedCorpus& corpus,
                                    std::span<const Condition> conditions,
                                    const TrainConfig& hyper,
                                    std::span<const std::uint64_t> seeds) {
  RequireValid(corpus);
  if (!corpus.labels) throw ValidationError("transfer experiments need labels");
  if (seeds.empty()) throw ParameterError("at least one seed is required");
  if (conditions.empty()) throw ParameterError("at least one condition is required");
  if (corpus.rows() < 10) {
    throw InsufficientDataError("transfer experiments need at least 10 rows");
  }

  const RowMatrix text = NormalizedRows(corpus.text);
  const RowMatrix image = NormalizedRows(corpus.image);
  const auto& labels = *corpus.labels;

  auto gather = [](const RowMatrix& m, const std::vector<std::size_t>& idx) {
    RowMatrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
  };
  auto gather_labels = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::int32_t> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
  };

  TransferReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  report.conditions.resize(conditions.size());
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    report.conditions[c].name = conditions[c].name;
  }

  for (const std::uint64_t seed : seeds) {
    const SplitIndices split = SplitRows(corpus.rows(), seed);
    const PairedCorpus fit_split = corpus.Select(split.val);
    const RowMatrix train_text = gather(text, split.train);
    const RowMatrix test_text = gather(text, split.test);
    const RowMatrix test_image = gather(image, split.test);
    const auto train_labels = gather_labels(split.train);
    const auto test_labels = gather_labels(split.test);

    for (std::size_t c = 0; c < conditions.size(); ++c) {
      const AdapterPipeline pipeline =
          conditions[c].build(fit_split, DeriveSeed(seed, "condition/adapter"));
      const HeadModel head = TrainHead(train_text, train_labels, &pipeline, hyper,
                                       DeriveSeed(seed, "condition/train"));
      TransferCell cell;
      cell.seed = seed;
      cell.train_acc = EvaluateHead(head, train_text, train_labels);
      cell.text_eval_acc = EvaluateHead(head, test_text, test_labels);
      cell.image_eval_acc = EvaluateHead(head, test_image, test_labels);
      report.conditions[c].cells.push_back(cell);
    }
  }

  for (auto& cond : report.conditions) {
    std::vector<double> tr, te, im;
    for (const auto& cell : cond.cells) {
      tr.push_back(cell.train_acc);
      te.push_back(cell.text_eval_acc);
      im.push_back(cell.image_eval_acc);
    }
    cond.train_acc = Summarize(tr);
    cond.text_eval_acc = Summarize(te);
    cond.image_eval_acc = Summarize(im);
  }
  return report;
}

}  // namespace gapkit
