#include "gapkit/embedstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

class ByteWriter {
 public:
  void Bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void Uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void F32(float f) { Uint(std::bit_cast<std::uint32_t>(f)); }
  void Str(const std::string& s) {
    if (s.size() > UINT32_MAX) throw ValidationError("string longer than 4 GiB");
    Uint(static_cast<std::uint32_t>(s.size()));
    Bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> Take() { return std::move(out_); }
  void Reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  void Need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) {
      throw CorruptionError(std::string("truncated payload while reading ") +
                            what + " at byte offset " + std::to_string(pos_));
    }
  }
  template <typename U>
  U Uint(const char* what) {
    Need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }
  float F32(const char* what) {
    return std::bit_cast<float>(Uint<std::uint32_t>(what));
  }
  std::string Str(const char* what) {
    const auto n = Uint<std::uint32_t>(what);
    Need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

double SquaredNorm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void CheckMatrixBlock(const EmbeddingMatrix& m, Block block,
                      std::vector<ValidationIssue>& issues) {
  using Kind = ValidationIssue::Kind;
  if (m.data().size() != m.rows() * m.dim()) {
    issues.push_back({Kind::kLengthMismatch, block, std::nullopt,
                      std::string(BlockName(block)) +
                          " data length differs from rows x dim"});
    return;
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool finite = true;
    double sq = 0.0;
    for (float f : m.row(i)) {
      if (!std::isfinite(f)) finite = false;
      sq += static_cast<double>(f) * static_cast<double>(f);
    }
    if (!finite) {
      issues.push_back({Kind::kNonFinite, block, i,
                        std::string("non-finite value in ") + BlockName(block) +
                            " row " + std::to_string(i)});
    } else if (std::sqrt(sq) < kZeroNormThreshold) {
      issues.push_back({Kind::kNearZeroRow, block, i,
                        std::string("near-zero ") + BlockName(block) + " row " +
                            std::to_string(i)});
    }
  }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim,
                                 std::vector<float> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  if (data_.size() != rows_ * dim_) {
    throw ValidationError("matrix data length " + std::to_string(data_.size()) +
                          " != rows x dim = " + std::to_string(rows_ * dim_));
  }
}

EmbeddingMatrix EmbeddingMatrix::FromF64(const RowMatrix& m) {
  EmbeddingMatrix out(static_cast<std::size_t>(m.rows()),
                      static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(i, j) = static_cast<float>(m(i, j));
    }
  }
  return out;
}

RowMatrix EmbeddingMatrix::ToF64() const {
  RowMatrix out(rows_, dim_);
  for (std::size_t k = 0; k < data_.size(); ++k) {
    out.data()[k] = static_cast<double>(data_[k]);
  }
  return out;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.rows_ != b.rows_ || a.dim_ != b.dim_) return false;
  // Bit-level comparison: NaN payloads and signed zeros count.
  return a.data_.size() == b.data_.size() &&
         std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(float)) == 0;
}

PairedCorpus PairedCorpus::Select(std::span<const std::size_t> indices) const {
  PairedCorpus out;
  const std::size_t d = dim();
  out.text = EmbeddingMatrix(indices.size(), d);
  out.image = EmbeddingMatrix(indices.size(), d);
  out.ids.reserve(indices.size());
  if (labels) out.labels.emplace().reserve(indices.size());
  if (captions) out.captions.emplace().reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    std::memcpy(out.text.row(k).data(), text.row(i).data(), d * sizeof(float));
    std::memcpy(out.image.row(k).data(), image.row(i).data(), d * sizeof(float));
    out.ids.push_back(ids[i]);
    if (labels) out.labels->push_back((*labels)[i]);
    if (captions) out.captions->push_back((*captions)[i]);
  }
  return out;
}

bool operator==(const PairedCorpus& a, const PairedCorpus& b) {
  return a.text == b.text && a.image == b.image && a.ids == b.ids &&
         a.labels == b.labels && a.captions == b.captions;
}

const char* BlockName(Block b) noexcept {
  switch (b) {
    case Block::kText: return "text";
    case Block::kImage: return "image";
    case Block::kIds: return "ids";
    case Block::kLabels: return "labels";
    case Block::kCaptions: return "captions";
    case Block::kCorpus: return "corpus";
  }
  return "?";
}

const char* IssueKindName(ValidationIssue::Kind k) noexcept {
  using Kind = ValidationIssue::Kind;
  switch (k) {
    case Kind::kPairingMismatch: return "pairing_mismatch";
    case Kind::kDimensionMismatch: return "dimension_mismatch";
    case Kind::kEmpty: return "empty";
    case Kind::kNonFinite: return "non_finite";
    case Kind::kNearZeroRow: return "near_zero_row";
    case Kind::kDuplicateId: return "duplicate_id";
    case Kind::kLengthMismatch: return "length_mismatch";
  }
  return "?";
}

ValidationReport ValidateCorpus(const PairedCorpus& c) {
  using Kind = ValidationIssue::Kind;
  ValidationReport report;
  auto& issues = report.issues;

  if (c.text.rows() != c.image.rows() || c.text.rows() != c.ids.size()) {
    issues.push_back({Kind::kPairingMismatch, Block::kCorpus, std::nullopt,
                      "row counts differ: text=" + std::to_string(c.text.rows()) +
                          " image=" + std::to_string(c.image.rows()) +
                          " ids=" + std::to_string(c.ids.size())});
  }
  if (c.text.dim() != c.image.dim()) {
    issues.push_back({Kind::kDimensionMismatch, Block::kCorpus, std::nullopt,
                      "dims differ: text=" + std::to_string(c.text.dim()) +
                          " image=" + std::to_string(c.image.dim())});
  }
  if (c.text.rows() == 0 || c.text.dim() == 0) {
    issues.push_back({Kind::kEmpty, Block::kCorpus, std::nullopt,
                      "corpus must have rows >= 1 and dim >= 1"});
  }
  CheckMatrixBlock(c.text, Block::kText, issues);
  CheckMatrixBlock(c.image, Block::kImage, issues);

  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    auto [it, inserted] = seen.emplace(c.ids[i], i);
    if (!inserted) {
      issues.push_back({Kind::kDuplicateId, Block::kIds, i,
                        "id '" + c.ids[i] + "' at row " + std::to_string(i) +
                            " duplicates row " + std::to_string(it->second)});
    }
  }
  if (c.labels && c.labels->size() != c.text.rows()) {
    issues.push_back({Kind::kLengthMismatch, Block::kLabels, std::nullopt,
                      "labels length " + std::to_string(c.labels->size()) +
                          " != rows " + std::to_string(c.text.rows())});
  }
  if (c.captions && c.captions->size() != c.text.rows()) {
    issues.push_back({Kind::kLengthMismatch, Block::kCaptions, std::nullopt,
                      "captions length " + std::to_string(c.captions->size()) +
                          " != rows " + std::to_string(c.text.rows())});
  }
  return report;
}

void RequireValid(const PairedCorpus& corpus) {
  auto report = ValidateCorpus(corpus);
  if (!report.ok()) {
    const auto& first = report.issues.front();
    std::string msg = "invalid corpus: " + first.message;
    if (report.issues.size() > 1) {
      msg += " (+" + std::to_string(report.issues.size() - 1) + " more)";
    }
    throw ValidationError(msg, first.row);
  }
}

std::vector<std::uint8_t> EncodeCorpus(const PairedCorpus& c) {
  RequireValid(c);
  if (c.dim() > UINT32_MAX) throw ValidationError("dim exceeds u32");

  std::uint16_t flags = 0;
  if (c.labels) flags |= kFlagLabels;
  if (c.captions) flags |= kFlagCaptions;

  ByteWriter w;
  w.Reserve(kHeaderSize + 2 * c.text.data().size() * 4 + c.rows() * 8);
  w.Bytes(kCorpusMagic, 4);
  w.Uint<std::uint16_t>(kCorpusVersion);
  w.Uint<std::uint16_t>(flags);
  w.Uint<std::uint32_t>(static_cast<std::uint32_t>(c.dim()));
  w.Uint<std::uint64_t>(c.rows());
  for (float f : c.text.data()) w.F32(f);
  for (float f : c.image.data()) w.F32(f);
  if (c.labels) {
    for (std::int32_t l : *c.labels) w.Uint(static_cast<std::uint32_t>(l));
  }
  if (c.captions) {
    for (const auto& s : *c.captions) w.Str(s);
  }
  for (const auto& s : c.ids) w.Str(s);
  return w.Take();
}

CorpusHeader DecodeHeader(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) {
    throw FormatError("file shorter than the 20-byte header");
  }
  if (std::memcmp(bytes.data(), kCorpusMagic, 4) != 0) {
    throw FormatError("bad magic '" +
                      std::string(reinterpret_cast<const char*>(bytes.data()), 4) +
                      "', expected 'CLSE'");
  }
  ByteReader r(bytes.subspan(4));
  CorpusHeader h;
  h.version = r.Uint<std::uint16_t>("version");
  h.flags = r.Uint<std::uint16_t>("flags");
  h.dim = r.Uint<std::uint32_t>("dim");
  h.rows = r.Uint<std::uint64_t>("rows");
  if (h.version != kCorpusVersion) {
    throw FormatError("unsupported version " + std::to_string(h.version));
  }
  if ((h.flags & ~(kFlagLabels | kFlagCaptions)) != 0) {
    throw FormatError("unknown flag bits set: " + std::to_string(h.flags));
  }
  if (h.dim < 1) throw FormatError("dim must be >= 1");
  if (h.rows < 1) throw FormatError("rows must be >= 1");
  return h;
}

PairedCorpus DecodeCorpus(std::span<const std::uint8_t> bytes,
                          DecodeOptions options) {
  const CorpusHeader h = DecodeHeader(bytes);
  ByteReader r(bytes.subspan(kHeaderSize));

  // Reject impossible sizes before allocating.
  const long double block_bytes =
      static_cast<long double>(h.rows) * h.dim * 4.0L;
  if (2.0L * block_bytes > static_cast<long double>(r.remaining())) {
    throw CorruptionError("truncated payload: header declares " +
                          std::to_string(h.rows) + " x " + std::to_string(h.dim) +
                          " but only " + std::to_string(r.remaining()) +
                          " payload bytes present");
  }
  const std::size_t rows = static_cast<std::size_t>(h.rows);
  const std::size_t dim = h.dim;

  PairedCorpus c;
  auto read_block = [&](const char* what) {
    std::vector<float> data(rows * dim);
    for (float& f : data) f = r.F32(what);
    return EmbeddingMatrix(rows, dim, std::move(data));
  };
  c.text = read_block("text block");
  c.image = read_block("image block");
  if (h.flags & kFlagLabels) {
    auto& labels = c.labels.emplace(rows);
    for (auto& l : labels) {
      l = static_cast<std::int32_t>(r.Uint<std::uint32_t>("labels block"));
    }
  }
  if (h.flags & kFlagCaptions) {
    auto& caps = c.captions.emplace();
    caps.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) caps.push_back(r.Str("captions block"));
  }
  c.ids.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) c.ids.push_back(r.Str("ids block"));
  if (r.remaining() != 0) {
    throw CorruptionError(std::to_string(r.remaining()) +
                          " trailing bytes after ids block");
  }

  if (options.validate) RequireValid(c);
  return c;
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

PairedCorpus LoadCorpus(const std::filesystem::path& path,
                        DecodeOptions options) {
  return DecodeCorpus(ReadFileBytes(path), options);
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path.string() + "'");
  }
}

void WriteFileAtomic(const std::filesystem::path& path, const std::string& text) {
  WriteFileAtomic(path, std::span<const std::uint8_t>(
                            reinterpret_cast<const std::uint8_t*>(text.data()),
                            text.size()));
}

void SaveCorpus(const PairedCorpus& corpus, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeCorpus(corpus));
}

std::filesystem::path SidecarPath(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p += ".meta.json";
  return p;
}

void WriteSidecar(const std::filesystem::path& corpus_path,
                  const std::string& json_text) {
  WriteFileAtomic(SidecarPath(corpus_path), json_text);
}

void NormalizeInPlace(std::span<double> v, std::optional<std::size_t> row) {
  const double n = std::sqrt(SquaredNorm(v));
  if (!(n >= kZeroNormThreshold)) throw DegenerateVectorError(row);
  for (double& x : v) x /= n;
}

Vector Normalized(const Vector& v) {
  Vector out = v;
  NormalizeInPlace({out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

RowMatrix NormalizedRows(const RowMatrix& m) {
  RowMatrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    NormalizeInPlace({out.row(i).data(), static_cast<std::size_t>(out.cols())},
                     static_cast<std::size_t>(i));
  }
  return out;
}

RowMatrix NormalizedRows(const EmbeddingMatrix& m) {
  return NormalizedRows(m.ToF64());
}

EmbeddingMatrix NormalizeRows(const EmbeddingMatrix& m) {
  return EmbeddingMatrix::FromF64(NormalizedRows(m));
}

}  // namespace gapkit
