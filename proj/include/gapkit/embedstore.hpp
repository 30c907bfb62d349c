#pragma once

// Paired text/image embedding corpora and the "CLSE" binary format.
//
// File layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "CLSE"
//   4       2     version (u16, = 1)
//   6       2     flags (u16; bit 0 labels present, bit 1 captions present)
//   8       4     dim (u32, >= 1)
//   12      8     rows (u64, >= 1)
//   20      ...   text block: rows * dim f32, row-major
//                 image block: rows * dim f32, row-major
//                 labels block (flag bit 0): rows * i32
//                 captions block (flag bit 1): rows * (u32 byte length, UTF-8)
//                 ids block (always): rows * (u32 byte length, UTF-8)
//
// Nothing may follow the ids block.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gapkit {

// Row-major dense f64 matrix used for all internal computation.
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr char kCorpusMagic[4] = {'C', 'L', 'S', 'E'};
inline constexpr std::uint16_t kCorpusVersion = 1;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::uint16_t kFlagLabels = 1u << 0;
inline constexpr std::uint16_t kFlagCaptions = 1u << 1;
inline constexpr double kZeroNormThreshold = 1e-12;

// Dense row-major f32 storage matrix.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim);
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  // Rounds each f64 entry to f32.
  static EmbeddingMatrix FromF64(const RowMatrix& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<float>& data() const noexcept { return data_; }
  std::vector<float>& mutable_data() noexcept { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  float operator()(std::size_t i, std::size_t j) const {
    return data_[i * dim_ + j];
  }
  float& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }

  RowMatrix ToF64() const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&);

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

struct PairedCorpus {
  EmbeddingMatrix text;
  EmbeddingMatrix image;
  std::vector<std::string> ids;
  std::optional<std::vector<std::int32_t>> labels;
  std::optional<std::vector<std::string>> captions;

  std::size_t rows() const noexcept { return text.rows(); }
  std::size_t dim() const noexcept { return text.dim(); }

  // Sub-corpus holding the given rows, in the given order.
  PairedCorpus Select(std::span<const std::size_t> indices) const;

  friend bool operator==(const PairedCorpus&, const PairedCorpus&);
};

struct CorpusHeader {
  std::uint16_t version = kCorpusVersion;
  std::uint16_t flags = 0;
  std::uint32_t dim = 0;
  std::uint64_t rows = 0;
};

enum class Block { kText, kImage, kIds, kLabels, kCaptions, kCorpus };

const char* BlockName(Block b) noexcept;

struct ValidationIssue {
  enum class Kind {
    kPairingMismatch,
    kDimensionMismatch,
    kEmpty,
    kNonFinite,
    kNearZeroRow,
    kDuplicateId,
    kLengthMismatch,
  };
  Kind kind;
  Block block;
  std::optional<std::size_t> row;
  std::string message;
};

const char* IssueKindName(ValidationIssue::Kind k) noexcept;

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
};

// Lists every violated corpus invariant; never throws.
ValidationReport ValidateCorpus(const PairedCorpus& corpus);

// Throws ValidationError describing the first issue when the corpus is invalid.
void RequireValid(const PairedCorpus& corpus);

// Serialized form of a corpus. Throws ValidationError for invalid corpora.
std::vector<std::uint8_t> EncodeCorpus(const PairedCorpus& corpus);

struct DecodeOptions {
  // When false, the payload is parsed but corpus invariants are not checked
  // (used by the `validate` command so it can report problems).
  bool validate = true;
};

// Inverse of EncodeCorpus. Throws FormatError, CorruptionError or
// ValidationError (with the offending row for non-finite values).
PairedCorpus DecodeCorpus(std::span<const std::uint8_t> bytes,
                          DecodeOptions options = {});

CorpusHeader DecodeHeader(std::span<const std::uint8_t> bytes);

PairedCorpus LoadCorpus(const std::filesystem::path& path,
                        DecodeOptions options = {});
void SaveCorpus(const PairedCorpus& corpus, const std::filesystem::path& path);

// `<corpus>.meta.json`, next to the corpus file.
std::filesystem::path SidecarPath(const std::filesystem::path& corpus_path);

// Writes free-form provenance JSON text next to the corpus. The library never
// reads it back.
void WriteSidecar(const std::filesystem::path& corpus_path,
                  const std::string& json_text);

// Writes bytes to `path` via a temporary file and rename.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const std::uint8_t> bytes);
void WriteFileAtomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);

// Unit-normalizes one f64 vector in place. Throws DegenerateVectorError
// (carrying `row` when given) for norms below 1e-12.
void NormalizeInPlace(std::span<double> v,
                      std::optional<std::size_t> row = std::nullopt);
Vector Normalized(const Vector& v);

// f64 copy of `m` with every row scaled to unit length.
RowMatrix NormalizedRows(const EmbeddingMatrix& m);
RowMatrix NormalizedRows(const RowMatrix& m);

// Unit-normalizes every row (computed in f64, stored back as f32).
EmbeddingMatrix NormalizeRows(const EmbeddingMatrix& m);

}  // namespace gapkit
