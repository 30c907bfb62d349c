#include "gapkit/adapter_io.hpp"

#include <array>
#include <bit>

#include "gapkit/errors.hpp"

namespace gapkit {
namespace {

using nlohmann::json;

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int DecodeChar(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

Vector VectorField(const json& doc, const char* key, std::size_t dim) {
  const auto values = DecodeF64Array(doc.at(key).get<std::string>());
  if (values.size() != dim) {
    throw ValidationError(std::string("adapter field '") + key + "' has " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(dim));
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(dim));
}

Matrix MatrixField(const json& doc, const char* key, std::size_t dim) {
  const auto values = DecodeF64Array(doc.at(key).get<std::string>());
  if (values.size() != dim * dim) {
    throw ValidationError(std::string("adapter field '") + key + "' has " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(dim * dim));
  }
  const auto d = static_cast<Eigen::Index>(dim);
  return Eigen::Map<const RowMatrix>(values.data(), d, d);
}

std::string EncodeVector(const Vector& v) {
  return EncodeF64Array({v.data(), static_cast<std::size_t>(v.size())});
}

std::string EncodeMatrix(const Matrix& m) {
  const RowMatrix rm = m;
  return EncodeF64Array({rm.data(), static_cast<std::size_t>(rm.size())});
}

}  // namespace

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ValidationError("base64 length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[k] = 0;
        ++pad;
      } else {
        if (pad > 0) throw ValidationError("malformed base64 padding");
        q[k] = DecodeChar(c);
        if (q[k] < 0) throw ValidationError("invalid base64 character");
      }
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string EncodeF64Array(std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double d : values) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return Base64Encode(bytes);
}

std::vector<double> DecodeF64Array(std::string_view text) {
  const auto bytes = Base64Decode(text);
  if (bytes.size() % 8 != 0) throw ValidationError("f64 array byte length not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[i * 8 + k]) << (8 * k);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json AdapterToJson(const Adapter& a) {
  ValidateAdapter(a);
  json doc = {{"format", "gapkit.adapter"}, {"version", 1}, {"type", AdapterKindName(a)}};
  if (const auto* g = std::get_if<GaussianNoise>(&a)) {
    doc["w"] = g->w;
  } else if (const auto* s = std::get_if<ConstantShift>(&a)) {
    doc["dim"] = s->shift.size();
    doc["shift"] = EncodeVector(s->shift);
  } else if (const auto* m = std::get_if<LinearMap>(&a)) {
    doc["dim"] = m->b.size();
    doc["W"] = EncodeMatrix(m->W);
    doc["b"] = EncodeVector(m->b);
  } else if (const auto* c = std::get_if<CovarianceNoise>(&a)) {
    doc["dim"] = c->mu.size();
    doc["mu"] = EncodeVector(c->mu);
    doc["chol_L"] = EncodeMatrix(c->chol_L);
    doc["scale"] = c->scale;
  }
  return doc;
}

Adapter AdapterFromJson(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "gapkit.adapter") {
      throw ValidationError("not a gapkit.adapter document");
    }
    if (doc.value("version", 0) != 1) throw ValidationError("unsupported adapter version");
    const auto type = doc.at("type").get<std::string>();
    Adapter out;
    if (type == "gaussian_noise") {
      out = GaussianNoise{doc.at("w").get<double>()};
    } else {
      const auto dim = doc.at("dim").get<std::size_t>();
      if (type == "constant_shift") {
        out = ConstantShift{VectorField(doc, "shift", dim)};
      } else if (type == "linear_map") {
        out = LinearMap{MatrixField(doc, "W", dim), VectorField(doc, "b", dim)};
      } else if (type == "covariance_noise") {
        out = CovarianceNoise{VectorField(doc, "mu", dim),
                              MatrixField(doc, "chol_L", dim),
                              doc.at("scale").get<double>()};
      } else {
        throw ValidationError("unknown adapter type '" + type + "'");
      }
    }
    ValidateAdapter(out);
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed adapter document: ") + e.what());
  }
}

nlohmann::json PipelineToJson(const AdapterPipeline& p) {
  ValidatePipeline(p);
  json steps = json::array();
  for (const auto& s : p.steps) steps.push_back(AdapterToJson(s));
  return {{"format", "gapkit.pipeline"}, {"version", 1}, {"steps", steps}};
}

AdapterPipeline PipelineFromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("adapter document must be a JSON object");
  AdapterPipeline p;
  if (doc.value("format", "") == "gapkit.pipeline") {
    if (doc.value("version", 0) != 1) throw ValidationError("unsupported pipeline version");
    if (!doc.contains("steps") || !doc["steps"].is_array()) {
      throw ValidationError("pipeline document needs a 'steps' array");
    }
    for (const auto& s : doc["steps"]) p.steps.push_back(AdapterFromJson(s));
  } else {
    p.steps.push_back(AdapterFromJson(doc));
  }
  ValidatePipeline(p);
  return p;
}

AdapterPipeline LoadPipeline(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  json doc = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw ValidationError("'" + path.string() + "' is not valid JSON");
  return PipelineFromJson(doc);
}

}  // namespace gapkit
