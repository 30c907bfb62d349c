#include "gapkit/conditions.hpp"

#include <sstream>

#include "gapkit/adapter_io.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/rng.hpp"

namespace gapkit {
namespace {

std::vector<std::string> Split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double ParseNumber(const std::string& token, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !(v >= 0.0)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParameterError("bad numeric argument in condition step '" + token + "'");
  }
}

using StepBuilder =
    std::function<void(AdapterPipeline&, const PairedCorpus&, std::uint64_t)>;

StepBuilder ParseStep(const std::string& token, std::size_t index) {
  const auto colon = token.find(':');
  const std::string head = token.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? token.substr(colon + 1) : "";
  auto require_arg = [&] {
    if (!has_arg) throw ParameterError("condition step '" + token + "' needs ':<value>'");
  };
  auto forbid_arg = [&] {
    if (has_arg) throw ParameterError("condition step '" + head + "' takes no argument");
  };

  if (head == "noise") {
    require_arg();
    const double w = ParseNumber(token, arg);
    return [w](AdapterPipeline& p, const PairedCorpus&, std::uint64_t) {
      p.steps.push_back(GaussianNoise{w});
    };
  }
  if (head == "mean") {
    forbid_arg();
    return [](AdapterPipeline& p, const PairedCorpus& fit, std::uint64_t) {
      p.steps.push_back(FitMeanShift(fit));
    };
  }
  if (head == "neg_mean") {
    forbid_arg();
    return [](AdapterPipeline& p, const PairedCorpus& fit, std::uint64_t) {
      ConstantShift s = FitMeanShift(fit);
      s.shift = -s.shift;
      p.steps.push_back(std::move(s));
    };
  }
  if (head == "rng") {
    require_arg();
    const double m = ParseNumber(token, arg);
    return [m, index](AdapterPipeline& p, const PairedCorpus& fit, std::uint64_t seed) {
      Rng rng(DeriveSeed(seed, "condition/random_shift", index));
      p.steps.push_back(RandomShift(fit.dim(), m, rng));
    };
  }
  if (head == "linear") {
    const double lambda = has_arg ? ParseNumber(token, arg) : kDefaultRidgeLambda;
    return [lambda](AdapterPipeline& p, const PairedCorpus& fit, std::uint64_t) {
      p.steps.push_back(FitLinear(fit, lambda));
    };
  }
  if (head == "cov" || head == "cov_noise") {
    const double scale = has_arg ? ParseNumber(token, arg) : 1.0;
    return [scale](AdapterPipeline& p, const PairedCorpus& fit, std::uint64_t) {
      p.steps.push_back(FitCovarianceNoise(fit, kDefaultCholeskyJitter, scale));
    };
  }
  if (head == "file") {
    require_arg();
    const AdapterPipeline loaded = LoadPipeline(arg);
    return [loaded](AdapterPipeline& p, const PairedCorpus&, std::uint64_t) {
      p.steps.insert(p.steps.end(), loaded.steps.begin(), loaded.steps.end());
    };
  }
  throw ParameterError("unknown condition step '" + token + "'");
}

}  // namespace

Condition ParseCondition(const std::string& text) {
  if (text == "none") {
    return Condition::Fixed("none", AdapterPipeline{});
  }
  std::vector<StepBuilder> steps;
  const auto tokens = Split(text, '+');
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) throw ParameterError("empty step in condition '" + text + "'");
    if (tokens[i] == "none") {
      throw ParameterError("'none' cannot be combined with other steps");
    }
    steps.push_back(ParseStep(tokens[i], i));
  }
  if (steps.empty()) throw ParameterError("empty condition");
  return Condition{text, [steps](const PairedCorpus& fit, std::uint64_t seed) {
                     AdapterPipeline p;
                     for (const auto& s : steps) s(p, fit, seed);
                     return p;
                   }};
}

std::vector<Condition> ParseConditionList(const std::string& text) {
  std::vector<Condition> out;
  for (const auto& part : Split(text, ',')) {
    if (part.empty()) throw ParameterError("empty entry in condition list '" + text + "'");
    out.push_back(ParseCondition(part));
  }
  if (out.empty()) throw ParameterError("no conditions given");
  return out;
}

}  // namespace gapkit
