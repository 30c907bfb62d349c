#pragma once

// JSON, aligned-text and CSV renderings of every report type, plus the JSON
// schema for synthetic corpus specs and training configs.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gapkit/analysis.hpp"
#include "gapkit/embedstore.hpp"
#include "gapkit/geometry.hpp"
#include "gapkit/promptgen.hpp"
#include "gapkit/transferlab.hpp"

namespace gapkit {

using nlohmann::json;

json ToJson(const GapReport& r, bool include_vector = false);
json ToJson(const PcaReport& r, bool include_components = false);
json ToJson(const CorrelationReport& r);
json ToJson(const std::vector<SensitivityRow>& rows);
json ToJson(const TransferReport& r);
json ToJson(const KeywordStats& s);
json ToJson(const ValidationReport& r);
json ToJson(const SyntheticCorpusSpec& s);
json ToJson(const TrainConfig& c);

// Missing keys keep their defaults; unknown keys are rejected.
SyntheticCorpusSpec SyntheticSpecFromJson(const json& doc);
TrainConfig TrainConfigFromJson(const json& doc);

// A config file holds {"corpus": {...}, "train": {...}}; either part may be
// absent.
struct ExperimentConfig {
  SyntheticCorpusSpec corpus;
  TrainConfig train;
};
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

std::string GapTable(const GapReport& r);
std::string PcaTable(const PcaReport& r);
std::string CorrelationTable(const CorrelationReport& r);
std::string SensitivityTable(const std::vector<SensitivityRow>& rows);
std::string TransferTable(const TransferReport& r);

// component,explained_variance,explained_ratio,cumulative_ratio
std::string PcaCsv(const PcaReport& r);
// condition,seed,train_acc,text_eval_acc,image_eval_acc
std::string TransferCsv(const TransferReport& r);

// Canonical JSON text: 2-space indent, trailing newline.
std::string Dump(const json& doc);

}  // namespace gapkit
