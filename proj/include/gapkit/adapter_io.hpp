#pragma once

// JSON documents for fitted adapters. Numeric arrays are stored as base64 of
// little-endian f64 values (matrices row-major), so a fitted adapter reloads
// bit-exactly:
//
//   {"format": "gapkit.adapter", "version": 1, "type": "linear_map",
//    "dim": 64, "W": "<base64>", "b": "<base64>"}
//
// Pipelines wrap a list of such documents:
//
//   {"format": "gapkit.pipeline", "version": 1, "steps": [ ... ]}

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gapkit/adapters.hpp"

namespace gapkit {

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(std::string_view text);

std::string EncodeF64Array(std::span<const double> values);
std::vector<double> DecodeF64Array(std::string_view text);

nlohmann::json AdapterToJson(const Adapter& a);
Adapter AdapterFromJson(const nlohmann::json& doc);

nlohmann::json PipelineToJson(const AdapterPipeline& p);
// Accepts a pipeline document or a single adapter document.
AdapterPipeline PipelineFromJson(const nlohmann::json& doc);

AdapterPipeline LoadPipeline(const std::filesystem::path& path);

}  // namespace gapkit
