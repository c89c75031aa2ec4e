#pragma once

#include <filesystem>

#include <json.hpp>

#include "unlearn/classifier.hpp"

namespace unlearn {

// Checkpoint layout (all integers little-endian):
//
//   bytes 0..7    magic "UGANCKPT"
//   bytes 8..11   format version (u32, currently 1)
//   bytes 12..19  header length H (u64)
//   next H bytes  UTF-8 JSON header: spec, parameter_count, dtype ("f64"),
//                 fingerprint (hex SHA-256 of the parameter bytes), train_meta
//   remainder     parameter_count IEEE-754 binary64 values
//
// Loading recomputes the fingerprint and rejects a file whose parameters do
// not match it.

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json train_meta_to_json(const TrainMeta& meta);
TrainMeta train_meta_from_json(const nlohmann::json& j);

}  // namespace unlearn
