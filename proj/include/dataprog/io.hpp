#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dataprog/core.hpp"

namespace dprog {

using json = nlohmann::json;

/// Which error family a malformed file raises: configuration inputs map to
/// ConfigError, data artifacts to DataError. A missing file is always a
/// ConfigError.
enum class FileKind { config, data };

json read_json_file(const std::filesystem::path& path, FileKind kind);
/// Writes `doc` followed by a newline. `indent < 0` writes compact JSON.
void write_json_file(const std::filesystem::path& path, const json& doc, int indent = 2);
std::string read_text_file(const std::filesystem::path& path, FileKind kind);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// {"labels": [{"name": ..., "id": ...}, ...]}
LabelSpace label_space_from_json(const json& doc);
json to_json(const LabelSpace& space);
LabelSpace read_label_space(const std::filesystem::path& path);

/// One record: {"id", "text", "features"?, "label"?}.
Instance instance_from_json(const json& rec);
json to_json(const Instance& inst);

/// Line-delimited dataset file, one JSON object per non-blank line.
DataSplit read_dataset(const std::filesystem::path& path, SplitRole role);
void write_dataset(const std::filesystem::path& path, const DataSplit& split);

}  // namespace dprog
