#include "dataprog/io.hpp"

#include <fstream>
#include <sstream>

#include "dataprog/errors.hpp"

namespace dprog {
namespace {

[[noreturn]] void fail(FileKind kind, const std::string& msg) {
  if (kind == FileKind::config) throw ConfigError(msg);
  throw DataError(msg);
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path, FileKind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path, FileKind kind) {
  std::string text = read_text_file(path, kind);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(kind, path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc, int indent) {
  write_text_file(path, doc.dump(indent) + "\n");
}

LabelSpace label_space_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array())
    throw ConfigError("label_space: field 'labels' must be an array");
  std::vector<ClassLabel> labels;
  for (const auto& entry : doc["labels"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("id") || !entry["id"].is_number_integer())
      throw ConfigError("label_space: each entry of 'labels' needs string 'name' and integer 'id'");
    labels.push_back({entry["name"].get<std::string>(), entry["id"].get<LabelId>()});
  }
  return LabelSpace(std::move(labels));
}

json to_json(const LabelSpace& space) {
  json labels = json::array();
  for (const auto& l : space.labels()) labels.push_back({{"name", l.name}, {"id", l.id}});
  return {{"labels", labels}};
}

LabelSpace read_label_space(const std::filesystem::path& path) {
  auto doc = read_json_file(path, FileKind::config);
  try {
    return label_space_from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Instance instance_from_json(const json& rec) {
  if (!rec.is_object()) throw DataError("record is not an object");
  Instance inst;
  if (!rec.contains("id")) throw DataError("record missing field 'id'");
  if (rec["id"].is_string())
    inst.id = rec["id"].get<std::string>();
  else if (rec["id"].is_number_integer())
    inst.id = std::to_string(rec["id"].get<long long>());
  else
    throw DataError("field 'id' must be a string");
  if (!rec.contains("text") || !rec["text"].is_string())
    throw DataError("record '" + inst.id + "': field 'text' must be a string");
  inst.text = rec["text"].get<std::string>();
  if (rec.contains("features") && !rec["features"].is_null()) {
    const auto& f = rec["features"];
    if (!f.is_array()) throw DataError("record '" + inst.id + "': field 'features' must be an array");
    std::vector<double> feats;
    feats.reserve(f.size());
    for (const auto& v : f) {
      if (!v.is_number()) throw DataError("record '" + inst.id + "': non-numeric feature");
      feats.push_back(v.get<double>());
    }
    inst.features = std::move(feats);
  }
  if (rec.contains("label") && !rec["label"].is_null()) {
    if (!rec["label"].is_number_integer())
      throw DataError("record '" + inst.id + "': field 'label' must be an integer");
    inst.gold = rec["label"].get<LabelId>();
  }
  return inst;
}

json to_json(const Instance& inst) {
  json rec = {{"id", inst.id}, {"text", inst.text}};
  if (inst.features) rec["features"] = *inst.features;
  if (inst.gold) rec["label"] = *inst.gold;
  return rec;
}

DataSplit read_dataset(const std::filesystem::path& path, SplitRole role) {
  std::string text = read_text_file(path, FileKind::data);
  DataSplit split{role, {}};
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      split.instances.push_back(instance_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed JSON");
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return split;
}

void write_dataset(const std::filesystem::path& path, const DataSplit& split) {
  std::string out;
  for (const auto& inst : split.instances) {
    out += to_json(inst).dump();
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace dprog
