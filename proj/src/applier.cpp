#include "dataprog/applier.hpp"

#include <exception>
#include <limits>
#include <mutex>

#include "dataprog/errors.hpp"

namespace dprog {

LabeledMatrices apply(std::span<const LfPtr> rules, const DataSplit& data, const LabelSpace& space,
                      Exec exec) {
  std::vector<LfInfo> lfs;
  lfs.reserve(rules.size());
  for (const auto& r : rules) {
    if (!space.contains(r->target()))
      throw ConfigError("rule '" + r->name() + "': target is not in the label space");
    lfs.push_back({r->name(), r->target(), r->is_continuous()});
  }
  const std::size_t n = data.size();
  const std::size_t m = rules.size();
  std::vector<LabelId> votes(n * m, kAbstain);
  std::vector<double> scores(n * m, std::numeric_limits<double>::quiet_NaN());

  auto eval_row = [&](std::size_t i) {
    const auto& inst = data.instances[i];
    for (std::size_t j = 0; j < m; ++j) {
      Vote v = rules[j]->evaluate(inst);
      if (v.fired() && v.label != rules[j]->target())
        throw DataError("rule '" + rules[j]->name() + "' emitted a label other than its target");
      votes[i * m + j] = v.label;
      if (lfs[j].continuous && v.score) scores[i * m + j] = *v.score;
    }
  };

  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) eval_row(i);
  } else {
    // First failing row (lowest index) wins so errors match the serial path.
    std::exception_ptr error;
    std::size_t error_row = n;
    std::mutex mu;
    const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      try {
        eval_row(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard lock(mu);
        if (static_cast<std::size_t>(i) < error_row) {
          error_row = static_cast<std::size_t>(i);
          error = std::current_exception();
        }
      }
    }
    if (error) std::rethrow_exception(error);
  }
  return {VoteMatrix(space, std::move(lfs), n, std::move(votes)),
          ScoreMatrix(n, m, std::move(scores))};
}

std::string_view to_string(Orientation o) {
  return o == Orientation::instances ? "instances" : "lfs";
}

Orientation parse_orientation(std::string_view text) {
  if (text == "instances") return Orientation::instances;
  if (text == "lfs") return Orientation::lfs;
  throw ConfigError("orientation must be 'instances' or 'lfs' (got '" + std::string(text) + "')");
}

// ---------------------------------------------------------------------------

json matrix_to_json(const MatrixFile& file) {
  const auto& vm = file.votes;
  const auto& sm = file.scores;
  check_aligned(vm, sm);
  const std::size_t n = vm.num_rows();
  const std::size_t m = vm.num_lfs();

  json names = json::array(), targets = json::array(), cont = json::array();
  for (const auto& lf : vm.lfs()) {
    names.push_back(lf.name);
    targets.push_back(lf.target);
    cont.push_back(lf.continuous);
  }

  const bool by_instance = file.orientation == Orientation::instances;
  const std::size_t outer = by_instance ? n : m;
  const std::size_t inner = by_instance ? m : n;
  json votes = json::array(), scores = json::array();
  for (std::size_t a = 0; a < outer; ++a) {
    json vrow = json::array(), srow = json::array();
    for (std::size_t b = 0; b < inner; ++b) {
      std::size_t i = by_instance ? a : b;
      std::size_t j = by_instance ? b : a;
      vrow.push_back(vm(i, j));
      if (auto s = sm.get(i, j))
        srow.push_back(*s);
      else
        srow.push_back(nullptr);
    }
    votes.push_back(std::move(vrow));
    scores.push_back(std::move(srow));
  }

  json doc = {{"version", kMatrixFormatVersion},
              {"orientation", std::string(to_string(file.orientation))},
              {"label_space", to_json(vm.label_space())},
              {"n", n},
              {"m", m},
              {"lf_names", names},
              {"lf_targets", targets},
              {"lf_is_continuous", cont},
              {"votes", votes},
              {"scores", scores}};
  if (file.has_gold()) {
    if (file.gold.size() != n) throw DataError("gold: length does not match row count");
    json gold = json::array();
    for (LabelId g : file.gold)
      if (g == kAbstain)
        gold.push_back(nullptr);
      else
        gold.push_back(g);
    doc["gold"] = gold;
  }
  if (!file.ids.empty()) {
    if (file.ids.size() != n) throw DataError("ids: length does not match row count");
    doc["ids"] = file.ids;
  }
  return doc;
}

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw DataError("matrix file: missing field '" + std::string(name) + "'");
  return doc[name];
}

const json& array_field(const json& doc, const char* name, std::size_t expected_len) {
  const auto& a = field(doc, name);
  if (!a.is_array() || a.size() != expected_len)
    throw DataError("matrix file: field '" + std::string(name) + "' must be an array of length " +
                    std::to_string(expected_len));
  return a;
}

}  // namespace

MatrixFile matrix_from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("matrix file: not an object");
  const auto& version = field(doc, "version");
  if (!version.is_number_integer() || version.get<int>() != kMatrixFormatVersion)
    throw DataError("matrix file: unsupported version (field 'version')");

  MatrixFile file;
  const auto& orient = field(doc, "orientation");
  if (!orient.is_string()) throw DataError("matrix file: field 'orientation' must be a string");
  try {
    file.orientation = parse_orientation(orient.get<std::string>());
  } catch (const ConfigError& e) {
    throw DataError(std::string("matrix file: field 'orientation': ") + e.what());
  }

  LabelSpace space;
  try {
    space = label_space_from_json(field(doc, "label_space"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("matrix file: field 'label_space': ") + e.what());
  }

  const auto& names = field(doc, "lf_names");
  if (!names.is_array()) throw DataError("matrix file: field 'lf_names' must be an array");
  const std::size_t m = names.size();
  const auto& targets = array_field(doc, "lf_targets", m);
  const auto& cont = array_field(doc, "lf_is_continuous", m);
  std::vector<LfInfo> lfs(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!names[j].is_string()) throw DataError("matrix file: field 'lf_names' must hold strings");
    if (!targets[j].is_number_integer())
      throw DataError("matrix file: field 'lf_targets' must hold integers");
    if (!cont[j].is_boolean())
      throw DataError("matrix file: field 'lf_is_continuous' must hold booleans");
    lfs[j] = {names[j].get<std::string>(), targets[j].get<LabelId>(), cont[j].get<bool>()};
    if (!space.contains(lfs[j].target))
      throw DataError("matrix file: field 'lf_targets': label out of range");
  }

  const auto& votes = field(doc, "votes");
  if (!votes.is_array()) throw DataError("matrix file: field 'votes' must be an array");
  const bool by_instance = file.orientation == Orientation::instances;
  std::size_t n;
  if (by_instance) {
    n = votes.size();
  } else {
    if (votes.size() != m) throw DataError("matrix file: field 'votes' must have m rows");
    n = m == 0 ? 0 : votes[0].size();
  }
  if (doc.contains("n") && (!doc["n"].is_number_unsigned() || doc["n"].get<std::size_t>() != n))
    throw DataError("matrix file: field 'n' does not match 'votes'");
  if (doc.contains("m") && (!doc["m"].is_number_unsigned() || doc["m"].get<std::size_t>() != m))
    throw DataError("matrix file: field 'm' does not match 'lf_names'");
  const std::size_t outer = by_instance ? n : m;
  const std::size_t inner = by_instance ? m : n;

  const auto& scores = array_field(doc, "scores", outer);
  std::vector<LabelId> vv(n * m);
  ScoreMatrix sm(n, m);
  for (std::size_t a = 0; a < outer; ++a) {
    if (!votes[a].is_array() || votes[a].size() != inner)
      throw DataError("matrix file: field 'votes' row " + std::to_string(a) + " has wrong length");
    if (!scores[a].is_array() || scores[a].size() != inner)
      throw DataError("matrix file: field 'scores' row " + std::to_string(a) + " has wrong length");
    for (std::size_t b = 0; b < inner; ++b) {
      std::size_t i = by_instance ? a : b;
      std::size_t j = by_instance ? b : a;
      const auto& v = votes[a][b];
      if (!v.is_number_integer()) throw DataError("matrix file: field 'votes' must hold integers");
      LabelId vote = v.get<LabelId>();
      if (vote != kAbstain && !space.contains(vote))
        throw DataError("matrix file: field 'votes': label out of range (" + std::to_string(vote) +
                        ")");
      if (vote != kAbstain && vote != lfs[j].target)
        throw DataError("matrix file: field 'votes': vote differs from LF target");
      vv[i * m + j] = vote;
      const auto& s = scores[a][b];
      if (s.is_null()) continue;
      if (!s.is_number()) throw DataError("matrix file: field 'scores' must hold numbers or null");
      if (!lfs[j].continuous)
        throw DataError("matrix file: field 'scores': score on discrete LF '" + lfs[j].name + "'");
      double x = s.get<double>();
      if (!(x >= 0.0 && x <= 1.0)) throw DataError("matrix file: field 'scores': outside [0,1]");
      sm.set(i, j, x);
    }
  }
  file.votes = VoteMatrix(space, std::move(lfs), n, std::move(vv));
  file.scores = std::move(sm);

  if (doc.contains("gold") && !doc["gold"].is_null()) {
    const auto& gold = array_field(doc, "gold", n);
    file.gold.reserve(n);
    for (const auto& g : gold) {
      if (g.is_null()) {
        file.gold.push_back(kAbstain);
        continue;
      }
      if (!g.is_number_integer() || !space.contains(g.get<LabelId>()))
        throw DataError("matrix file: field 'gold': label out of range");
      file.gold.push_back(g.get<LabelId>());
    }
  }
  if (doc.contains("ids") && !doc["ids"].is_null()) {
    const auto& ids = array_field(doc, "ids", n);
    for (const auto& id : ids) {
      if (!id.is_string()) throw DataError("matrix file: field 'ids' must hold strings");
      file.ids.push_back(id.get<std::string>());
    }
  }
  return file;
}

void export_matrix(const MatrixFile& file, const std::filesystem::path& path) {
  write_json_file(path, matrix_to_json(file), -1);
}

MatrixFile import_matrix(const std::filesystem::path& path) {
  auto doc = read_json_file(path, FileKind::data);
  try {
    return matrix_from_json(doc);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace dprog
