#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dataprog/applier.hpp"
#include "dataprog/errors.hpp"
#include "oracles.hpp"

using namespace dprog;

namespace {

const LabelSpace kSpace({{"spam", 1}, {"ham", 2}});

DataSplit texts(std::vector<std::string> payloads) {
  DataSplit d{SplitRole::unlabeled, {}};
  for (std::size_t i = 0; i < payloads.size(); ++i)
    d.instances.push_back({"i" + std::to_string(i), payloads[i], std::nullopt, std::nullopt});
  return d;
}

std::vector<LfPtr> keyword_rules() {
  return {std::make_shared<CompiledRule>(RuleSpec{"free", 1, KeywordRule{{"free"}}}, kSpace),
          std::make_shared<CompiledRule>(RuleSpec{"meeting", 2, KeywordRule{{"meeting"}}}, kSpace)};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dataprog_applier_" + name);
}

}  // namespace

TEST_CASE("apply keyword rules") {
  auto rules = keyword_rules();
  auto out = apply(rules, texts({"free cash", "meeting at noon", "hello"}), kSpace);
  CHECK(out.votes.values() == std::vector<LabelId>{1, 0, 0, 2, 0, 0});
  CHECK(out.votes.num_rows() == 3);
  CHECK(out.votes.lf(1) == LfInfo{"meeting", 2, false});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK_FALSE(out.scores.has(i, j));
}

TEST_CASE("apply on an empty dataset") {
  auto rules = keyword_rules();
  auto out = apply(rules, texts({}), kSpace);
  CHECK(out.votes.num_rows() == 0);
  CHECK(out.votes.num_lfs() == 2);
  CHECK(out.scores.num_rows() == 0);
  CHECK(out.scores.num_lfs() == 2);
}

TEST_CASE("threshold 0 fires everywhere") {
  std::vector<LfPtr> rules = {std::make_shared<CompiledRule>(
      RuleSpec{"c", 2, ContinuousRule{{TfCosine{{"nothing"}}}, 0.0}}, kSpace)};
  auto out = apply(rules, texts({"a", "", "nothing here"}), kSpace);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.votes(i, 0) == 2);
    CHECK(out.scores.has(i, 0));
  }
}

TEST_CASE("rule/space mismatch is rejected before evaluation") {
  auto calls = std::make_shared<std::atomic<int>>(0);
  std::vector<LfPtr> rules = {
      std::make_shared<FunctionRule>("counting", 1,
                                     [calls](const Instance&) {
                                       ++*calls;
                                       return true;
                                     }),
      std::make_shared<FunctionRule>("alien", 5, [](const Instance&) { return true; })};
  CHECK_THROWS_AS(apply(rules, texts({"a", "b"}), kSpace), ConfigError);
  CHECK(calls->load() == 0);
}

TEST_CASE("missing features surface as a data error") {
  std::vector<LfPtr> rules = {std::make_shared<CompiledRule>(
      RuleSpec{"fd", 1, ContinuousRule{{FeatureDot{{1.0}, 0.0}}, 0.5}}, kSpace)};
  CHECK_THROWS_AS(apply(rules, texts({"a"}), kSpace, Exec::serial), DataError);
  CHECK_THROWS_AS(apply(rules, texts({"a", "b", "c"}), kSpace, Exec::parallel), DataError);
}

TEST_CASE("serial and parallel agree; row permutation permutes rows") {
  oracle::Rng rng(5);
  const std::vector<std::string> vocab = {"free", "cash", "meeting", "lunch", "win", "now"};
  std::vector<LfPtr> rules = keyword_rules();
  rules.push_back(std::make_shared<CompiledRule>(
      RuleSpec{"ct", 1, ContinuousRule{{TfCosine{{"cash", "win"}}}, 0.3}}, kSpace));
  rules.push_back(std::make_shared<CompiledRule>(RuleSpec{"rx", 2, RegexRule{"lu(n|m)ch"}}, kSpace));

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> payloads;
    for (std::size_t n = rng.index(0, 60); n > 0; --n) {
      std::string t;
      for (std::size_t w = rng.index(0, 6); w > 0; --w) t += vocab[rng.index(0, vocab.size() - 1)] + " ";
      payloads.push_back(t);
    }
    auto data = texts(payloads);
    auto serial = apply(rules, data, kSpace, Exec::serial);
    auto parallel = apply(rules, data, kSpace, Exec::parallel);
    CHECK(serial.votes == parallel.votes);
    CHECK(serial.scores == parallel.scores);

    std::vector<std::size_t> perm(payloads.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.gen);
    DataSplit permuted{data.role, {}};
    for (std::size_t i : perm) permuted.instances.push_back(data.instances[i]);
    auto moved = apply(rules, permuted, kSpace);
    CHECK(moved.votes == serial.votes.select_rows(perm));
    CHECK(moved.scores == serial.scores.select_rows(perm));
  }
}

TEST_CASE("matrix files round trip in both orientations") {
  std::vector<LfPtr> rules = keyword_rules();
  rules.push_back(std::make_shared<CompiledRule>(
      RuleSpec{"ct", 1, ContinuousRule{{TfCosine{{"free", "cash"}}}, 0.5}}, kSpace));
  auto out = apply(rules, texts({"free cash", "meeting at noon", "hello"}), kSpace);
  for (auto orient : {Orientation::instances, Orientation::lfs}) {
    MatrixFile file{out.votes, out.scores, {1, 2, kAbstain}, {"i0", "i1", "i2"}, orient};
    auto path = temp_path(std::string(to_string(orient)) + ".json");
    export_matrix(file, path);
    auto back = import_matrix(path);
    CHECK(back.votes == out.votes);
    CHECK(back.scores == out.scores);
    CHECK(back.gold == file.gold);
    CHECK(back.ids == file.ids);
    CHECK(back.orientation == orient);
    std::filesystem::remove(path);
  }
  MatrixFile bare{out.votes, out.scores, {}, {}, Orientation::instances};
  auto back = matrix_from_json(matrix_to_json(bare));
  CHECK_FALSE(back.has_gold());
  CHECK(back.ids.empty());
}

TEST_CASE("matrix import errors name the field") {
  auto out = apply(keyword_rules(), texts({"free cash", "meeting at noon", "hello"}), kSpace);
  const json good = matrix_to_json({out.votes, out.scores, {}, {}, Orientation::instances});
  REQUIRE_NOTHROW(matrix_from_json(good));

  auto doc = good;
  doc["votes"][0][0] = 7;
  CHECK_THROWS_WITH_AS(matrix_from_json(doc), doctest::Contains("label out of range"), DataError);
  doc = good;
  doc["scores"][2][1] = 0.5;
  CHECK_THROWS_WITH_AS(matrix_from_json(doc), doctest::Contains("score on discrete LF"), DataError);
  doc = good;
  doc["version"] = 99;
  CHECK_THROWS_WITH_AS(matrix_from_json(doc), doctest::Contains("version"), DataError);
  doc = good;
  doc["n"] = 4;
  CHECK_THROWS_WITH_AS(matrix_from_json(doc), doctest::Contains("'n'"), DataError);
  doc = good;
  doc["votes"][1] = json::array({0});
  CHECK_THROWS_WITH_AS(matrix_from_json(doc), doctest::Contains("'votes'"), DataError);
  doc = good;
  doc["gold"] = json::array({1, 2});
  CHECK_THROWS_AS(matrix_from_json(doc), DataError);

  auto path = temp_path("truncated.json");
  std::ofstream(path) << good.dump().substr(0, 40);
  CHECK_THROWS_AS(import_matrix(path), DataError);
  std::filesystem::remove(path);
}
