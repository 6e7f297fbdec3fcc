#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dataprog/applier.hpp"
#include "dataprog/io.hpp"
#include "dataprog/jointlearn.hpp"
#include "dataprog/labelmodels.hpp"
#include "dataprog/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dprog;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dataprog_cli_test";

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  static int counter = 0;
  const fs::path capture = kWork / ("stdout_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(DATAPROG_CLI) + " " + args + " > " + capture.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  std::ifstream in(capture);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string p(const std::string& name) { return (kWork / name).string(); }

// Small corpus shared by every case.
struct Fixture {
  Fixture() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    auto r = run("generate --out-dir " + p("corpus") +
                 " --n-labeled 60 --n-unlabeled 300 --n-validation 60 --n-test 200");
    REQUIRE(r.code == 0);
  }
};

const std::string kRules = (kWork / "corpus" / "rules.json").string();
std::string corpus(const std::string& split) { return (kWork / "corpus" / (split + ".jsonl")).string(); }

}  // namespace

TEST_CASE_FIXTURE(Fixture, "version and usage errors") {
  auto v = run("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find("matrix format 1") != std::string::npos);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("apply --rules").code == 2);
  CHECK(run("train banana --params-out x").code == 2);
}

TEST_CASE_FIXTURE(Fixture, "apply and analyze") {
  auto a = run("apply --rules " + kRules + " --data " + corpus("L") + " --out " + p("mL.json"));
  REQUIRE(a.code == 0);
  CHECK(a.out.find("n=60 m=6") != std::string::npos);

  // Orientation is recorded and honored on import.
  REQUIRE(run("apply --rules " + kRules + " --data " + corpus("L") + " --out " + p("mL_t.json") +
              " --orientation lfs")
              .code == 0);
  auto x = import_matrix(p("mL.json"));
  auto y = import_matrix(p("mL_t.json"));
  CHECK(y.orientation == Orientation::lfs);
  CHECK(x.votes == y.votes);
  CHECK(x.scores == y.scores);
  CHECK(x.gold == y.gold);

  CHECK(run("apply --rules " + p("missing.json") + " --data " + corpus("L") + " --out " + p("z.json")).code == 2);
  CHECK(run("apply --rules " + kRules + " --data " + p("missing.jsonl") + " --out " + p("z.json")).code == 2);
  CHECK(run("apply --rules " + kRules + " --data " + corpus("L") + " --out " + p("z.json") +
            " --orientation diagonal")
            .code == 2);
  std::ofstream(p("bad.jsonl")) << "{\"id\": \"a\", \"text\": \"x\", \"label\": 9}\n";
  CHECK(run("apply --rules " + kRules + " --data " + p("bad.jsonl") + " --out " + p("z.json")).code == 3);
  std::ofstream(p("badrules.json")) << R"({"label_space": {"labels": [{"name": "a", "id": 1}, {"name": "b", "id": 2}]},
    "rules": [{"name": "r", "target": 1, "kind": "regex", "pattern": "(("}]})";
  auto bad = run("apply --rules " + p("badrules.json") + " --data " + corpus("L") + " --out " + p("z.json"));
  CHECK(bad.code == 2);
  CHECK(bad.out.find("pattern") != std::string::npos);

  auto an = run("analyze --matrix " + p("mL.json") + " --out " + p("an.json"));
  REQUIRE(an.code == 0);
  auto rec = read_json_file(p("an.json"), FileKind::data);
  CHECK(rec["lfs"].size() == 6);
  CHECK(rec["lfs"][0]["emp_accuracy"].is_number());

  // Without gold, accuracy is undefined.
  auto u = read_dataset(corpus("U"), SplitRole::unlabeled);
  for (auto& inst : u.instances) inst.gold.reset();
  write_dataset(p("U_nogold.jsonl"), u);
  REQUIRE(run("apply --rules " + kRules + " --data " + p("U_nogold.jsonl") + " --out " + p("mU.json")).code == 0);
  auto nogold = run("analyze --matrix " + p("mU.json"));
  CHECK(nogold.code == 0);
  CHECK(nogold.out.find("—") != std::string::npos);
  CHECK(run("analyze --matrix " + p("mU.json") + " --gold " + corpus("L")).code == 3);

  std::ofstream(p("empty.json")).close();
  CHECK(run("analyze --matrix " + p("empty.json")).code == 3);
}

TEST_CASE_FIXTURE(Fixture, "cage training, prediction and divergence") {
  for (auto s : {"L", "U", "T"})
    REQUIRE(run("apply --rules " + kRules + " --data " + corpus(s) + " --out " + p(std::string("m") + s + ".json")).code == 0);
  auto t = run("train cage --matrix " + p("mU.json") + " --labeled " + p("mL.json") + " --test " +
               p("mT.json") + " --params-out " + p("cage.json") + " --pred-out " + p("cage_U.jsonl"));
  REQUIRE(t.code == 0);
  auto params = load_params(p("cage.json"));
  for (double v : params.theta.values()) CHECK(std::isfinite(v));
  auto log = read_json_file(p("cage.json.log.json"), FileKind::data);
  CHECK(log["epochs"].size() == 101);

  REQUIRE(run("predict --params " + p("cage.json") + " --matrix " + p("mT.json") + " --out " + p("cage_T.jsonl")).code == 0);
  auto mt = import_matrix(p("mT.json"));
  auto expected = cage_posterior_batch(params, mt.votes, mt.scores);
  std::ifstream in(p("cage_T.jsonl"));
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    auto rec = json::parse(line);
    CHECK(rec["id"] == mt.ids[i]);
    CHECK(rec["proba"][0].get<double>() == expected(i, 0));
    CHECK(rec["proba"][1].get<double>() == expected(i, 1));
    CHECK(rec["label"] == argmax_label(expected.row(i)));
    ++i;
  }
  CHECK(i == mt.votes.num_rows());

  // Same through rules + dataset.
  REQUIRE(run("predict --params " + p("cage.json") + " --data " + corpus("T") + " --rules " + kRules +
              " --out " + p("cage_T2.jsonl"))
              .code == 0);
  CHECK(slurp(p("cage_T.jsonl")) == slurp(p("cage_T2.jsonl")));

  CHECK(run("train cage --matrix " + p("mU.json") + " --lr 1e6 --params-out " + p("boom.json")).code == 4);
  CHECK(run("train cage --matrix " + p("mU.json") + " --epochs 0 --params-out " + p("boom.json")).code == 2);

  // Params for a different LF count.
  auto small = params;
  small.lf_targets.pop_back();
  small.lf_is_continuous.pop_back();
  small.quality_guides.pop_back();
  small.theta = Matrix(5, 2);
  small.pi = Matrix(5, 2);
  save_params(small, p("small.json"));
  auto mismatch = run("predict --params " + p("small.json") + " --matrix " + p("mT.json") + " --out " + p("z.jsonl"));
  CHECK(mismatch.code == 3);
  CHECK(mismatch.out.find("LF count mismatch") != std::string::npos);
  std::ofstream(p("trunc.json")) << slurp(p("cage.json")).substr(0, 50);
  auto trunc = run("predict --params " + p("trunc.json") + " --matrix " + p("mT.json") + " --out " + p("z.jsonl"));
  CHECK(trunc.code == 3);
  CHECK(trunc.out.find("corrupt params file") != std::string::npos);
}

TEST_CASE_FIXTURE(Fixture, "joint training and the supervised-only reduction") {
  const std::string splits = " --rules " + kRules + " --labeled " + corpus("L") + " --unlabeled " +
                             corpus("U") + " --val " + corpus("V");
  REQUIRE(run("train jl" + splits + " --test " + corpus("T") + " --params-out " + p("jl.json") +
              " --pred-out " + p("jl_U.jsonl") + " --epochs 40")
              .code == 0);
  REQUIRE(run("predict --params " + p("jl.json") + " --data " + corpus("T") + " --rules " + kRules +
              " --out " + p("jl_T.jsonl"))
              .code == 0);
  // Predictions match the reloaded params in process.
  auto params = load_jl_params(p("jl.json"));
  auto data = generate_synthetic({.n_labeled = 60, .n_unlabeled = 300, .n_validation = 60, .n_test = 200});
  auto m = apply(data.rules.rules, data.test, data.rules.space);
  auto proba = jl_predict_proba(params, feature_matrix(data.test), m.votes, m.scores);
  std::ifstream in(p("jl_T.jsonl"));
  std::string line;
  for (std::size_t i = 0; std::getline(in, line); ++i) {
    auto rec = json::parse(line);
    CHECK(rec["proba"][0].get<double>() == proba(i, 0));
    CHECK(rec["proba"][1].get<double>() == proba(i, 1));
  }

  std::ofstream(p("zero_gm.json")) << R"({"jl": {"head": "fm", "weights":
      {"fm_sup": 1, "gm_sup": 0, "gm_unsup": 0, "agree": 0, "lambda": 0}}})";
  REQUIRE(run("train jl" + splits + " --config " + p("zero_gm.json") + " --seed 3 --params-out " +
              p("jl0.json") + " --pred-out " + p("jl0_U.jsonl"))
              .code == 0);
  REQUIRE(run("train only-l" + splits + " --seed 3 --params-out " + p("ol.json") + " --pred-out " +
              p("ol_U.jsonl"))
              .code == 0);
  CHECK(slurp(p("jl0_U.jsonl")) == slurp(p("ol_U.jsonl")));
  for (const char* name : {"jl0", "ol"})
    REQUIRE(run(std::string("predict --params ") + p(std::string(name) + ".json") + " --data " +
                corpus("T") + " --out " + p(std::string(name) + "_T.jsonl"))
                .code == 0);
  CHECK(slurp(p("jl0_T.jsonl")) == slurp(p("ol_T.jsonl")));

  CHECK(run("train jl --rules " + kRules + " --labeled " + corpus("L") + " --params-out " + p("x.json")).code == 2);
  CHECK(run("train jl" + splits + " --lr 1e6 --params-out " + p("x.json")).code == 4);
  CHECK(run("train jl" + splits + " --arch cnn --params-out " + p("x.json")).code == 2);

  // Reproducibility: byte-identical outputs.
  REQUIRE(run("train jl" + splits + " --arch mlp --hidden 5 --seed 11 --epochs 10 --params-out " +
              p("r1.json") + " --pred-out " + p("r1.jsonl"))
              .code == 0);
  REQUIRE(run("train jl" + splits + " --arch mlp --hidden 5 --seed 11 --epochs 10 --params-out " +
              p("r2.json") + " --pred-out " + p("r2.jsonl"))
              .code == 0);
  CHECK(slurp(p("r1.json")) == slurp(p("r2.json")));
  CHECK(slurp(p("r1.jsonl")) == slurp(p("r2.jsonl")));
  CHECK(slurp(p("r1.json.log.json")) == slurp(p("r2.json.log.json")));
}

TEST_CASE_FIXTURE(Fixture, "subset command") {
  std::ofstream(p("three.jsonl")) << "{\"id\": \"a\", \"text\": \"\", \"features\": [1, 0]}\n"
                                  << "{\"id\": \"b\", \"text\": \"\", \"features\": [0, 1]}\n"
                                  << "{\"id\": \"c\", \"text\": \"\", \"features\": [0.7071067811865476, 0.7071067811865476]}\n";
  REQUIRE(run("subset --method fl --k 1 --data " + p("three.jsonl") + " --out " + p("fl.json")).code == 0);
  auto fl = read_json_file(p("fl.json"), FileKind::data);
  CHECK(fl["indices"] == json::array({2}));
  CHECK(fl["objective_value"].get<double>() == doctest::Approx(1.0 + std::sqrt(2.0)));

  REQUIRE(run("subset --method rand --k 20 --seed 4 --data " + corpus("U") + " --out " + p("r1.json")).code == 0);
  REQUIRE(run("subset --method rand --k 20 --seed 4 --data " + corpus("U") + " --out " + p("r2.json")).code == 0);
  CHECK(slurp(p("r1.json")) == slurp(p("r2.json")));
  auto r = read_json_file(p("r1.json"), FileKind::data);
  CHECK(r["seed"] == 4);
  CHECK(r["objective_value"].is_null());
  CHECK(r["indices"].size() == 20);

  REQUIRE(run("apply --rules " + kRules + " --data " + corpus("U") + " --out " + p("mU.json")).code == 0);
  REQUIRE(run("subset --method maxcover --k 3 --matrix " + p("mU.json") + " --out " + p("mc.json")).code == 0);
  CHECK(read_json_file(p("mc.json"), FileKind::data)["objective_value"] == 6.0);

  REQUIRE(run("subset --method sup --k 10 --data " + corpus("V") + " --out " + p("sup.json") +
              " --save-prefix " + p("split"))
              .code == 0);
  CHECK(read_dataset(p("split.L"), SplitRole::labeled).size() == 10);
  CHECK(read_dataset(p("split.U"), SplitRole::unlabeled).size() == 50);

  CHECK(run("subset --method fl --k 4 --data " + p("three.jsonl") + " --out " + p("z.json")).code == 2);
  CHECK(run("subset --method sup --k 1 --data " + corpus("V") + " --out " + p("z.json")).code == 2);
  CHECK(run("subset --method magic --k 1 --data " + corpus("V") + " --out " + p("z.json")).code == 2);
  CHECK(run("subset --method fl --k 1 --data " + corpus("V") + " --out " + p("z.json") +
            " --similarity rbf --sigma 0")
            .code == 2);
}

TEST_CASE_FIXTURE(Fixture, "demo is reproducible") {
  const std::string small = " --n-labeled 40 --n-unlabeled 200 --n-validation 40 --n-test 100";
  REQUIRE(run("demo --out-dir " + p("demo1") + small).code == 0);
  REQUIRE(run("demo --out-dir " + p("demo2") + small).code == 0);
  for (const auto& entry : fs::directory_iterator(p("demo1"))) {
    INFO(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(fs::path(p("demo2")) / entry.path().filename()));
  }
  CHECK(run("demo --out-dir " + p("demo3") + small + " --lr 1e6").code == 4);
}
