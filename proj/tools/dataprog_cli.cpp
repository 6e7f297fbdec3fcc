// dataprog: command-line front end for the labeling pipeline
//   generate -> apply -> analyze -> subset -> train -> predict
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "dataprog/analysis.hpp"
#include "dataprog/applier.hpp"
#include "dataprog/config.hpp"
#include "dataprog/errors.hpp"
#include "dataprog/io.hpp"
#include "dataprog/jointlearn.hpp"
#include "dataprog/labelmodels.hpp"
#include "dataprog/lfkit.hpp"
#include "dataprog/subset.hpp"
#include "dataprog/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dprog;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

// ---------------------------------------------------------------------------
// Options shared by several commands

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

struct Overrides {
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> qg_weight;
  std::optional<std::string> arch;
  std::optional<std::size_t> hidden;
  std::optional<std::string> head;
  std::optional<std::string> kl;
};

PipelineConfig load_pipeline(const Common& c) {
  PipelineConfig cfg = c.config_path.empty() ? PipelineConfig{} : load_config(c.config_path);
  if (c.seed) cfg.set_seed(*c.seed);
  return cfg;
}

void apply_cage_overrides(TrainConfig& cfg, const Overrides& o) {
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.lr) cfg.learning_rate = *o.lr;
  if (o.qg_weight) cfg.qg_weight = *o.qg_weight;
  cfg.validate();
}

void apply_jl_overrides(JlConfig& cfg, const Overrides& o) {
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.lr) cfg.learning_rate = *o.lr;
  if (o.qg_weight) cfg.weights.lambda = *o.qg_weight;
  if (o.arch) cfg.arch = parse_arch(*o.arch);
  if (o.head) cfg.head = parse_head(*o.head);
  if (o.kl) cfg.kl = parse_kl_direction(*o.kl);
  if (o.hidden) cfg.hidden = *o.hidden;
  cfg.validate();
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "pipeline config file");
  cmd->add_option("--seed", c.seed, "random seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "OpenMP threads (0 = runtime default)");
}

void add_train_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--qg-weight", o.qg_weight, "quality-guide weight (lambda)");
}

void add_jl_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--arch", o.arch, "feature model: linear | mlp");
  cmd->add_option("--hidden", o.hidden, "mlp hidden width");
  cmd->add_option("--head", o.head, "inference head: fm | gm | mean");
  cmd->add_option("--kl", o.kl, "agreement direction: gm_fm | fm_gm");
}

// ---------------------------------------------------------------------------
// Loading helpers

DataSplit load_valid_dataset(const std::string& path, SplitRole role, const LabelSpace& space) {
  DataSplit data = read_dataset(path, role);
  auto report = validate_dataset(data, space);
  if (!report.ok()) {
    std::string msg = path + ": " + std::to_string(report.violations.size()) + " invalid record(s)";
    for (std::size_t k = 0; k < report.violations.size() && k < 5; ++k)
      msg += "; '" + report.violations[k].instance_id + "': " + report.violations[k].reason;
    throw DataError(msg);
  }
  return data;
}

MatrixFile matrix_for(const RuleSet& rules, const DataSplit& data) {
  auto out = apply(rules.rules, data, rules.space);
  MatrixFile file{std::move(out.votes), std::move(out.scores), gold_labels(data), {}, Orientation::instances};
  for (const auto& inst : data.instances) file.ids.push_back(inst.id);
  bool any_gold = false;
  for (LabelId g : file.gold) any_gold = any_gold || g != kAbstain;
  if (!any_gold) file.gold.clear();
  return file;
}

JlSplit jl_split(const RuleSet& rules, const DataSplit& data) {
  auto out = apply(rules.rules, data, rules.space);
  JlSplit s{feature_matrix(data), std::move(out.votes), std::move(out.scores), {}};
  if (data.role != SplitRole::unlabeled) s.gold = gold_labels(data);
  return s;
}

std::vector<std::string> row_ids(const MatrixFile& m) {
  if (!m.ids.empty()) return m.ids;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < m.votes.num_rows(); ++i) ids.push_back(std::to_string(i));
  return ids;
}

std::vector<std::string> row_ids(const DataSplit& d) {
  std::vector<std::string> ids;
  for (const auto& inst : d.instances) ids.push_back(inst.id);
  return ids;
}

// ---------------------------------------------------------------------------
// Writers

void write_predictions(const fs::path& path, std::span<const std::string> ids, const Matrix& proba) {
  std::string body;
  for (std::size_t i = 0; i < proba.rows(); ++i) {
    auto row = proba.row(i);
    json rec = {{"id", ids[i]},
                {"proba", std::vector<double>(row.begin(), row.end())},
                {"label", argmax_label(row)}};
    body += rec.dump() + "\n";
  }
  write_text_file(path, body);
}

json cage_log_json(const CageFit& fit) {
  json epochs = json::array();
  for (const auto& e : fit.log) {
    json rec = {{"epoch", e.epoch}, {"objective", e.objective}};
    rec["eval_accuracy"] = e.eval_accuracy ? json(*e.eval_accuracy) : json(nullptr);
    epochs.push_back(std::move(rec));
  }
  return {{"model", "cage"}, {"epochs", std::move(epochs)}};
}

json jl_log_json(const std::string& model, const std::vector<JlEpochLog>& log, int selected) {
  json epochs = json::array();
  for (const auto& e : log) {
    json rec = {{"epoch", e.epoch}, {"objective", e.objective}};
    rec["val_macro_f1"] = e.val_macro_f1 ? json(*e.val_macro_f1) : json(nullptr);
    rec["test_accuracy"] = e.test_accuracy ? json(*e.test_accuracy) : json(nullptr);
    epochs.push_back(std::move(rec));
  }
  return {{"model", model}, {"selected_epoch", selected}, {"epochs", std::move(epochs)}};
}

fs::path log_path_for(const std::string& explicit_path, const std::string& params_out) {
  return explicit_path.empty() ? fs::path(params_out + ".log.json") : fs::path(explicit_path);
}

void print_apply_summary(const MatrixFile& m) {
  const std::size_t n = m.votes.num_rows(), k = m.votes.num_lfs();
  std::printf("n=%zu m=%zu\n", n, k);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t fired = 0;
    for (std::size_t i = 0; i < n; ++i) fired += m.votes.fired(i, j);
    std::printf("  %-24s coverage %.4f\n", m.votes.lf(j).name.c_str(),
                n ? static_cast<double>(fired) / static_cast<double>(n) : 0.0);
  }
}

double accuracy(std::span<const LabelId> pred, std::span<const LabelId> gold) {
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == kAbstain) continue;
    ++total;
    hit += pred[i] == gold[i];
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Commands

struct GenerateArgs {
  std::string out_dir;
  SyntheticConfig synth;
};

void write_synthetic(const fs::path& dir, const SyntheticData& data) {
  fs::create_directories(dir);
  write_json_file(dir / "rules.json", to_json(data.rules));
  write_dataset(dir / "L.jsonl", data.labeled);
  write_dataset(dir / "U.jsonl", data.unlabeled);
  write_dataset(dir / "V.jsonl", data.validation);
  write_dataset(dir / "T.jsonl", data.test);
}

int cmd_generate(const Common& common, GenerateArgs args) {
  if (common.seed) args.synth.seed = *common.seed;
  auto data = generate_synthetic(args.synth);
  write_synthetic(args.out_dir, data);
  std::printf("wrote rules.json, L.jsonl (%zu), U.jsonl (%zu), V.jsonl (%zu), T.jsonl (%zu) to %s\n",
              data.labeled.size(), data.unlabeled.size(), data.validation.size(), data.test.size(),
              args.out_dir.c_str());
  return kOk;
}

struct ApplyArgs {
  std::string rules, data, out, orientation = "instances";
};

int cmd_apply(const ApplyArgs& a) {
  const Orientation orient = parse_orientation(a.orientation);
  auto rules = load_rules(a.rules);
  auto data = load_valid_dataset(a.data, SplitRole::unlabeled, rules.space);
  auto m = matrix_for(rules, data);
  m.orientation = orient;
  export_matrix(m, a.out);
  print_apply_summary(m);
  return kOk;
}

struct AnalyzeArgs {
  std::string matrix, gold, out;
};

Report analyze(const MatrixFile& m, std::span<const LabelId> gold) {
  return render_report(lf_summary(m.votes, gold));
}

int cmd_analyze(const AnalyzeArgs& a) {
  auto m = import_matrix(a.matrix);
  std::vector<LabelId> gold = m.gold;
  if (!a.gold.empty()) {
    auto g = read_dataset(a.gold, SplitRole::test);
    gold = gold_labels(g);
  }
  auto report = analyze(m, gold);
  std::fputs(report.table.c_str(), stdout);
  if (!a.out.empty()) write_json_file(a.out, report.record);
  return kOk;
}

struct TrainArgs {
  std::string matrix, labeled, unlabeled, val, test, rules;
  std::string params_out, log_out, pred_out;
};

int train_cage(const PipelineConfig& pc, const Overrides& o, const TrainArgs& a) {
  TrainConfig cfg = pc.cage;
  apply_cage_overrides(cfg, o);
  const std::string train_path = !a.matrix.empty() ? a.matrix : a.unlabeled;
  if (train_path.empty()) throw ConfigError("train cage: --matrix (or --unlabeled) is required");
  auto train = import_matrix(train_path);

  std::optional<std::vector<double>> guides;
  if (!a.labeled.empty()) {
    auto l = import_matrix(a.labeled);
    if (!l.has_gold()) throw DataError(a.labeled + ": field 'gold' is required for guide estimation");
    check_compatible(CageParams::zeros(train.votes), l.votes);
    guides = estimate_guides(l.votes, l.gold);
  }
  std::optional<EvalSet> eval;
  if (!a.test.empty()) {
    auto t = import_matrix(a.test);
    if (!t.has_gold()) throw DataError(a.test + ": field 'gold' is required for evaluation");
    eval = EvalSet{t.votes, t.scores, t.gold};
  }

  auto fit = cage_fit(train.votes, train.scores, guides, cfg, eval ? &*eval : nullptr);
  save_params(fit.params, a.params_out);
  write_json_file(log_path_for(a.log_out, a.params_out), cage_log_json(fit));
  if (!a.pred_out.empty())
    write_predictions(a.pred_out, row_ids(train), cage_posterior_batch(fit.params, train.votes, train.scores));
  std::printf("cage: objective %.6f -> %.6f over %d epochs\n", fit.log.front().objective,
              fit.log.back().objective, cfg.epochs);
  if (eval) std::printf("cage: eval accuracy %.4f\n", *fit.log.back().eval_accuracy);
  return kOk;
}

struct JlInputs {
  RuleSet rules;
  DataSplit l, u;
  std::optional<DataSplit> v, t;
  JlSplit sl, su;
  std::optional<JlSplit> sv, st;
};

JlInputs load_jl_inputs(const TrainArgs& a, bool need_unlabeled) {
  if (a.rules.empty()) throw ConfigError("train: --rules is required");
  if (a.labeled.empty()) throw ConfigError("train: --labeled is required");
  if (need_unlabeled && a.unlabeled.empty()) throw ConfigError("train jl: --unlabeled is required");
  JlInputs in;
  in.rules = load_rules(a.rules);
  in.l = load_valid_dataset(a.labeled, SplitRole::labeled, in.rules.space);
  in.sl = jl_split(in.rules, in.l);
  if (!a.unlabeled.empty()) {
    in.u = load_valid_dataset(a.unlabeled, SplitRole::unlabeled, in.rules.space);
    in.su = jl_split(in.rules, in.u);
  }
  if (!a.val.empty()) {
    in.v = load_valid_dataset(a.val, SplitRole::validation, in.rules.space);
    in.sv = jl_split(in.rules, *in.v);
  }
  if (!a.test.empty()) {
    in.t = load_valid_dataset(a.test, SplitRole::test, in.rules.space);
    in.st = jl_split(in.rules, *in.t);
  }
  return in;
}

int train_jl(const PipelineConfig& pc, const Overrides& o, const TrainArgs& a) {
  JlConfig cfg = pc.jl;
  apply_jl_overrides(cfg, o);
  auto in = load_jl_inputs(a, true);
  auto fit = fit_and_predict_proba(in.sl, in.su, cfg, in.sv ? &*in.sv : nullptr,
                                   in.st ? &*in.st : nullptr);
  save_params(fit.params, a.params_out);
  write_json_file(log_path_for(a.log_out, a.params_out), jl_log_json("jl", fit.log, fit.selected_epoch));
  if (!a.pred_out.empty()) write_predictions(a.pred_out, row_ids(in.u), fit.proba);
  std::printf("jl: objective %.6f -> %.6f, selected epoch %d\n", fit.log.front().objective,
              fit.log.back().objective, fit.selected_epoch);
  if (in.st) {
    auto pred = jl_predict(fit.params, in.st->features, in.st->votes, in.st->scores);
    std::printf("jl: test accuracy %.4f\n", accuracy(pred, in.st->gold));
  }
  return kOk;
}

// Feature model on L alone, saved in the joint format with a fm head so
// `predict` treats both models the same way.
int train_only_l(const PipelineConfig& pc, const Overrides& o, const TrainArgs& a) {
  JlConfig cfg = JlConfig::only_l();
  cfg.arch = pc.jl.arch;
  cfg.hidden = pc.jl.hidden;
  cfg.epochs = pc.jl.epochs;
  cfg.learning_rate = pc.jl.learning_rate;
  cfg.seed = pc.jl.seed;
  cfg.score_clamp = pc.jl.score_clamp;
  cfg.concentration = pc.jl.concentration;
  Overrides only = o;
  only.head.reset();
  only.kl.reset();
  apply_jl_overrides(cfg, only);
  auto in = load_jl_inputs(a, false);

  JlParams params;
  params.fm = fit_only_l(in.sl, cfg, in.sv ? &*in.sv : nullptr);
  params.gm = CageParams::zeros(in.sl.votes, {}, cfg.concentration, cfg.score_clamp);
  params.weights = cfg.weights;
  params.head = InferenceHead::fm;
  save_params(params, a.params_out);
  write_json_file(log_path_for(a.log_out, a.params_out), jl_log_json("only-l", {}, cfg.epochs));
  if (!a.pred_out.empty() && !a.unlabeled.empty())
    write_predictions(a.pred_out, row_ids(in.u), predict_fm_proba(params.fm, in.su.features));
  if (in.st)
    std::printf("only-l: test accuracy %.4f\n",
                accuracy(predict_fm(params.fm, in.st->features), in.st->gold));
  return kOk;
}

struct PredictArgs {
  std::string params, matrix, data, rules, out, head;
};

int cmd_predict(const PredictArgs& a) {
  json doc = read_params_json(a.params);
  const std::string model = doc.value("model", "cage");
  if (model == "cage") {
    auto params = cage_params_from_json(doc);
    if (!a.matrix.empty()) {
      auto m = import_matrix(a.matrix);
      write_predictions(a.out, row_ids(m), cage_posterior_batch(params, m.votes, m.scores));
    } else {
      if (a.data.empty() || a.rules.empty())
        throw ConfigError("predict: give --matrix, or --data with --rules");
      auto rules = load_rules(a.rules);
      auto data = load_valid_dataset(a.data, SplitRole::unlabeled, rules.space);
      auto m = matrix_for(rules, data);
      write_predictions(a.out, row_ids(data), cage_posterior_batch(params, m.votes, m.scores));
    }
    return kOk;
  }
  if (model != "jl") throw DataError(a.params + ": unknown model " + json(model).dump());
  auto params = jl_params_from_json(doc);
  if (!a.head.empty()) params.head = parse_head(a.head);
  if (a.data.empty()) throw ConfigError("predict: the joint model needs --data (features)");
  if (params.head == InferenceHead::fm) {
    auto data = read_dataset(a.data, SplitRole::unlabeled);
    write_predictions(a.out, row_ids(data), predict_fm_proba(params.fm, feature_matrix(data)));
    return kOk;
  }
  if (a.rules.empty()) throw ConfigError("predict: --rules is required for the gm and mean heads");
  auto rules = load_rules(a.rules);
  auto data = load_valid_dataset(a.data, SplitRole::unlabeled, rules.space);
  auto s = jl_split(rules, data);
  write_predictions(a.out, row_ids(data), jl_predict_proba(params, s.features, s.votes, s.scores));
  return kOk;
}

struct SubsetArgs {
  std::optional<std::string> method;
  std::optional<std::size_t> k;
  std::optional<std::string> similarity;
  std::optional<double> sigma;
  std::string data, matrix, out, save_prefix;
};

json run_subset(const PipelineConfig& pc, const SubsetArgs& a) {
  SubsetConfig cfg = pc.subset;
  if (a.method) cfg.method = *a.method;
  if (a.k) cfg.k = *a.k;
  if (a.similarity) cfg.similarity.kind = parse_similarity(*a.similarity);
  if (a.sigma) cfg.similarity.sigma = *a.sigma;
  if (!(cfg.similarity.sigma > 0.0)) throw ConfigError("subset: --sigma must be > 0");

  std::optional<DataSplit> data;
  if (!a.data.empty()) data = read_dataset(a.data, SplitRole::unlabeled);
  json rec;
  std::vector<std::size_t> picked;
  if (cfg.method == "rand") {
    std::size_t n = 0;
    if (data)
      n = data->size();
    else if (!a.matrix.empty())
      n = import_matrix(a.matrix).votes.num_rows();
    else
      throw ConfigError("subset rand: --data or --matrix is required");
    picked = rand_subset(n, cfg.k, pc.seed);
    rec = indices_json("rand", cfg.k, pc.seed, picked, std::nullopt);
  } else if (cfg.method == "fl") {
    if (!data) throw ConfigError("subset fl: --data is required");
    auto sel = unsup_subset(feature_matrix(*data), cfg.k, cfg.similarity);
    picked = sel.indices;
    rec = indices_json("fl", cfg.k, std::nullopt, picked, sel.objective);
  } else if (cfg.method == "maxcover") {
    if (a.matrix.empty()) throw ConfigError("subset maxcover: --matrix is required");
    auto m = import_matrix(a.matrix);
    auto sel = max_cover_subset(m.votes, cfg.k);
    picked = sel.indices;
    rec = indices_json("maxcover", cfg.k, std::nullopt, picked, sel.objective);
  } else if (cfg.method == "sup") {
    if (!data) throw ConfigError("subset sup: --data is required");
    auto gold = gold_labels(*data);
    LabelId top = 0;
    for (LabelId g : gold) {
      if (g == kAbstain) throw DataError(a.data + ": subset sup needs gold on every record");
      top = std::max(top, g);
    }
    auto sel = sup_subset(feature_matrix(*data), gold, cfg.k, std::max(top, 2), cfg.similarity);
    picked = sel.indices;
    rec = indices_json("sup", cfg.k, std::nullopt, picked, sel.objective);
  } else {
    throw ConfigError("subset: --method must be one of rand, fl, maxcover, sup");
  }
  if (!a.save_prefix.empty()) {
    if (!data) throw ConfigError("subset: --save-prefix needs --data");
    save_subset_files(*data, picked, a.save_prefix);
  }
  return rec;
}

int cmd_subset(const PipelineConfig& pc, const SubsetArgs& a) {
  auto rec = run_subset(pc, a);
  write_json_file(a.out, rec);
  std::printf("%s: selected %zu indices\n", rec["method"].get<std::string>().c_str(),
              rec["indices"].size());
  return kOk;
}

struct DemoArgs {
  std::string out_dir = "demo_out";
  SyntheticConfig synth;
};

// The full flow on the bundled corpus, writing every intermediate artifact.
int cmd_demo(const Common& common, const Overrides& o, DemoArgs a) {
  PipelineConfig pc = load_pipeline(common);
  if (common.seed) a.synth.seed = *common.seed;
  const fs::path dir = a.out_dir;

  std::printf("[1/6] generate\n");
  auto data = generate_synthetic(a.synth);
  write_synthetic(dir, data);
  auto rules = load_rules(dir / "rules.json");

  std::printf("[2/6] apply\n");
  const std::pair<const char*, const DataSplit*> splits[] = {
      {"L", &data.labeled}, {"U", &data.unlabeled}, {"V", &data.validation}, {"T", &data.test}};
  for (const auto& [name, split] : splits) {
    auto m = matrix_for(rules, *split);
    export_matrix(m, dir / (std::string("matrix_") + name + ".json"));
  }
  auto mu = import_matrix(dir / "matrix_U.json");
  auto ml = import_matrix(dir / "matrix_L.json");
  auto mt = import_matrix(dir / "matrix_T.json");
  print_apply_summary(mu);

  std::printf("[3/6] analyze (L)\n");
  auto report = analyze(ml, ml.gold);
  std::fputs(report.table.c_str(), stdout);
  write_json_file(dir / "analysis_L.json", report.record);

  std::printf("[4/6] subset\n");
  SubsetArgs sa;
  sa.data = (dir / "U.jsonl").string();
  sa.k = std::min<std::size_t>(pc.subset.k, data.unlabeled.size());
  auto rec = run_subset(pc, sa);
  write_json_file(dir / "subset_U.json", rec);
  std::printf("%s: selected %zu indices, objective %s\n", rec["method"].get<std::string>().c_str(),
              rec["indices"].size(), rec["objective_value"].dump().c_str());

  std::printf("[5/6] train\n");
  TrainConfig cage_cfg = pc.cage;
  apply_cage_overrides(cage_cfg, o);
  auto cage = cage_fit(mu.votes, mu.scores, estimate_guides(ml.votes, ml.gold), cage_cfg);
  save_params(cage.params, dir / "cage_params.json");
  write_json_file(dir / "cage_params.json.log.json", cage_log_json(cage));

  TrainArgs ta;
  ta.rules = (dir / "rules.json").string();
  ta.labeled = (dir / "L.jsonl").string();
  ta.unlabeled = (dir / "U.jsonl").string();
  ta.val = (dir / "V.jsonl").string();
  ta.test = (dir / "T.jsonl").string();
  ta.params_out = (dir / "jl_params.json").string();
  ta.pred_out = (dir / "predictions_U.jsonl").string();
  train_jl(pc, o, ta);

  std::printf("[6/6] predict (T)\n");
  PredictArgs pa;
  pa.params = ta.params_out;
  pa.data = ta.test;
  pa.rules = ta.rules;
  pa.out = (dir / "predictions_T.jsonl").string();
  cmd_predict(pa);

  // Accuracy summary on T.
  auto jl_params = load_jl_params(ta.params_out);
  auto st = jl_split(rules, data.test);
  const double acc_mv = accuracy(mv_predict(mt.votes), mt.gold);
  const double acc_cage = accuracy(cage_predict(cage.params, mt.votes, mt.scores), mt.gold);
  const double acc_jl = accuracy(jl_predict(jl_params, st.features, st.votes, st.scores), mt.gold);
  json summary = {{"seed", a.synth.seed},
                  {"n_test", data.test.size()},
                  {"test_accuracy", {{"mv", acc_mv}, {"cage", acc_cage}, {"jl", acc_jl}}}};
  write_json_file(dir / "summary.json", summary);
  std::printf("test accuracy: mv %.4f  cage %.4f  jl %.4f\n", acc_mv, acc_cage, acc_jl);
  return kOk;
}

void add_synth_options(CLI::App* cmd, SyntheticConfig& s) {
  cmd->add_option("--n-labeled", s.n_labeled);
  cmd->add_option("--n-unlabeled", s.n_unlabeled);
  cmd->add_option("--n-validation", s.n_validation);
  cmd->add_option("--n-test", s.n_test);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataprog: labeling functions, label models and subset selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string("dataprog ") + kToolVersion + "\nmatrix format " +
                           std::to_string(kMatrixFormatVersion) + "\nparams format " +
                           std::to_string(kParamsFormatVersion));

  Common common;
  Overrides over;

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write the synthetic SMS corpus and its rules");
  generate->add_option("--out-dir", gen.out_dir)->required();
  add_synth_options(generate, gen.synth);
  add_common(generate, common);

  ApplyArgs ap;
  auto* apply_cmd = app.add_subcommand("apply", "evaluate rules over a dataset");
  apply_cmd->add_option("--rules", ap.rules)->required();
  apply_cmd->add_option("--data", ap.data)->required();
  apply_cmd->add_option("--out", ap.out)->required();
  apply_cmd->add_option("--orientation", ap.orientation, "instances | lfs");
  add_common(apply_cmd, common);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "per-LF coverage, overlap, conflict, accuracy");
  analyze_cmd->add_option("--matrix", an.matrix)->required();
  analyze_cmd->add_option("--gold", an.gold, "dataset whose labels are row-aligned gold");
  analyze_cmd->add_option("--out", an.out, "JSON record");
  add_common(analyze_cmd, common);

  TrainArgs tr;
  std::string model;
  auto* train = app.add_subcommand("train", "fit a label model (cage), joint model (jl) or only-l");
  train->add_option("model", model, "cage | jl | only-l")->required()->check(
      CLI::IsMember({"cage", "jl", "only-l"}));
  train->add_option("--matrix", tr.matrix, "cage: training matrix");
  train->add_option("--labeled", tr.labeled, "cage: matrix with gold for guides; jl: dataset");
  train->add_option("--unlabeled", tr.unlabeled);
  train->add_option("--val", tr.val);
  train->add_option("--test", tr.test);
  train->add_option("--rules", tr.rules, "jl / only-l: rule file");
  train->add_option("--params-out", tr.params_out)->required();
  train->add_option("--log-out", tr.log_out, "default: <params-out>.log.json");
  train->add_option("--pred-out", tr.pred_out, "predictions over the training (U) rows");
  add_common(train, common);
  add_train_overrides(train, over);
  add_jl_overrides(train, over);

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "class probabilities from a params file");
  predict->add_option("--params", pr.params)->required();
  predict->add_option("--matrix", pr.matrix);
  predict->add_option("--data", pr.data);
  predict->add_option("--rules", pr.rules);
  predict->add_option("--head", pr.head, "jl only: fm | gm | mean");
  predict->add_option("--out", pr.out)->required();
  add_common(predict, common);

  SubsetArgs sb;
  auto* subset = app.add_subcommand("subset", "pick k instances (rand | fl | maxcover | sup)");
  subset->add_option("--method", sb.method);
  subset->add_option("--k", sb.k);
  subset->add_option("--similarity", sb.similarity, "cosine | dot | rbf");
  subset->add_option("--sigma", sb.sigma);
  subset->add_option("--data", sb.data);
  subset->add_option("--matrix", sb.matrix);
  subset->add_option("--save-prefix", sb.save_prefix, "write <prefix>.L and <prefix>.U");
  subset->add_option("--out", sb.out)->required();
  add_common(subset, common);

  DemoArgs dm;
  auto* demo = app.add_subcommand("demo", "run the whole pipeline on the synthetic corpus");
  demo->add_option("--out-dir", dm.out_dir);
  add_synth_options(demo, dm.synth);
  add_common(demo, common);
  add_train_overrides(demo, over);
  add_jl_overrides(demo, over);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (common.threads > 0) omp_set_num_threads(common.threads);
    if (*generate) return cmd_generate(common, gen);
    if (*apply_cmd) return cmd_apply(ap);
    if (*analyze_cmd) return cmd_analyze(an);
    if (*train) {
      auto pc = load_pipeline(common);
      if (model == "cage") return train_cage(pc, over, tr);
      if (model == "jl") return train_jl(pc, over, tr);
      return train_only_l(pc, over, tr);
    }
    if (*predict) return cmd_predict(pr);
    if (*subset) return cmd_subset(load_pipeline(common), sb);
    if (*demo) return cmd_demo(common, over, dm);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  }
  return kOk;
}
