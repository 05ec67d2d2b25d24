#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pialab/checkpoint.hpp"
#include "pialab/config.hpp"
#include "pialab/errors.hpp"
#include "pialab/runner.hpp"

namespace fs = std::filesystem;
using namespace pialab;

namespace {

// Every flag mirrors a config key; a flag the user actually passed overrides
// the value from --config.
struct Overrides {
  std::optional<std::string> kind;
  std::optional<int> n, dim;
  std::optional<std::uint64_t> data_seed;
  std::optional<double> fraction;
  std::optional<std::uint64_t> split_seed;
  std::optional<bool> continuous;
  std::optional<int> T;
  std::optional<double> beta_start, beta_end, beta_min, beta_max;
  std::optional<int> epochs, batch;
  std::optional<double> lr;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> pool_multiplier;
  std::optional<double> budget_seconds;
  std::optional<std::string> outdir;
  // single-attack override
  std::optional<std::string> method;
  std::optional<double> t, p;
  std::optional<int> k_steps;
  std::optional<std::uint64_t> attack_seed;
};

struct SubArgs {
  std::string config_path;
  Overrides ov;
};

void add_common_options(CLI::App* cmd, SubArgs& a) {
  cmd->add_option("--config", a.config_path, "experiment config json");
  auto opt = [&](const char* flag, auto& slot, const char* help) {
    using T = typename std::decay_t<decltype(slot)>::value_type;
    cmd->add_option_function<T>(flag, [&slot](const T& v) { slot = v; }, help);
  };
  opt("--kind", a.ov.kind, "dataset kind (gaussian-mixture|ring|grid-image)");
  opt("--n", a.ov.n, "dataset size");
  opt("--dim", a.ov.dim, "sample dimension");
  opt("--data-seed", a.ov.data_seed, "dataset seed");
  opt("--fraction", a.ov.fraction, "fraction of samples selected for the experiment");
  opt("--split-seed", a.ov.split_seed, "member/holdout split seed");
  cmd->add_option_function<bool>(
      "--continuous", [&a](const bool& v) { a.ov.continuous = v; },
      "use the continuous-time schedule (0/1)");
  opt("--T", a.ov.T, "discrete schedule steps");
  opt("--beta-start", a.ov.beta_start, "discrete beta at step 1");
  opt("--beta-end", a.ov.beta_end, "discrete beta at step T");
  opt("--beta-min", a.ov.beta_min, "continuous beta(0)");
  opt("--beta-max", a.ov.beta_max, "continuous beta(1)");
  opt("--epochs", a.ov.epochs, "training epochs");
  opt("--batch", a.ov.batch, "minibatch size");
  opt("--lr", a.ov.lr, "peak learning rate");
  opt("--train-seed", a.ov.train_seed, "init/training seed");
  opt("--pool-multiplier", a.ov.pool_multiplier, "presentations per sample per epoch");
  opt("--budget-seconds", a.ov.budget_seconds, "training wall-time budget (0 = off)");
  opt("--outdir", a.ov.outdir, "output directory");
  opt("--method", a.ov.method, "attack method (na|secmi-style|pia|pian|pia-sde)");
  opt("--t", a.ov.t, "attack time");
  opt("--p", a.ov.p, "attack norm order");
  opt("--k-steps", a.ov.k_steps, "secmi-style stage count");
  opt("--attack-seed", a.ov.attack_seed, "na noise seed");
}

ExperimentConfig resolve_config(const SubArgs& a) {
  ExperimentConfig c = a.config_path.empty() ? ExperimentConfig() : load_config(a.config_path);
  const Overrides& o = a.ov;
  if (o.kind) c.dataset_kind = *o.kind;
  if (o.n) c.n = *o.n;
  if (o.dim) c.dim = *o.dim;
  if (o.data_seed) c.dataset_seed = *o.data_seed;
  if (o.fraction) c.fraction = *o.fraction;
  if (o.split_seed) c.split_seed = *o.split_seed;
  if (o.continuous) c.continuous = *o.continuous;
  if (o.T) c.T = *o.T;
  if (o.beta_start) c.beta_start = *o.beta_start;
  if (o.beta_end) c.beta_end = *o.beta_end;
  if (o.beta_min) c.beta_min = *o.beta_min;
  if (o.beta_max) c.beta_max = *o.beta_max;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch) c.batch = *o.batch;
  if (o.lr) c.lr = *o.lr;
  if (o.train_seed) c.train_seed = *o.train_seed;
  if (o.pool_multiplier) c.pool_multiplier = *o.pool_multiplier;
  if (o.budget_seconds) c.budget_seconds = *o.budget_seconds;
  if (o.outdir) c.outdir = *o.outdir;
  if (o.method || o.t || o.p || o.k_steps || o.attack_seed) {
    AttackSpec s;
    s.method = o.method.value_or("pia");
    s.t = o.t ? *o.t : (c.continuous ? 0.3 : 0.2 * c.T);
    s.p = o.p ? *o.p : (s.method == "na" ? 2.0 : 4.0);
    s.k_steps = o.k_steps.value_or(10);
    s.seed = o.attack_seed.value_or(4004);
    c.attacks = {s};
  }
  return c;
}

std::string path_in(const ExperimentConfig& c, const std::string& name) {
  return (fs::path(c.outdir) / name).string();
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void cmd_gen(const ExperimentConfig& c) {
  fs::create_directories(c.outdir);
  PreparedData d = prepare_data(c);
  save_dataset(d.ds, path_in(c, "dataset.bin"));
  save_split(d.split, path_in(c, "split.json"));
  std::cout << "wrote " << path_in(c, "dataset.bin") << " (n=" << c.n << " dim=" << c.dim
            << ") and " << path_in(c, "split.json") << " (" << d.split.member_ids.size()
            << " members / " << d.split.holdout_ids.size() << " holdout)\n";
}

void cmd_train(const ExperimentConfig& c, bool resume) {
  fs::create_directories(c.outdir);
  Dataset ds = load_dataset(path_in(c, "dataset.bin"));
  Split sp = load_split(path_in(c, "split.json"));
  Eigen::MatrixXd members = gather_rows(ds.samples, sp.member_ids);

  EpsilonModel model;
  NoiseSchedule sched;
  if (resume) {
    Checkpoint ck = load_checkpoint(path_in(c, "checkpoint.bin"));
    model = ck.model;
    sched = ck.sched;
  } else {
    model = EpsilonModel::init(ds.dim, c.train_seed);
    sched = schedule_from_config(c);
  }

  TrainOptions opt;
  opt.epochs = c.epochs;
  opt.batch = c.batch;
  opt.lr = c.lr;
  opt.seed = c.train_seed;
  opt.pool_multiplier = c.pool_multiplier;
  opt.budget_seconds = c.budget_seconds;
  std::vector<double> trace = train(model, members, sched, opt);

  save_checkpoint(model, sched, path_in(c, "checkpoint.bin"));
  {
    std::ofstream os(path_in(c, "loss_trace.csv"));
    if (!os) throw io_error("cannot open for writing: " + path_in(c, "loss_trace.csv"));
    os << "epoch,loss\n";
    for (size_t i = 0; i < trace.size(); ++i) os << i << "," << fmt17(trace[i]) << "\n";
  }
  std::cout << "wrote " << path_in(c, "checkpoint.bin");
  if (!trace.empty())
    std::cout << " (loss " << fmt17(trace.front()) << " -> " << fmt17(trace.back()) << ")";
  std::cout << "\n";
}

void cmd_attack(const ExperimentConfig& c) {
  Checkpoint ck = load_checkpoint(path_in(c, "checkpoint.bin"));
  Dataset ds = load_dataset(path_in(c, "dataset.bin"));
  Split sp = load_split(path_in(c, "split.json"));
  PreparedData d;
  d.ds = ds;
  d.split = sp;
  d.members = gather_rows(ds.samples, sp.member_ids);
  d.holdout = gather_rows(ds.samples, sp.holdout_ids);

  std::vector<AttackScore> all;
  std::ofstream manifest(path_in(c, "run_manifest.txt"), std::ios::app);
  if (!manifest) throw io_error("cannot open for writing: " + path_in(c, "run_manifest.txt"));
  for (const AttackSpec& spec : c.attacks) {
    std::vector<AttackScore> scores = score_split(ck.model, ck.sched, d, spec);
    long long total = 0;
    for (const auto& s : scores) total += s.queries;
    manifest << "method=" << spec.method << " t=" << fmt17(spec.t) << " p=" << fmt17(spec.p)
             << " samples=" << scores.size() << " total_queries=" << total << "\n";
    all.insert(all.end(), scores.begin(), scores.end());
  }
  save_scores_csv(all, path_in(c, "scores.csv"));
  std::cout << "wrote " << path_in(c, "scores.csv") << " (" << all.size() << " rows, "
            << c.attacks.size() << " methods)\n";
}

void cmd_eval(const ExperimentConfig& c, const std::string& scores_path) {
  std::string path = scores_path.empty() ? path_in(c, "scores.csv") : scores_path;
  std::vector<AttackScore> all = load_scores_csv(path);
  if (all.empty()) throw invalid_argument_error("eval: no scores in " + path);
  std::map<std::string, std::vector<AttackScore>> by_method;
  for (const auto& s : all) by_method[method_label(s.method)].push_back(s);
  for (const auto& [label, scores] : by_method) {
    MetricsReport rep = make_report(scores, 0.0);
    std::string stem = "report_" + label;
    {
      std::ofstream os(path_in(c, stem + ".json"));
      if (!os) throw io_error("cannot open for writing: " + path_in(c, stem + ".json"));
      os << report_to_json(rep);
    }
    RocCurve curve = roc_curve(scores);
    log_roc_export(curve, path_in(c, "roc_" + label + ".csv"), path_in(c, "roc_" + label + ".svg"));
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s auc=%.4f tpr@1%%=%.4f tpr@0.1%%=%.4f queries=%lld\n",
                  label.c_str(), rep.auc, rep.tpr_at_1pct_fpr, rep.tpr_at_01pct_fpr,
                  rep.total_queries);
    std::cout << line;
  }
}

void cmd_sweep(const ExperimentConfig& c, std::vector<double> t_grid, std::vector<double> p_grid,
               const std::string& method) {
  Checkpoint ck = load_checkpoint(path_in(c, "checkpoint.bin"));
  Dataset ds = load_dataset(path_in(c, "dataset.bin"));
  Split sp = load_split(path_in(c, "split.json"));
  PreparedData d;
  d.ds = ds;
  d.split = sp;
  d.members = gather_rows(ds.samples, sp.member_ids);
  d.holdout = gather_rows(ds.samples, sp.holdout_ids);

  if (t_grid.empty()) t_grid = default_t_grid(ck.sched);
  if (p_grid.empty()) p_grid = {4.0};
  if (method.empty()) throw config_error("sweep: method must not be empty");
  method_from_label(method);

  std::string path = path_in(c, "sweep.csv");
  std::vector<SweepRow> rows = load_sweep_csv(path);
  auto done = [&](double t, double p) {
    return std::any_of(rows.begin(), rows.end(), [&](const SweepRow& r) {
      return r.t == t && r.p == p && r.method == method;
    });
  };
  int computed = 0;
  for (double t : t_grid)
    for (double p : p_grid) {
      if (done(t, p)) continue;
      AttackSpec spec;
      spec.method = method;
      spec.t = t;
      spec.p = p;
      rows.push_back(sweep_point(ck.model, ck.sched, d, spec));
      ++computed;
      save_sweep_csv(rows, path);  // keep the table resumable after interrupts
    }
  if (computed == 0) save_sweep_csv(rows, path);
  std::cout << "wrote " << path << " (" << rows.size() << " points, " << computed << " new)\n";
}

void cmd_report(const ExperimentConfig& c) {
  std::vector<fs::path> files;
  if (fs::exists(c.outdir))
    for (const auto& e : fs::directory_iterator(c.outdir)) {
      std::string name = e.path().filename().string();
      if (name.rfind("report_", 0) == 0 && name.size() > 5 &&
          name.substr(name.size() - 5) == ".json")
        files.push_back(e.path());
    }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cout << "no reports in " << c.outdir << "\n";
    return;
  }
  std::cout << "method        t        p    auc     tpr@1%  tpr@0.1%  queries\n";
  for (const auto& f : files) {
    std::ifstream is(f);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    MetricsReport r = report_from_json(text);
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %6.4g %6.4g  %.4f  %.4f  %.4f    %lld\n",
                  r.method.c_str(), r.t, r.p, r.auc, r.tpr_at_1pct_fpr, r.tpr_at_01pct_fpr,
                  r.total_queries);
    std::cout << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membership-inference attacks against a desk-scale diffusion stack"};
  app.require_subcommand(1);

  SubArgs gen_args, train_args, attack_args, eval_args, sweep_args, report_args;
  bool resume = false;
  std::string scores_path;
  std::vector<double> sweep_t, sweep_p;
  std::string sweep_method = "pia";

  CLI::App* gen = app.add_subcommand("gen", "generate dataset and member/holdout split");
  add_common_options(gen, gen_args);

  CLI::App* train = app.add_subcommand("train", "train the noise-prediction model");
  add_common_options(train, train_args);
  train->add_flag("--resume", resume, "start from the existing checkpoint");

  CLI::App* attack = app.add_subcommand("attack", "score members and holdouts");
  add_common_options(attack, attack_args);

  CLI::App* eval = app.add_subcommand("eval", "compute ROC/AUC reports from scores");
  add_common_options(eval, eval_args);
  eval->add_option("--scores", scores_path, "score csv (default <outdir>/scores.csv)");

  CLI::App* sweep = app.add_subcommand("sweep", "grid of attack times / norm orders");
  add_common_options(sweep, sweep_args);
  sweep->add_option("--ts", sweep_t, "attack times to sweep")->delimiter(',');
  sweep->add_option("--ps", sweep_p, "norm orders to sweep")->delimiter(',');
  sweep->add_option("--sweep-method", sweep_method, "method to sweep");

  CLI::App* report = app.add_subcommand("report", "print the report table");
  add_common_options(report, report_args);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) cmd_gen(resolve_config(gen_args));
    if (train->parsed()) cmd_train(resolve_config(train_args), resume);
    if (attack->parsed()) cmd_attack(resolve_config(attack_args));
    if (eval->parsed()) cmd_eval(resolve_config(eval_args), scores_path);
    if (sweep->parsed()) cmd_sweep(resolve_config(sweep_args), sweep_t, sweep_p, sweep_method);
    if (report->parsed()) cmd_report(resolve_config(report_args));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors
  } catch (const pialab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
