#include "pialab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "framing.hpp"
#include "pialab/errors.hpp"

namespace pialab {

NoiseSchedule schedule_from_config(const ExperimentConfig& c) {
  return c.continuous ? make_vp_schedule(c.beta_min, c.beta_max)
                      : make_linear_schedule(c.T, c.beta_start, c.beta_end);
}

PreparedData prepare_data(const ExperimentConfig& c) {
  PreparedData d;
  d.ds = gen_dataset(kind_from_label(c.dataset_kind), c.n, c.dim, c.dataset_seed);
  d.split = make_split(d.ds, c.fraction, c.split_seed);
  d.members = gather_rows(d.ds.samples, d.split.member_ids);
  d.holdout = gather_rows(d.ds.samples, d.split.holdout_ids);
  return d;
}

TrainResult train_from_config(const ExperimentConfig& c, const PreparedData& data) {
  TrainResult r;
  r.sched = schedule_from_config(c);
  r.model = EpsilonModel::init(c.dim, c.train_seed);
  TrainOptions opt;
  opt.epochs = c.epochs;
  opt.batch = c.batch;
  opt.lr = c.lr;
  opt.seed = c.train_seed;
  opt.pool_multiplier = c.pool_multiplier;
  opt.budget_seconds = c.budget_seconds;
  r.loss_trace = train(r.model, data.members, r.sched, opt);
  return r;
}

int worker_count() {
  if (const char* env = std::getenv("PIALAB_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

AttackScore score_one(EpsilonModel& model, const NoiseSchedule& sched,
                      const Eigen::RowVectorXd& x0, long long id, const AttackSpec& spec,
                      AttackMethod m) {
  int ti = static_cast<int>(std::llround(spec.t));
  switch (m) {
    case AttackMethod::naive: {
      // per-sample noise stream derived from the attack seed, so scores do not
      // depend on scoring order or worker count
      std::uint64_t seed = Rng(spec.seed).split(static_cast<std::uint64_t>(id)).seed();
      return naive_attack(model, x0, ti, sched, spec.p, seed);
    }
    case AttackMethod::pia:
      return pia_score(model, x0, ti, sched, spec.p);
    case AttackMethod::pian:
      return pian_score(model, x0, ti, sched, spec.p);
    case AttackMethod::secmi_style:
      return secmi_score(model, x0, ti, spec.k_steps, sched, spec.p);
    case AttackMethod::pia_sde: {
      VpSde sde(sched);
      return pia_sde_score(model, sde, x0, spec.t, spec.p);
    }
  }
  throw invalid_argument_error("score_one: unknown method");
}

}  // namespace

std::vector<AttackScore> score_split(const EpsilonModel& model, const NoiseSchedule& sched,
                                     const PreparedData& data, const AttackSpec& spec) {
  AttackMethod m = method_from_label(spec.method);
  if (m == AttackMethod::pia_sde) {
    if (!sched.continuous)
      throw invalid_argument_error("attack 'pia-sde' needs a continuous schedule");
  } else {
    if (sched.continuous)
      throw invalid_argument_error("attack '" + spec.method + "' needs a discrete schedule");
    if (static_cast<double>(std::llround(spec.t)) != spec.t)
      throw invalid_argument_error("attack t must be an integer step on a discrete schedule");
  }

  struct Task {
    long long id;
    bool member;
    long long row;
  };
  std::vector<Task> tasks;
  tasks.reserve(data.split.member_ids.size() + data.split.holdout_ids.size());
  for (size_t i = 0; i < data.split.member_ids.size(); ++i)
    tasks.push_back({data.split.member_ids[i], true, static_cast<long long>(i)});
  for (size_t i = 0; i < data.split.holdout_ids.size(); ++i)
    tasks.push_back({data.split.holdout_ids[i], false, static_cast<long long>(i)});

  std::vector<AttackScore> out(tasks.size());
  std::atomic<size_t> next{0};
  auto run = [&](EpsilonModel& local) {
    for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const Task& tk = tasks[i];
      Eigen::RowVectorXd x0 =
          tk.member ? data.members.row(tk.row) : data.holdout.row(tk.row);
      AttackScore s = score_one(local, sched, x0, tk.id, spec, m);
      s.sample_id = tk.id;
      s.is_member = tk.member;
      out[i] = s;
    }
  };

  int workers = std::min<int>(worker_count(), static_cast<int>(tasks.size()));
  long long consumed = 0;
  if (workers <= 1) {
    EpsilonModel local(model);
    long long c0 = local.query_count();
    run(local);
    consumed = local.query_count() - c0;
  } else {
    // each worker queries a private copy so per-sample query deltas are exact
    std::vector<EpsilonModel> locals(static_cast<size_t>(workers), model);
    std::vector<long long> before(static_cast<size_t>(workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      before[static_cast<size_t>(w)] = locals[static_cast<size_t>(w)].query_count();
      threads.emplace_back([&, w] {
        try {
          run(locals[static_cast<size_t>(w)]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
    for (int w = 0; w < workers; ++w)
      consumed += locals[static_cast<size_t>(w)].query_count() - before[static_cast<size_t>(w)];
  }
  model.add_queries(consumed);

  std::sort(out.begin(), out.end(),
            [](const AttackScore& a, const AttackScore& b) { return a.sample_id < b.sample_id; });
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw format_error("");
    return v;
  } catch (const std::exception&) {
    throw format_error("malformed number in " + what + ": '" + s + "'");
  }
}

long long parse_ll(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw format_error("");
    return v;
  } catch (const std::exception&) {
    throw format_error("malformed integer in " + what + ": '" + s + "'");
  }
}

constexpr const char* kScoresHeader = "sample_id,is_member,method,t,p,score,queries";
constexpr const char* kSweepHeader = "t,p,method,auc,tpr_at_1pct_fpr,tpr_at_01pct_fpr";

}  // namespace

void save_scores_csv(const std::vector<AttackScore>& scores, const std::string& path) {
  std::vector<AttackScore> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), [](const AttackScore& a, const AttackScore& b) {
    if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
    return std::string(method_label(a.method)) < method_label(b.method);
  });
  std::ofstream os = detail::open_out(path, std::ios::out);
  os << kScoresHeader << "\n";
  for (const auto& s : sorted)
    os << s.sample_id << "," << (s.is_member ? 1 : 0) << "," << method_label(s.method) << ","
       << fmt17(s.t) << "," << fmt17(s.p) << "," << fmt17(s.score) << "," << s.queries << "\n";
  if (!os) throw io_error("write failed: " + path);
}

std::vector<AttackScore> load_scores_csv(const std::string& path) {
  std::ifstream is = detail::open_in(path, std::ios::in);
  std::string line;
  if (!std::getline(is, line) || line != kScoresHeader)
    throw format_error("scores csv: bad header in " + path);
  std::vector<AttackScore> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_row(line);
    if (cells.size() != 7) throw format_error("scores csv: wrong column count");
    AttackScore s;
    s.sample_id = parse_ll(cells[0], "sample_id");
    long long member = parse_ll(cells[1], "is_member");
    if (member != 0 && member != 1) throw format_error("scores csv: is_member must be 0 or 1");
    s.is_member = member == 1;
    s.method = method_from_label(cells[2]);
    s.t = parse_double(cells[3], "t");
    s.p = parse_double(cells[4], "p");
    s.score = parse_double(cells[5], "score");
    s.queries = parse_ll(cells[6], "queries");
    out.push_back(s);
  }
  return out;
}

std::vector<double> default_t_grid(const NoiseSchedule& sched) {
  std::vector<double> ts;
  if (sched.continuous) {
    for (int i = 1; i <= 100; ++i) ts.push_back(static_cast<double>(i) / 100.0);
  } else {
    int step = std::max(1, static_cast<int>(std::llround(0.01 * sched.T)));
    for (int t = 0; t <= sched.T; t += step) ts.push_back(static_cast<double>(t));
  }
  return ts;
}

SweepRow sweep_point(const EpsilonModel& model, const NoiseSchedule& sched,
                     const PreparedData& data, const AttackSpec& spec) {
  std::vector<AttackScore> scores = score_split(model, sched, data, spec);
  MetricsReport rep = make_report(scores, 0.0);
  SweepRow row;
  row.t = spec.t;
  row.p = spec.p;
  row.method = spec.method;
  row.auc = rep.auc;
  row.tpr_at_1pct_fpr = rep.tpr_at_1pct_fpr;
  row.tpr_at_01pct_fpr = rep.tpr_at_01pct_fpr;
  return row;
}

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::vector<SweepRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.p != b.p) return a.p < b.p;
    return a.method < b.method;
  });
  std::ofstream os = detail::open_out(path, std::ios::out);
  os << kSweepHeader << "\n";
  for (const auto& r : sorted)
    os << fmt17(r.t) << "," << fmt17(r.p) << "," << r.method << "," << fmt17(r.auc) << ","
       << fmt17(r.tpr_at_1pct_fpr) << "," << fmt17(r.tpr_at_01pct_fpr) << "\n";
  if (!os) throw io_error("write failed: " + path);
}

std::vector<SweepRow> load_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) return {};  // fresh sweep
  std::string line;
  if (!std::getline(is, line) || line != kSweepHeader)
    throw format_error("sweep csv: bad header in " + path);
  std::vector<SweepRow> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_row(line);
    if (cells.size() != 6) throw format_error("sweep csv: wrong column count");
    SweepRow r;
    r.t = parse_double(cells[0], "t");
    r.p = parse_double(cells[1], "p");
    r.method = cells[2];
    method_from_label(r.method);  // validate
    r.auc = parse_double(cells[3], "auc");
    r.tpr_at_1pct_fpr = parse_double(cells[4], "tpr_at_1pct_fpr");
    r.tpr_at_01pct_fpr = parse_double(cells[5], "tpr_at_01pct_fpr");
    out.push_back(r);
  }
  return out;
}

}  // namespace pialab
