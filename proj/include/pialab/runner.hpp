#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pialab/attacks.hpp"
#include "pialab/config.hpp"
#include "pialab/data.hpp"
#include "pialab/eval.hpp"
#include "pialab/model.hpp"
#include "pialab/schedule.hpp"
#include "pialab/train.hpp"

namespace pialab {

NoiseSchedule schedule_from_config(const ExperimentConfig& c);

struct PreparedData {
  Dataset ds;
  Split split;
  Eigen::MatrixXd members;
  Eigen::MatrixXd holdout;
};

PreparedData prepare_data(const ExperimentConfig& c);

struct TrainResult {
  EpsilonModel model;
  NoiseSchedule sched;
  std::vector<double> loss_trace;
};

// Fresh init + pool training on the member rows, honoring the config budget.
TrainResult train_from_config(const ExperimentConfig& c, const PreparedData& data);

// Worker cap: PIALAB_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

// Scores every member and holdout sample with one attack spec. Fans out over
// samples when workers > 1; each worker queries its own model copy so query
// deltas stay exact, and results come back sorted by sample id either way.
std::vector<AttackScore> score_split(const EpsilonModel& model, const NoiseSchedule& sched,
                                     const PreparedData& data, const AttackSpec& spec);

void save_scores_csv(const std::vector<AttackScore>& scores, const std::string& path);
std::vector<AttackScore> load_scores_csv(const std::string& path);

struct SweepRow {
  double t = 0.0;
  double p = 2.0;
  std::string method;
  double auc = 0.0;
  double tpr_at_1pct_fpr = 0.0;
  double tpr_at_01pct_fpr = 0.0;
};

// Attack times swept by default: every 1% of the schedule, including both
// endpoints for discrete schedules (t=0 scores are degenerate ties, anchoring
// the left edge of the curve at AUC 1/2); (0, 1] in steps of 0.01 for
// continuous ones.
std::vector<double> default_t_grid(const NoiseSchedule& sched);

SweepRow sweep_point(const EpsilonModel& model, const NoiseSchedule& sched,
                     const PreparedData& data, const AttackSpec& spec);

void save_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
// Missing file -> empty table (fresh sweep).
std::vector<SweepRow> load_sweep_csv(const std::string& path);

}  // namespace pialab
