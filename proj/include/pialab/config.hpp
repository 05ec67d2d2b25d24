#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pialab {

// One attack to run. t is a step index for discrete schedules and a real in
// (0, 1] for the continuous one; k_steps applies to secmi-style only and
// seed to na only.
struct AttackSpec {
  std::string method = "pia";
  double t = 20.0;
  double p = 4.0;
  int k_steps = 10;
  std::uint64_t seed = 4004;
};

// Whole-experiment manifest. Defaults are the bundled overfit preset: 2-D
// four-corner gaussian mixture, 128 of 256 samples selected and split 64/64,
// T=100 discrete schedule, 2000 pool epochs, attacks at t=20 with p=4.
struct ExperimentConfig {
  // dataset
  std::string dataset_kind = "gaussian-mixture";
  int n = 256;
  int dim = 2;
  std::uint64_t dataset_seed = 1001;

  // split
  double fraction = 0.5;
  std::uint64_t split_seed = 2002;

  // schedule (beta_start/beta_end drive the discrete table; beta_min/beta_max
  // the continuous variance-preserving one)
  bool continuous = false;
  int T = 100;
  double beta_start = 1e-4;
  double beta_end = 2e-3;
  double beta_min = 0.1;
  double beta_max = 20.0;

  // training
  int epochs = 2000;
  int batch = 640;
  double lr = 5e-3;
  std::uint64_t train_seed = 3003;
  int pool_multiplier = 100;
  double budget_seconds = 600.0;

  // attacks (defaults cover the four discrete methods of the preset)
  std::vector<AttackSpec> attacks = {
      {"na", 20.0, 2.0, 10, 4004},
      {"secmi-style", 20.0, 4.0, 10, 4004},
      {"pia", 20.0, 4.0, 10, 4004},
      {"pian", 20.0, 4.0, 10, 4004},
  };

  std::string outdir = "out";
};

// Continuous-time variant of the preset: same data and budget, VP schedule,
// single pia-sde attack at t=0.3.
ExperimentConfig continuous_preset();

std::string config_to_json(const ExperimentConfig& c);
// Rejects unknown keys at any nesting level; missing keys keep defaults.
ExperimentConfig config_from_json(const std::string& text);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& c, const std::string& path);

}  // namespace pialab
