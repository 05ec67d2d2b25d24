#include "pialab/config.hpp"

#include <fstream>
#include <initializer_list>

#include <json.hpp>

#include "framing.hpp"
#include "pialab/errors.hpp"

namespace pialab {

namespace {

using nlohmann::json;

std::string join_key(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw config_error("unknown config key: " + join_key(where, item.key()));
  }
}

template <class T>
void take(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("config key has wrong type: " + join_key(where, key));
  }
}

json object_at(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return json::object();
  if (!j.at(key).is_object())
    throw config_error("config key has wrong type: " + join_key(where, key));
  return j.at(key);
}

}  // namespace

ExperimentConfig continuous_preset() {
  ExperimentConfig c;
  c.continuous = true;
  c.attacks = {{"pia-sde", 0.3, 4.0, 10, 4004}};
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["dataset"] = {{"kind", c.dataset_kind}, {"n", c.n}, {"dim", c.dim}, {"seed", c.dataset_seed}};
  j["split"] = {{"fraction", c.fraction}, {"seed", c.split_seed}};
  j["schedule"] = {{"continuous", c.continuous}, {"T", c.T},
                   {"beta_start", c.beta_start},  {"beta_end", c.beta_end},
                   {"beta_min", c.beta_min},      {"beta_max", c.beta_max}};
  j["training"] = {{"epochs", c.epochs},
                   {"batch", c.batch},
                   {"lr", c.lr},
                   {"seed", c.train_seed},
                   {"pool_multiplier", c.pool_multiplier},
                   {"budget_seconds", c.budget_seconds}};
  j["attacks"] = nlohmann::ordered_json::array();
  for (const auto& a : c.attacks)
    j["attacks"].push_back({{"method", a.method},
                            {"t", a.t},
                            {"p", a.p},
                            {"k_steps", a.k_steps},
                            {"seed", a.seed}});
  j["outdir"] = c.outdir;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config must be a json object");
  reject_unknown(j, {"dataset", "split", "schedule", "training", "attacks", "outdir"}, "");

  ExperimentConfig c;

  json d = object_at(j, "dataset", "");
  reject_unknown(d, {"kind", "n", "dim", "seed"}, "dataset");
  take(d, "kind", c.dataset_kind, "dataset");
  take(d, "n", c.n, "dataset");
  take(d, "dim", c.dim, "dataset");
  take(d, "seed", c.dataset_seed, "dataset");

  json s = object_at(j, "split", "");
  reject_unknown(s, {"fraction", "seed"}, "split");
  take(s, "fraction", c.fraction, "split");
  take(s, "seed", c.split_seed, "split");

  json sc = object_at(j, "schedule", "");
  reject_unknown(sc, {"continuous", "T", "beta_start", "beta_end", "beta_min", "beta_max"},
                 "schedule");
  take(sc, "continuous", c.continuous, "schedule");
  take(sc, "T", c.T, "schedule");
  take(sc, "beta_start", c.beta_start, "schedule");
  take(sc, "beta_end", c.beta_end, "schedule");
  take(sc, "beta_min", c.beta_min, "schedule");
  take(sc, "beta_max", c.beta_max, "schedule");

  json tr = object_at(j, "training", "");
  reject_unknown(tr, {"epochs", "batch", "lr", "seed", "pool_multiplier", "budget_seconds"},
                 "training");
  take(tr, "epochs", c.epochs, "training");
  take(tr, "batch", c.batch, "training");
  take(tr, "lr", c.lr, "training");
  take(tr, "seed", c.train_seed, "training");
  take(tr, "pool_multiplier", c.pool_multiplier, "training");
  take(tr, "budget_seconds", c.budget_seconds, "training");

  if (j.contains("attacks")) {
    if (!j.at("attacks").is_array()) throw config_error("config key has wrong type: attacks");
    c.attacks.clear();
    size_t idx = 0;
    for (const auto& aj : j.at("attacks")) {
      std::string where = "attacks[" + std::to_string(idx++) + "]";
      if (!aj.is_object()) throw config_error("config key has wrong type: " + where);
      reject_unknown(aj, {"method", "t", "p", "k_steps", "seed"}, where);
      AttackSpec a;
      take(aj, "method", a.method, where);
      take(aj, "t", a.t, where);
      take(aj, "p", a.p, where);
      take(aj, "k_steps", a.k_steps, where);
      take(aj, "seed", a.seed, where);
      c.attacks.push_back(a);
    }
  }

  take(j, "outdir", c.outdir, "");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is = detail::open_in(path, std::ios::in);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

void save_config(const ExperimentConfig& c, const std::string& path) {
  std::ofstream os = detail::open_out(path, std::ios::out);
  os << config_to_json(c);
  if (!os) throw io_error("write failed: " + path);
}

}  // namespace pialab
