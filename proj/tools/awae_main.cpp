/*
 * Copyright 2026 the awae authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// awae: prepare / synthesize / train / evaluate / compare / sweep for an
// autoencoder recommender with prior-matched, sparse-coded latents, plus
// its denoising and variational baselines.
//
// Every command is deterministic given its flags, config file, and seed.
// Exit codes: 0 success, 1 usage error, 2 data or numeric error.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "awae/baselines.hpp"
#include "awae/data.hpp"
#include "awae/errors.hpp"
#include "awae/kv.hpp"
#include "awae/metrics.hpp"
#include "awae/mlp.hpp"
#include "awae/trainer.hpp"

namespace {

using namespace awae;
namespace fs = std::filesystem;

// Shortest string that parses back to exactly the same double. Used for help
// text and resolved-config echoes, where both exactness and readability count.
std::string shortest_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_value(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + s + "'");
  }
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw UsageError("config key '" + key + "': expected a non-negative integer, got '" +
                     s + "'");
  }
  return v;
}

std::size_t parse_count_value(const std::string& key, const std::string& s) {
  return static_cast<std::size_t>(parse_u64_value(key, s));
}

bool parse_bool_value(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw UsageError("config key '" + key + "': expected true or false, got '" + s + "'");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::size_t> parse_r_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const std::string& piece : split_commas(s)) {
    const std::size_t r = parse_count_value("r list", piece);
    if (r == 0) throw UsageError("r list entries must be >= 1, got '" + piece + "'");
    out.push_back(r);
  }
  if (out.empty()) throw UsageError("r list must not be empty");
  return out;
}

// Relative run directories land under $AWAE_RUN_ROOT when it is set.
std::string resolve_run_path(const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute()) return path;
  const char* root = std::getenv("AWAE_RUN_ROOT");
  if (root == nullptr || *root == '\0') return path;
  return (fs::path(root) / p).string();
}

// ---------------------------------------------------------------------------
// Training configuration: one flat key=value namespace shared by the config
// file, --set overrides, and the sweep parameter.

struct TrainSettings {
  std::string model = "awae";  // awae | mult_dae | mult_vae
  TrainConfig cfg;
  double kl_anneal_cap = 0.2;      // mult_vae only
  std::size_t kl_anneal_steps = 10000;  // mult_vae only
};

struct ConfigKey {
  std::string key;
  std::string doc;
  std::function<std::string(const TrainSettings&)> render;
  std::function<void(TrainSettings&, const std::string&)> apply;
};

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"model", "awae | mult_dae | mult_vae",
       [](const TrainSettings& s) { return s.model; },
       [](TrainSettings& s, const std::string& v) {
         if (v != "awae" && v != "mult_dae" && v != "mult_vae") {
           throw UsageError("config key 'model': unknown model '" + v + "'");
         }
         s.model = v;
       }},
      {"cost", "reconstruction cost: multinomial | multinomial_nonclick | mil",
       [](const TrainSettings& s) { return std::string(to_string(s.cfg.objective.cost_kind)); },
       [](TrainSettings& s, const std::string& v) {
         try {
           s.cfg.objective.cost_kind = cost_kind_from_string(v);
         } catch (const DataError& e) {
           throw UsageError(std::string("config key 'cost': ") + e.what());
         }
       }},
      {"beta", "weight of the latent moment-matching term",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.beta); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.beta = parse_double_value("beta", v);
       }},
      {"alpha", "weight of the latent MMD term",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.alpha); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.alpha = parse_double_value("alpha", v);
       }},
      {"delta", "weight of the sparse-coding term; 0 disables the sparse subsystem",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.delta); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.delta = parse_double_value("delta", v);
       }},
      {"gamma", "non-click weight inside the multinomial_nonclick cost",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.gamma); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.gamma = parse_double_value("gamma", v);
       }},
      {"nonclick_complement",
       "use log(1 - x') instead of log x' for non-clicks in multinomial_nonclick",
       [](const TrainSettings& s) {
         return std::string(s.cfg.objective.nonclick_complement ? "true" : "false");
       },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.nonclick_complement = parse_bool_value("nonclick_complement", v);
       }},
      {"gamma_plus", "exponent on (1 - x') for clicked entries in the mil cost",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.gamma_plus); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.gamma_plus = parse_double_value("gamma_plus", v);
       }},
      {"a_mi", "amplifier on the mil near-one barrier term",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.a_mi); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.a_mi = parse_double_value("a_mi", v);
       }},
      {"gamma_mi", "half-exponent of the mil (x' - 0.5) barrier",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.gamma_mi); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.gamma_mi = parse_double_value("gamma_mi", v);
       }},
      {"lambda1", "sparse-coding residual weight",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.lambda1); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.lambda1 = parse_double_value("lambda1", v);
       }},
      {"lambda2", "sparse-coding l1 weight",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.lambda2); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.lambda2 = parse_double_value("lambda2", v);
       }},
      {"mmd_bandwidth", "bandwidth of the inverse-multiquadric MMD kernel",
       [](const TrainSettings& s) { return shortest_double(s.cfg.objective.mmd_bandwidth); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.objective.mmd_bandwidth = parse_double_value("mmd_bandwidth", v);
       }},
      {"hidden_dim", "width of the encoder/decoder hidden layer",
       [](const TrainSettings& s) { return std::to_string(s.cfg.hidden_dim); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.hidden_dim = parse_count_value("hidden_dim", v);
       }},
      {"latent_dim", "width of the latent code",
       [](const TrainSettings& s) { return std::to_string(s.cfg.latent_dim); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.latent_dim = parse_count_value("latent_dim", v);
       }},
      {"k_atoms", "dictionary atoms for the sparse coder; 0 means latent_dim / 2",
       [](const TrainSettings& s) { return std::to_string(s.cfg.k_atoms); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.k_atoms = parse_count_value("k_atoms", v);
       }},
      {"batch_size", "users per optimizer step (capped at the training-user count)",
       [](const TrainSettings& s) { return std::to_string(s.cfg.batch_size); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.batch_size = parse_count_value("batch_size", v);
       }},
      {"max_epochs", "hard epoch limit",
       [](const TrainSettings& s) { return std::to_string(s.cfg.max_epochs); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.max_epochs = parse_count_value("max_epochs", v);
       }},
      {"patience", "epochs without validation improvement before stopping",
       [](const TrainSettings& s) { return std::to_string(s.cfg.patience); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.patience = parse_count_value("patience", v);
       }},
      {"input_dropout", "input dropout probability during training",
       [](const TrainSettings& s) { return shortest_double(s.cfg.input_dropout); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.input_dropout = parse_double_value("input_dropout", v);
       }},
      {"noise_std", "additive Gaussian noise on the latent code during training",
       [](const TrainSettings& s) { return shortest_double(s.cfg.noise_std); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.noise_std = parse_double_value("noise_std", v);
       }},
      {"normalize_input", "l2-normalize each input row before dropout",
       [](const TrainSettings& s) {
         return std::string(s.cfg.normalize_input ? "true" : "false");
       },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.normalize_input = parse_bool_value("normalize_input", v);
       }},
      {"lr", "Adam learning rate",
       [](const TrainSettings& s) { return shortest_double(s.cfg.adam.lr); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.adam.lr = parse_double_value("lr", v);
       }},
      {"adam_beta1", "Adam first-moment decay",
       [](const TrainSettings& s) { return shortest_double(s.cfg.adam.beta1); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.adam.beta1 = parse_double_value("adam_beta1", v);
       }},
      {"adam_beta2", "Adam second-moment decay",
       [](const TrainSettings& s) { return shortest_double(s.cfg.adam.beta2); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.adam.beta2 = parse_double_value("adam_beta2", v);
       }},
      {"adam_eps", "Adam denominator floor",
       [](const TrainSettings& s) { return shortest_double(s.cfg.adam.eps); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.adam.eps = parse_double_value("adam_eps", v);
       }},
      {"admm_every", "optimizer steps between sparse code/dictionary refits",
       [](const TrainSettings& s) { return std::to_string(s.cfg.admm_every); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.admm_every = parse_count_value("admm_every", v);
       }},
      {"admm_tol", "ADMM stopping tolerance",
       [](const TrainSettings& s) { return shortest_double(s.cfg.admm.tol); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.admm.tol = parse_double_value("admm_tol", v);
       }},
      {"admm_max_iters", "ADMM iteration cap per refit",
       [](const TrainSettings& s) { return std::to_string(s.cfg.admm.max_iters); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.admm.max_iters = parse_count_value("admm_max_iters", v);
       }},
      {"rho", "ADMM penalty parameter",
       [](const TrainSettings& s) { return shortest_double(s.cfg.rho); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.rho = parse_double_value("rho", v);
       }},
      {"early_stop_metric", "validation metric, metric@R (ndcg@10, recall@20, ...)",
       [](const TrainSettings& s) { return s.cfg.early_stop_metric; },
       [](TrainSettings& s, const std::string& v) {
         parse_metric_at(v);  // validates; throws UsageError on junk
         s.cfg.early_stop_metric = v;
       }},
      {"seed", "master seed for init, shuffling, dropout, noise, and priors",
       [](const TrainSettings& s) { return std::to_string(s.cfg.seed); },
       [](TrainSettings& s, const std::string& v) {
         s.cfg.seed = parse_u64_value("seed", v);
       }},
      {"kl_anneal_cap", "mult_vae only: final KL weight after annealing",
       [](const TrainSettings& s) { return shortest_double(s.kl_anneal_cap); },
       [](TrainSettings& s, const std::string& v) {
         s.kl_anneal_cap = parse_double_value("kl_anneal_cap", v);
       }},
      {"kl_anneal_steps", "mult_vae only: optimizer steps to reach the KL cap",
       [](const TrainSettings& s) { return std::to_string(s.kl_anneal_steps); },
       [](TrainSettings& s, const std::string& v) {
         s.kl_anneal_steps = parse_count_value("kl_anneal_steps", v);
       }},
  };
  return schema;
}

void apply_config_key(TrainSettings& s, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_schema()) {
    if (k.key == key) {
      k.apply(s, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "' (see --help for the key list)");
}

void apply_config_file(TrainSettings& s, const std::string& path) {
  KvFile kv;
  try {
    kv = KvFile::load(path);
  } catch (const DataError& e) {
    throw UsageError(std::string("config file: ") + e.what());
  }
  for (const auto& [key, value] : kv.entries()) apply_config_key(s, key, value);
}

void apply_set_overrides(TrainSettings& s, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    apply_config_key(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

TrainSettings build_settings(const std::string& config_path,
                             const std::vector<std::string>& sets) {
  TrainSettings s;
  if (!config_path.empty()) apply_config_file(s, config_path);
  apply_set_overrides(s, sets);
  return s;
}

// The fully resolved configuration, echoed into every run directory so a run
// can be reproduced from its artifacts alone.
KvFile render_settings(const TrainSettings& s) {
  KvFile kv;
  for (const ConfigKey& k : config_schema()) kv.set(k.key, k.render(s));
  return kv;
}

std::string config_key_help() {
  const TrainSettings defaults;
  std::ostringstream os;
  os << "Config keys (config file lines and --set overrides):\n";
  for (const ConfigKey& k : config_schema()) {
    os << "  " << k.key << " = " << k.render(defaults) << "\n"
       << "      " << k.doc << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Dataset directory: train/ (ClickMatrix), val/ and test/ (HeldoutPair),
// summary (key=value).

ClickMatrix load_train_matrix(const std::string& data_dir) {
  return ClickMatrix::load((fs::path(data_dir) / "train").string());
}

HeldoutPair load_split(const std::string& data_dir, const std::string& split) {
  if (split != "val" && split != "test") {
    throw UsageError("--split must be val or test, got '" + split + "'");
  }
  return HeldoutPair::load((fs::path(data_dir) / split).string());
}

void write_dataset(const std::string& out_dir, const ClickMatrix& full,
                   const SplitResult& sr, KvFile summary) {
  fs::create_directories(out_dir);
  sr.train.save((fs::path(out_dir) / "train").string());
  sr.val.save((fs::path(out_dir) / "val").string());
  sr.test.save((fs::path(out_dir) / "test").string());

  const double denom = static_cast<double>(full.n_users()) *
                       static_cast<double>(full.n_items());
  summary.set_u64("n_users", full.n_users());
  summary.set_u64("n_items", full.n_items());
  summary.set_u64("n_interactions", full.total_clicks());
  summary.set_double("density", denom > 0 ? static_cast<double>(full.total_clicks()) / denom : 0.0);
  summary.set_u64("n_train_users", sr.train.n_users());
  summary.set_u64("n_val_users", sr.val.foldin.n_users());
  summary.set_u64("n_test_users", sr.test.foldin.n_users());
  summary.set_u64("dropped_val_users", sr.dropped_val_users);
  summary.set_u64("dropped_test_users", sr.dropped_test_users);
  summary.save((fs::path(out_dir) / "summary").string());

  if (sr.dropped_val_users > 0 || sr.dropped_test_users > 0) {
    std::cerr << "warning: dropped " << sr.dropped_val_users << " val and "
              << sr.dropped_test_users
              << " test users with fewer than 2 clicks\n";
  }
}

// ---------------------------------------------------------------------------
// Training and evaluation plumbing shared by train, compare, and sweep.

struct TrainOutcome {
  std::string model;
  MlpParams mlp;  // filled unless model == mult_vae
  VaeParams vae;  // filled when model == mult_vae
  TrainLog log;
};

TrainOutcome run_training(const TrainSettings& s, const ClickMatrix& train,
                          const HeldoutPair& val) {
  if (!s.cfg.run_dir.empty()) {
    fs::create_directories(s.cfg.run_dir);
    render_settings(s).save((fs::path(s.cfg.run_dir) / "config").string());
  }
  TrainOutcome out;
  out.model = s.model;
  if (s.model == "mult_vae") {
    VaeConfig vc;
    vc.base = s.cfg;
    vc.kl_anneal_cap = s.kl_anneal_cap;
    vc.anneal_steps = s.kl_anneal_steps;
    VaeResult r = train_mult_vae(train, val, vc);
    out.vae = std::move(r.params);
    out.log = std::move(r.log);
  } else if (s.model == "mult_dae") {
    TrainResult r = train_mult_dae(train, val, s.cfg);
    out.mlp = std::move(r.params);
    out.log = std::move(r.log);
  } else {
    TrainResult r = awae::train(train, val, s.cfg);
    out.mlp = std::move(r.params);
    out.log = std::move(r.log);
  }
  if (!s.cfg.run_dir.empty()) {
    KvFile result;
    result.set("model", s.model);
    result.set("early_stop_metric", s.cfg.early_stop_metric);
    result.set_u64("best_epoch", out.log.best_epoch);
    result.set_double("best_value", out.log.best_value);
    result.set_u64("epochs_run", out.log.epochs.size());
    result.save((fs::path(s.cfg.run_dir) / "result").string());
  }
  return out;
}

MetricTable evaluate_outcome(const TrainOutcome& out, const HeldoutPair& heldout,
                             const std::vector<std::size_t>& r_list) {
  if (out.model == "mult_vae") return evaluate_vae(out.vae, heldout, r_list);
  return evaluate(out.mlp, heldout, r_list);
}

// Accepts either a checkpoint directory (holds `shape`) or a run directory
// whose `best` marker names one.
std::string resolve_checkpoint(const std::string& path) {
  if (fs::exists(fs::path(path) / "shape")) return path;
  const fs::path marker = fs::path(path) / "best";
  if (fs::exists(marker)) {
    std::ifstream in(marker, std::ios::binary);
    std::string name;
    if (std::getline(in, name) && !name.empty()) {
      const fs::path ck = fs::path(path) / name;
      if (fs::exists(ck / "shape")) return ck.string();
      throw DataError("best marker in " + path + " names missing checkpoint '" + name + "'");
    }
    throw DataError("unreadable best marker in " + path);
  }
  throw DataError("no checkpoint at " + path +
                  " (expected a shape file or a run directory with a best marker)");
}

MetricTable evaluate_checkpoint(const std::string& checkpoint, const HeldoutPair& heldout,
                                const std::vector<std::size_t>& r_list,
                                std::string* kind_out = nullptr) {
  const std::string dir = resolve_checkpoint(checkpoint);
  const std::string kind = checkpoint_model_kind(dir);
  if (kind_out != nullptr) *kind_out = kind;
  if (kind == "mult_vae") {
    return evaluate_vae(load_vae_checkpoint(dir), heldout, r_list);
  }
  return evaluate(load_checkpoint(dir), heldout, r_list);
}

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + out_path);
  out << text;
}

std::string sanitize_for_dir(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands.

struct PrepareArgs {
  std::string input;
  std::string out_dir;
  double min_value = 1.0;
  std::size_t min_user_clicks = 5;
  std::size_t min_item_audience = 0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double foldin_fraction = 0.8;
  std::uint64_t seed = 0;
};

void cmd_prepare(const PrepareArgs& a) {
  std::ifstream in(a.input, std::ios::binary);
  if (!in) throw DataError("cannot open " + a.input);
  const std::vector<Interaction> records = read_interactions(in, a.input);
  const ClickMatrix full =
      ingest(records, a.min_value, a.min_user_clicks, a.min_item_audience);

  SplitSpec spec;
  spec.train_fraction = a.train_fraction;
  spec.val_fraction = a.val_fraction;
  spec.test_fraction = a.test_fraction;
  spec.foldin_fraction = a.foldin_fraction;
  spec.seed = a.seed;
  const SplitResult sr = split(full, spec);

  KvFile summary;
  summary.set("source", a.input);
  summary.set_double("min_value", a.min_value);
  summary.set_u64("min_user_clicks", a.min_user_clicks);
  summary.set_u64("min_item_audience", a.min_item_audience);
  summary.set_double("train_fraction", a.train_fraction);
  summary.set_double("val_fraction", a.val_fraction);
  summary.set_double("test_fraction", a.test_fraction);
  summary.set_double("foldin_fraction", a.foldin_fraction);
  summary.set_u64("seed", a.seed);
  write_dataset(a.out_dir, full, sr, std::move(summary));

  std::cout << "prepared " << a.out_dir << ": " << full.n_users() << " users, "
            << full.n_items() << " items, " << full.total_clicks()
            << " interactions\n";
}

struct SynthesizeArgs {
  std::string out_dir;
  std::size_t n_users = 200;
  std::size_t n_items = 100;
  std::size_t n_clusters = 4;
  std::size_t clicks_per_user = 20;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  double foldin_fraction = 0.8;
  std::uint64_t seed = 0;
};

void cmd_synthesize(const SynthesizeArgs& a) {
  const ClickMatrix full =
      synthesize(a.n_users, a.n_items, a.n_clusters, a.clicks_per_user, a.seed);

  SplitSpec spec;
  spec.train_fraction = a.train_fraction;
  spec.val_fraction = a.val_fraction;
  spec.test_fraction = a.test_fraction;
  spec.foldin_fraction = a.foldin_fraction;
  spec.seed = a.seed;
  const SplitResult sr = split(full, spec);

  fs::create_directories(a.out_dir);
  full.save((fs::path(a.out_dir) / "full").string());

  KvFile summary;
  summary.set("source", "synthesize");
  summary.set_u64("n_clusters", a.n_clusters);
  summary.set_u64("clicks_per_user", a.clicks_per_user);
  summary.set_double("train_fraction", a.train_fraction);
  summary.set_double("val_fraction", a.val_fraction);
  summary.set_double("test_fraction", a.test_fraction);
  summary.set_double("foldin_fraction", a.foldin_fraction);
  summary.set_u64("seed", a.seed);
  write_dataset(a.out_dir, full, sr, std::move(summary));

  std::cout << "synthesized " << a.out_dir << ": " << full.n_users()
            << " users, " << full.n_items() << " items, " << full.total_clicks()
            << " interactions\n";
}

struct TrainArgs {
  std::string data_dir;
  std::string config_path;
  std::vector<std::string> sets;
  std::string run_dir;
};

void cmd_train(const TrainArgs& a) {
  TrainSettings s = build_settings(a.config_path, a.sets);
  s.cfg.run_dir = resolve_run_path(a.run_dir);

  const ClickMatrix train = load_train_matrix(a.data_dir);
  const HeldoutPair val = load_split(a.data_dir, "val");
  std::cout << "training " << s.model << " on " << train.n_users() << " users x "
            << train.n_items() << " items (" << val.foldin.n_users()
            << " validation users)\n";

  const TrainOutcome out = run_training(s, train, val);
  for (const auto& row : out.log.epochs) {
    std::cout << "epoch " << row.epoch << " " << row.metric << "="
              << shortest_double(row.value) << (row.improved ? " *" : "") << "\n";
  }
  std::cout << "best epoch " << out.log.best_epoch << " "
            << s.cfg.early_stop_metric << "=" << shortest_double(out.log.best_value)
            << "\n";
  if (!s.cfg.run_dir.empty()) {
    std::cout << "artifacts in " << s.cfg.run_dir << "\n";
  } else {
    std::cout << "no --run-dir given; nothing was written\n";
  }
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "test";
  std::string r_list = "1,5,10,20,50,100";
  std::string format = "csv";
  std::string out_path;
};

void cmd_evaluate(const EvaluateArgs& a) {
  if (a.format != "csv" && a.format != "json") {
    throw UsageError("--format must be csv or json, got '" + a.format + "'");
  }
  const std::vector<std::size_t> r_list = parse_r_list(a.r_list);
  const HeldoutPair heldout = load_split(a.data_dir, a.split);
  const MetricTable table = evaluate_checkpoint(a.checkpoint, heldout, r_list);
  write_or_print(a.format == "json" ? table.to_json() : table.to_csv(), a.out_path);
}

struct CompareArgs {
  std::vector<std::string> checkpoints;  // label=path or bare path
  std::string data_dir;
  std::string split = "test";
  std::string r_list = "1,5,10,20,50,100";
  std::string out_path;
};

void cmd_compare(const CompareArgs& a) {
  const std::vector<std::size_t> r_list = parse_r_list(a.r_list);
  const HeldoutPair heldout = load_split(a.data_dir, a.split);

  std::vector<std::string> labels;
  std::vector<MetricTable> tables;
  for (const std::string& spec : a.checkpoints) {
    std::string label, path;
    const std::size_t eq = spec.find('=');
    if (eq != std::string::npos && eq > 0) {
      label = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    } else {
      path = spec;
    }
    std::string kind;
    tables.push_back(evaluate_checkpoint(path, heldout, r_list, &kind));
    if (label.empty()) label = kind;
    // Duplicate labels get a numeric suffix so rows stay distinguishable.
    std::string unique = label;
    std::size_t n = 1;
    while (std::find(labels.begin(), labels.end(), unique) != labels.end()) {
      unique = label + "_" + std::to_string(++n);
    }
    labels.push_back(unique);
  }

  std::ostringstream os;
  os << "model,metric,R,mean,n_users\n";
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (const auto& row : tables[i].rows) {
      os << labels[i] << "," << row.metric << "," << row.r << ","
         << format_double(row.mean) << "," << row.n_users << "\n";
    }
  }
  write_or_print(os.str(), a.out_path);
}

struct SweepArgs {
  std::string data_dir;
  std::string config_path;
  std::vector<std::string> sets;
  std::string param;
  std::string values;  // comma separated
  std::string out_dir;
  std::string split = "val";
  std::string r_list = "1,5,10,20,50,100";
  std::size_t workers = 1;
};

void cmd_sweep(const SweepArgs& a) {
  const std::vector<std::size_t> r_list = parse_r_list(a.r_list);
  const std::vector<std::string> values = split_commas(a.values);
  if (values.size() == 1 && values[0].empty()) {
    throw UsageError("--values must list at least one value");
  }
  const TrainSettings base = build_settings(a.config_path, a.sets);
  {
    TrainSettings probe = base;  // reject an unknown/garbled param up front
    apply_config_key(probe, a.param, values[0]);
  }

  const std::string out_root = resolve_run_path(a.out_dir);
  fs::create_directories(out_root);
  const ClickMatrix train = load_train_matrix(a.data_dir);
  const HeldoutPair val = load_split(a.data_dir, "val");
  const HeldoutPair* eval_split = &val;
  HeldoutPair test;
  if (a.split == "test") {
    test = load_split(a.data_dir, "test");
    eval_split = &test;
  } else if (a.split != "val") {
    throw UsageError("--split must be val or test, got '" + a.split + "'");
  }

  std::vector<MetricTable> tables(values.size());
  std::vector<std::exception_ptr> failures(values.size());
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;

  auto run_one = [&](std::size_t i) {
    TrainSettings s = base;
    apply_config_key(s, a.param, values[i]);
    s.cfg.run_dir =
        (fs::path(out_root) / (sanitize_for_dir(a.param) + "_" + sanitize_for_dir(values[i])))
            .string();
    const TrainOutcome out = run_training(s, train, val);
    tables[i] = evaluate_outcome(out, *eval_split, r_list);
    const std::lock_guard<std::mutex> lock(io_mutex);
    std::cout << a.param << "=" << values[i] << " best epoch " << out.log.best_epoch
              << " " << s.cfg.early_stop_metric << "="
              << shortest_double(out.log.best_value) << "\n";
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(a.workers, values.size()));
  if (n_workers == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_one(i);
  } else {
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < values.size(); i = next.fetch_add(1)) {
        try {
          run_one(i);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : failures) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::ostringstream os;
  os << "param,param_value,metric,R,mean\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (const auto& row : tables[i].rows) {
      os << a.param << "," << values[i] << "," << row.metric << "," << row.r << ","
         << format_double(row.mean) << "\n";
    }
  }
  const std::string csv_path = (fs::path(out_root) / "sweep.csv").string();
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw DataError("cannot write " + csv_path);
  csv << os.str();
  std::cout << "sweep table in " << csv_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Autoencoder recommenders for implicit feedback: data preparation,\n"
      "training (awae, mult_dae, mult_vae), ranking evaluation, model\n"
      "comparison, and hyperparameter sweeps.\n\n"
      "Relative run directories are placed under $AWAE_RUN_ROOT when set.\n"
      "Exit codes: 0 success, 1 usage error, 2 data or numeric error."};
  app.require_subcommand(1);

  PrepareArgs prep;
  CLI::App* p_prep = app.add_subcommand(
      "prepare", "Ingest a user,item[,value] log and write train/val/test splits");
  p_prep->add_option("--input", prep.input, "interaction log (csv or tsv, with header)")
      ->required();
  p_prep->add_option("--out", prep.out_dir, "output dataset directory")->required();
  p_prep->add_option("--min-value", prep.min_value,
                     "keep records with value >= this before binarizing")
      ->capture_default_str();
  p_prep->add_option("--min-user-clicks", prep.min_user_clicks,
                     "drop users with fewer clicks")
      ->capture_default_str();
  p_prep->add_option("--min-item-audience", prep.min_item_audience,
                     "drop items clicked by fewer distinct users")
      ->capture_default_str();
  p_prep->add_option("--train-fraction", prep.train_fraction, "user share for training")
      ->capture_default_str();
  p_prep->add_option("--val-fraction", prep.val_fraction, "user share for validation")
      ->capture_default_str();
  p_prep->add_option("--test-fraction", prep.test_fraction, "user share for testing")
      ->capture_default_str();
  p_prep->add_option("--foldin-fraction", prep.foldin_fraction,
                     "share of a held-out user's clicks revealed at scoring time")
      ->capture_default_str();
  p_prep->add_option("--seed", prep.seed, "split seed")->capture_default_str();

  SynthesizeArgs synth;
  CLI::App* p_synth = app.add_subcommand(
      "synthesize", "Generate a clustered synthetic dataset and split it");
  p_synth->add_option("--out", synth.out_dir, "output dataset directory")->required();
  p_synth->add_option("--users", synth.n_users, "number of users")->capture_default_str();
  p_synth->add_option("--items", synth.n_items, "number of items")->capture_default_str();
  p_synth->add_option("--clusters", synth.n_clusters, "number of item clusters")
      ->capture_default_str();
  p_synth->add_option("--clicks", synth.clicks_per_user, "clicks per user")
      ->capture_default_str();
  p_synth->add_option("--train-fraction", synth.train_fraction, "user share for training")
      ->capture_default_str();
  p_synth->add_option("--val-fraction", synth.val_fraction, "user share for validation")
      ->capture_default_str();
  p_synth->add_option("--test-fraction", synth.test_fraction, "user share for testing")
      ->capture_default_str();
  p_synth->add_option("--foldin-fraction", synth.foldin_fraction,
                      "share of a held-out user's clicks revealed at scoring time")
      ->capture_default_str();
  p_synth->add_option("--seed", synth.seed, "generator and split seed")
      ->capture_default_str();

  TrainArgs tr;
  CLI::App* p_train =
      app.add_subcommand("train", "Train a model and write run artifacts");
  p_train->add_option("--data", tr.data_dir, "dataset directory from prepare/synthesize")
      ->required();
  p_train->add_option("--config", tr.config_path, "key=value config file");
  p_train->add_option("--set", tr.sets, "override one config key (repeatable)");
  p_train->add_option("--run-dir", tr.run_dir,
                      "run directory for logs and checkpoints (omit to skip artifacts)");
  p_train->footer(config_key_help());

  EvaluateArgs ev;
  CLI::App* p_eval =
      app.add_subcommand("evaluate", "Score a checkpoint on a held-out split");
  p_eval->add_option("--checkpoint", ev.checkpoint,
                     "checkpoint directory, or a run directory with a best marker")
      ->required();
  p_eval->add_option("--data", ev.data_dir, "dataset directory")->required();
  p_eval->add_option("--split", ev.split, "val or test")->capture_default_str();
  p_eval->add_option("--r", ev.r_list, "comma-separated ranking cutoffs")
      ->capture_default_str();
  p_eval->add_option("--format", ev.format, "csv or json")->capture_default_str();
  p_eval->add_option("--out", ev.out_path, "write the table here instead of stdout");

  CompareArgs cmp;
  CLI::App* p_cmp = app.add_subcommand(
      "compare", "Evaluate several checkpoints on one split, one row per model/metric");
  p_cmp->add_option("checkpoints", cmp.checkpoints,
                    "checkpoints as label=path or bare path (label defaults to model kind)")
      ->required()
      ->expected(-1);
  p_cmp->add_option("--data", cmp.data_dir, "dataset directory")->required();
  p_cmp->add_option("--split", cmp.split, "val or test")->capture_default_str();
  p_cmp->add_option("--r", cmp.r_list, "comma-separated ranking cutoffs")
      ->capture_default_str();
  p_cmp->add_option("--out", cmp.out_path, "write the table here instead of stdout");

  SweepArgs sw;
  CLI::App* p_sweep = app.add_subcommand(
      "sweep", "Train once per value of one config key and tabulate the metrics");
  p_sweep->add_option("--data", sw.data_dir, "dataset directory")->required();
  p_sweep->add_option("--config", sw.config_path, "key=value config file");
  p_sweep->add_option("--set", sw.sets, "override one config key (repeatable)");
  p_sweep->add_option("--param", sw.param, "config key to sweep")->required();
  p_sweep->add_option("--values", sw.values, "comma-separated values for the key")
      ->required();
  p_sweep->add_option("--out-dir", sw.out_dir,
                      "directory for per-value run dirs and sweep.csv")
      ->required();
  p_sweep->add_option("--split", sw.split, "evaluation split, val or test")
      ->capture_default_str();
  p_sweep->add_option("--r", sw.r_list, "comma-separated ranking cutoffs")
      ->capture_default_str();
  p_sweep->add_option("--workers", sw.workers,
                      "parallel training workers (runs stay independent)")
      ->capture_default_str();
  p_sweep->footer(config_key_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*p_prep) cmd_prepare(prep);
    if (*p_synth) cmd_synthesize(synth);
    if (*p_train) cmd_train(tr);
    if (*p_eval) cmd_evaluate(ev);
    if (*p_cmp) cmd_compare(cmp);
    if (*p_sweep) cmd_sweep(sw);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
