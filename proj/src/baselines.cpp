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
#include "awae/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include "awae/errors.hpp"
#include "awae/kv.hpp"
#include "awae/rng.hpp"

namespace awae {

TrainResult train_mult_dae(const ClickMatrix& data, const HeldoutPair& val,
                           TrainConfig cfg) {
  cfg.objective.cost_kind = CostKind::kMultinomial;
  cfg.objective.beta = 0.0;
  cfg.objective.alpha = 0.0;
  cfg.objective.delta = 0.0;
  cfg.objective.gamma = 0.0;
  cfg.noise_std = 0.0;
  return train(data, val, cfg);
}

// ---------------------------------------------------------------------------
// Mult-VAE

std::vector<DenseMatrix*> VaeParams::tensor_list() {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

std::vector<const DenseMatrix*> VaeParams::tensor_list() const {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

const std::vector<std::string>& VaeParams::tensor_names() {
  return MlpParams::tensor_names();
}

std::vector<DenseMatrix*> VaeGrads::tensor_list() {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

std::vector<const DenseMatrix*> VaeGrads::tensor_list() const {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

namespace {

void glorot(DenseMatrix& w, std::size_t fan_in, std::size_t fan_out,
            std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : w.raw()) v = dist(rng);
}

}  // namespace

VaeParams init_vae_params(std::size_t n_items, std::size_t hidden_dim,
                          std::size_t latent_dim, bool normalize_input,
                          std::uint64_t seed) {
  if (n_items == 0 || hidden_dim == 0 || latent_dim == 0) {
    throw NumericError("init_vae_params: zero dimension");
  }
  VaeParams p;
  p.n_items = n_items;
  p.hidden_dim = hidden_dim;
  p.latent_dim = latent_dim;
  p.normalize_input = normalize_input;
  p.enc_w1 = DenseMatrix(n_items, hidden_dim);
  p.enc_b1 = DenseMatrix(1, hidden_dim);
  p.enc_w2 = DenseMatrix(hidden_dim, 2 * latent_dim);
  p.enc_b2 = DenseMatrix(1, 2 * latent_dim);
  p.dec_w1 = DenseMatrix(latent_dim, hidden_dim);
  p.dec_b1 = DenseMatrix(1, hidden_dim);
  p.dec_w2 = DenseMatrix(hidden_dim, n_items);
  p.dec_b2 = DenseMatrix(1, n_items);

  std::mt19937_64 rng = make_rng(seed, /*stream=*/11);
  glorot(p.enc_w1, n_items, hidden_dim, rng);
  glorot(p.enc_w2, hidden_dim, 2 * latent_dim, rng);
  glorot(p.dec_w1, latent_dim, hidden_dim, rng);
  glorot(p.dec_w2, hidden_dim, n_items, rng);
  return p;
}

VaeTape forward_vae(const VaeParams& p, const DenseMatrix& batch,
                    const EncodeOptions& opts, std::mt19937_64& rng,
                    const DenseMatrix* fixed_eps) {
  if (batch.cols() != p.n_items) {
    throw NumericError("forward_vae: batch width mismatch");
  }
  VaeTape tape;
  tape.input = batch;
  tape.input_used = batch;

  if (p.normalize_input) {
    for (std::size_t i = 0; i < tape.input_used.rows(); ++i) {
      double* row = tape.input_used.row_ptr(i);
      double sq = 0.0;
      for (std::size_t j = 0; j < tape.input_used.cols(); ++j) sq += row[j] * row[j];
      if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t j = 0; j < tape.input_used.cols(); ++j) row[j] *= inv;
      }
    }
  }
  if (opts.training && opts.input_dropout > 0.0) {
    const double keep = 1.0 - opts.input_dropout;
    std::bernoulli_distribution drop(opts.input_dropout);
    for (auto& v : tape.input_used.raw()) v = drop(rng) ? 0.0 : v / keep;
  }

  tape.enc_h = matmul(tape.input_used, p.enc_w1);
  add_row_vector(tape.enc_h, p.enc_b1);
  for (auto& v : tape.enc_h.raw()) v = std::tanh(v);

  DenseMatrix stats = matmul(tape.enc_h, p.enc_w2);
  add_row_vector(stats, p.enc_b2);

  const std::size_t n = batch.rows(), h = p.latent_dim;
  tape.mu = DenseMatrix(n, h);
  tape.logvar = DenseMatrix(n, h);
  for (std::size_t i = 0; i < n; ++i) {
    const double* srow = stats.row_ptr(i);
    for (std::size_t j = 0; j < h; ++j) {
      tape.mu.at(i, j) = srow[j];
      tape.logvar.at(i, j) = srow[h + j];
    }
  }

  tape.eps = DenseMatrix(n, h);
  tape.z = tape.mu;
  if (opts.training) {
    if (fixed_eps) {
      if (!fixed_eps->same_shape(tape.eps)) {
        throw NumericError("forward_vae: fixed_eps shape mismatch");
      }
      tape.eps = *fixed_eps;
    } else {
      std::normal_distribution<double> unit(0.0, 1.0);
      for (auto& v : tape.eps.raw()) v = unit(rng);
    }
    for (std::size_t i = 0; i < tape.z.size(); ++i) {
      tape.z.raw()[i] += std::exp(0.5 * tape.logvar.raw()[i]) * tape.eps.raw()[i];
    }
  }

  tape.dec_h = matmul(tape.z, p.dec_w1);
  add_row_vector(tape.dec_h, p.dec_b1);
  for (auto& v : tape.dec_h.raw()) v = std::tanh(v);

  tape.logits = matmul(tape.dec_h, p.dec_w2);
  add_row_vector(tape.logits, p.dec_b2);

  tape.output = tape.logits;
  for (std::size_t i = 0; i < tape.output.rows(); ++i) {
    double* row = tape.output.row_ptr(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < tape.output.cols(); ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < tape.output.cols(); ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < tape.output.cols(); ++j) row[j] *= inv;
  }
  return tape;
}

TermResult vae_kl(const DenseMatrix& mu, const DenseMatrix& logvar) {
  if (!mu.same_shape(logvar)) throw NumericError("vae_kl: shape mismatch");
  if (mu.rows() == 0) throw NumericError("vae_kl: empty batch");
  const double inv_n = 1.0 / static_cast<double>(mu.rows());

  TermResult res;
  res.grad = DenseMatrix(mu.rows(), 2 * mu.cols());  // [d_mu | d_logvar]
  double value = 0.0;
  for (std::size_t i = 0; i < mu.rows(); ++i) {
    const double* m = mu.row_ptr(i);
    const double* lv = logvar.row_ptr(i);
    double* g = res.grad.row_ptr(i);
    for (std::size_t j = 0; j < mu.cols(); ++j) {
      const double ev = std::exp(lv[j]);
      value += 0.5 * (m[j] * m[j] + ev - lv[j] - 1.0);
      g[j] = m[j] * inv_n;
      g[mu.cols() + j] = 0.5 * (ev - 1.0) * inv_n;
    }
  }
  res.value = value * inv_n;
  return res;
}

VaeGrads backward_vae(const VaeParams& p, const VaeTape& tape,
                      const DenseMatrix& d_logits, double beta_t) {
  VaeGrads g;

  g.dec_w2 = matmul_at_b(tape.dec_h, d_logits);
  g.dec_b2 = col_sums(d_logits);

  DenseMatrix d_dec_pre = matmul_a_bt(d_logits, p.dec_w2);
  for (std::size_t i = 0; i < d_dec_pre.size(); ++i) {
    const double h = tape.dec_h.raw()[i];
    d_dec_pre.raw()[i] *= 1.0 - h * h;
  }
  g.dec_w1 = matmul_at_b(tape.z, d_dec_pre);
  g.dec_b1 = col_sums(d_dec_pre);

  DenseMatrix d_z = matmul_a_bt(d_dec_pre, p.dec_w1);

  // Reparameterization: z = mu + exp(logvar/2) eps, so dz/dmu = 1 and
  // dz/dlogvar = z_noise/2. KL gradients enter here scaled by beta_t.
  const TermResult kl = vae_kl(tape.mu, tape.logvar);
  const std::size_t n = tape.mu.rows(), h = tape.mu.cols();
  DenseMatrix d_stats(n, 2 * h);
  for (std::size_t i = 0; i < n; ++i) {
    const double* dz = d_z.row_ptr(i);
    const double* lv = tape.logvar.row_ptr(i);
    const double* ep = tape.eps.row_ptr(i);
    const double* klg = kl.grad.row_ptr(i);
    double* ds = d_stats.row_ptr(i);
    for (std::size_t j = 0; j < h; ++j) {
      ds[j] = dz[j] + beta_t * klg[j];
      ds[h + j] = dz[j] * 0.5 * std::exp(0.5 * lv[j]) * ep[j] + beta_t * klg[h + j];
    }
  }

  g.enc_w2 = matmul_at_b(tape.enc_h, d_stats);
  g.enc_b2 = col_sums(d_stats);

  DenseMatrix d_enc_pre = matmul_a_bt(d_stats, p.enc_w2);
  for (std::size_t i = 0; i < d_enc_pre.size(); ++i) {
    const double h1 = tape.enc_h.raw()[i];
    d_enc_pre.raw()[i] *= 1.0 - h1 * h1;
  }
  g.enc_w1 = matmul_at_b(tape.input_used, d_enc_pre);
  g.enc_b1 = col_sums(d_enc_pre);
  return g;
}

DenseMatrix vae_predict_scores(const VaeParams& params, const DenseMatrix& foldin_batch) {
  std::mt19937_64 unused = make_rng(0);
  EncodeOptions opts;
  opts.training = false;
  VaeTape tape = forward_vae(params, foldin_batch, opts, unused);
  DenseMatrix scores = std::move(tape.output);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const double* in = foldin_batch.row_ptr(i);
    double* out = scores.row_ptr(i);
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      if (in[j] != 0.0) out[j] = -std::numeric_limits<double>::infinity();
    }
  }
  return scores;
}

MetricTable evaluate_vae(const VaeParams& params, const HeldoutPair& heldout,
                         const std::vector<std::size_t>& r_list) {
  BatchScorer scorer = [&params](const DenseMatrix& batch) {
    std::mt19937_64 unused = make_rng(0);
    EncodeOptions opts;
    opts.training = false;
    return forward_vae(params, batch, opts, unused).output;
  };
  return evaluate_with_scorer(scorer, heldout, r_list);
}

void save_vae_checkpoint(const std::string& dir, const VaeParams& p) {
  std::filesystem::create_directories(dir);
  KvFile shape;
  shape.set("model", "mult_vae");
  shape.set_u64("n_items", p.n_items);
  shape.set_u64("hidden_dim", p.hidden_dim);
  shape.set_u64("latent_dim", p.latent_dim);
  shape.set("hidden_activation", "tanh");
  shape.set("output_activation", "softmax");
  shape.set_bool("normalize_input", p.normalize_input);
  shape.save(dir + "/shape");
  auto tensors = std::as_const(p).tensor_list();
  const auto& names = VaeParams::tensor_names();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    write_tensor(dir + "/" + names[i] + ".bin", *tensors[i]);
  }
}

VaeParams load_vae_checkpoint(const std::string& dir) {
  KvFile shape = KvFile::load(dir + "/shape");
  if (shape.get("model") != "mult_vae") {
    throw DataError(dir + ": not a mult_vae checkpoint");
  }
  VaeParams p;
  p.n_items = shape.get_u64("n_items");
  p.hidden_dim = shape.get_u64("hidden_dim");
  p.latent_dim = shape.get_u64("latent_dim");
  p.normalize_input = shape.get_bool("normalize_input");
  auto tensors = p.tensor_list();
  const auto& names = VaeParams::tensor_names();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    *tensors[i] = read_tensor(dir + "/" + names[i] + ".bin");
  }
  if (p.enc_w2.cols() != 2 * p.latent_dim) {
    throw DataError(dir + ": enc_w2 width is not 2 * latent_dim");
  }
  return p;
}

VaeResult train_mult_vae(const ClickMatrix& data, const HeldoutPair& val,
                         const VaeConfig& cfg) {
  const TrainConfig& base = cfg.base;
  const std::size_t n_users = data.n_users();
  if (n_users < 2) throw DataError("train_mult_vae: need at least 2 training users");
  if (val.foldin.n_users() == 0) throw DataError("train_mult_vae: empty validation set");
  if (cfg.anneal_steps == 0) throw NumericError("train_mult_vae: anneal_steps must be >= 1");
  if (cfg.kl_anneal_cap < 0.0) throw NumericError("train_mult_vae: negative anneal cap");
  const auto [es_metric, es_rank] = parse_metric_at(base.early_stop_metric);

  const std::size_t batch = std::min(base.batch_size, n_users);
  if (batch < 2) throw NumericError("train_mult_vae: batch size must be >= 2");

  VaeParams params = init_vae_params(data.n_items(), base.hidden_dim,
                                     base.latent_dim, base.normalize_input, base.seed);
  AdamState opt = AdamState::zeros_like(std::as_const(params).tensor_list());

  std::mt19937_64 shuffle_rng = make_rng(base.seed, /*stream=*/4);
  std::mt19937_64 model_rng = make_rng(base.seed, /*stream=*/5);

  EncodeOptions enc_opts;
  enc_opts.training = true;
  enc_opts.input_dropout = base.input_dropout;

  std::ofstream steps_csv, epochs_csv;
  if (!base.run_dir.empty()) {
    std::filesystem::create_directories(base.run_dir);
    steps_csv.open(base.run_dir + "/steps.csv", std::ios::binary);
    epochs_csv.open(base.run_dir + "/epochs.csv", std::ios::binary);
    if (!steps_csv || !epochs_csv) {
      throw DataError("cannot create run logs under " + base.run_dir);
    }
    steps_csv << "step,reconstruction,smv,mi,sparse,total\n";
    epochs_csv << "epoch,metric,value,improved\n";
  }

  VaeResult best;
  TrainLog log;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0, global_step = 0;

  std::vector<std::size_t> order(n_users);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::vector<std::size_t> r_list = {es_rank};

  for (std::size_t epoch = 1; epoch <= base.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const std::size_t n_batches = n_users / batch;

    for (std::size_t bi = 0; bi < n_batches; ++bi) {
      ++global_step;
      const double beta_t =
          cfg.kl_anneal_cap *
          std::min(1.0, static_cast<double>(global_step) /
                            static_cast<double>(cfg.anneal_steps));

      std::span<const std::size_t> users(order.data() + bi * batch, batch);
      DenseMatrix x = dense_batch(data, users);
      VaeTape tape = forward_vae(params, x, enc_opts, model_rng);

      TermResult rec = cost_multinomial(tape.input, tape.output);
      TermResult kl = vae_kl(tape.mu, tape.logvar);

      LossBreakdown loss;
      loss.reconstruction = rec.value;
      loss.smv = kl.value;  // KL rides in the smv column
      loss.total = rec.value + beta_t * kl.value;
      if (!std::isfinite(loss.total)) {
        throw NumericError("mult_vae training diverged at step " +
                           std::to_string(global_step));
      }

      VaeGrads grads = backward_vae(params, tape, rec.grad, beta_t);
      adam_step(params.tensor_list(), std::as_const(grads).tensor_list(), opt,
                base.adam);

      log.steps.push_back({epoch, global_step, loss});
      if (steps_csv.is_open()) steps_csv << step_csv_row(log.steps.back());
    }

    MetricTable t = evaluate_vae(params, val, r_list);
    const double value = t.lookup(es_metric, es_rank);
    const bool improved = value > best_value;
    log.epochs.push_back({epoch, base.early_stop_metric, value, improved});
    if (epochs_csv.is_open()) {
      epochs_csv << epoch_csv_row(log.epochs.back());
      steps_csv.flush();
      epochs_csv.flush();
    }

    if (improved) {
      best_value = value;
      best.params = params;
      log.best_epoch = epoch;
      log.best_value = value;
      epochs_since_best = 0;
      if (!base.run_dir.empty()) {
        const std::string ck = base.run_dir + "/epoch_" + std::to_string(epoch);
        save_vae_checkpoint(ck, params);
        std::ofstream bestf(base.run_dir + "/best", std::ios::binary);
        bestf << "epoch_" << epoch << "\n";
      }
    } else {
      ++epochs_since_best;
    }

    log.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
            .count());

    if (!improved && epochs_since_best >= base.patience) break;
  }

  best.log = std::move(log);
  return best;
}

}  // namespace awae
