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
#include "awae/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "awae/errors.hpp"
#include "awae/kv.hpp"
#include "awae/rng.hpp"

namespace awae {

namespace {

// Names the first non-finite component so diverging runs fail loudly instead
// of training on garbage.
void guard_finite(const LossBreakdown& loss, std::size_t step) {
  const char* bad = nullptr;
  if (!std::isfinite(loss.reconstruction)) bad = "reconstruction";
  else if (!std::isfinite(loss.smv)) bad = "smv";
  else if (!std::isfinite(loss.mi)) bad = "mi";
  else if (!std::isfinite(loss.sparse)) bad = "sparse";
  else if (!std::isfinite(loss.total)) bad = "total";
  if (bad) {
    throw NumericError("training diverged at step " + std::to_string(step) +
                       ": loss term '" + bad + "' is non-finite");
  }
}

struct RunWriter {
  std::ofstream steps, epochs, admm;
  bool active = false;

  explicit RunWriter(const std::string& run_dir) {
    if (run_dir.empty()) return;
    std::filesystem::create_directories(run_dir);
    steps.open(run_dir + "/steps.csv", std::ios::binary);
    epochs.open(run_dir + "/epochs.csv", std::ios::binary);
    admm.open(run_dir + "/admm.csv", std::ios::binary);
    if (!steps || !epochs || !admm) {
      throw DataError("cannot create run logs under " + run_dir);
    }
    steps << "step,reconstruction,smv,mi,sparse,total\n";
    epochs << "epoch,metric,value,improved\n";
    admm << "step,target,iterations,primal_residual,dual_residual,converged\n";
    active = true;
  }
};

}  // namespace

std::string step_csv_row(const TrainLog::StepRow& row) {
  return std::to_string(row.step) + "," + format_double(row.loss.reconstruction) +
         "," + format_double(row.loss.smv) + "," + format_double(row.loss.mi) + "," +
         format_double(row.loss.sparse) + "," + format_double(row.loss.total) + "\n";
}

std::string epoch_csv_row(const TrainLog::EpochRow& row) {
  return std::to_string(row.epoch) + "," + row.metric + "," +
         format_double(row.value) + "," + (row.improved ? "1" : "0") + "\n";
}

std::string admm_csv_row(const TrainLog::AdmmRow& row) {
  return std::to_string(row.step) + "," + row.target + "," +
         std::to_string(row.report.iterations) + "," +
         format_double(row.report.primal_residual) + "," +
         format_double(row.report.dual_residual) + "," +
         (row.report.converged ? "1" : "0") + "\n";
}

DenseMatrix predict_scores(const MlpParams& params, const DenseMatrix& foldin_batch) {
  std::mt19937_64 unused = make_rng(0);
  EncodeOptions opts;
  opts.training = false;
  ForwardTape tape = forward(params, foldin_batch, opts, unused);
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

MetricTable evaluate(const MlpParams& params, const HeldoutPair& heldout,
                     const std::vector<std::size_t>& r_list) {
  BatchScorer scorer = [&params](const DenseMatrix& batch) {
    std::mt19937_64 unused = make_rng(0);
    EncodeOptions opts;
    opts.training = false;
    return forward(params, batch, opts, unused).output;
  };
  return evaluate_with_scorer(scorer, heldout, r_list);
}

TrainResult train(const ClickMatrix& data, const HeldoutPair& val,
                  const TrainConfig& cfg) {
  const std::size_t n_users = data.n_users();
  if (n_users < 2) throw DataError("train: need at least 2 training users");
  if (val.foldin.n_users() == 0) throw DataError("train: empty validation set");
  if (val.foldin.n_items() != data.n_items()) {
    throw DataError("train: validation item universe differs from training");
  }
  if (cfg.max_epochs == 0) throw NumericError("train: max_epochs must be >= 1");
  if (cfg.admm_every == 0) throw NumericError("train: admm_every must be >= 1");
  const auto [es_metric, es_rank] = parse_metric_at(cfg.early_stop_metric);

  const std::size_t batch = std::min(cfg.batch_size, n_users);
  if (batch < 2) throw NumericError("train: batch size must be >= 2");
  const std::size_t latent = cfg.latent_dim;
  const std::size_t k = cfg.k_atoms ? cfg.k_atoms : std::max<std::size_t>(1, latent / 2);
  const bool sparse_active = cfg.objective.delta != 0.0;

  MlpParams params = init_params(data.n_items(), cfg.hidden_dim, latent,
                                 activation_for(cfg.objective.cost_kind),
                                 cfg.normalize_input, cfg.seed);
  SparseCodeState sparse = init_sparse(batch, k, latent, cfg.seed, cfg.rho);
  AdamState opt = AdamState::zeros_like(std::as_const(params).tensor_list());

  std::mt19937_64 shuffle_rng = make_rng(cfg.seed, /*stream=*/4);
  std::mt19937_64 model_rng = make_rng(cfg.seed, /*stream=*/5);  // dropout + noise
  std::mt19937_64 prior_rng = make_rng(cfg.seed, /*stream=*/6);

  EncodeOptions enc_opts;
  enc_opts.training = true;
  enc_opts.input_dropout = cfg.input_dropout;
  enc_opts.noise_std = cfg.noise_std;

  RunWriter writer(cfg.run_dir);
  TrainLog log;
  TrainResult best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t epochs_since_best = 0;
  std::size_t global_step = 0;

  std::vector<std::size_t> order(n_users);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> r_list = {es_rank};

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const std::size_t n_batches = n_users / batch;  // trailing partial batch skipped

    for (std::size_t bi = 0; bi < n_batches; ++bi) {
      ++global_step;
      std::span<const std::size_t> users(order.data() + bi * batch, batch);
      DenseMatrix x = dense_batch(data, users);

      ForwardTape tape = forward(params, x, enc_opts, model_rng);

      DenseMatrix prior;
      if (cfg.objective.alpha != 0.0) {
        prior = DenseMatrix(batch, latent);
        std::normal_distribution<double> unit(0.0, 1.0);
        for (auto& v : prior.raw()) v = unit(prior_rng);
      }

      // Codes restart from zero for this batch; the dictionary carries over.
      if (sparse_active) {
        sparse.s.fill(0.0);
        sparse.b.fill(0.0);
        sparse.v.fill(0.0);
      }

      DenseMatrix d_output, d_z_extra;
      const LossBreakdown loss = total_loss(
          tape, sparse_active ? &sparse.s : nullptr,
          sparse_active ? &sparse.h : nullptr,
          cfg.objective.alpha != 0.0 ? &prior : nullptr, cfg.objective, &d_output,
          &d_z_extra);
      guard_finite(loss, global_step);

      MlpGrads grads = backward(params, tape, d_output, d_z_extra);
      adam_step(params.tensor_list(), std::as_const(grads).tensor_list(), opt,
                cfg.adam);

      log.steps.push_back({epoch, global_step, loss});
      if (writer.active) writer.steps << step_csv_row(log.steps.back());

      // Alternation: refit codes then dictionary on this batch's latents with
      // the network frozen.
      if (sparse_active && global_step % cfg.admm_every == 0) {
        AdmmReport rs = update_s(sparse, tape.z, cfg.objective.lambda1,
                                 cfg.objective.lambda2, cfg.admm);
        log.admm.push_back({global_step, 's', rs});
        if (writer.active) writer.admm << admm_csv_row(log.admm.back());
        AdmmReport ra = update_a(sparse, tape.z, cfg.admm);
        log.admm.push_back({global_step, 'a', ra});
        if (writer.active) writer.admm << admm_csv_row(log.admm.back());
      }
    }

    const double value = [&] {
      MetricTable t = evaluate(params, val, r_list);
      return t.lookup(es_metric, es_rank);
    }();
    const bool improved = value > best_value;
    log.epochs.push_back({epoch, cfg.early_stop_metric, value, improved});
    if (writer.active) {
      writer.epochs << epoch_csv_row(log.epochs.back());
      writer.steps.flush();
      writer.epochs.flush();
      writer.admm.flush();
    }

    if (improved) {
      best_value = value;
      best.params = params;
      best.sparse = sparse;
      log.best_epoch = epoch;
      log.best_value = value;
      epochs_since_best = 0;
      if (writer.active) {
        const std::string ck = cfg.run_dir + "/epoch_" + std::to_string(epoch);
        save_checkpoint(ck, params, "awae", {{"dict_a", &sparse.h}});
        std::ofstream bestf(cfg.run_dir + "/best", std::ios::binary);
        bestf << "epoch_" << epoch << "\n";
      }
    } else {
      ++epochs_since_best;
    }

    log.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
            .count());

    if (!improved && epochs_since_best >= cfg.patience) break;
  }

  best.log = std::move(log);
  return best;
}

}  // namespace awae
