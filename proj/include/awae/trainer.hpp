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
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "awae/adam.hpp"
#include "awae/data.hpp"
#include "awae/metrics.hpp"
#include "awae/mlp.hpp"
#include "awae/objective.hpp"
#include "awae/sparse_code.hpp"

namespace awae {

struct TrainConfig {
  ObjectiveConfig objective;

  std::size_t hidden_dim = 600;
  std::size_t latent_dim = 200;
  // Dictionary atoms for the sparse coder; 0 means latent_dim / 2.
  std::size_t k_atoms = 0;

  std::size_t batch_size = 500;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;

  double input_dropout = 0.5;
  double noise_std = 0.0;  // additive latent noise during training
  bool normalize_input = true;

  AdamConfig adam;

  // Dictionary/code refresh cadence (in optimizer steps) and solver knobs.
  // delta = 0 disables the sparse subsystem entirely.
  std::size_t admm_every = 1;
  AdmmOptions admm;
  double rho = 1.0;

  std::string early_stop_metric = "ndcg@10";
  std::uint64_t seed = 0;

  // When non-empty: steps.csv / epochs.csv / admm.csv are appended
  // incrementally and a checkpoint directory epoch_<n> is written on every
  // validation improvement, with `best` naming the selected one. All of these
  // files are byte-identical across runs with the same config and seed.
  std::string run_dir;
};

struct TrainLog {
  struct StepRow {
    std::size_t epoch = 0;
    std::size_t step = 0;  // global, starts at 1
    LossBreakdown loss;
  };
  struct EpochRow {
    std::size_t epoch = 0;
    std::string metric;
    double value = 0.0;
    bool improved = false;
  };
  struct AdmmRow {
    std::size_t step = 0;
    char target = 's';  // 's' or 'a'
    AdmmReport report;
  };

  std::vector<StepRow> steps;
  std::vector<EpochRow> epochs;
  std::vector<AdmmRow> admm;
  std::vector<double> epoch_seconds;  // wall clock, in-memory only
  std::size_t best_epoch = 0;
  double best_value = 0.0;
};

struct TrainResult {
  MlpParams params;        // snapshot from the best validation epoch
  SparseCodeState sparse;  // dictionary state at that epoch
  TrainLog log;
};

// CSV row renderers shared by every training loop; stable %.17g formatting.
std::string step_csv_row(const TrainLog::StepRow& row);
std::string epoch_csv_row(const TrainLog::EpochRow& row);
std::string admm_csv_row(const TrainLog::AdmmRow& row);

// Alternating training: for every batch the network descends one Adam step on
// the composite objective with the codes and dictionary frozen, then (every
// admm_every steps, when delta > 0) the codes and dictionary are refit to the
// batch's latent matrix with the network frozen. Codes pool only the current
// batch and restart from zero each batch; the dictionary persists. Training
// stops after `patience` epochs without validation improvement.
TrainResult train(const ClickMatrix& data, const HeldoutPair& val,
                  const TrainConfig& cfg);

// Evaluation-mode scores for fold-in rows; entries the user already clicked
// are masked to -inf so they cannot be recommended again.
DenseMatrix predict_scores(const MlpParams& params, const DenseMatrix& foldin_batch);

// Ranking metrics for a trained model over a held-out pair.
MetricTable evaluate(const MlpParams& params, const HeldoutPair& heldout,
                     const std::vector<std::size_t>& r_list);

}  // namespace awae
