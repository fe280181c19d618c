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

#include "awae/trainer.hpp"

namespace awae {

// Denoising autoencoder baseline: exactly the main training path with every
// latent regularizer off (beta = alpha = delta = 0), the plain multinomial
// cost, no latent noise, and input dropout kept on. Shares train() so the two
// models stay step-for-step comparable under one seed.
TrainResult train_mult_dae(const ClickMatrix& data, const HeldoutPair& val,
                           TrainConfig cfg);

// Variational baseline with a reparameterized Gaussian latent: the encoder's
// last layer emits [mu | logvar] (width 2 * latent_dim), z = mu +
// exp(logvar / 2) * eps during training and z = mu when scoring.
struct VaeParams {
  std::size_t n_items = 0;
  std::size_t hidden_dim = 600;
  std::size_t latent_dim = 200;
  bool normalize_input = true;

  DenseMatrix enc_w1;  // n_items x hidden
  DenseMatrix enc_b1;  // 1 x hidden
  DenseMatrix enc_w2;  // hidden x 2*latent
  DenseMatrix enc_b2;  // 1 x 2*latent
  DenseMatrix dec_w1;  // latent x hidden
  DenseMatrix dec_b1;  // 1 x hidden
  DenseMatrix dec_w2;  // hidden x n_items
  DenseMatrix dec_b2;  // 1 x n_items

  std::vector<DenseMatrix*> tensor_list();
  std::vector<const DenseMatrix*> tensor_list() const;
  static const std::vector<std::string>& tensor_names();
};

struct VaeTape {
  DenseMatrix input;
  DenseMatrix input_used;
  DenseMatrix enc_h;
  DenseMatrix mu;      // n x latent
  DenseMatrix logvar;  // n x latent
  DenseMatrix eps;     // n x latent; zero when scoring
  DenseMatrix z;
  DenseMatrix dec_h;
  DenseMatrix logits;
  DenseMatrix output;  // softmax rows
};

struct VaeGrads {
  DenseMatrix enc_w1, enc_b1, enc_w2, enc_b2;
  DenseMatrix dec_w1, dec_b1, dec_w2, dec_b2;
  std::vector<DenseMatrix*> tensor_list();
  std::vector<const DenseMatrix*> tensor_list() const;
};

struct VaeConfig {
  TrainConfig base;  // objective weights are ignored; everything else applies
  double kl_anneal_cap = 0.2;
  std::size_t anneal_steps = 10000;  // linear 0 -> cap over this many steps
};

struct VaeResult {
  VaeParams params;
  TrainLog log;  // smv column carries the KL term; total = rec + beta_t * KL
};

VaeParams init_vae_params(std::size_t n_items, std::size_t hidden_dim,
                          std::size_t latent_dim, bool normalize_input,
                          std::uint64_t seed);

// fixed_eps (n x latent) pins the reparameterization draw, which makes the
// loss a deterministic function of the parameters for gradient checking.
VaeTape forward_vae(const VaeParams& p, const DenseMatrix& batch,
                    const EncodeOptions& opts, std::mt19937_64& rng,
                    const DenseMatrix* fixed_eps = nullptr);

// Gaussian KL to the unit prior, summed over latent dimensions and averaged
// over the batch: (1/n) sum 0.5 (mu^2 + exp(logvar) - logvar - 1).
TermResult vae_kl(const DenseMatrix& mu, const DenseMatrix& logvar);

// d_logits is the fused multinomial gradient with respect to the logits;
// beta_t scales the KL gradient flowing into mu and logvar.
VaeGrads backward_vae(const VaeParams& p, const VaeTape& tape,
                      const DenseMatrix& d_logits, double beta_t);

VaeResult train_mult_vae(const ClickMatrix& data, const HeldoutPair& val,
                         const VaeConfig& cfg);

DenseMatrix vae_predict_scores(const VaeParams& params, const DenseMatrix& foldin_batch);
MetricTable evaluate_vae(const VaeParams& params, const HeldoutPair& heldout,
                         const std::vector<std::size_t>& r_list);

void save_vae_checkpoint(const std::string& dir, const VaeParams& p);
VaeParams load_vae_checkpoint(const std::string& dir);

}  // namespace awae
