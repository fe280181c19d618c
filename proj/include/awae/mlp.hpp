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
#include <random>
#include <string>
#include <vector>

#include "awae/matrix.hpp"

namespace awae {

enum class OutputActivation { kSoftmax, kSigmoid };

const char* to_string(OutputActivation a);
OutputActivation output_activation_from_string(const std::string& s);

// Encoder/decoder parameters for the symmetric I -> hidden -> h -> hidden -> I
// autoencoder. The encoder is deterministic: Z = tanh(X W1 + b1) W2 + b2, with
// optional additive Gaussian noise on Z during training. Hidden activation is
// tanh throughout; the output activation is chosen by the reconstruction cost.
struct MlpParams {
  std::size_t n_items = 0;
  std::size_t hidden_dim = 600;
  std::size_t latent_dim = 200;
  OutputActivation output_activation = OutputActivation::kSoftmax;
  // L2-normalize each input row before dropout. Stored with checkpoints so
  // scoring always matches training.
  bool normalize_input = true;

  DenseMatrix enc_w1;  // n_items x hidden
  DenseMatrix enc_b1;  // 1 x hidden
  DenseMatrix enc_w2;  // hidden x latent
  DenseMatrix enc_b2;  // 1 x latent
  DenseMatrix dec_w1;  // latent x hidden
  DenseMatrix dec_b1;  // 1 x hidden
  DenseMatrix dec_w2;  // hidden x n_items
  DenseMatrix dec_b2;  // 1 x n_items

  std::vector<DenseMatrix*> tensor_list();
  std::vector<const DenseMatrix*> tensor_list() const;
  static const std::vector<std::string>& tensor_names();
};

// Gradients with the same shapes as MlpParams.
struct MlpGrads {
  DenseMatrix enc_w1, enc_b1, enc_w2, enc_b2;
  DenseMatrix dec_w1, dec_b1, dec_w2, dec_b2;

  std::vector<DenseMatrix*> tensor_list();
  std::vector<const DenseMatrix*> tensor_list() const;
  static MlpGrads zeros_like(const MlpParams& p);
};

// Everything the backward pass replays. input_used already has normalization
// and the inverted-dropout mask folded in; z is post-noise (the decoder and
// any latent regularizers see the same Z the tape stores).
struct ForwardTape {
  DenseMatrix input;       // raw 0/1 batch, n x I; reconstruction targets
  DenseMatrix input_used;  // normalized + dropped input fed to the encoder
  DenseMatrix enc_h;       // n x hidden, tanh applied
  DenseMatrix z;           // n x latent
  DenseMatrix dec_h;       // n x hidden, tanh applied
  DenseMatrix logits;      // n x I, pre-activation
  DenseMatrix output;      // n x I, activation applied
  OutputActivation output_activation = OutputActivation::kSoftmax;
};

struct EncodeOptions {
  bool training = false;     // enables dropout and latent noise
  double input_dropout = 0.5;
  double noise_std = 0.0;
};

// Glorot-uniform init, entries ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out));
// biases start at zero. Deterministic in seed.
MlpParams init_params(std::size_t n_items, std::size_t hidden_dim,
                      std::size_t latent_dim, OutputActivation out_act,
                      bool normalize_input, std::uint64_t seed);

// Runs the encoder, filling input/input_used/enc_h/z of the tape. rng drives
// dropout and noise and is only consumed when opts.training is set.
ForwardTape encode(const MlpParams& p, const DenseMatrix& batch,
                   const EncodeOptions& opts, std::mt19937_64& rng);

// Runs the decoder on tape.z, filling dec_h/logits/output. Softmax rows are
// max-subtracted; sigmoid outputs are clamped away from exactly 0 and 1.
void decode(const MlpParams& p, ForwardTape& tape);

ForwardTape forward(const MlpParams& p, const DenseMatrix& batch,
                    const EncodeOptions& opts, std::mt19937_64& rng);

// Backpropagation through the tape.
//
// d_output is the reconstruction gradient. For softmax outputs it must already
// be the gradient with respect to the *logits* (the cost functions emit the
// fused prob-minus-target form); for sigmoid outputs it is the gradient with
// respect to the activated output and the sigmoid derivative is applied here.
// d_z_extra (may be empty) is added to the latent gradient before the encoder
// half runs; regularizers that act on Z enter through it.
MlpGrads backward(const MlpParams& p, const ForwardTape& tape,
                  const DenseMatrix& d_output, const DenseMatrix& d_z_extra);

// Checkpoint directory: a `shape` key=value file plus one binary tensor file
// per parameter (little-endian u64 rows, u64 cols, then row-major f64 data).
// Doubles round-trip bit-exactly. `extra` tensors (such as a sparse-coding
// dictionary) are stored alongside under their own names.
void save_checkpoint(const std::string& dir, const MlpParams& p,
                     const std::string& model_kind,
                     const std::vector<std::pair<std::string, const DenseMatrix*>>&
                         extra = {});
MlpParams load_checkpoint(const std::string& dir, std::string* model_kind = nullptr);

// Low-level tensor file IO shared with other checkpoint producers.
void write_tensor(const std::string& path, const DenseMatrix& m);
DenseMatrix read_tensor(const std::string& path);
std::string checkpoint_model_kind(const std::string& dir);

}  // namespace awae
