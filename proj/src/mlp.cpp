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
#include "awae/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "awae/errors.hpp"
#include "awae/kv.hpp"
#include "awae/rng.hpp"

namespace awae {

namespace fs = std::filesystem;

const char* to_string(OutputActivation a) {
  return a == OutputActivation::kSoftmax ? "softmax" : "sigmoid";
}

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "softmax") return OutputActivation::kSoftmax;
  if (s == "sigmoid") return OutputActivation::kSigmoid;
  throw DataError("unknown output activation '" + s + "'");
}

std::vector<DenseMatrix*> MlpParams::tensor_list() {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

std::vector<const DenseMatrix*> MlpParams::tensor_list() const {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

const std::vector<std::string>& MlpParams::tensor_names() {
  static const std::vector<std::string> names = {
      "enc_w1", "enc_b1", "enc_w2", "enc_b2",
      "dec_w1", "dec_b1", "dec_w2", "dec_b2"};
  return names;
}

std::vector<DenseMatrix*> MlpGrads::tensor_list() {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

std::vector<const DenseMatrix*> MlpGrads::tensor_list() const {
  return {&enc_w1, &enc_b1, &enc_w2, &enc_b2, &dec_w1, &dec_b1, &dec_w2, &dec_b2};
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  auto src = p.tensor_list();
  auto dst = g.tensor_list();
  for (std::size_t i = 0; i < src.size(); ++i) {
    *dst[i] = DenseMatrix(src[i]->rows(), src[i]->cols());
  }
  return g;
}

namespace {

void glorot_fill(DenseMatrix& w, std::size_t fan_in, std::size_t fan_out,
                 std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (auto& v : w.raw()) v = dist(rng);
}

}  // namespace

MlpParams init_params(std::size_t n_items, std::size_t hidden_dim,
                      std::size_t latent_dim, OutputActivation out_act,
                      bool normalize_input, std::uint64_t seed) {
  if (n_items == 0 || hidden_dim == 0 || latent_dim == 0) {
    throw NumericError("init_params: zero dimension");
  }
  MlpParams p;
  p.n_items = n_items;
  p.hidden_dim = hidden_dim;
  p.latent_dim = latent_dim;
  p.output_activation = out_act;
  p.normalize_input = normalize_input;
  p.enc_w1 = DenseMatrix(n_items, hidden_dim);
  p.enc_b1 = DenseMatrix(1, hidden_dim);
  p.enc_w2 = DenseMatrix(hidden_dim, latent_dim);
  p.enc_b2 = DenseMatrix(1, latent_dim);
  p.dec_w1 = DenseMatrix(latent_dim, hidden_dim);
  p.dec_b1 = DenseMatrix(1, hidden_dim);
  p.dec_w2 = DenseMatrix(hidden_dim, n_items);
  p.dec_b2 = DenseMatrix(1, n_items);

  std::mt19937_64 rng = make_rng(seed, /*stream=*/10);
  glorot_fill(p.enc_w1, n_items, hidden_dim, rng);
  glorot_fill(p.enc_w2, hidden_dim, latent_dim, rng);
  glorot_fill(p.dec_w1, latent_dim, hidden_dim, rng);
  glorot_fill(p.dec_w2, hidden_dim, n_items, rng);
  return p;
}

ForwardTape encode(const MlpParams& p, const DenseMatrix& batch,
                   const EncodeOptions& opts, std::mt19937_64& rng) {
  if (batch.cols() != p.n_items) {
    throw NumericError("encode: batch has " + std::to_string(batch.cols()) +
                       " columns, expected " + std::to_string(p.n_items));
  }
  if (opts.input_dropout < 0.0 || opts.input_dropout >= 1.0) {
    throw NumericError("encode: input_dropout must lie in [0, 1)");
  }

  ForwardTape tape;
  tape.input = batch;
  tape.output_activation = p.output_activation;
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
    // Inverted dropout: survivors scale by 1/keep so eval needs no rescaling.
    const double keep = 1.0 - opts.input_dropout;
    std::bernoulli_distribution drop(opts.input_dropout);
    for (auto& v : tape.input_used.raw()) {
      v = drop(rng) ? 0.0 : v / keep;
    }
  }

  tape.enc_h = matmul(tape.input_used, p.enc_w1);
  add_row_vector(tape.enc_h, p.enc_b1);
  for (auto& v : tape.enc_h.raw()) v = std::tanh(v);

  tape.z = matmul(tape.enc_h, p.enc_w2);
  add_row_vector(tape.z, p.enc_b2);

  if (opts.training && opts.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, opts.noise_std);
    for (auto& v : tape.z.raw()) v += noise(rng);
  }
  return tape;
}

void decode(const MlpParams& p, ForwardTape& tape) {
  tape.dec_h = matmul(tape.z, p.dec_w1);
  add_row_vector(tape.dec_h, p.dec_b1);
  for (auto& v : tape.dec_h.raw()) v = std::tanh(v);

  tape.logits = matmul(tape.dec_h, p.dec_w2);
  add_row_vector(tape.logits, p.dec_b2);

  tape.output = tape.logits;
  if (p.output_activation == OutputActivation::kSoftmax) {
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
  } else {
    // Clamp so downstream log/pow terms never see an exact 0 or 1.
    constexpr double kLo = 1e-300;
    const double kHi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    for (auto& v : tape.output.raw()) {
      v = 1.0 / (1.0 + std::exp(-v));
      v = std::clamp(v, kLo, kHi);
    }
  }
}

ForwardTape forward(const MlpParams& p, const DenseMatrix& batch,
                    const EncodeOptions& opts, std::mt19937_64& rng) {
  ForwardTape tape = encode(p, batch, opts, rng);
  decode(p, tape);
  return tape;
}

MlpGrads backward(const MlpParams& p, const ForwardTape& tape,
                  const DenseMatrix& d_output, const DenseMatrix& d_z_extra) {
  if (!d_output.same_shape(tape.logits)) {
    throw NumericError("backward: d_output shape mismatch");
  }
  MlpGrads g;

  // Decoder half.
  DenseMatrix d_logits = d_output;
  if (p.output_activation == OutputActivation::kSigmoid) {
    for (std::size_t i = 0; i < d_logits.size(); ++i) {
      const double o = tape.output.raw()[i];
      d_logits.raw()[i] *= o * (1.0 - o);
    }
  }
  g.dec_w2 = matmul_at_b(tape.dec_h, d_logits);
  g.dec_b2 = col_sums(d_logits);

  DenseMatrix d_dec_pre = matmul_a_bt(d_logits, p.dec_w2);
  for (std::size_t i = 0; i < d_dec_pre.size(); ++i) {
    const double h = tape.dec_h.raw()[i];
    d_dec_pre.raw()[i] *= 1.0 - h * h;
  }
  g.dec_w1 = matmul_at_b(tape.z, d_dec_pre);
  g.dec_b1 = col_sums(d_dec_pre);

  // Latent gradient: decoder contribution plus regularizer terms.
  DenseMatrix d_z = matmul_a_bt(d_dec_pre, p.dec_w1);
  if (d_z_extra.size() > 0) {
    if (!d_z_extra.same_shape(d_z)) {
      throw NumericError("backward: d_z_extra shape mismatch");
    }
    add_inplace(d_z, d_z_extra);
  }

  // Encoder half; the dropout mask is replayed implicitly through input_used.
  g.enc_w2 = matmul_at_b(tape.enc_h, d_z);
  g.enc_b2 = col_sums(d_z);

  DenseMatrix d_enc_pre = matmul_a_bt(d_z, p.enc_w2);
  for (std::size_t i = 0; i < d_enc_pre.size(); ++i) {
    const double h = tape.enc_h.raw()[i];
    d_enc_pre.raw()[i] *= 1.0 - h * h;
  }
  g.enc_w1 = matmul_at_b(tape.input_used, d_enc_pre);
  g.enc_b1 = col_sums(d_enc_pre);
  return g;
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_tensor(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  const std::uint64_t dims[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw DataError("write failed: " + path);
}

DenseMatrix read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw DataError(path + ": truncated tensor header");
  DenseMatrix m(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw DataError(path + ": truncated tensor data");
  char extra;
  if (in.read(&extra, 1)) throw DataError(path + ": trailing bytes");
  return m;
}

void save_checkpoint(const std::string& dir, const MlpParams& p,
                     const std::string& model_kind,
                     const std::vector<std::pair<std::string, const DenseMatrix*>>& extra) {
  fs::create_directories(dir);
  KvFile shape;
  shape.set("model", model_kind);
  shape.set_u64("n_items", p.n_items);
  shape.set_u64("hidden_dim", p.hidden_dim);
  shape.set_u64("latent_dim", p.latent_dim);
  shape.set("hidden_activation", "tanh");
  shape.set("output_activation", to_string(p.output_activation));
  shape.set_bool("normalize_input", p.normalize_input);
  for (const auto& e : extra) shape.set("extra_" + e.first, "1");
  shape.save(dir + "/shape");

  auto tensors = p.tensor_list();
  const auto& names = MlpParams::tensor_names();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    write_tensor(dir + "/" + names[i] + ".bin", *tensors[i]);
  }
  for (const auto& e : extra) {
    write_tensor(dir + "/" + e.first + ".bin", *e.second);
  }
}

std::string checkpoint_model_kind(const std::string& dir) {
  return KvFile::load(dir + "/shape").get("model");
}

MlpParams load_checkpoint(const std::string& dir, std::string* model_kind) {
  KvFile shape = KvFile::load(dir + "/shape");
  if (model_kind) *model_kind = shape.get("model");
  MlpParams p;
  p.n_items = shape.get_u64("n_items");
  p.hidden_dim = shape.get_u64("hidden_dim");
  p.latent_dim = shape.get_u64("latent_dim");
  p.output_activation = output_activation_from_string(shape.get("output_activation"));
  p.normalize_input = shape.get_bool("normalize_input");
  if (shape.get("hidden_activation") != "tanh") {
    throw DataError(dir + ": unsupported hidden activation");
  }

  auto tensors = p.tensor_list();
  const auto& names = MlpParams::tensor_names();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    *tensors[i] = read_tensor(dir + "/" + names[i] + ".bin");
  }

  // Shape audit before anything downstream trusts the tensors.
  auto expect = [&](const DenseMatrix& m, std::size_t r, std::size_t c,
                    const std::string& name) {
    if (m.rows() != r || m.cols() != c) {
      throw DataError(dir + "/" + name + ".bin: shape " + std::to_string(m.rows()) +
                      "x" + std::to_string(m.cols()) + ", expected " +
                      std::to_string(r) + "x" + std::to_string(c));
    }
  };
  expect(p.enc_w1, p.n_items, p.hidden_dim, "enc_w1");
  expect(p.enc_b1, 1, p.hidden_dim, "enc_b1");
  expect(p.enc_w2, p.hidden_dim, p.latent_dim, "enc_w2");
  expect(p.enc_b2, 1, p.latent_dim, "enc_b2");
  expect(p.dec_w1, p.latent_dim, p.hidden_dim, "dec_w1");
  expect(p.dec_b1, 1, p.hidden_dim, "dec_b1");
  expect(p.dec_w2, p.hidden_dim, p.n_items, "dec_w2");
  expect(p.dec_b2, 1, p.n_items, "dec_b2");
  return p;
}

}  // namespace awae
