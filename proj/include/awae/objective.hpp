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

#include <string>

#include "awae/matrix.hpp"
#include "awae/mlp.hpp"

namespace awae {

enum class CostKind { kMultinomial, kMultinomialNonclick, kMil };

const char* to_string(CostKind k);
CostKind cost_kind_from_string(const std::string& s);
// Multinomial costs decode through softmax, the missing-information cost
// through sigmoid.
OutputActivation activation_for(CostKind k);

struct ObjectiveConfig {
  CostKind cost_kind = CostKind::kMultinomial;
  double beta = 1.0;     // latent moment-matching weight
  double alpha = 0.05;   // mutual-information (MMD) weight
  double delta = 0.1;    // sparse-coding weight
  double gamma = 0.1;    // non-click weight inside the multinomial cost
  // Weight non-clicks by log(1 - x') instead of the plain log x' term.
  bool nonclick_complement = false;
  double gamma_plus = 1.0;   // exponent on (1 - x') for clicked entries
  double a_mi = 1e6;         // amplifier on the near-one barrier term
  double gamma_mi = 12.0;    // half-exponent of the (x' - 0.5) barrier
  double lambda1 = 1.0;      // sparse residual weight
  double lambda2 = 0.1;      // sparse l1 weight
  double mmd_bandwidth = 1.0;
};

// Scalar term value and its gradient. Whether `grad` is taken with respect to
// logits, activated outputs, or Z depends on the term; see each function.
struct TermResult {
  double value = 0.0;
  DenseMatrix grad;
};

// Loss components before weighting, plus the weighted total:
// total = reconstruction + beta*smv + alpha*mi + delta*sparse.
struct LossBreakdown {
  double reconstruction = 0.0;
  double smv = 0.0;
  double mi = 0.0;
  double sparse = 0.0;
  double total = 0.0;
};

// Multinomial reconstruction cost, -(1/n) sum_ij x_ij log x'_ij, for softmax
// outputs. grad is with respect to the LOGITS: the softmax derivative is
// folded in analytically, (row_clicks * prob - x) / n, which avoids
// backpropagating through log of a vanishing probability.
TermResult cost_multinomial(const DenseMatrix& x, const DenseMatrix& x_prime);

// Multinomial cost with non-clicks weighted by gamma. Verbatim form adds
// gamma*(1 - x_ij) log x'_ij; with complement=true the non-click term becomes
// gamma*(1 - x_ij) log(1 - x'_ij) instead. gamma = 0 reduces both to
// cost_multinomial. grad is with respect to logits.
TermResult cost_multinomial_nonclick(const DenseMatrix& x, const DenseMatrix& x_prime,
                                     double gamma, bool complement);

// Missing-information reconstruction cost for sigmoid outputs in (0, 1):
//   (1/n) sum_ij [ 0.5 x (1+x) (1-x')^gamma_plus
//                + 0.5 (1+x) (1-x') a_mi (x'-0.5)^(2 gamma_mi) ].
// The first addend penalizes low scores on clicked entries; the second is a
// barrier that blows up as any score approaches 1. grad is with respect to
// the activated output. Entries of x_prime outside (0, 1) raise NumericError.
TermResult cost_mil(const DenseMatrix& x, const DenseMatrix& x_prime,
                    double gamma_plus, double a_mi, double gamma_mi);

// Moment-matching divergence between pooled latent statistics and N(0, 1):
//   (J/2) (mu^2 + var - log var - 1),
// with mu/var the scalar mean and population variance over all n*J entries of
// z. var is floored at 1e-12; inside the floor only the mu^2 term carries
// gradient. Requires n >= 2. grad is with respect to z.
TermResult smv_divergence(const DenseMatrix& z);

// Unbiased MMD^2 between z rows and prior rows under the inverse-multiquadric
// kernel k(a, b) = C / (C + |a - b|^2), C = 2 * dim * bandwidth^2. Both
// batches need at least 2 rows and equal width. grad is with respect to z;
// the prior batch is treated as constant.
TermResult mi_regularizer(const DenseMatrix& z, const DenseMatrix& prior,
                          double bandwidth);

// Sparse-coding attachment (1/n) (lambda1 |Z - S A|_F^2 + lambda2 |S|_1).
// grad is with respect to z; S and A are fixed inputs here.
TermResult sparse_penalty(const DenseMatrix& z, const DenseMatrix& s,
                          const DenseMatrix& a, double lambda1, double lambda2);

// Composite objective over a decoded tape. Returns the breakdown and writes
// the two gradients backward() consumes: d_output (logits-space for softmax
// costs, output-space for the sigmoid cost) and d_z_extra (weighted sum of
// the latent regularizer gradients). s/a may be null when delta = 0, prior
// may be null when alpha = 0; the corresponding terms are skipped and report
// as zero. The cost kind must match the tape's output activation.
LossBreakdown total_loss(const ForwardTape& tape, const DenseMatrix* s,
                         const DenseMatrix* a, const DenseMatrix* prior,
                         const ObjectiveConfig& cfg, DenseMatrix* d_output,
                         DenseMatrix* d_z_extra);

}  // namespace awae
