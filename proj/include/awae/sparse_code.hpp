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

#include "awae/matrix.hpp"

namespace awae {

// State for the dictionary-learning subproblem
//   min_{S, A} lambda1 |Z - S A|_F^2 + lambda2 |S|_1   s.t. |a_j|_2 <= 1,
// split into two ADMM solves: codes S (l1, consensus copy B with dual V) and
// dictionary A (unit-ball columns, consensus copy H with dual U). Z has one
// row per pooled latent vector; S is n_pool x k; A is k x latent_dim.
struct SparseCodeState {
  DenseMatrix s;  // codes, n_pool x k
  DenseMatrix a;  // dictionary, k x latent_dim
  DenseMatrix h;  // feasible copy of a (columns inside the unit ball)
  DenseMatrix u;  // scaled dual for a - h
  DenseMatrix b;  // thresholded copy of s
  DenseMatrix v;  // scaled dual for s - b
  double rho = 1.0;
};

struct AdmmReport {
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
};

struct AdmmOptions {
  double tol = 1e-6;
  std::size_t max_iters = 100;
};

// Zero codes and duals; dictionary columns drawn uniform in [-1, 1]^k and
// rescaled onto the unit ball when they land outside; h starts at a.
SparseCodeState init_sparse(std::size_t n_pool, std::size_t k,
                            std::size_t latent_dim, std::uint64_t seed,
                            double rho = 1.0);

double soft_threshold(double x, double kappa);

// Dictionary update with S fixed. Alternates
//   A <- (S^T S + rho I)^{-1} (S^T Z + rho (H - U))
//   H <- column-wise projection of A + U onto the unit ball
//   U <- U + A - H
// until |A - H|_F <= tol * max(|A|_F, 1) and rho |H - H_prev|_F <= tol, or
// max_iters. Residuals in the report are exactly the values at exit.
AdmmReport update_a(SparseCodeState& st, const DenseMatrix& z,
                    const AdmmOptions& opts);

// Code update with A fixed. Alternates
//   S <- (lambda1 Z A^T + rho (B - V)) (lambda1 A A^T + rho I)^{-1}
//   B <- soft_threshold(S + V, lambda2 / (2 rho))
//   V <- V + S - B
// with the analogous stopping rule on |S - B|_F and rho |B - B_prev|_F.
AdmmReport update_s(SparseCodeState& st, const DenseMatrix& z, double lambda1,
                    double lambda2, const AdmmOptions& opts);

// lambda1 |Z - S H|_F^2 + lambda2 |S|_1 at the current state, using the
// feasible dictionary copy.
double sparse_objective(const SparseCodeState& st, const DenseMatrix& z,
                        double lambda1, double lambda2);

}  // namespace awae
