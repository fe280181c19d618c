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
#include "awae/sparse_code.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "awae/errors.hpp"
#include "awae/rng.hpp"

namespace awae {

SparseCodeState init_sparse(std::size_t n_pool, std::size_t k,
                            std::size_t latent_dim, std::uint64_t seed,
                            double rho) {
  if (n_pool == 0 || k == 0 || latent_dim == 0) {
    throw NumericError("init_sparse: zero dimension");
  }
  if (!(rho > 0.0)) throw NumericError("init_sparse: rho must be > 0");

  SparseCodeState st;
  st.rho = rho;
  st.s = DenseMatrix(n_pool, k);
  st.b = DenseMatrix(n_pool, k);
  st.v = DenseMatrix(n_pool, k);
  st.a = DenseMatrix(k, latent_dim);
  st.u = DenseMatrix(k, latent_dim);

  std::mt19937_64 rng = make_rng(seed, /*stream=*/20);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& x : st.a.raw()) x = dist(rng);
  for (std::size_t j = 0; j < latent_dim; ++j) {
    double sq = 0.0;
    for (std::size_t r = 0; r < k; ++r) sq += st.a.at(r, j) * st.a.at(r, j);
    if (sq > 1.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t r = 0; r < k; ++r) st.a.at(r, j) *= inv;
    }
  }
  st.h = st.a;
  return st;
}

double soft_threshold(double x, double kappa) {
  if (x > kappa) return x - kappa;
  if (x < -kappa) return x + kappa;
  return 0.0;
}

namespace {

void require_pool(const SparseCodeState& st, const DenseMatrix& z, const char* op) {
  if (z.rows() != st.s.rows() || z.cols() != st.a.cols()) {
    throw NumericError(std::string(op) + ": Z is " + std::to_string(z.rows()) + "x" +
                       std::to_string(z.cols()) + ", state expects " +
                       std::to_string(st.s.rows()) + "x" + std::to_string(st.a.cols()));
  }
  if (!(st.rho > 0.0)) throw NumericError(std::string(op) + ": rho must be > 0");
}

// s^T s (or a a^T) plus rho on the diagonal; always SPD for rho > 0.
DenseMatrix gram_plus_ridge(const DenseMatrix& g, double rho) {
  DenseMatrix out = g;
  for (std::size_t i = 0; i < out.rows(); ++i) out.at(i, i) += rho;
  return out;
}

}  // namespace

AdmmReport update_a(SparseCodeState& st, const DenseMatrix& z, const AdmmOptions& opts) {
  require_pool(st, z, "update_a");
  const double rho = st.rho;
  const DenseMatrix gram = gram_plus_ridge(matmul_at_b(st.s, st.s), rho);
  const DenseMatrix stz = matmul_at_b(st.s, z);

  AdmmReport rep;
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    // A-step: ridge solve against the consensus target.
    DenseMatrix rhs = st.h;
    sub_inplace(rhs, st.u);
    scale_inplace(rhs, rho);
    add_inplace(rhs, stz);
    st.a = cholesky_solve(gram, rhs);

    // H-step: project A + U columns onto the unit ball.
    const DenseMatrix h_prev = st.h;
    st.h = st.a;
    add_inplace(st.h, st.u);
    for (std::size_t j = 0; j < st.h.cols(); ++j) {
      double sq = 0.0;
      for (std::size_t r = 0; r < st.h.rows(); ++r) sq += st.h.at(r, j) * st.h.at(r, j);
      if (sq > 1.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (std::size_t r = 0; r < st.h.rows(); ++r) st.h.at(r, j) *= inv;
      }
    }

    // Dual ascent on the A = H constraint.
    DenseMatrix gap = st.a;
    sub_inplace(gap, st.h);
    add_inplace(st.u, gap);

    rep.iterations = it + 1;
    rep.primal_residual = frobenius_norm(gap);
    rep.dual_residual = rho * frobenius_norm(sub(st.h, h_prev));
    if (rep.primal_residual <= opts.tol * std::max(frobenius_norm(st.a), 1.0) &&
        rep.dual_residual <= opts.tol) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

AdmmReport update_s(SparseCodeState& st, const DenseMatrix& z, double lambda1,
                    double lambda2, const AdmmOptions& opts) {
  require_pool(st, z, "update_s");
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw NumericError("update_s: lambda weights must be >= 0");
  }
  const double rho = st.rho;
  const double kappa = lambda2 / (2.0 * rho);

  // (lambda1 A A^T + rho I) is shared by every iteration; solve transposed
  // systems since the unknown multiplies from the left.
  const DenseMatrix gram = gram_plus_ridge([&] {
    DenseMatrix g = matmul_a_bt(st.a, st.a);
    scale_inplace(g, lambda1);
    return g;
  }(), rho);
  DenseMatrix zat = matmul_a_bt(z, st.a);
  scale_inplace(zat, lambda1);

  AdmmReport rep;
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    // S-step: rows solve against gram (gram is symmetric, so solving
    // gram * S^T = rhs^T is the same as S * gram = rhs).
    DenseMatrix rhs = st.b;
    sub_inplace(rhs, st.v);
    scale_inplace(rhs, rho);
    add_inplace(rhs, zat);
    DenseMatrix rhs_t(rhs.cols(), rhs.rows());
    for (std::size_t i = 0; i < rhs.rows(); ++i) {
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs_t.at(j, i) = rhs.at(i, j);
    }
    DenseMatrix st_t = cholesky_solve(gram, rhs_t);
    for (std::size_t i = 0; i < st.s.rows(); ++i) {
      for (std::size_t j = 0; j < st.s.cols(); ++j) st.s.at(i, j) = st_t.at(j, i);
    }

    // B-step: elementwise shrinkage of S + V.
    const DenseMatrix b_prev = st.b;
    for (std::size_t i = 0; i < st.b.size(); ++i) {
      st.b.raw()[i] = soft_threshold(st.s.raw()[i] + st.v.raw()[i], kappa);
    }

    // Dual ascent on the S = B constraint.
    DenseMatrix gap = st.s;
    sub_inplace(gap, st.b);
    add_inplace(st.v, gap);

    rep.iterations = it + 1;
    rep.primal_residual = frobenius_norm(gap);
    rep.dual_residual = rho * frobenius_norm(sub(st.b, b_prev));
    if (rep.primal_residual <= opts.tol * std::max(frobenius_norm(st.s), 1.0) &&
        rep.dual_residual <= opts.tol) {
      rep.converged = true;
      break;
    }
  }
  return rep;
}

double sparse_objective(const SparseCodeState& st, const DenseMatrix& z,
                        double lambda1, double lambda2) {
  require_pool(st, z, "sparse_objective");
  DenseMatrix resid = sub(z, matmul(st.s, st.h));
  double fro2 = 0.0;
  for (double v : resid.raw()) fro2 += v * v;
  return lambda1 * fro2 + lambda2 * l1_norm(st.s);
}

}  // namespace awae
