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
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "doctest.h"

#include "awae/errors.hpp"
#include "awae/rng.hpp"
#include "awae/sparse_code.hpp"
#include "oracles.hpp"

using namespace awae;
using awae::testing::brute_force_sparse_min;
using awae::testing::random_matrix;

namespace {

double column_norm(const DenseMatrix& m, std::size_t j) {
  double sq = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) sq += m.at(r, j) * m.at(r, j);
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("soft threshold hand values") {
  CHECK(soft_threshold(2.0, 0.5) == 1.5);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  CHECK(soft_threshold(0.3, 0.5) == 0.0);
  CHECK(soft_threshold(-0.3, 0.5) == 0.0);
  CHECK(soft_threshold(0.5, 0.5) == 0.0);
  CHECK(soft_threshold(1.0, 0.0) == 1.0);
  CHECK(soft_threshold(-1.0, 0.0) == -1.0);
}

TEST_CASE("sparse state initialization contract") {
  const SparseCodeState st = init_sparse(4, 3, 5, 42);
  CHECK(st.s == DenseMatrix(4, 3, 0.0));
  CHECK(st.b == DenseMatrix(4, 3, 0.0));
  CHECK(st.v == DenseMatrix(4, 3, 0.0));
  CHECK(st.u == DenseMatrix(3, 5, 0.0));
  CHECK(st.h == st.a);
  CHECK(st.rho == 1.0);
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(column_norm(st.a, j) <= 1.0 + 1e-12);
  }

  SUBCASE("deterministic in the seed") {
    const SparseCodeState again = init_sparse(4, 3, 5, 42);
    CHECK(again.a == st.a);
    const SparseCodeState other = init_sparse(4, 3, 5, 43);
    CHECK_FALSE(other.a == st.a);
  }

  SUBCASE("invalid arguments throw") {
    CHECK_THROWS_AS(init_sparse(0, 3, 5, 1), NumericError);
    CHECK_THROWS_AS(init_sparse(4, 0, 5, 1), NumericError);
    CHECK_THROWS_AS(init_sparse(4, 3, 0, 1), NumericError);
    CHECK_THROWS_AS(init_sparse(4, 3, 5, 1, 0.0), NumericError);
    CHECK_THROWS_AS(init_sparse(4, 3, 5, 1, -1.0), NumericError);
  }
}

TEST_CASE("dictionary update solves the clamped 1-d problem") {
  // Z = [2, 0], single code fixed at 1: the best unit-ball dictionary row is
  // [1, 0] (first entry saturates the column constraint).
  DenseMatrix z(1, 2);
  z.at(0, 0) = 2.0;
  SparseCodeState st = init_sparse(1, 1, 2, 9);
  st.s.at(0, 0) = 1.0;
  AdmmOptions opts;
  opts.tol = 1e-10;
  opts.max_iters = 10000;
  const AdmmReport rep = update_a(st, z, opts);
  CHECK(rep.converged);
  CHECK(st.h.at(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(st.h.at(0, 1) == doctest::Approx(0.0).scale(1).epsilon(1e-6));
  CHECK(frobenius_norm(sub(st.a, st.h)) <= 1e-8);
}

TEST_CASE("dictionary update keeps every feasible column inside the unit ball") {
  std::mt19937_64 rng = make_rng(77, 0);
  AdmmOptions opts;  // defaults: tol 1e-6, 100 iterations
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 5, k = 1 + rng() % 3, h = 2 + rng() % 4;
    const DenseMatrix z = random_matrix(n, h, rng, -2.0, 2.0);
    SparseCodeState st = init_sparse(n, k, h, 1000 + trial);
    st.s = random_matrix(n, k, rng, -2.0, 2.0);
    const AdmmReport rep = update_a(st, z, opts);
    for (std::size_t j = 0; j < h; ++j) {
      CHECK(column_norm(st.h, j) <= 1.0 + 1e-9);
    }
    // The reported exit residuals are recomputable from the exit state.
    CHECK(rep.primal_residual == frobenius_norm(sub(st.a, st.h)));
    if (rep.converged) {
      CHECK(rep.primal_residual <=
            opts.tol * std::max(frobenius_norm(st.a), 1.0));
      CHECK(rep.dual_residual <= opts.tol);
    }
    CHECK(rep.iterations >= 1);
    CHECK(rep.iterations <= opts.max_iters);
  }
}

TEST_CASE("code update with no l1 weight reaches the least-squares solution") {
  std::mt19937_64 rng = make_rng(78, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 3 + rng() % 3, k = 2, h = 3;
    const DenseMatrix z = random_matrix(n, h, rng);
    SparseCodeState st = init_sparse(n, k, h, 500 + trial);
    AdmmOptions opts;
    opts.tol = 1e-9;
    opts.max_iters = 10000;
    const AdmmReport rep = update_s(st, z, /*lambda1=*/1.3, /*lambda2=*/0.0, opts);
    CHECK(rep.converged);

    // Closed form: S = Z A^T (A A^T)^{-1}, independent of lambda1.
    const DenseMatrix gram = matmul_a_bt(st.a, st.a);
    const DenseMatrix s_t = cholesky_solve(gram, matmul_a_bt(st.a, z));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        CHECK(st.s.at(i, j) == doctest::Approx(s_t.at(j, i)).scale(1).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("code update shrinks everything to zero past the l1 threshold") {
  std::mt19937_64 rng = make_rng(79, 0);
  const DenseMatrix z = random_matrix(4, 3, rng);
  SparseCodeState st = init_sparse(4, 2, 3, 11);
  const double lambda1 = 1.0;
  // Zero codes are optimal once lambda2 >= 2 lambda1 |Z A^T|_inf.
  const DenseMatrix zat = matmul_a_bt(z, st.a);
  double inf_norm = 0.0;
  for (double v : zat.raw()) inf_norm = std::max(inf_norm, std::abs(v));
  AdmmOptions opts;
  opts.tol = 1e-9;
  opts.max_iters = 10000;
  const AdmmReport rep = update_s(st, z, lambda1, 2.1 * lambda1 * inf_norm, opts);
  CHECK(rep.converged);
  CHECK(st.b == DenseMatrix(4, 2, 0.0));
  CHECK(frobenius_norm(st.s) <= 1e-5);
}

TEST_CASE("code update rejects bad inputs") {
  SparseCodeState st = init_sparse(2, 2, 3, 1);
  const DenseMatrix z(2, 3, 0.5);
  AdmmOptions opts;
  CHECK_THROWS_AS(update_s(st, DenseMatrix(3, 3, 0.0), 1.0, 0.1, opts), NumericError);
  CHECK_THROWS_AS(update_s(st, DenseMatrix(2, 4, 0.0), 1.0, 0.1, opts), NumericError);
  CHECK_THROWS_AS(update_s(st, z, -1.0, 0.1, opts), NumericError);
  CHECK_THROWS_AS(update_s(st, z, 1.0, -0.1, opts), NumericError);
  CHECK_THROWS_AS(update_a(st, DenseMatrix(3, 3, 0.0), opts), NumericError);
}

TEST_CASE("alternating the two updates drives the joint objective down") {
  std::mt19937_64 rng = make_rng(80, 0);
  const DenseMatrix z = random_matrix(6, 3, rng);
  SparseCodeState st = init_sparse(6, 2, 3, 21);
  const double lambda1 = 1.0, lambda2 = 0.1;
  AdmmOptions opts;
  opts.tol = 1e-8;
  opts.max_iters = 2000;

  const double initial = sparse_objective(st, z, lambda1, lambda2);
  double prev = initial;
  for (int round = 0; round < 6; ++round) {
    update_s(st, z, lambda1, lambda2, opts);
    update_a(st, z, opts);
    const double obj = sparse_objective(st, z, lambda1, lambda2);
    CHECK(obj <= prev + 1e-6 * (1.0 + std::abs(prev)));
    prev = obj;
  }
  CHECK(prev < initial);
}

TEST_CASE("alternation reaches the brute-force optimum on a tiny instance") {
  std::mt19937_64 rng = make_rng(81, 0);
  const DenseMatrix z = random_matrix(2, 2, rng);
  const double lambda1 = 1.0, lambda2 = 0.2;
  const double oracle = brute_force_sparse_min(z, /*k=*/1, lambda1, lambda2);

  AdmmOptions opts;
  opts.tol = 1e-8;
  opts.max_iters = 2000;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed : {1, 2, 3}) {
    SparseCodeState st = init_sparse(2, 1, 2, seed);
    for (int round = 0; round < 50; ++round) {
      update_s(st, z, lambda1, lambda2, opts);
      update_a(st, z, opts);
    }
    best = std::min(best, sparse_objective(st, z, lambda1, lambda2));
  }
  CHECK(std::abs(best - oracle) < 2e-4);
}
