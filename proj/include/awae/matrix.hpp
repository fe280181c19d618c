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

#include <cstddef>
#include <vector>

namespace awae {

// Dense row-major matrix of doubles. All model math runs in 64-bit.
// Kernels are single-threaded and sequence operations identically on every
// run, so results are deterministic for fixed inputs.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v) { for (auto& x : data_) x = v; }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool operator==(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws NumericError if any entry is NaN or infinite. `what` names the
// tensor in the message.
void require_finite(const DenseMatrix& m, const char* what);
bool all_finite(const DenseMatrix& m);

// c = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b (a is m x k, b is m x n, result k x n)
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T (a is m x k, b is n x k, result m x n)
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

// m[r, :] += v[0, :] for every row r. v must be 1 x cols.
void add_row_vector(DenseMatrix& m, const DenseMatrix& v);
// 1 x cols vector of column sums.
DenseMatrix col_sums(const DenseMatrix& m);

void add_inplace(DenseMatrix& a, const DenseMatrix& b);          // a += b
void sub_inplace(DenseMatrix& a, const DenseMatrix& b);          // a -= b
void axpy_inplace(DenseMatrix& a, double s, const DenseMatrix& b);  // a += s*b
void scale_inplace(DenseMatrix& a, double s);                    // a *= s
void hadamard_inplace(DenseMatrix& a, const DenseMatrix& b);     // a .*= b

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& m);
double l1_norm(const DenseMatrix& m);  // sum of |entries|

// Solves a * x = rhs for symmetric positive definite a via Cholesky.
// a is n x n, rhs is n x m. Throws NumericError if a is not SPD.
DenseMatrix cholesky_solve(const DenseMatrix& a, const DenseMatrix& rhs);

}  // namespace awae
