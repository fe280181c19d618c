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
#include "awae/matrix.hpp"

#include <cmath>
#include <string>

#include "awae/errors.hpp"

namespace awae {

namespace {

void require_shape(bool ok, const char* op) {
  if (!ok) throw NumericError(std::string("shape mismatch in ") + op);
}

}  // namespace

bool all_finite(const DenseMatrix& m) {
  for (double v : m.raw()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const DenseMatrix& m, const char* what) {
  if (!all_finite(m)) {
    throw NumericError(std::string(what) + " contains a non-finite entry");
  }
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.rows(), "matmul");
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.rows() == b.rows(), "matmul_at_b");
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    const double* bi = b.row_ptr(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* cp = c.row_ptr(p);
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * bi[j];
    }
  }
  return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.cols() == b.cols(), "matmul_a_bt");
  DenseMatrix c(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row_ptr(i);
    double* ci = c.row_ptr(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
  return c;
}

void add_row_vector(DenseMatrix& m, const DenseMatrix& v) {
  require_shape(v.rows() == 1 && v.cols() == m.cols(), "add_row_vector");
  const double* vp = v.row_ptr(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* mi = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols(); ++j) mi[j] += vp[j];
  }
}

DenseMatrix col_sums(const DenseMatrix& m) {
  DenseMatrix v(1, m.cols());
  double* vp = v.row_ptr(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* mi = m.row_ptr(i);
    for (std::size_t j = 0; j < m.cols(); ++j) vp[j] += mi[j];
  }
  return v;
}

void add_inplace(DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += b.raw()[i];
}

void sub_inplace(DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "sub_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] -= b.raw()[i];
}

void axpy_inplace(DenseMatrix& a, double s, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "axpy_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] += s * b.raw()[i];
}

void scale_inplace(DenseMatrix& a, double s) {
  for (auto& x : a.raw()) x *= s;
}

void hadamard_inplace(DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "hadamard_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a.raw()[i] *= b.raw()[i];
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
  require_shape(a.same_shape(b), "sub");
  DenseMatrix c = a;
  sub_inplace(c, b);
  return c;
}

double frobenius_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.raw()) s += v * v;
  return std::sqrt(s);
}

double l1_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : m.raw()) s += std::fabs(v);
  return s;
}

DenseMatrix cholesky_solve(const DenseMatrix& a, const DenseMatrix& rhs) {
  require_shape(a.rows() == a.cols() && a.rows() == rhs.rows(), "cholesky_solve");
  const std::size_t n = a.rows(), m = rhs.cols();

  // Lower-triangular factor, a = L L^T.
  DenseMatrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a.at(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= l.at(i, p) * l.at(j, p);
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) {
          throw NumericError("cholesky_solve: matrix is not positive definite");
        }
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }

  // Forward substitution L y = rhs, then back substitution L^T x = y.
  DenseMatrix x = rhs;
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x.at(i, c);
      for (std::size_t p = 0; p < i; ++p) s -= l.at(i, p) * x.at(p, c);
      x.at(i, c) = s / l.at(i, i);
    }
    for (std::size_t ii = n; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double s = x.at(i, c);
      for (std::size_t p = i + 1; p < n; ++p) s -= l.at(p, i) * x.at(p, c);
      x.at(i, c) = s / l.at(i, i);
    }
  }
  return x;
}

}  // namespace awae
