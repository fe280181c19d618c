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
#include "awae/objective.hpp"

#include <cmath>
#include <string>

#include "awae/errors.hpp"
#include "awae/kv.hpp"

namespace awae {

namespace {

constexpr double kTinyProb = 1e-300;
constexpr double kVarFloor = 1e-12;

double safe_log(double p) { return std::log(p < kTinyProb ? kTinyProb : p); }

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b)) throw NumericError(std::string(op) + ": shape mismatch");
}

}  // namespace

const char* to_string(CostKind k) {
  switch (k) {
    case CostKind::kMultinomial: return "multinomial";
    case CostKind::kMultinomialNonclick: return "multinomial_nonclick";
    case CostKind::kMil: return "mil";
  }
  return "?";
}

CostKind cost_kind_from_string(const std::string& s) {
  if (s == "multinomial") return CostKind::kMultinomial;
  if (s == "multinomial_nonclick") return CostKind::kMultinomialNonclick;
  if (s == "mil") return CostKind::kMil;
  throw DataError("unknown cost kind '" + s + "'");
}

OutputActivation activation_for(CostKind k) {
  return k == CostKind::kMil ? OutputActivation::kSigmoid
                             : OutputActivation::kSoftmax;
}

TermResult cost_multinomial(const DenseMatrix& x, const DenseMatrix& x_prime) {
  return cost_multinomial_nonclick(x, x_prime, 0.0, false);
}

TermResult cost_multinomial_nonclick(const DenseMatrix& x, const DenseMatrix& x_prime,
                                     double gamma, bool complement) {
  require_same_shape(x, x_prime, "cost_multinomial");
  if (x.rows() == 0) throw NumericError("cost_multinomial: empty batch");
  if (gamma < 0.0) throw NumericError("cost_multinomial: gamma must be >= 0");

  const std::size_t n = x.rows(), m = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  TermResult res;
  res.grad = DenseMatrix(n, m);

  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row_ptr(i);
    const double* pi = x_prime.row_ptr(i);
    double* gi = res.grad.row_ptr(i);

    if (!complement) {
      // Weight w = x + gamma*(1-x) on every log-prob. The logit gradient of
      // -sum_j w_j log p_j is (sum_j w_j) p - w, row by row.
      double w_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = xi[j] + gamma * (1.0 - xi[j]);
        w_sum += w;
        if (w != 0.0) value -= w * safe_log(pi[j]);
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double w = xi[j] + gamma * (1.0 - xi[j]);
        gi[j] = (w_sum * pi[j] - w) * inv_n;
      }
    } else {
      // Click term as above; non-clicks push probability mass down through
      // log(1 - p). With c_j = (1-x_j) p_j / (1-p_j), the logit gradient of
      // the non-click part is gamma * (c - p * sum(c)).
      double x_sum = 0.0, c_sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        x_sum += xi[j];
        if (xi[j] != 0.0) value -= xi[j] * safe_log(pi[j]);
        const double one_minus = std::max(1.0 - pi[j], kTinyProb);
        if (xi[j] != 1.0) {
          value -= gamma * (1.0 - xi[j]) * std::log(one_minus);
          c_sum += (1.0 - xi[j]) * pi[j] / one_minus;
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double one_minus = std::max(1.0 - pi[j], kTinyProb);
        const double c = (1.0 - xi[j]) * pi[j] / one_minus;
        gi[j] = ((x_sum * pi[j] - xi[j]) + gamma * (c - pi[j] * c_sum)) * inv_n;
      }
    }
  }
  res.value = value * inv_n;
  return res;
}

TermResult cost_mil(const DenseMatrix& x, const DenseMatrix& x_prime,
                    double gamma_plus, double a_mi, double gamma_mi) {
  require_same_shape(x, x_prime, "cost_mil");
  if (x.rows() == 0) throw NumericError("cost_mil: empty batch");

  const std::size_t n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double two_gm = 2.0 * gamma_mi;
  TermResult res;
  res.grad = DenseMatrix(x.rows(), x.cols());

  double value = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xv = x.raw()[i];
    const double p = x_prime.raw()[i];
    if (!(p > 0.0 && p < 1.0)) {
      throw NumericError("cost_mil: x_prime entry " + format_double(p) +
                         " outside (0, 1); sigmoid output contract violated");
    }
    const double miss = 1.0 - p;
    const double half_1px = 0.5 * (1.0 + xv);
    const double dev = p - 0.5;
    const double dev_pow = std::pow(dev, two_gm);
    const double dev_pow_m1 = std::pow(dev, two_gm - 1.0);

    value += xv * half_1px * std::pow(miss, gamma_plus) +
             half_1px * miss * a_mi * dev_pow;
    res.grad.raw()[i] =
        inv_n * (-xv * half_1px * gamma_plus * std::pow(miss, gamma_plus - 1.0) +
                 half_1px * a_mi * (-dev_pow + miss * two_gm * dev_pow_m1));
  }
  res.value = value * inv_n;
  return res;
}

TermResult smv_divergence(const DenseMatrix& z) {
  if (z.rows() < 2) throw NumericError("smv_divergence: batch must have >= 2 rows");
  const std::size_t dim = z.cols();
  const double pool = static_cast<double>(z.size());

  double mu = 0.0;
  for (double v : z.raw()) mu += v;
  mu /= pool;
  double var = 0.0;
  for (double v : z.raw()) var += (v - mu) * (v - mu);
  var /= pool;

  TermResult res;
  res.grad = DenseMatrix(z.rows(), z.cols());
  const double j_half = 0.5 * static_cast<double>(dim);
  if (var < kVarFloor) {
    // Floored regime: the variance terms are constant, only mu^2 moves.
    res.value = j_half * (mu * mu + kVarFloor - std::log(kVarFloor) - 1.0);
    const double g = static_cast<double>(dim) * mu / pool;
    for (auto& v : res.grad.raw()) v = g;
  } else {
    res.value = j_half * (mu * mu + var - std::log(var) - 1.0);
    const double scale = static_cast<double>(dim) / pool;
    const double var_coef = 1.0 - 1.0 / var;
    for (std::size_t i = 0; i < z.size(); ++i) {
      res.grad.raw()[i] = scale * (mu + var_coef * (z.raw()[i] - mu));
    }
  }
  return res;
}

TermResult mi_regularizer(const DenseMatrix& z, const DenseMatrix& prior,
                          double bandwidth) {
  if (z.cols() != prior.cols()) {
    throw NumericError("mi_regularizer: z and prior widths differ");
  }
  if (z.rows() < 2 || prior.rows() < 2) {
    throw NumericError("mi_regularizer: both batches need >= 2 rows");
  }
  if (!(bandwidth > 0.0)) throw NumericError("mi_regularizer: bandwidth must be > 0");

  const std::size_t n = z.rows(), m = prior.rows(), dim = z.cols();
  const double c = 2.0 * static_cast<double>(dim) * bandwidth * bandwidth;

  TermResult res;
  res.grad = DenseMatrix(n, dim);

  auto sqdist = [dim](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return s;
  };

  // Within-z term, unbiased (diagonal excluded). Each unordered pair
  // contributes twice to the sum and twice to each member's gradient.
  const double zz_w = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
  double s_zz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = z.row_ptr(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* zj = z.row_ptr(j);
      const double d2 = sqdist(zi, zj);
      const double denom = c + d2;
      s_zz += 2.0 * c / denom;
      const double gc = zz_w * 2.0 * (-2.0 * c / (denom * denom));
      double* gi = res.grad.row_ptr(i);
      double* gj = res.grad.row_ptr(j);
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = zi[k] - zj[k];
        gi[k] += gc * diff;
        gj[k] -= gc * diff;
      }
    }
  }
  s_zz *= zz_w;

  // Within-prior term: constant in z, value only.
  const double pp_w = 1.0 / (static_cast<double>(m) * static_cast<double>(m - 1));
  double s_pp = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      s_pp += 2.0 * c / (c + sqdist(prior.row_ptr(i), prior.row_ptr(j)));
    }
  }
  s_pp *= pp_w;

  // Cross term over all pairs.
  const double zp_w = 1.0 / (static_cast<double>(n) * static_cast<double>(m));
  double s_zp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = z.row_ptr(i);
    double* gi = res.grad.row_ptr(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double* pj = prior.row_ptr(j);
      const double d2 = sqdist(zi, pj);
      const double denom = c + d2;
      s_zp += c / denom;
      const double gc = -2.0 * zp_w * (-2.0 * c / (denom * denom));
      for (std::size_t k = 0; k < dim; ++k) gi[k] += gc * (zi[k] - pj[k]);
    }
  }
  s_zp *= zp_w;

  res.value = s_zz + s_pp - 2.0 * s_zp;
  return res;
}

TermResult sparse_penalty(const DenseMatrix& z, const DenseMatrix& s,
                          const DenseMatrix& a, double lambda1, double lambda2) {
  if (s.rows() != z.rows() || s.cols() != a.rows() || a.cols() != z.cols()) {
    throw NumericError("sparse_penalty: Z is " + std::to_string(z.rows()) + "x" +
                       std::to_string(z.cols()) + " but S A is " +
                       std::to_string(s.rows()) + "x" + std::to_string(a.cols()));
  }
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw NumericError("sparse_penalty: lambda weights must be >= 0");
  }
  const double inv_n = 1.0 / static_cast<double>(z.rows());

  DenseMatrix resid = sub(z, matmul(s, a));
  TermResult res;
  double fro2 = 0.0;
  for (double v : resid.raw()) fro2 += v * v;
  res.value = inv_n * (lambda1 * fro2 + lambda2 * l1_norm(s));
  res.grad = std::move(resid);
  scale_inplace(res.grad, 2.0 * lambda1 * inv_n);
  return res;
}

LossBreakdown total_loss(const ForwardTape& tape, const DenseMatrix* s,
                         const DenseMatrix* a, const DenseMatrix* prior,
                         const ObjectiveConfig& cfg, DenseMatrix* d_output,
                         DenseMatrix* d_z_extra) {
  if (activation_for(cfg.cost_kind) != tape.output_activation) {
    throw NumericError(std::string("total_loss: cost '") + to_string(cfg.cost_kind) +
                       "' does not match the tape's output activation");
  }
  if (cfg.beta < 0.0 || cfg.alpha < 0.0 || cfg.delta < 0.0) {
    throw NumericError("total_loss: regularizer weights must be >= 0");
  }

  LossBreakdown out;
  TermResult rec;
  switch (cfg.cost_kind) {
    case CostKind::kMultinomial:
      rec = cost_multinomial(tape.input, tape.output);
      break;
    case CostKind::kMultinomialNonclick:
      rec = cost_multinomial_nonclick(tape.input, tape.output, cfg.gamma,
                                      cfg.nonclick_complement);
      break;
    case CostKind::kMil:
      rec = cost_mil(tape.input, tape.output, cfg.gamma_plus, cfg.a_mi, cfg.gamma_mi);
      break;
  }
  out.reconstruction = rec.value;
  if (d_output) *d_output = std::move(rec.grad);

  DenseMatrix gz(tape.z.rows(), tape.z.cols());

  TermResult smv = smv_divergence(tape.z);
  out.smv = smv.value;
  if (cfg.beta != 0.0) axpy_inplace(gz, cfg.beta, smv.grad);

  if (cfg.alpha != 0.0) {
    if (!prior) throw NumericError("total_loss: alpha > 0 requires a prior batch");
    TermResult mi = mi_regularizer(tape.z, *prior, cfg.mmd_bandwidth);
    out.mi = mi.value;
    axpy_inplace(gz, cfg.alpha, mi.grad);
  }

  if (cfg.delta != 0.0) {
    if (!s || !a) throw NumericError("total_loss: delta > 0 requires S and A");
    TermResult sp = sparse_penalty(tape.z, *s, *a, cfg.lambda1, cfg.lambda2);
    out.sparse = sp.value;
    axpy_inplace(gz, cfg.delta, sp.grad);
  }

  if (d_z_extra) *d_z_extra = std::move(gz);
  out.total = out.reconstruction + cfg.beta * out.smv + cfg.alpha * out.mi +
              cfg.delta * out.sparse;
  return out;
}

}  // namespace awae
