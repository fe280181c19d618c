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
#include <vector>

#include "awae/matrix.hpp"

namespace awae {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment accumulators, one pair per parameter tensor, plus
// the shared step counter used for bias correction.
struct AdamState {
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
  std::int64_t step = 0;

  static AdamState zeros_like(const std::vector<const DenseMatrix*>& params);
};

// One Adam update over a parameter tensor list. params and grads must match
// the shapes the state was built from. A zero gradient leaves the parameter
// unchanged (bias correction keeps 0/0 away) while still advancing the step.
void adam_step(const std::vector<DenseMatrix*>& params,
               const std::vector<const DenseMatrix*>& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace awae
