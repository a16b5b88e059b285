// Copyright 2026 The synthcapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <vector>

#include "capt/nn/tape.hpp"

namespace capt::nn {

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables clipping
};

class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig config);
  /// Applies accumulated gradients (scaled by 1/batch) and zeroes them.
  void step(double batch = 1.0);

 private:
  ParameterSet* params_;
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  long steps_ = 0;
};

/// Compares reverse-mode gradients of `loss` against central finite
/// differences over every parameter entry. Returns the largest
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
double gradient_check(ParameterSet& params, const std::function<Var(Tape&)>& loss,
                      double step = 1e-5, double floor = 1e-5);

}  // namespace capt::nn
