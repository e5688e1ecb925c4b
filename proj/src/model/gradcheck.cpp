/* Copyright 2026 The Polymass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <cmath>

#include "polymass/model.hpp"

namespace polymass {

GradCheckResult GradientCheck(const ModelParams<double>& params, const Batch& batch, double step,
                              std::size_t stride, double floor) {
  if (step <= 0.0 || stride == 0) throw Error("gradient check needs step > 0 and stride >= 1");
  const GradResult<double> g = Backward(params, batch);
  ModelParams<double> p = params;
  GradCheckResult r;
  for (std::size_t t = 0; t < p.count(); ++t) {
    auto& data = p.tensor(t).data;
    for (std::size_t i = 0; i < data.size(); i += stride) {
      const double orig = data[i];
      auto loss_at = [&](double x) {
        data[i] = x;
        return Forward(p, batch).loss;
      };
      const double m2 = loss_at(orig - 2 * step), m1 = loss_at(orig - step);
      const double p1 = loss_at(orig + step), p2 = loss_at(orig + 2 * step);
      data[i] = orig;
      const double fd4 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * step);
      const double fd2 = (p1 - m1) / (2 * step);
      const double an = g.grads.tensor(t).data[i];
      const double rel4 = std::abs(fd4 - an) / std::max({std::abs(fd4), std::abs(an), floor});
      const double rel2 = std::abs(fd2 - an) / std::max({std::abs(fd2), std::abs(an), floor});
      if (r.coordinates == 0 || rel4 > r.max_rel_error) {
        r.max_rel_error = rel4;
        r.worst_tensor = p.name(t);
        r.worst_index = i;
      }
      r.max_rel_error_two_point = std::max(r.max_rel_error_two_point, rel2);
      ++r.coordinates;
    }
  }
  return r;
}

}  // namespace polymass
