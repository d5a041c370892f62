/* Copyright 2026 The balpack Authors. All Rights Reserved.

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

#include <arm_neon.h>

#include "balpack/kernels.hpp"

namespace balpack::kernels::neon {

double dot(const float* a, const float* b, std::size_t n) {
  // Lanes {0,1}, {2,3}, {4,5}, {6,7} of the reference order.
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  const std::size_t body = n - n % 8;
  for (std::size_t i = 0; i < body; i += 8) {
    const float32x4_t a0 = vld1q_f32(a + i);
    const float32x4_t a1 = vld1q_f32(a + i + 4);
    const float32x4_t b0 = vld1q_f32(b + i);
    const float32x4_t b1 = vld1q_f32(b + i + 4);
    acc0 = vaddq_f64(acc0, vmulq_f64(vcvt_f64_f32(vget_low_f32(a0)), vcvt_f64_f32(vget_low_f32(b0))));
    acc1 = vaddq_f64(acc1, vmulq_f64(vcvt_high_f64_f32(a0), vcvt_high_f64_f32(b0)));
    acc2 = vaddq_f64(acc2, vmulq_f64(vcvt_f64_f32(vget_low_f32(a1)), vcvt_f64_f32(vget_low_f32(b1))));
    acc3 = vaddq_f64(acc3, vmulq_f64(vcvt_high_f64_f32(a1), vcvt_high_f64_f32(b1)));
  }
  // t{0,1} = lanes{0,1} + lanes{4,5}; t{2,3} = lanes{2,3} + lanes{6,7}
  const float64x2_t t01 = vaddq_f64(acc0, acc2);
  const float64x2_t t23 = vaddq_f64(acc1, acc3);
  const float64x2_t u = vaddq_f64(t01, t23);
  double sum = vgetq_lane_f64(u, 0) + vgetq_lane_f64(u, 1);
  for (std::size_t i = body; i < n; ++i) {
    sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return sum;
}

double squared_norm(const float* a, std::size_t n) { return dot(a, a, n); }

void dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
              double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot(query, rows + r * dim, dim);
}

}  // namespace balpack::kernels::neon
