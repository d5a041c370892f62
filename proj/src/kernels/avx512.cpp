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

#include <immintrin.h>

#include "balpack/kernels.hpp"

namespace balpack::kernels::avx512 {

double dot(const float* a, const float* b, std::size_t n) {
  // One zmm register holds all eight reduction lanes.
  __m512d acc = _mm512_setzero_pd();
  const std::size_t body = n - n % 8;
  for (std::size_t i = 0; i < body; i += 8) {
    const __m512d va = _mm512_cvtps_pd(_mm256_loadu_ps(a + i));
    const __m512d vb = _mm512_cvtps_pd(_mm256_loadu_ps(b + i));
    acc = _mm512_add_pd(acc, _mm512_mul_pd(va, vb));
  }
  const __m256d t = _mm256_add_pd(_mm512_castpd512_pd256(acc), _mm512_extractf64x4_pd(acc, 1));
  const __m128d u = _mm_add_pd(_mm256_castpd256_pd128(t), _mm256_extractf128_pd(t, 1));
  double sum = _mm_cvtsd_f64(u) + _mm_cvtsd_f64(_mm_unpackhi_pd(u, u));
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

}  // namespace balpack::kernels::avx512
