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

#include "balpack/kernels.hpp"

namespace balpack::kernels::scalar {

namespace {

template <bool Square>
double reduce(const float* a, const float* b, std::size_t n) {
  double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t body = n - n % 8;
  for (std::size_t i = 0; i < body; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double x = a[i + j];
      const double y = Square ? x : static_cast<double>(b[i + j]);
      lane[j] += x * y;
    }
  }
  double t[4];
  for (std::size_t j = 0; j < 4; ++j) t[j] = lane[j] + lane[j + 4];
  double sum = (t[0] + t[2]) + (t[1] + t[3]);
  for (std::size_t i = body; i < n; ++i) {
    const double x = a[i];
    const double y = Square ? x : static_cast<double>(b[i]);
    sum += x * y;
  }
  return sum;
}

}  // namespace

double dot(const float* a, const float* b, std::size_t n) { return reduce<false>(a, b, n); }

double squared_norm(const float* a, std::size_t n) { return reduce<true>(a, a, n); }

void dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
              double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot(query, rows + r * dim, dim);
}

}  // namespace balpack::kernels::scalar
