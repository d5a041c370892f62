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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

// Similarity kernels over float32 embeddings.
//
// Every variant produces bit-identical results to the scalar reference. That
// holds because (a) each float*float product is exact in double, so fused and
// unfused multiply-add agree, and (b) all variants reduce in the same fixed
// order: eight double lanes where lane j accumulates elements j, j+8, j+16...;
// then t[j] = lane[j] + lane[j+4]; then (t0+t2) + (t1+t3); then the tail
// elements (index >= dim rounded down to 8) are added sequentially.
namespace balpack::kernels {

enum class Isa { scalar, avx2, avx512, neon };

std::string_view isa_name(Isa isa) noexcept;

// Variants compiled into this binary and supported by the running CPU.
std::vector<Isa> available_isas();

// The variant used by the dispatching entry points below. Defaults to the
// widest available one.
Isa active_isa() noexcept;

// Pins the dispatching entry points to `isa`. Returns false (and changes
// nothing) if the variant is unavailable. Intended for tests and benchmarks.
bool force_isa(Isa isa) noexcept;

struct KernelTable {
  double (*dot)(const float* a, const float* b, std::size_t n);
  double (*squared_norm)(const float* a, std::size_t n);
  // out[r] = dot(query, rows + r * dim) for r in [0, n_rows)
  void (*dot_rows)(const float* query, const float* rows, std::size_t n_rows,
                   std::size_t dim, double* out);
};

// Per-variant tables; nullptr when the variant is not compiled in.
const KernelTable* table_for(Isa isa) noexcept;

double dot(std::span<const float> a, std::span<const float> b);
double squared_norm(std::span<const float> a);
void dot_rows(std::span<const float> query, std::span<const float> rows, std::size_t dim,
              std::span<double> out);

namespace scalar {
double dot(const float* a, const float* b, std::size_t n);
double squared_norm(const float* a, std::size_t n);
void dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,
              double* out);
}  // namespace scalar

}  // namespace balpack::kernels
