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

#include <atomic>
#include <stdexcept>

#include "balpack/kernels.hpp"

namespace balpack::kernels {

#define BALPACK_DECLARE_VARIANT(ns)                                                          \
  namespace ns {                                                                             \
  double dot(const float* a, const float* b, std::size_t n);                                 \
  double squared_norm(const float* a, std::size_t n);                                        \
  void dot_rows(const float* query, const float* rows, std::size_t n_rows, std::size_t dim,  \
                double* out);                                                                \
  }

#if defined(BALPACK_HAVE_X86)
BALPACK_DECLARE_VARIANT(avx2)
BALPACK_DECLARE_VARIANT(avx512)
#endif
#if defined(BALPACK_HAVE_NEON)
BALPACK_DECLARE_VARIANT(neon)
#endif

#undef BALPACK_DECLARE_VARIANT

namespace {

constexpr KernelTable kScalar{&scalar::dot, &scalar::squared_norm, &scalar::dot_rows};
#if defined(BALPACK_HAVE_X86)
constexpr KernelTable kAvx2{&avx2::dot, &avx2::squared_norm, &avx2::dot_rows};
constexpr KernelTable kAvx512{&avx512::dot, &avx512::squared_norm, &avx512::dot_rows};
#endif
#if defined(BALPACK_HAVE_NEON)
constexpr KernelTable kNeon{&neon::dot, &neon::squared_norm, &neon::dot_rows};
#endif

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
#if defined(BALPACK_HAVE_X86)
    case Isa::avx2:
      return __builtin_cpu_supports("avx2");
    case Isa::avx512:
      return __builtin_cpu_supports("avx512f");
#endif
#if defined(BALPACK_HAVE_NEON)
    case Isa::neon:
      return true;  // baseline on AArch64
#endif
    default:
      return false;
  }
}

Isa widest_available() noexcept {
  for (Isa isa : {Isa::avx512, Isa::avx2, Isa::neon}) {
    if (table_for(isa) != nullptr) return isa;
  }
  return Isa::scalar;
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{widest_available()};
  return isa;
}

const KernelTable& current() noexcept { return *table_for(active().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::avx512: return "avx512";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) noexcept {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::scalar: return &kScalar;
#if defined(BALPACK_HAVE_X86)
    case Isa::avx2: return &kAvx2;
    case Isa::avx512: return &kAvx512;
#endif
#if defined(BALPACK_HAVE_NEON)
    case Isa::neon: return &kNeon;
#endif
    default: return nullptr;
  }
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::avx512, Isa::neon}) {
    if (table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

bool force_isa(Isa isa) noexcept {
  if (table_for(isa) == nullptr) return false;
  active().store(isa, std::memory_order_relaxed);
  return true;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("kernels::dot: length mismatch");
  return current().dot(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const float> a) { return current().squared_norm(a.data(), a.size()); }

void dot_rows(std::span<const float> query, std::span<const float> rows, std::size_t dim,
              std::span<double> out) {
  if (query.size() != dim || dim == 0 || rows.size() % dim != 0 || out.size() != rows.size() / dim) {
    throw std::invalid_argument("kernels::dot_rows: shape mismatch");
  }
  current().dot_rows(query.data(), rows.data(), out.size(), dim, out.data());
}

}  // namespace balpack::kernels
