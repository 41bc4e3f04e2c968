// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Dense arithmetic used by every model forward/backward pass. Each operation
// has a scalar reference implementation and an AVX2+FMA implementation; the
// table is chosen once at startup from CPUID (override with the
// STYLE_FORGE_KERNELS environment variable: "scalar", "avx2" or "auto").
//
// All matrices are dense row-major. "Accumulate" means C += ..., never C = ...
namespace styleforge::kernels {

enum class Backend { Scalar, Avx2 };

template <typename T>
struct KernelTable {
    Backend backend;
    /// sum_i a[i] * b[i]
    T (*dot)(const T* a, const T* b, std::size_t n);
    /// y += alpha * x
    void (*axpy)(T* y, T alpha, const T* x, std::size_t n);
    /// C[n x m] += A[n x k] * B[k x m]
    void (*gemm_nn)(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m);
    /// C[n x m] += A[n x k] * B[m x k]^T
    void (*gemm_nt)(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m);
    /// C[k x m] += A[n x k]^T * B[n x m]
    void (*gemm_tn)(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m);
};

template <typename T>
const KernelTable<T>& scalar_table();

/// nullptr when the binary was built without AVX2 support.
template <typename T>
const KernelTable<T>* avx2_table();

bool cpu_has_avx2();

/// Backends usable on this machine, scalar first.
std::vector<Backend> available_backends();

/// Selected table. Thread-safe after first call.
template <typename T>
const KernelTable<T>& active();

/// Force a backend (tests and benchmarks). Throws ConfigError if unavailable.
void select(Backend backend);
Backend selected();

std::string_view name(Backend backend);

template <typename T>
const KernelTable<T>& table_for(Backend backend);

}  // namespace styleforge::kernels
