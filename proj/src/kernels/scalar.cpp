// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/kernels/kernels.hpp"

namespace styleforge::kernels {
namespace {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy(T* y, T alpha, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a[i * k + p];
            for (std::size_t j = 0; j < m; ++j) c[i * m + j] += av * b[p * m + j];
        }
    }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) c[i * m + j] += dot(a + i * k, b + j * k, k);
    }
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a[i * k + p];
            for (std::size_t j = 0; j < m; ++j) c[p * m + j] += av * b[i * m + j];
        }
    }
}

}  // namespace

template <typename T>
const KernelTable<T>& scalar_table() {
    static const KernelTable<T> table{Backend::Scalar, &dot<T>, &axpy<T>, &gemm_nn<T>, &gemm_nt<T>,
                                      &gemm_tn<T>};
    return table;
}

template const KernelTable<float>& scalar_table<float>();
template const KernelTable<double>& scalar_table<double>();

}  // namespace styleforge::kernels
