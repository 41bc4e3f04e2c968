// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma. Only reached through the dispatch table after
// CPUID confirms support.

#include <immintrin.h>

#include "styleforge/kernels/kernels.hpp"

namespace styleforge::kernels {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
    using reg = __m256;
    static constexpr std::size_t width = 8;
    static reg zero() { return _mm256_setzero_ps(); }
    static reg load(const float* p) { return _mm256_loadu_ps(p); }
    static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
    static reg set1(float v) { return _mm256_set1_ps(v); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
    static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
    static float hsum(reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        __m128 shuf = _mm_movehdup_ps(lo);
        __m128 sums = _mm_add_ps(lo, shuf);
        shuf = _mm_movehl_ps(shuf, sums);
        sums = _mm_add_ss(sums, shuf);
        return _mm_cvtss_f32(sums);
    }
};

template <>
struct Vec<double> {
    using reg = __m256d;
    static constexpr std::size_t width = 4;
    static reg zero() { return _mm256_setzero_pd(); }
    static reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
    static reg set1(double v) { return _mm256_set1_pd(v); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
    static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
    static double hsum(reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        __m128d high64 = _mm_unpackhi_pd(lo, lo);
        return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
    }
};

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    auto acc0 = V::zero(), acc1 = V::zero();
    std::size_t i = 0;
    for (; i + 2 * w <= n; i += 2 * w) {
        acc0 = V::fmadd(V::load(a + i), V::load(b + i), acc0);
        acc1 = V::fmadd(V::load(a + i + w), V::load(b + i + w), acc1);
    }
    for (; i + w <= n; i += w) acc0 = V::fmadd(V::load(a + i), V::load(b + i), acc0);
    T acc = V::hsum(V::add(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
void axpy(T* y, T alpha, const T* x, std::size_t n) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    const auto va = V::set1(alpha);
    std::size_t i = 0;
    for (; i + w <= n; i += w) V::store(y + i, V::fmadd(va, V::load(x + i), V::load(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// Row tile of C held in four registers while the reduction index runs; the
// A element for row/reduction pair (r, p) is a[r * a_row + p * a_col].
template <typename T>
void accumulate_rows(const T* a, std::size_t a_row, std::size_t a_col, const T* b, T* c,
                     std::size_t rows, std::size_t k, std::size_t m) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    constexpr std::size_t tile = 4 * w;
    for (std::size_t r = 0; r < rows; ++r) {
        T* crow = c + r * m;
        std::size_t j = 0;
        for (; j + tile <= m; j += tile) {
            auto c0 = V::load(crow + j), c1 = V::load(crow + j + w);
            auto c2 = V::load(crow + j + 2 * w), c3 = V::load(crow + j + 3 * w);
            for (std::size_t p = 0; p < k; ++p) {
                const auto av = V::set1(a[r * a_row + p * a_col]);
                const T* brow = b + p * m + j;
                c0 = V::fmadd(av, V::load(brow), c0);
                c1 = V::fmadd(av, V::load(brow + w), c1);
                c2 = V::fmadd(av, V::load(brow + 2 * w), c2);
                c3 = V::fmadd(av, V::load(brow + 3 * w), c3);
            }
            V::store(crow + j, c0);
            V::store(crow + j + w, c1);
            V::store(crow + j + 2 * w, c2);
            V::store(crow + j + 3 * w, c3);
        }
        for (; j + w <= m; j += w) {
            auto c0 = V::load(crow + j);
            for (std::size_t p = 0; p < k; ++p) {
                c0 = V::fmadd(V::set1(a[r * a_row + p * a_col]), V::load(b + p * m + j), c0);
            }
            V::store(crow + j, c0);
        }
        for (; j < m; ++j) {
            T acc = crow[j];
            for (std::size_t p = 0; p < k; ++p) acc += a[r * a_row + p * a_col] * b[p * m + j];
            crow[j] = acc;
        }
    }
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    accumulate_rows(a, k, 1, b, c, n, k, m);
}

template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    // C row p accumulates sum_i A[i, p] * B[i, :]: rows of C indexed by p,
    // reduction over i.
    accumulate_rows(a, 1, k, b, c, k, n, m);
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t n, std::size_t k, std::size_t m) {
    using V = Vec<T>;
    constexpr std::size_t w = V::width;
    for (std::size_t i = 0; i < n; ++i) {
        const T* arow = a + i * k;
        std::size_t j = 0;
        for (; j + 4 <= m; j += 4) {
            const T* b0 = b + j * k;
            const T* b1 = b0 + k;
            const T* b2 = b1 + k;
            const T* b3 = b2 + k;
            auto s0 = V::zero(), s1 = V::zero(), s2 = V::zero(), s3 = V::zero();
            std::size_t p = 0;
            for (; p + w <= k; p += w) {
                const auto av = V::load(arow + p);
                s0 = V::fmadd(av, V::load(b0 + p), s0);
                s1 = V::fmadd(av, V::load(b1 + p), s1);
                s2 = V::fmadd(av, V::load(b2 + p), s2);
                s3 = V::fmadd(av, V::load(b3 + p), s3);
            }
            T r0 = V::hsum(s0), r1 = V::hsum(s1), r2 = V::hsum(s2), r3 = V::hsum(s3);
            for (; p < k; ++p) {
                r0 += arow[p] * b0[p];
                r1 += arow[p] * b1[p];
                r2 += arow[p] * b2[p];
                r3 += arow[p] * b3[p];
            }
            c[i * m + j] += r0;
            c[i * m + j + 1] += r1;
            c[i * m + j + 2] += r2;
            c[i * m + j + 3] += r3;
        }
        for (; j < m; ++j) c[i * m + j] += dot(arow, b + j * k, k);
    }
}

}  // namespace

template <typename T>
const KernelTable<T>* avx2_table() {
    static const KernelTable<T> table{Backend::Avx2, &dot<T>, &axpy<T>, &gemm_nn<T>, &gemm_nt<T>,
                                      &gemm_tn<T>};
    return &table;
}

template const KernelTable<float>* avx2_table<float>();
template const KernelTable<double>* avx2_table<double>();

}  // namespace styleforge::kernels
