// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "styleforge/error.hpp"
#include "styleforge/kernels/kernels.hpp"

namespace styleforge::kernels {

#ifndef STYLEFORGE_HAVE_AVX2
template <typename T>
const KernelTable<T>* avx2_table() {
    return nullptr;
}
template const KernelTable<float>* avx2_table<float>();
template const KernelTable<double>* avx2_table<double>();
#endif

bool cpu_has_avx2() {
#if defined(STYLEFORGE_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

std::vector<Backend> available_backends() {
    std::vector<Backend> out{Backend::Scalar};
    if (cpu_has_avx2()) out.push_back(Backend::Avx2);
    return out;
}

namespace {

Backend initial_backend() {
    const char* env = std::getenv("STYLE_FORGE_KERNELS");
    const std::string choice = env ? env : "auto";
    if (choice == "scalar") return Backend::Scalar;
    if (choice == "avx2" && !cpu_has_avx2()) {
        throw ConfigError("STYLE_FORGE_KERNELS=avx2 but this CPU lacks AVX2/FMA");
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{initial_backend()};
    return backend;
}

}  // namespace

template <typename T>
const KernelTable<T>& table_for(Backend backend) {
    if (backend == Backend::Avx2) {
        const KernelTable<T>* t = avx2_table<T>();
        if (t == nullptr || !cpu_has_avx2()) throw ConfigError("AVX2 kernels unavailable");
        return *t;
    }
    return scalar_table<T>();
}

template <typename T>
const KernelTable<T>& active() {
    return table_for<T>(current().load(std::memory_order_relaxed));
}

void select(Backend backend) {
    if (backend == Backend::Avx2 && !cpu_has_avx2()) throw ConfigError("AVX2 kernels unavailable");
    current().store(backend);
}

Backend selected() { return current().load(); }

std::string_view name(Backend backend) {
    return backend == Backend::Avx2 ? "avx2" : "scalar";
}

template const KernelTable<float>& active<float>();
template const KernelTable<double>& active<double>();
template const KernelTable<float>& table_for<float>(Backend);
template const KernelTable<double>& table_for<double>(Backend);

}  // namespace styleforge::kernels
