// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"

namespace styleforge::model {

/// Dense row-major matrix used for activations.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

    T* row(std::size_t i) { return data.data() + i * cols; }
    const T* row(std::size_t i) const { return data.data() + i * cols; }
    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    T operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Ordered collection of named tensors. Order is insertion order and is the
/// order used for checkpoints and hashing.
template <typename T>
class ParameterSet {
public:
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::vector<T> values;
    };

    std::size_t add(std::string name, std::vector<std::size_t> shape) {
        if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        index_.emplace(name, entries_.size());
        entries_.push_back({std::move(name), std::move(shape), std::vector<T>(n, T(0))});
        return entries_.size() - 1;
    }

    std::size_t index(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) throw ConfigError("unknown parameter " + std::string(name));
        return it->second;
    }
    bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

    Entry& at(std::size_t i) { return entries_[i]; }
    const Entry& at(std::size_t i) const { return entries_[i]; }
    Entry& operator[](std::string_view name) { return entries_[index(name)]; }
    const Entry& operator[](std::string_view name) const { return entries_[index(name)]; }

    T* data(std::size_t i) { return entries_[i].values.data(); }
    const T* data(std::size_t i) const { return entries_[i].values.data(); }

    std::size_t size() const { return entries_.size(); }
    std::span<Entry> entries() { return entries_; }
    std::span<const Entry> entries() const { return entries_; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.values.size();
        return n;
    }

    /// Same names and shapes, all zeros.
    ParameterSet zeros_like() const {
        ParameterSet out;
        for (const auto& e : entries_) out.add(e.name, e.shape);
        return out;
    }

    void zero() {
        for (auto& e : entries_) std::fill(e.values.begin(), e.values.end(), T(0));
    }

    template <typename U>
    ParameterSet<U> cast() const {
        ParameterSet<U> out;
        for (const auto& e : entries_) {
            auto idx = out.add(e.name, e.shape);
            std::transform(e.values.begin(), e.values.end(), out.at(idx).values.begin(),
                           [](T v) { return static_cast<U>(v); });
        }
        return out;
    }

    /// FNV-1a over names, shapes and raw values.
    std::uint64_t hash() const {
        Fnv1a h;
        for (const auto& e : entries_) {
            h.update(e.name);
            h.update(std::as_bytes(std::span(e.shape)));
            h.update(std::as_bytes(std::span(e.values)));
        }
        return h.digest();
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace styleforge::model
