// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace styleforge::cli {

/// Flat `section.key=value` file. '#' starts a comment line; blank lines are
/// ignored; later keys override earlier ones.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    /// Throws IoError if unreadable, ConfigError on malformed lines.
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    /// Throws ConfigError naming the missing key.
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list with surrounding whitespace trimmed.
    std::vector<std::string> get_list(const std::string& key) const;

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    const std::map<std::string, std::string>& values() const { return values_; }

    /// Canonical text (sorted key=value lines) and its FNV-1a hash.
    std::string canonical() const;
    std::uint64_t hash() const;

private:
    std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(const std::string& text);

}  // namespace styleforge::cli
