// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "styleforge/error.hpp"

namespace styleforge::model {

namespace {

constexpr std::string_view kMagic = "STYLEFORGE-CHECKPOINT v1";
constexpr std::string_view kAdamM = "adam.m/";
constexpr std::string_view kAdamV = "adam.v/";

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

struct TensorRecord {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
};

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s.empty() ? "scalar" : s;
}

std::vector<std::size_t> parse_shape(const std::string& s) {
    std::vector<std::size_t> shape;
    if (s == "scalar") return shape;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, 'x')) shape.push_back(std::stoul(part));
    return shape;
}

template <typename T>
void append_set(std::vector<TensorRecord>& index, std::vector<float>& data, const ParameterSet<T>& set,
                std::string_view prefix) {
    for (const auto& e : set.entries()) {
        index.push_back({std::string(prefix) + e.name, e.shape, data.size()});
        for (T v : e.values) data.push_back(static_cast<float>(v));
    }
}

struct Header {
    Metadata meta;
    std::vector<TensorRecord> index;
    std::size_t floats = 0;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
    const std::string where = path.string();
    std::string line;
    if (!std::getline(in, line) || line != kMagic) throw IoError(where + ": not a checkpoint file");
    Header h;
    while (std::getline(in, line)) {
        if (line.starts_with("tensors ")) break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError(where + ": malformed metadata line '" + line + "'");
        h.meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!line.starts_with("tensors ")) throw IoError(where + ": missing tensor index");
    const std::size_t count = std::stoul(line.substr(8));
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw IoError(where + ": truncated tensor index");
        std::istringstream ls(line);
        TensorRecord r;
        std::string shape;
        if (!(ls >> r.name >> shape >> r.offset)) throw IoError(where + ": malformed tensor line '" + line + "'");
        r.shape = parse_shape(shape);
        h.index.push_back(std::move(r));
    }
    if (!std::getline(in, line) || !line.starts_with("data ")) throw IoError(where + ": missing data block");
    h.floats = std::stoul(line.substr(5));
    return h;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Metadata& meta, const ParameterSet<T>& params,
                     const AdamState<T>* optimizer) {
    Metadata all = meta;
    std::vector<TensorRecord> index;
    std::vector<float> data;
    append_set(index, data, params, "");
    if (optimizer) {
        append_set(index, data, optimizer->m, kAdamM);
        append_set(index, data, optimizer->v, kAdamV);
        all["adam.step"] = std::to_string(optimizer->step);
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << kMagic << '\n';
        for (const auto& [k, v] : all) {
            if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos ||
                v.find('\n') != std::string::npos) {
                throw ConfigError("metadata entry '" + k + "' cannot be stored");
            }
            out << k << '=' << v << '\n';
        }
        out << "tensors " << index.size() << '\n';
        for (const auto& r : index) out << r.name << ' ' << shape_string(r.shape) << ' ' << r.offset << '\n';
        out << "data " << data.size() << '\n';
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
        if (!out) throw IoError("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Metadata read_checkpoint_metadata(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    return read_header(in, path).meta;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    Header h = read_header(in, path);
    std::vector<float> data(h.floats);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != data.size() * sizeof(float)) {
        throw IoError(path.string() + ": truncated data block");
    }

    Checkpoint ck;
    ck.meta = std::move(h.meta);
    ParameterSet<float> m, v;
    for (const auto& r : h.index) {
        ParameterSet<float>* dst = &ck.params;
        std::string name = r.name;
        if (name.starts_with(kAdamM)) {
            dst = &m;
            name = name.substr(kAdamM.size());
        } else if (name.starts_with(kAdamV)) {
            dst = &v;
            name = name.substr(kAdamV.size());
        }
        const std::size_t idx = dst->add(name, r.shape);
        auto& vals = dst->at(idx).values;
        if (r.offset + vals.size() > data.size()) throw IoError(path.string() + ": tensor " + r.name + " out of range");
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r.offset), vals.size(), vals.begin());
    }
    if (auto it = ck.meta.find("adam.step"); it != ck.meta.end()) {
        ck.optimizer = AdamState<float>{std::move(m), std::move(v), std::stoul(it->second)};
    }
    return ck;
}

const std::string& require_meta(const Metadata& meta, const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ConfigError("checkpoint metadata lacks '" + key + "'");
    return it->second;
}

void write_config(Metadata& meta, const std::string& prefix, const TransformerConfig& cfg) {
    meta[prefix + "num_layers"] = std::to_string(cfg.num_layers);
    meta[prefix + "hidden_size"] = std::to_string(cfg.hidden_size);
    meta[prefix + "num_heads"] = std::to_string(cfg.num_heads);
    std::ostringstream d;
    d.precision(17);
    d << cfg.dropout;
    meta[prefix + "dropout"] = d.str();
    meta[prefix + "max_positions"] = std::to_string(cfg.max_positions);
    meta[prefix + "vocab_size"] = std::to_string(cfg.vocab_size);
}

TransformerConfig read_config(const Metadata& meta, const std::string& prefix) {
    TransformerConfig cfg;
    try {
        cfg.num_layers = std::stoul(require_meta(meta, prefix + "num_layers"));
        cfg.hidden_size = std::stoul(require_meta(meta, prefix + "hidden_size"));
        cfg.num_heads = std::stoul(require_meta(meta, prefix + "num_heads"));
        cfg.dropout = std::stod(require_meta(meta, prefix + "dropout"));
        cfg.max_positions = std::stoul(require_meta(meta, prefix + "max_positions"));
        cfg.vocab_size = std::stoul(require_meta(meta, prefix + "vocab_size"));
    } catch (const std::logic_error&) {
        throw ConfigError("malformed model config under '" + prefix + "'");
    }
    cfg.validate();
    return cfg;
}

template <typename T>
void save_lm(const std::filesystem::path& path, const LanguageModel<T>& lm, Metadata meta,
             const AdamState<T>* optimizer) {
    meta["model.kind"] = "lm";
    meta["model.attention_mode"] = std::string(to_string(lm.mode()));
    write_config(meta, "model.", lm.config());
    save_checkpoint(path, meta, lm.parameters(), optimizer);
}

LanguageModel<float> lm_from_checkpoint(const Checkpoint& ck) {
    if (require_meta(ck.meta, "model.kind") != "lm") throw IncompatibleError("checkpoint does not hold a language model");
    return LanguageModel<float>(read_config(ck.meta, "model."),
                                attention_mode_from_string(require_meta(ck.meta, "model.attention_mode")), ck.params);
}

template <typename T>
void save_encoder_decoder(const std::filesystem::path& path, const EncoderDecoder<T>& encdec, Metadata meta,
                          const AdamState<T>* optimizer) {
    meta["model.kind"] = "encdec";
    write_config(meta, "encoder.", encdec.encoder_config());
    write_config(meta, "decoder.", encdec.decoder_config());
    save_checkpoint(path, meta, encdec.parameters(), optimizer);
}

EncoderDecoder<float> encoder_decoder_from_checkpoint(const Checkpoint& ck) {
    if (require_meta(ck.meta, "model.kind") != "encdec") {
        throw IncompatibleError("checkpoint does not hold an encoder-decoder");
    }
    return EncoderDecoder<float>(read_config(ck.meta, "encoder."), read_config(ck.meta, "decoder."), ck.params);
}

#define STYLEFORGE_INSTANTIATE(T)                                                                              \
    template void save_checkpoint<T>(const std::filesystem::path&, const Metadata&, const ParameterSet<T>&,   \
                                     const AdamState<T>*);                                                     \
    template void save_lm<T>(const std::filesystem::path&, const LanguageModel<T>&, Metadata,                 \
                             const AdamState<T>*);                                                             \
    template void save_encoder_decoder<T>(const std::filesystem::path&, const EncoderDecoder<T>&, Metadata,   \
                                          const AdamState<T>*);

STYLEFORGE_INSTANTIATE(float)
STYLEFORGE_INSTANTIATE(double)

#undef STYLEFORGE_INSTANTIATE

}  // namespace styleforge::model
