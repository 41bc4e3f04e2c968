// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "styleforge/cli/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "styleforge/error.hpp"
#include "styleforge/hash.hpp"
#include "styleforge/model/checkpoint.hpp"
#include "styleforge/model/losses.hpp"

namespace styleforge::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void require_file(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError(what + " path is not configured");
    if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

// All lines, blanks kept, without a trailing empty line.
std::vector<std::string> raw_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

model::AdamConfig adam_from(const KeyValueConfig& c, const std::string& section, model::AdamConfig base) {
    base.lr = c.get_double(section + ".lr", base.lr);
    base.clip_norm = c.get_double(section + ".clip_norm", base.clip_norm);
    return base;
}

void say(std::ostream* log, const std::string& msg) {
    if (log) *log << msg << std::endl;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(precision) << v;
    return s.str();
}

model::LanguageModel<float> load_lm_checked(const RunConfig& cfg, const std::string& name,
                                            const tokenizer::Tokenizer& tok, const std::string& stage) {
    const fs::path p = cfg.artifact(name);
    if (!fs::exists(p)) throw IoError("missing " + p.string() + " (run " + stage + " first)");
    const auto ck = model::load_checkpoint(p);
    if (model::require_meta(ck.meta, "vocab.hash") != hex_digest(tok.hash())) {
        throw IncompatibleError(p.string() + " was trained with a different vocabulary");
    }
    return model::lm_from_checkpoint(ck);
}

corpus::StyledCorpus load_style(const RunConfig& cfg, const StyleSpec& s, const tokenizer::Tokenizer& tok) {
    return corpus::load_corpus(s.train, s.dimension, s.label, tok, cfg.max_len);
}

std::vector<tokenizer::TokenSequence> load_heldout(const RunConfig& cfg, const StyleSpec& s,
                                                   const tokenizer::Tokenizer& tok) {
    if (s.heldout.empty() || !fs::exists(s.heldout)) return {};
    return corpus::load_corpus(s.heldout, s.dimension, s.label, tok, cfg.max_len).sentences;
}

model::Metadata artifact_meta(const RunConfig& cfg, const tokenizer::Tokenizer& tok) {
    auto m = cfg.provenance();
    m["vocab.hash"] = hex_digest(tok.hash());
    return m;
}

FinetuneSummary finetune_one(const RunConfig& cfg, const model::LanguageModel<float>& base,
                             std::span<const tokenizer::TokenSequence> train, const std::string& dimension,
                             const std::string& label, std::span<const tokenizer::TokenSequence> heldout,
                             const tokenizer::Tokenizer& tok, const std::string& artifact, std::ostream* log) {
    auto fcfg = cfg.finetune;
    fcfg.seed = cfg.seed + 1 + fnv1a(label) % 1000;
    auto result = discriminator::finetune_discriminator(base, train, dimension, label, fcfg);
    FinetuneSummary s;
    s.label = label;
    s.report = result.report;
    s.base_heldout_ppl = std::numeric_limits<double>::quiet_NaN();
    s.heldout_ppl = std::numeric_limits<double>::quiet_NaN();
    if (!heldout.empty()) {
        auto causal_base = base;
        causal_base.set_mode(model::AttentionMode::Causal);
        s.base_heldout_ppl = discriminator::perplexity(causal_base, heldout);
        s.heldout_ppl = discriminator::perplexity(result.disc, heldout);
    }
    auto meta = artifact_meta(cfg, tok);
    meta["train.steps"] = std::to_string(result.report.steps);
    discriminator::save_discriminator(cfg.artifact(artifact), result.disc, meta);
    say(log, "finetune " + label + ": loss " + fmt(s.report.initial_loss) + " -> " + fmt(s.report.final_loss) +
                 ", " + std::to_string(s.report.steps) + " steps");
    return s;
}

}  // namespace

// ---------------------------------------------------------------- RunConfig

RunConfig RunConfig::from(const KeyValueConfig& raw, bool check_paths) {
    RunConfig c;
    c.raw = raw;
    c.seed = raw.get_u64("seed", 1);
    if (const char* env = std::getenv("STYLE_FORGE_SEED"); env != nullptr && *env != '\0') {
        try {
            c.seed = std::stoull(env);
        } catch (const std::logic_error&) {
            throw ConfigError(std::string("STYLE_FORGE_SEED is not an integer: ") + env);
        }
        c.raw.set("seed", std::to_string(c.seed));
    }
    c.config_hash = hex_digest(c.raw.hash());

    c.out_dir = raw.get_or("paths.out_dir", "run");
    c.generic = raw.get_or("paths.generic", "");
    for (const auto& label : raw.get_list("styles")) {
        StyleSpec s;
        s.label = label;
        s.dimension = raw.get("style." + label + ".dimension");
        s.train = raw.get("style." + label + ".train");
        s.heldout = raw.get_or("style." + label + ".heldout", "");
        c.styles.push_back(std::move(s));
    }
    c.transfer_styles = raw.get_list("transfer.styles");
    for (const auto& t : c.transfer_styles) c.style(t);
    c.lexicon = raw.get_or("paths.lexicon", "");
    const std::string ft = raw.get_or("eval.formality_target", "formal");
    if (ft != "formal" && ft != "informal") throw ConfigError("eval.formality_target must be formal or informal");
    c.formality_target = ft == "formal" ? eval::Formality::Formal : eval::Formality::Informal;

    c.num_merges = raw.get_size("bpe.num_merges", 500);
    c.max_len = raw.get_size("corpus.max_len", 64);

    c.model.num_layers = raw.get_size("model.num_layers", c.model.num_layers);
    c.model.hidden_size = raw.get_size("model.hidden_size", c.model.hidden_size);
    c.model.num_heads = raw.get_size("model.num_heads", c.model.num_heads);
    c.model.dropout = raw.get_double("model.dropout", c.model.dropout);
    c.model.max_positions = raw.get_size("model.max_positions", c.model.max_positions);
    c.model.vocab_size = 1;
    c.model.validate();
    c.model.vocab_size = 0;
    if (c.max_len > c.model.max_positions + 1) {
        throw ConfigError("corpus.max_len exceeds model.max_positions + 1");
    }

    c.noise.p_drop = raw.get_double("noise.p_drop", c.noise.p_drop);
    c.noise.p_mask = raw.get_double("noise.p_mask", c.noise.p_mask);
    c.noise.mlm_select = raw.get_double("noise.mlm_select", c.noise.mlm_select);
    c.noise.mlm_mask_frac = raw.get_double("noise.mlm_mask_frac", c.noise.mlm_mask_frac);
    c.noise.mlm_random_frac = raw.get_double("noise.mlm_random_frac", c.noise.mlm_random_frac);
    c.noise.mlm_keep_frac = raw.get_double("noise.mlm_keep_frac", c.noise.mlm_keep_frac);
    c.noise.validate();

    c.pretrain.epochs = raw.get_size("pretrain.epochs", 3);
    c.pretrain.max_steps = raw.get_size("pretrain.max_steps", 0);
    c.pretrain.batch_size = raw.get_size("pretrain.batch_size", 16);
    c.pretrain.adam = adam_from(raw, "pretrain", c.pretrain.adam);
    c.pretrain.seed = c.seed;
    c.pretrain_checkpoint_every = raw.get_size("pretrain.checkpoint_every", 0);
    c.pretrain_validation = raw.get_size("pretrain.validation", 200);

    c.finetune.epochs = raw.get_size("finetune.epochs", c.finetune.epochs);
    c.finetune.batch_size = raw.get_size("finetune.batch_size", c.finetune.batch_size);
    c.finetune.adam = adam_from(raw, "finetune", c.finetune.adam);
    c.finetune.validation_fraction = raw.get_double("finetune.validation_fraction", c.finetune.validation_fraction);

    auto& t = c.transfer;
    t.lambda_dae = raw.get_double("transfer.lambda_dae", t.lambda_dae);
    t.lambdas.clear();
    const auto lambdas = raw.get_list("transfer.lambdas");
    for (const auto& l : lambdas) {
        try {
            t.lambdas.push_back(std::stod(l));
        } catch (const std::logic_error&) {
            throw ConfigError("transfer.lambdas entry '" + l + "' is not a number");
        }
    }
    if (lambdas.empty()) t.lambdas.assign(c.transfer_styles.size(), 1.0);
    t.sample_temperature = raw.get_double("transfer.sample_temperature", t.sample_temperature);
    t.max_len = raw.get_size("transfer.max_len", t.max_len);
    t.reward_length_normalize = raw.get_bool("transfer.reward_length_normalize", t.reward_length_normalize);
    t.steps = raw.get_size("transfer.steps", t.steps);
    t.warmup_steps = raw.get_size("transfer.warmup_steps", t.warmup_steps);
    t.batch_size = raw.get_size("transfer.batch_size", t.batch_size);
    t.adam = adam_from(raw, "transfer", t.adam);
    t.noise = c.noise;
    t.inference_noise.p_drop = raw.get_double("transfer.inference_p_drop", t.inference_noise.p_drop);
    t.inference_noise.p_mask = raw.get_double("transfer.inference_p_mask", t.inference_noise.p_mask);
    t.checkpoint_every = raw.get_size("transfer.checkpoint_every", 0);
    t.trace_samples = raw.get_size("transfer.trace_samples", t.trace_samples);
    t.seed = c.seed + 2;
    if (!c.transfer_styles.empty()) t.validate(c.transfer_styles.size());

    c.classifier.epochs = raw.get_size("classifier.epochs", c.classifier.epochs);
    c.classifier.dim = raw.get_size("classifier.dim", c.classifier.dim);
    c.classifier.buckets = raw.get_size("classifier.buckets", c.classifier.buckets);
    c.classifier.lr = raw.get_double("classifier.lr", c.classifier.lr);
    c.classifier.seed = c.seed + 4;
    c.bleu.max_n = raw.get_size("eval.bleu_max_n", 4);
    c.bleu.lowercase = raw.get_bool("eval.bleu_lowercase", false);

    if (check_paths) {
        if (!c.generic.empty()) require_file(c.generic, "generic corpus");
        for (const auto& s : c.styles) require_file(s.train, "style corpus '" + s.label + "'");
        if (!c.lexicon.empty()) require_file(c.lexicon, "formality lexicon");
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path, bool check_paths) {
    return from(KeyValueConfig::load(path), check_paths);
}

const StyleSpec& RunConfig::style(const std::string& label) const {
    for (const auto& s : styles) {
        if (s.label == label) return s;
    }
    throw ConfigError("style '" + label + "' is not configured");
}

model::Metadata RunConfig::provenance() const {
    return {{"run.config_hash", config_hash}, {"run.seed", std::to_string(seed)}};
}

std::string disc_artifact(const std::string& label) { return "disc_" + label + ".ckpt"; }

// ---------------------------------------------------------------- stages

tokenizer::Tokenizer stage_train_bpe(const RunConfig& cfg, std::ostream* log) {
    std::vector<std::string> text;
    if (!cfg.generic.empty()) {
        require_file(cfg.generic, "generic corpus");
        const auto g = corpus::read_lines(cfg.generic);
        text.insert(text.end(), g.begin(), g.end());
    }
    for (const auto& s : cfg.styles) {
        require_file(s.train, "style corpus '" + s.label + "'");
        const auto lines = corpus::read_lines(s.train);
        text.insert(text.end(), lines.begin(), lines.end());
    }
    if (text.empty()) throw ConfigError("no corpus configured for BPE training");
    const auto tok = tokenizer::Tokenizer::train(text, cfg.num_merges);
    fs::create_directories(cfg.out_dir);
    tok.save(cfg.artifact("bpe.txt"));
    std::string meta;
    for (const auto& [k, v] : cfg.provenance()) meta += k + "=" + v + "\n";
    meta += "vocab.hash=" + hex_digest(tok.hash()) + "\n";
    write_text(cfg.artifact("bpe.txt.meta"), meta);
    say(log, "bpe: " + std::to_string(tok.vocab_size()) + " tokens, " + std::to_string(tok.merges().size()) +
                 " merges");
    return tok;
}

tokenizer::Tokenizer load_tokenizer(const RunConfig& cfg) {
    const fs::path p = cfg.artifact("bpe.txt");
    if (!fs::exists(p)) throw IoError("missing " + p.string() + " (run train-bpe first)");
    return tokenizer::Tokenizer::load(p);
}

PretrainSummary stage_pretrain(const RunConfig& cfg, bool resume, std::size_t stop_after, std::ostream* log) {
    const auto tok = load_tokenizer(cfg);
    require_file(cfg.generic, "generic corpus");
    auto sentences = corpus::load_corpus(cfg.generic, "generic", "generic", tok, cfg.max_len).sentences;
    std::vector<tokenizer::TokenSequence> val;
    if (sentences.size() >= 2 * cfg.pretrain_validation && cfg.pretrain_validation > 0) {
        val.assign(sentences.end() - static_cast<std::ptrdiff_t>(cfg.pretrain_validation), sentences.end());
        sentences.resize(sentences.size() - cfg.pretrain_validation);
    } else {
        val = sentences;
    }
    auto mcfg = cfg.model;
    mcfg.vocab_size = tok.vocab_size();
    const auto val_batch = model::fixed_mlm_batch(val, cfg.noise, mcfg.vocab_size, cfg.seed + 7);

    const fs::path ckpt = cfg.artifact("base.ckpt");
    std::optional<model::LanguageModel<float>> lm;
    model::Adam<float> adam(cfg.pretrain.adam, model::build_lm<float>(mcfg, cfg.seed).parameters());
    std::size_t start = 0;
    PretrainSummary summary;
    if (resume && fs::exists(ckpt)) {
        auto ck = model::load_checkpoint(ckpt);
        if (model::require_meta(ck.meta, "vocab.hash") != hex_digest(tok.hash())) {
            throw IncompatibleError(ckpt.string() + " was trained with a different vocabulary");
        }
        lm = model::lm_from_checkpoint(ck);
        start = std::stoul(model::require_meta(ck.meta, "train.step"));
        if (ck.optimizer) adam.set_state(std::move(*ck.optimizer));
        summary.initial_validation_loss = std::stod(model::require_meta(ck.meta, "pretrain.initial_validation_loss"));
    } else {
        lm = model::build_lm<float>(mcfg, cfg.seed, model::AttentionMode::Bidirectional);
        summary.initial_validation_loss = model::mlm_loss(*lm, val_batch);
    }

    const std::size_t total = cfg.pretrain.total_steps(sentences.size());
    auto run_cfg = cfg.pretrain;
    run_cfg.max_steps = stop_after > 0 ? std::min(total, start + stop_after) : total;
    summary.start_step = start;
    summary.total_steps = total;

    std::ofstream curve(cfg.artifact("pretrain.curve.jsonl"), start > 0 ? std::ios::app : std::ios::trunc);
    auto save = [&](std::size_t step) {
        auto meta = artifact_meta(cfg, tok);
        meta["train.step"] = std::to_string(step);
        meta["train.total_steps"] = std::to_string(total);
        meta["pretrain.initial_validation_loss"] = fmt(summary.initial_validation_loss, 17);
        meta["pretrain.validation_loss"] = fmt(model::mlm_loss(*lm, val_batch), 17);
        model::save_lm(ckpt, *lm, meta, &adam.state());
    };
    const std::size_t every = cfg.pretrain_checkpoint_every;
    model::pretrain_mlm(*lm, sentences, cfg.noise, run_cfg, adam, start, [&](const model::StepRecord& r) {
        ordered_json j;
        j["step"] = r.step;
        j["loss"] = r.loss;
        j["grad_norm"] = r.grad_norm;
        curve << j.dump() << '\n';
        if (every > 0 && r.step % every == 0) save(r.step);
        if (log && (r.step % 100 == 0 || r.step == run_cfg.max_steps)) {
            say(log, "pretrain step " + std::to_string(r.step) + "/" + std::to_string(total) + " loss " + fmt(r.loss));
        }
    });
    summary.end_step = std::max(start, run_cfg.max_steps);
    save(summary.end_step);
    summary.final_validation_loss = model::mlm_loss(*lm, val_batch);
    say(log, "pretrain: validation loss " + fmt(summary.initial_validation_loss) + " -> " +
                 fmt(summary.final_validation_loss));
    return summary;
}

std::vector<FinetuneSummary> stage_finetune(const RunConfig& cfg, const std::vector<std::string>& labels,
                                            std::ostream* log) {
    const auto tok = load_tokenizer(cfg);
    const auto base = load_lm_checked(cfg, "base.ckpt", tok, "pretrain");
    std::vector<std::string> todo = labels;
    if (todo.empty()) {
        for (const auto& s : cfg.styles) todo.push_back(s.label);
    }
    std::vector<FinetuneSummary> out;
    for (const auto& label : todo) {
        const auto& spec = cfg.style(label);
        const auto corpus = load_style(cfg, spec, tok);
        const auto heldout = load_heldout(cfg, spec, tok);
        out.push_back(finetune_one(cfg, base, corpus.sentences, spec.dimension, label, heldout, tok,
                                   disc_artifact(label), log));
    }
    return out;
}

FinetuneSummary stage_finetune_mixture(const RunConfig& cfg, std::ostream* log) {
    if (cfg.transfer_styles.empty()) throw ConfigError("transfer.styles is empty");
    const auto tok = load_tokenizer(cfg);
    const auto base = load_lm_checked(cfg, "base.ckpt", tok, "pretrain");
    std::vector<corpus::StyledCorpus> parts;
    for (const auto& label : cfg.transfer_styles) parts.push_back(load_style(cfg, cfg.style(label), tok));
    const auto mixed = corpus::mix_corpora(parts, cfg.seed + 5);
    return finetune_one(cfg, base, mixed.sentences, "mixture", "mixture", {}, tok, "mixture.ckpt", log);
}

FinetuneSummary stage_finetune_fluency(const RunConfig& cfg, std::ostream* log) {
    if (cfg.styles.empty()) throw ConfigError("no styles configured");
    const auto tok = load_tokenizer(cfg);
    const auto base = load_lm_checked(cfg, "base.ckpt", tok, "pretrain");
    std::vector<corpus::StyledCorpus> parts;
    for (const auto& s : cfg.styles) parts.push_back(load_style(cfg, s, tok));
    const auto mixed = corpus::mix_corpora(parts, cfg.seed + 6);
    return finetune_one(cfg, base, mixed.sentences, "fluency", "fluency", {}, tok, "fluency.ckpt", log);
}

transfer::TrainingTrace stage_train_transfer(const RunConfig& cfg, bool resume, std::ostream* log) {
    if (cfg.transfer_styles.empty()) throw ConfigError("transfer.styles is empty");
    const auto tok = load_tokenizer(cfg);
    std::vector<discriminator::StyleDiscriminator> discs;
    for (const auto& label : cfg.transfer_styles) {
        const fs::path p = cfg.artifact(disc_artifact(label));
        if (!fs::exists(p)) throw IoError("missing discriminator checkpoint " + p.string());
    }
    const auto base = load_lm_checked(cfg, "base.ckpt", tok, "pretrain");
    const auto mixture = load_lm_checked(cfg, "mixture.ckpt", tok, "finetune-disc --mixture");
    for (const auto& label : cfg.transfer_styles) {
        model::Metadata meta;
        auto d = discriminator::load_discriminator(cfg.artifact(disc_artifact(label)), &meta);
        if (model::require_meta(meta, "vocab.hash") != hex_digest(tok.hash())) {
            throw IncompatibleError("discriminator '" + label + "' was trained with a different vocabulary");
        }
        discs.push_back(std::move(d));
    }
    std::vector<corpus::StyledCorpus> parts;
    for (const auto& label : cfg.transfer_styles) parts.push_back(load_style(cfg, cfg.style(label), tok));
    const auto mixed = corpus::mix_corpora(parts, cfg.seed + 5);

    auto encdec = model::build_encoder_decoder(base, mixture, cfg.seed + 3);
    model::Adam<float> adam(cfg.transfer.adam, encdec.parameters());
    std::size_t start = 0;
    const fs::path ckpt = cfg.artifact("transfer.ckpt");
    if (resume && fs::exists(ckpt)) {
        auto ck = model::load_checkpoint(ckpt);
        if (model::require_meta(ck.meta, "vocab.hash") != hex_digest(tok.hash())) {
            throw IncompatibleError(ckpt.string() + " was trained with a different vocabulary");
        }
        encdec = model::encoder_decoder_from_checkpoint(ck);
        start = std::stoul(model::require_meta(ck.meta, "train.step"));
        if (ck.optimizer) adam.set_state(std::move(*ck.optimizer));
        say(log, "resuming transfer training at step " + std::to_string(start));
    }
    std::ofstream trace_out(cfg.artifact("trace.jsonl"), start > 0 ? std::ios::app : std::ios::trunc);
    if (!trace_out) throw IoError("cannot write " + cfg.artifact("trace.jsonl").string());

    transfer::TrainHooks hooks;
    hooks.on_step = [&](const transfer::TraceRow& row) {
        ordered_json j;
        j["step"] = row.step;
        j["loss.dae"] = row.dae;
        for (std::size_t i = 0; i < row.styles.size(); ++i) {
            j["loss.style." + row.styles[i]] = row.style_losses[i];
            j["lambda." + row.styles[i]] = row.lambdas[i];
            j["advantage." + row.styles[i]] = row.mean_advantage[i];
            j["reward_input." + row.styles[i]] = row.mean_r_input[i];
            j["reward_sample." + row.styles[i]] = row.mean_r_sample[i];
        }
        j["lambda.dae"] = row.lambda_dae;
        j["loss.total"] = row.total;
        j["grad_norm"] = row.grad_norm;
        j["degenerate_samples"] = row.degenerate_samples;
        ordered_json samples = ordered_json::array();
        for (std::size_t i = 0; i < row.samples.size(); ++i) {
            samples.push_back({{"input", tok.decode(row.inputs[i])}, {"sample", tok.decode(row.samples[i])}});
        }
        j["samples"] = samples;
        j["run.seed"] = cfg.seed;
        j["run.config_hash"] = cfg.config_hash;
        trace_out << j.dump() << '\n';
        if (log && (row.step % 50 == 0 || row.step == cfg.transfer.steps)) {
            std::string msg = "transfer step " + std::to_string(row.step) + " dae " + fmt(row.dae);
            for (std::size_t i = 0; i < row.styles.size(); ++i) {
                msg += " adv." + row.styles[i] + " " + fmt(row.mean_advantage[i]);
            }
            say(log, msg);
        }
    };
    hooks.on_checkpoint = [&](std::size_t step, const model::EncoderDecoder<float>& m,
                              const model::AdamState<float>& state) {
        auto meta = artifact_meta(cfg, tok);
        meta["train.step"] = std::to_string(step);
        std::string styles;
        for (const auto& s : cfg.transfer_styles) styles += (styles.empty() ? "" : ",") + s;
        meta["transfer.styles"] = styles;
        model::save_encoder_decoder(ckpt, m, meta, &state);
    };
    return transfer::train_transfer(encdec, discs, mixed.sentences, cfg.transfer, hooks, &adam, start);
}

std::vector<std::string> stage_transfer(const RunConfig& cfg, const std::vector<std::string>& inputs) {
    const auto tok = load_tokenizer(cfg);
    const fs::path p = cfg.artifact("transfer.ckpt");
    if (!fs::exists(p)) throw IoError("missing " + p.string() + " (run train-transfer first)");
    const auto ck = model::load_checkpoint(p);
    if (model::require_meta(ck.meta, "vocab.hash") != hex_digest(tok.hash())) {
        throw IncompatibleError(p.string() + " was trained with a different vocabulary");
    }
    const auto encdec = model::encoder_decoder_from_checkpoint(ck);
    std::vector<std::string> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto& line = inputs[i];
        if (eval::words(line).empty()) {
            out.emplace_back();
            continue;
        }
        try {
            out.push_back(transfer::transfer(encdec, line, tok, cfg.transfer));
        } catch (const LengthError& e) {
            throw LengthError("input line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

void stage_transfer_file(const RunConfig& cfg, const fs::path& input, const fs::path& output) {
    const auto lines = raw_lines(input);
    std::string text;
    for (const auto& l : stage_transfer(cfg, lines)) text += l + "\n";
    write_text(output, text);
}

std::vector<std::pair<std::string, eval::NGramStyleClassifier>> train_classifiers(const RunConfig& cfg) {
    std::map<std::string, std::vector<eval::LabeledSentence>> by_dim;
    for (const auto& s : cfg.styles) {
        for (auto& line : corpus::read_lines(s.train)) by_dim[s.dimension].push_back({std::move(line), s.label});
    }
    std::vector<std::pair<std::string, eval::NGramStyleClassifier>> out;
    for (const auto& [dim, data] : by_dim) out.emplace_back(dim, eval::train_style_classifier(data, cfg.classifier));
    return out;
}

eval::EvalReport stage_evaluate(const RunConfig& cfg, const fs::path& inputs, const fs::path& outputs,
                                const std::optional<fs::path>& refs, std::ostream* log) {
    const auto in_lines = raw_lines(inputs);
    const auto out_lines = raw_lines(outputs);
    if (in_lines.size() != out_lines.size()) {
        throw ConfigError("line count mismatch: " + inputs.string() + " has " + std::to_string(in_lines.size()) +
                          " lines, " + outputs.string() + " has " + std::to_string(out_lines.size()));
    }
    std::vector<std::vector<std::string>> ref_lists;
    if (refs) {
        const auto r = raw_lines(*refs);
        if (r.size() != out_lines.size()) {
            throw ConfigError("line count mismatch: " + refs->string() + " has " + std::to_string(r.size()) +
                              " lines, " + outputs.string() + " has " + std::to_string(out_lines.size()));
        }
        for (const auto& line : r) ref_lists.push_back({line});
    }

    const auto classifiers = train_classifiers(cfg);
    eval::EvalInputs ei;
    ei.inputs = in_lines;
    ei.outputs = out_lines;
    ei.references = ref_lists;
    ei.bleu = cfg.bleu;
    ei.formality_target = cfg.formality_target;
    for (const auto& label : cfg.transfer_styles) {
        const auto& spec = cfg.style(label);
        for (const auto& [dim, clf] : classifiers) {
            if (dim == spec.dimension) ei.targets.push_back({dim, &clf, label});
        }
    }
    std::optional<eval::FormalityLexicon> lexicon;
    if (!cfg.lexicon.empty()) {
        lexicon = eval::FormalityLexicon::load(cfg.lexicon);
        ei.lexicon = &*lexicon;
    }
    std::optional<tokenizer::Tokenizer> tok;
    std::optional<model::LanguageModel<float>> flm;
    if (fs::exists(cfg.artifact("fluency.ckpt"))) {
        tok = load_tokenizer(cfg);
        flm = load_lm_checked(cfg, "fluency.ckpt", *tok, "finetune-disc --fluency");
        ei.fluency_lm = &*flm;
        ei.tokenizer = &*tok;
    }
    auto report = eval::evaluate(ei);
    for (const auto& [k, v] : cfg.provenance()) report.metadata[k] = v;
    write_text(cfg.artifact("report.txt"), eval::to_key_value(report));
    write_text(cfg.artifact("report.jsonl"), eval::to_json_line(report) + "\n");
    if (log) *log << eval::to_table(report);
    return report;
}

eval::EvalReport run_all(const RunConfig& cfg, std::ostream* log) {
    stage_train_bpe(cfg, log);
    stage_pretrain(cfg, false, 0, log);
    stage_finetune(cfg, {}, log);
    stage_finetune_mixture(cfg, log);
    stage_finetune_fluency(cfg, log);
    stage_train_transfer(cfg, false, log);
    const fs::path inputs = cfg.raw.get("paths.transfer_inputs");
    const fs::path outputs = cfg.artifact("transfer.outputs.txt");
    stage_transfer_file(cfg, inputs, outputs);
    std::optional<fs::path> refs;
    if (cfg.raw.has("paths.transfer_refs")) refs = fs::path(cfg.raw.get("paths.transfer_refs"));
    return stage_evaluate(cfg, inputs, outputs, refs, log);
}

}  // namespace styleforge::cli
