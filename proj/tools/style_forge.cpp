// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

// style_forge: staged command-line driver.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
// 3 training divergence.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "styleforge/cli/config.hpp"
#include "styleforge/cli/pipeline.hpp"
#include "styleforge/cli/synthetic.hpp"
#include "styleforge/error.hpp"

namespace fs = std::filesystem;
using namespace styleforge;

namespace {

struct Common {
    std::vector<std::string> configs;
    std::vector<std::string> overrides;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.configs, "config file (repeatable, later files override earlier ones)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "override a config entry, key=value (repeatable)");
    cmd->add_flag("-q,--quiet", c.quiet, "suppress progress output");
}

cli::RunConfig load_config(const Common& c, bool check_paths = true) {
    cli::KeyValueConfig merged;
    for (const auto& path : c.configs) {
        const auto file = cli::KeyValueConfig::load(path);
        for (const auto& [k, v] : file.values()) merged.set(k, v);
    }
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
        merged.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cli::RunConfig::from(merged, check_paths);
}

std::ostream* log_of(const Common& c) { return c.quiet ? nullptr : &std::cerr; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"style_forge: multi-style text transfer with language-model discriminators"};
    app.require_subcommand(1);

    // make-synthetic
    cli::SyntheticConfig syn;
    std::string syn_out;
    auto* make_syn = app.add_subcommand("make-synthetic", "write the two-dimension synthetic style task");
    make_syn->add_option("-o,--out", syn_out, "output directory")->required();
    make_syn->add_option("--seed", syn.seed, "generator seed");
    make_syn->add_option("--per-style", syn.per_style, "training sentences per style");
    make_syn->add_option("--generic", syn.generic, "generic pre-training sentences");
    make_syn->add_option("--heldout", syn.heldout_per_style, "held-out sentences per style");
    make_syn->add_option("--inputs", syn.transfer_inputs, "transfer evaluation inputs");

    Common bpe_c, pre_c, ft_c, tt_c, tr_c, ev_c, all_c;
    auto* bpe = app.add_subcommand("train-bpe", "learn the BPE vocabulary");
    add_common(bpe, bpe_c);

    bool resume = false;
    std::size_t stop_after = 0;
    auto* pre = app.add_subcommand("pretrain", "MLM pre-training of the base model");
    add_common(pre, pre_c);
    pre->add_flag("--resume", resume, "continue from the last base checkpoint");
    pre->add_option("--stop-after", stop_after, "stop after this many steps (0 = run to completion)");

    std::vector<std::string> ft_styles;
    bool ft_mixture = false, ft_fluency = false;
    auto* ft = app.add_subcommand("finetune-disc", "fine-tune causal style discriminators");
    add_common(ft, ft_c);
    ft->add_option("-s,--style", ft_styles, "style label (repeatable; default: every configured style)");
    ft->add_flag("--mixture", ft_mixture, "fine-tune the decoder initialisation on the mixed target corpora");
    ft->add_flag("--fluency", ft_fluency, "fine-tune the fluency LM on all style corpora");

    bool tt_resume = false;
    auto* tt = app.add_subcommand("train-transfer", "joint DAE + discriminator training");
    add_common(tt, tt_c);
    tt->add_flag("--resume", tt_resume, "continue from the last transfer checkpoint");

    std::string tr_in, tr_out;
    auto* tr = app.add_subcommand("transfer", "transfer every line of a file");
    add_common(tr, tr_c);
    tr->add_option("-i,--input", tr_in, "input sentences, one per line")->required();
    tr->add_option("-o,--output", tr_out, "output file")->required();

    std::string ev_in, ev_out, ev_refs;
    auto* ev = app.add_subcommand("evaluate", "score transferred sentences");
    add_common(ev, ev_c);
    ev->add_option("--inputs", ev_in, "source sentences")->required();
    ev->add_option("--outputs", ev_out, "transferred sentences")->required();
    ev->add_option("--refs", ev_refs, "reference sentences");

    auto* all = app.add_subcommand("run-all", "every stage in order, then transfer and evaluate");
    add_common(all, all_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*make_syn) {
            const auto data = cli::make_synthetic(syn);
            cli::write_synthetic(syn_out, data, syn);
            std::cerr << "wrote synthetic task to " << syn_out << "\n";
        } else if (*bpe) {
            cli::stage_train_bpe(load_config(bpe_c), log_of(bpe_c));
        } else if (*pre) {
            cli::stage_pretrain(load_config(pre_c), resume, stop_after, log_of(pre_c));
        } else if (*ft) {
            const auto cfg = load_config(ft_c);
            if (ft_mixture) cli::stage_finetune_mixture(cfg, log_of(ft_c));
            if (ft_fluency) cli::stage_finetune_fluency(cfg, log_of(ft_c));
            if (!ft_styles.empty() || (!ft_mixture && !ft_fluency)) {
                for (const auto& s : cli::stage_finetune(cfg, ft_styles, log_of(ft_c))) {
                    if (!ft_c.quiet) {
                        std::cerr << s.label << ": held-out perplexity " << s.heldout_ppl << " (base "
                                  << s.base_heldout_ppl << ")\n";
                    }
                }
            }
        } else if (*tt) {
            cli::stage_train_transfer(load_config(tt_c), tt_resume, log_of(tt_c));
        } else if (*tr) {
            cli::stage_transfer_file(load_config(tr_c), tr_in, tr_out);
        } else if (*ev) {
            std::optional<fs::path> refs;
            if (!ev_refs.empty()) refs = ev_refs;
            cli::stage_evaluate(load_config(ev_c), ev_in, ev_out, refs, &std::cout);
        } else if (*all) {
            cli::run_all(load_config(all_c), log_of(all_c));
        }
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
