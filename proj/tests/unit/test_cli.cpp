// Copyright 2026 The StyleForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "styleforge/cli/config.hpp"
#include "styleforge/cli/pipeline.hpp"
#include "styleforge/cli/synthetic.hpp"
#include "styleforge/error.hpp"
#include "styleforge/tokenizer/bpe.hpp"

using namespace styleforge;
using namespace styleforge::cli;
namespace fs = std::filesystem;

namespace {

SyntheticConfig small_task(std::uint64_t seed = 1) {
    SyntheticConfig c;
    c.per_style = 50;
    c.generic = 80;
    c.heldout_per_style = 10;
    c.transfer_inputs = 20;
    c.seed = seed;
    return c;
}

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
    return s;
}

struct ScopedEnv {
    explicit ScopedEnv(const char* value) {
        if (value) setenv("STYLE_FORGE_SEED", value, 1);
    }
    ~ScopedEnv() { unsetenv("STYLE_FORGE_SEED"); }
};

}  // namespace

TEST_CASE("key-value config parsing") {
    const auto c = KeyValueConfig::parse("# header\n  model.hidden_size = 128 \n\nstyles=a, b ,c\nflag=true\n");
    CHECK(c.get("model.hidden_size") == "128");
    CHECK(c.get_size("model.hidden_size", 0) == 128);
    CHECK(c.get_size("absent", 7) == 7);
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_list("styles") == std::vector<std::string>{"a", "b", "c"});
    CHECK(c.get_list("absent").empty());
    CHECK_THROWS_AS(c.get("absent"), ConfigError);
    CHECK_THROWS_AS(c.get_double("styles", 0.0), ConfigError);
    CHECK_THROWS_AS(c.get_bool("model.hidden_size", false), ConfigError);

    try {
        KeyValueConfig::parse("a=1\nbroken\n", "x.conf");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x.conf:2") != std::string::npos);
    }
    CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/dir/file.conf"), IoError);
}

TEST_CASE("config hash ignores order and comments") {
    const auto a = KeyValueConfig::parse("x=1\ny=2\n");
    const auto b = KeyValueConfig::parse("# c\ny = 2\nx=1\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != KeyValueConfig::parse("x=1\ny=3\n").hash());
}

TEST_CASE("synthetic task follows its grammar") {
    const auto data = make_synthetic(small_task());
    REQUIRE(data.styles.size() == 4);
    for (const auto& s : data.styles) {
        CHECK(s.train.size() == 50);
        CHECK(s.heldout.size() == 10);
        for (const auto& line : s.train) {
            if (s.dimension == "case") {
                CHECK(case_label(line) == s.label);
                CHECK(marker_label(line) != "none");
            } else {
                CHECK(marker_label(line) == s.label);
            }
        }
    }
    CHECK(data.generic.size() == 80);
    REQUIRE(data.transfer_inputs.size() == 20);
    for (std::size_t i = 0; i < data.transfer_inputs.size(); ++i) {
        const auto& in = data.transfer_inputs[i];
        const auto& ref = data.transfer_references[i];
        CHECK(case_label(in) == "lower");
        CHECK(marker_label(in) == "dot");
        CHECK(case_label(ref) == "upper");
        CHECK(marker_label(ref) == "bang");
        CHECK(upper(in.substr(0, in.size() - 1)) == ref.substr(0, ref.size() - 1));
    }
    const auto again = make_synthetic(small_task());
    CHECK(again.styles[2].train == data.styles[2].train);
    CHECK(make_synthetic(small_task(2)).generic != data.generic);
    CHECK(case_label("THE dog") == "mixed");
    CHECK(marker_label("") == "none");
}

TEST_CASE("run config validation") {
    const fs::path dir = fs::temp_directory_path() / "styleforge_cli_unit";
    fs::remove_all(dir);
    const auto cfg = small_task();
    write_synthetic(dir, make_synthetic(cfg), cfg);
    auto raw = KeyValueConfig::load(dir / "task.conf");
    raw.set("transfer.styles", "upper,bang");
    raw.set("paths.out_dir", (dir / "out").string());

    std::string default_hash;
    {
        ScopedEnv env(nullptr);
        const auto rc = RunConfig::from(raw);
        default_hash = rc.config_hash;
        CHECK(rc.styles.size() == 4);
        CHECK(rc.style("bang").dimension == "marker");
        CHECK(rc.transfer.lambdas == std::vector<double>{1.0, 1.0});
        CHECK(rc.provenance().at("run.seed") == "1");
        CHECK_THROWS_AS(rc.style("nope"), ConfigError);
    }
    {
        ScopedEnv env("42");
        const auto rc = RunConfig::from(raw);
        CHECK(rc.seed == 42);
        CHECK(rc.provenance().at("run.seed") == "42");
        CHECK(rc.config_hash != default_hash);
    }
    {
        ScopedEnv env("forty");
        CHECK_THROWS_AS(RunConfig::from(raw), ConfigError);
    }

    auto bad = raw;
    bad.set("transfer.lambdas", "1.0");
    CHECK_THROWS_AS(RunConfig::from(bad), ConfigError);
    bad = raw;
    bad.set("transfer.styles", "upper,purple");
    CHECK_THROWS_AS(RunConfig::from(bad), ConfigError);
    bad = raw;
    bad.set("style.upper.train", (dir / "missing.txt").string());
    try {
        RunConfig::from(bad);
        FAIL("expected a missing-path error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("missing.txt") != std::string::npos);
    }
    CHECK_NOTHROW(RunConfig::from(bad, false));
    bad = raw;
    bad.set("corpus.max_len", "500");
    CHECK_THROWS_AS(RunConfig::from(bad), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("train-bpe stage is deterministic and records provenance") {
    const fs::path dir = fs::temp_directory_path() / "styleforge_cli_bpe";
    fs::remove_all(dir);
    const auto cfg = small_task();
    write_synthetic(dir, make_synthetic(cfg), cfg);
    auto raw = KeyValueConfig::load(dir / "task.conf");
    raw.set("bpe.num_merges", "40");
    auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    raw.set("paths.out_dir", (dir / "a").string());
    const auto tok = stage_train_bpe(RunConfig::from(raw), nullptr);
    raw.set("paths.out_dir", (dir / "b").string());
    stage_train_bpe(RunConfig::from(raw), nullptr);
    const auto vocab = read(dir / "a" / "bpe.txt");
    CHECK(vocab == read(dir / "b" / "bpe.txt"));
    CHECK(vocab.rfind("BPE v1 " + std::to_string(tok.merges().size()) + "\n", 0) == 0);
    const auto meta = read(dir / "a" / "bpe.txt.meta");
    CHECK(meta.find("run.seed=1") != std::string::npos);
    CHECK(meta.find("run.config_hash=") != std::string::npos);
    fs::remove_all(dir);
}
