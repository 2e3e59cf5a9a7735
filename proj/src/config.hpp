#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "network.hpp"

namespace geost {

// Every pipeline knob in one flat struct. Defaults are the full-scale
// training values; the "desk" preset shrinks everything to laptop scale.
struct RunConfig {
    std::uint64_t seed = 7;
    int threads = 0;  // 0 = all logical cores

    // net.*
    std::size_t net_d = 64;
    std::size_t net_k = 32;
    std::size_t net_blocks = 4;
    bool net_use_absolute_coords = false;

    // scene.* (pretraining scene generation)
    std::size_t scene_count = 1000;
    std::size_t scene_points = 64000;
    std::size_t scene_models = 10;
    double scene_range = 3.0;

    // pretrain.*
    std::size_t pretrain_epochs = 250;
    double pretrain_lr = 1e-3;
    double pretrain_weight_decay = 1e-6;
    std::size_t pretrain_queries = 16;
    std::size_t pretrain_decoder_m = 1024;

    // student.*
    std::size_t student_epochs = 100;
    double student_lr = 1e-3;
    double student_weight_decay = 1e-5;
    bool student_random_teacher = false;  // ablation: skip pretraining

    // synth.* (benchmark fabrication)
    std::size_t synth_resolution = 64;
    std::size_t synth_train_scans = 20;
    std::size_t synth_test_scans = 10;
    std::size_t synth_defects_per_scan = 2;
    std::string synth_defects = "bump,dent,cut";
    std::string synth_surfaces = "plane,sinusoid,spherecap";

    // sample.* (points fed to the networks per scan)
    std::size_t sample_points = 64000;

    // eval.*
    std::string eval_limits = "0.01,0.05,0.1,0.2,0.3";

    NetConfig net() const {
        NetConfig cfg;
        cfg.d = net_d;
        cfg.k = net_k;
        cfg.blocks = net_blocks;
        cfg.use_absolute_coords = net_use_absolute_coords;
        return cfg;
    }
};

// Presets: "paper" (the defaults above) and "desk" (minutes-scale).
void apply_preset(RunConfig& cfg, const std::string& name);

// Flat `section.key = value` lines; '#' starts a comment. Unknown keys and
// malformed values are errors.
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value);
void parse_config_text(RunConfig& cfg, const std::string& text);
void load_config_file(RunConfig& cfg, const std::string& path);

// Canonical text form (fixed key order); written next to every artifact.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a over the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::vector<std::string> split_csv_list(const std::string& text);
std::vector<double> parse_limits(const std::string& text);

}  // namespace geost
