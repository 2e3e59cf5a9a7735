#pragma once

#include <functional>
#include <string>
#include <vector>

#include "config.hpp"

namespace geost {

using LogFn = std::function<void(const std::string&)>;

// Each stage writes the resolved config (config.txt) into its output
// directory and embeds config_hash(cfg) in every artifact it produces.

// Benchmark fabrication: per-surface-category train/ and test/ geoscan
// directories plus manifest.json.
void run_synth(const RunConfig& cfg, const std::string& out_dir,
               const LogFn& log = {});

// Pretraining scenes as geopc binaries plus manifest.json.
void run_gen_scenes(const RunConfig& cfg, const std::string& out_dir,
                    const LogFn& log = {});

// Teacher pretraining on the generated scenes; writes the checkpoint to
// out_path and a loss curve CSV next to it.
void run_pretrain(const RunConfig& cfg, const std::string& scenes_dir,
                  const std::string& out_path, const LogFn& log = {});

// Per-category student training on anomaly-free scans. Writes
// <out>/<category>/model.gst containing teacher, student, feature stats and
// the category scaling factor. teacher_path is ignored when the
// random-teacher ablation is enabled.
void run_train(const RunConfig& cfg, const std::string& teacher_path,
               const std::string& data_dir, const std::string& out_dir,
               const LogFn& log = {});

// Scores every test scan: sampled points get student-teacher residual norms,
// written as sparse pixel scores (geoscore) per category.
void run_score(const RunConfig& cfg, const std::string& model_dir,
               const std::string& data_dir, const std::string& out_dir,
               const LogFn& log = {});

struct EvalResult {
    std::vector<double> limits;
    std::vector<std::string> categories;
    std::vector<std::vector<double>> au_pro;  // [category][limit]
    std::vector<double> mean_au_pro;          // [limit]
};

// Harmonic interpolation + PRO curves + AU-PRO table; writes report.csv,
// curves.csv and report.json. Refuses scores whose config hash does not
// match the scan directory's manifest.
EvalResult run_eval(const RunConfig& cfg, const std::string& scores_dir,
                    const std::string& data_dir, const std::string& out_dir,
                    const LogFn& log = {});

// Full chain at the configured scale inside work_dir.
EvalResult run_e2e(const RunConfig& cfg, const std::string& work_dir,
                   const LogFn& log = {});

}  // namespace geost
