// Command-line front end; all work happens behind the C API.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <geost/geost.h>

namespace {

void print_log(const char* message, void*) {
    std::printf("%s\n", message);
    std::fflush(stdout);
}

struct ConfigFlags {
    std::string preset;
    std::string config_file;
    std::string seed;
    std::string threads;
    std::vector<std::string> overrides;  // key=value
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
    cmd->add_option("--preset", flags.preset, "Preset: desk or paper");
    cmd->add_option("--config", flags.config_file,
                    "Config file (section.key = value lines)");
    cmd->add_option("--seed", flags.seed, "Master RNG seed");
    cmd->add_option("--threads", flags.threads,
                    "Worker thread cap (0 = all cores)");
    cmd->add_option("--set", flags.overrides,
                    "Override one config key, e.g. --set net.d=32");
}

struct ConfigDeleter {
    void operator()(geost_config* c) const { geost_config_free(c); }
};
using ConfigPtr = std::unique_ptr<geost_config, ConfigDeleter>;

// Returns 0 on success, 2 on a usage-level problem.
int build_config(const ConfigFlags& flags, ConfigPtr& out) {
    ConfigPtr config(geost_config_new());
    if (!config) {
        std::fprintf(stderr, "error: out of memory\n");
        return 2;
    }
    auto check = [](geost_status status) {
        if (status != GEOST_OK)
            std::fprintf(stderr, "error: %s\n", geost_last_error());
        return status == GEOST_OK;
    };
    if (!flags.preset.empty() &&
        !check(geost_config_preset(config.get(), flags.preset.c_str())))
        return 2;
    if (!flags.config_file.empty() &&
        !check(geost_config_load_file(config.get(), flags.config_file.c_str())))
        return 2;
    for (const std::string& kv : flags.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                         kv.c_str());
            return 2;
        }
        if (!check(geost_config_set(config.get(), kv.substr(0, eq).c_str(),
                                    kv.substr(eq + 1).c_str())))
            return 2;
    }
    if (!flags.seed.empty() &&
        !check(geost_config_set(config.get(), "seed", flags.seed.c_str())))
        return 2;
    if (!flags.threads.empty() &&
        !check(geost_config_set(config.get(), "threads", flags.threads.c_str())))
        return 2;
    out = std::move(config);
    return 0;
}

int finish(const char* stage, geost_status status) {
    if (status == GEOST_OK)
        return 0;
    std::fprintf(stderr, "error (%s): %s\n", stage, geost_last_error());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Student-teacher anomaly detection for 3D point clouds"};
    app.require_subcommand(1);

    ConfigFlags flags;

    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
    add_config_flags(synth, flags);
    synth->add_option("--out", synth_out, "Output directory")->required();
    std::string synth_train, synth_test, synth_defects;
    synth->add_option("--train", synth_train, "Anomaly-free training scans");
    synth->add_option("--test", synth_test, "Defective test scans");
    synth->add_option("--defects", synth_defects,
                      "Comma list: bump,dent,cut,contamination");

    std::string scenes_out, scenes_count;
    auto* gen = app.add_subcommand("gen-scenes", "Generate pretraining scenes");
    add_config_flags(gen, flags);
    gen->add_option("--out", scenes_out, "Output directory")->required();
    gen->add_option("--count", scenes_count, "Number of scenes");

    std::string pre_scenes, pre_out;
    auto* pretrain = app.add_subcommand("pretrain", "Pretrain the teacher");
    add_config_flags(pretrain, flags);
    pretrain->add_option("--scenes", pre_scenes, "Scene directory")->required();
    pretrain->add_option("--out", pre_out, "Checkpoint output path")->required();

    std::string train_teacher, train_data, train_out;
    auto* train = app.add_subcommand("train", "Train per-category students");
    add_config_flags(train, flags);
    train->add_option("--teacher", train_teacher, "Teacher checkpoint")
        ->required();
    train->add_option("--data", train_data, "Benchmark directory")->required();
    train->add_option("--out", train_out, "Model output directory")->required();

    std::string score_models, score_data, score_out;
    auto* score = app.add_subcommand("score", "Score the test scans");
    add_config_flags(score, flags);
    score->add_option("--models", score_models, "Model directory")->required();
    score->add_option("--data", score_data, "Benchmark directory")->required();
    score->add_option("--out", score_out, "Score output directory")->required();

    std::string eval_scores, eval_scans, eval_out, eval_limits;
    auto* eval = app.add_subcommand("eval", "Compute AU-PRO reports");
    add_config_flags(eval, flags);
    eval->add_option("--scores", eval_scores, "Score directory")->required();
    eval->add_option("--scans", eval_scans, "Benchmark directory")->required();
    eval->add_option("--out", eval_out, "Report output directory")->required();
    eval->add_option("--limits", eval_limits,
                     "Comma list of FPR integration limits");

    std::string e2e_work = "geost-e2e";
    auto* e2e = app.add_subcommand("e2e", "Run the full pipeline");
    add_config_flags(e2e, flags);
    e2e->add_option("--work", e2e_work, "Working directory (default geost-e2e)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!synth_train.empty())
        flags.overrides.push_back("synth.train_scans=" + synth_train);
    if (!synth_test.empty())
        flags.overrides.push_back("synth.test_scans=" + synth_test);
    if (!synth_defects.empty())
        flags.overrides.push_back("synth.defects=" + synth_defects);
    if (!scenes_count.empty())
        flags.overrides.push_back("scene.count=" + scenes_count);
    if (!eval_limits.empty())
        flags.overrides.push_back("eval.limits=" + eval_limits);

    ConfigPtr config;
    const int rc = build_config(flags, config);
    if (rc != 0)
        return rc;
    geost_config* c = config.get();

    if (synth->parsed())
        return finish("synth",
                      geost_run_synth(c, synth_out.c_str(), print_log, nullptr));
    if (gen->parsed())
        return finish("gen-scenes", geost_run_gen_scenes(c, scenes_out.c_str(),
                                                         print_log, nullptr));
    if (pretrain->parsed())
        return finish("pretrain",
                      geost_run_pretrain(c, pre_scenes.c_str(), pre_out.c_str(),
                                         print_log, nullptr));
    if (train->parsed())
        return finish("train", geost_run_train(c, train_teacher.c_str(),
                                               train_data.c_str(),
                                               train_out.c_str(), print_log,
                                               nullptr));
    if (score->parsed())
        return finish("score", geost_run_score(c, score_models.c_str(),
                                               score_data.c_str(),
                                               score_out.c_str(), print_log,
                                               nullptr));
    if (eval->parsed())
        return finish("eval", geost_run_eval(c, eval_scores.c_str(),
                                             eval_scans.c_str(),
                                             eval_out.c_str(), print_log,
                                             nullptr));
    if (e2e->parsed())
        return finish("e2e",
                      geost_run_e2e(c, e2e_work.c_str(), print_log, nullptr));

    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
}
