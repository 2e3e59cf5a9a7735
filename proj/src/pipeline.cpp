#include "pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "anomaly.hpp"
#include "checkpoint.hpp"
#include "error.hpp"
#include "evalmetrics.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "pretrain.hpp"
#include "scene.hpp"
#include "synthscan.hpp"

namespace fs = std::filesystem;

namespace geost {

namespace {

void say(const LogFn& log, const std::string& msg) {
    if (log)
        log(msg);
}

std::string pad3(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", i);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorCode::io, "cannot create directory: " + dir);
}

void echo_config(const RunConfig& cfg, const std::string& dir) {
    write_text_file(dir + "/config.txt", serialize_config(cfg));
}

std::vector<std::string> list_files(const std::string& dir,
                                    const std::string& ext) {
    require(fs::is_directory(dir), ErrorCode::io, "not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

nlohmann::json load_manifest(const std::string& dir) {
    const std::string path = dir + "/manifest.json";
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(ErrorCode::format, "bad manifest " + path + ": " + e.what());
    }
}

void write_manifest(const nlohmann::json& manifest, const std::string& dir) {
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> manifest_categories(const nlohmann::json& manifest) {
    std::vector<std::string> cats;
    for (const auto& c : manifest.at("categories"))
        cats.push_back(c.get<std::string>());
    require(!cats.empty(), ErrorCode::format, "manifest lists no categories");
    return cats;
}

void check_net_meta(const nlohmann::json& meta, const RunConfig& cfg,
                    const std::string& what) {
    require(meta.at("net_d").get<std::size_t>() == cfg.net_d &&
                meta.at("net_k").get<std::size_t>() == cfg.net_k &&
                meta.at("net_blocks").get<std::size_t>() == cfg.net_blocks &&
                meta.at("net_use_absolute_coords").get<bool>() ==
                    cfg.net_use_absolute_coords,
            ErrorCode::invalid_argument,
            what + " was produced with a different network configuration");
}

void put_net_meta(nlohmann::json& meta, const RunConfig& cfg) {
    meta["net_d"] = cfg.net_d;
    meta["net_k"] = cfg.net_k;
    meta["net_blocks"] = cfg.net_blocks;
    meta["net_use_absolute_coords"] = cfg.net_use_absolute_coords;
}

// Anomaly-free scans of one category, sampled down and normalized with the
// category scaling factor (returned through `scaling`).
std::vector<PointCloud> load_category_clouds(
    const RunConfig& cfg, const std::string& scan_dir,
    const std::vector<std::string>& files, std::uint64_t fps_seed,
    int threads, double& scaling) {
    std::vector<PointCloud> clouds;
    for (std::size_t si = 0; si < files.size(); ++si) {
        const ScanCloud sc = scan_to_cloud(load_scan(scan_dir + "/" + files[si]));
        const std::size_t n = std::min(cfg.sample_points, sc.cloud.size());
        const auto idx =
            farthest_point_sample(sc.cloud, n, Rng::derive(fps_seed, si));
        clouds.push_back(select_points(sc.cloud, idx));
    }
    scaling = scaling_factor(clouds, cfg.net_k, threads);
    for (PointCloud& cloud : clouds)
        cloud = normalize_cloud(cloud, scaling);
    return clouds;
}

}  // namespace

void run_synth(const RunConfig& cfg, const std::string& out_dir,
               const LogFn& log) {
    require(cfg.synth_resolution >= 16, ErrorCode::invalid_argument,
            "synth resolution must be at least 16");
    require(cfg.synth_defects_per_scan >= 1, ErrorCode::invalid_argument,
            "synth needs at least one defect per test scan");
    const std::vector<std::string> surface_names =
        split_csv_list(cfg.synth_surfaces);
    require(!surface_names.empty(), ErrorCode::invalid_argument,
            "synth needs at least one surface kind");
    std::vector<SurfaceKind> surfaces;
    for (const std::string& name : surface_names)
        surfaces.push_back(surface_kind_from_name(name));
    std::vector<DefectKind> defect_kinds;
    for (const std::string& name : split_csv_list(cfg.synth_defects))
        defect_kinds.push_back(defect_kind_from_name(name));
    require(!defect_kinds.empty(), ErrorCode::invalid_argument,
            "synth needs at least one defect kind");
    require(cfg.synth_train_scans >= surfaces.size() &&
                cfg.synth_test_scans >= surfaces.size(),
            ErrorCode::invalid_argument,
            "synth needs at least one train and one test scan per surface");

    ensure_dir(out_dir);
    const std::size_t res = cfg.synth_resolution;
    nlohmann::json manifest;
    manifest["config_hash"] = config_hash(cfg);
    manifest["resolution"] = res;
    manifest["categories"] = surface_names;

    std::vector<std::size_t> train_counter(surfaces.size(), 0);
    for (std::size_t i = 0; i < cfg.synth_train_scans; ++i) {
        const std::size_t ci = i % surfaces.size();
        const std::string dir = out_dir + "/" + surface_names[ci] + "/train";
        ensure_dir(dir);
        const OrganizedScan scan = make_train_scan(
            surfaces[ci], res, res, Rng::derive(cfg.seed, 600 + i));
        save_scan(scan, dir + "/train_" + pad3(train_counter[ci]++) + ".geoscan");
    }

    nlohmann::json tests = nlohmann::json::array();
    std::vector<std::size_t> test_counter(surfaces.size(), 0);
    for (std::size_t i = 0; i < cfg.synth_test_scans; ++i) {
        const std::size_t ci = i % surfaces.size();
        const std::string dir = out_dir + "/" + surface_names[ci] + "/test";
        ensure_dir(dir);
        Rng rng(Rng::derive(cfg.seed, 800 + i));
        const auto defects = random_defects(surfaces[ci], defect_kinds,
                                            cfg.synth_defects_per_scan, res, res,
                                            rng);
        const OrganizedScan scan = make_test_scan(
            surfaces[ci], defects, res, res, Rng::derive(cfg.seed, 700 + i));
        const std::string file = "test_" + pad3(test_counter[ci]++) + ".geoscan";
        save_scan(scan, dir + "/" + file);

        nlohmann::json entry;
        entry["category"] = surface_names[ci];
        entry["file"] = file;
        entry["defects"] = nlohmann::json::array();
        for (const DefectSpec& d : defects)
            entry["defects"].push_back({{"kind", defect_kind_name(d.kind)},
                                        {"u", d.u},
                                        {"v", d.v},
                                        {"radius", d.radius},
                                        {"amplitude", d.amplitude}});
        tests.push_back(entry);
    }
    manifest["test_scans"] = tests;
    write_manifest(manifest, out_dir);
    echo_config(cfg, out_dir);
    say(log, "synth: wrote " + std::to_string(cfg.synth_train_scans) +
                 " train and " + std::to_string(cfg.synth_test_scans) +
                 " test scans to " + out_dir);
}

void run_gen_scenes(const RunConfig& cfg, const std::string& out_dir,
                    const LogFn& log) {
    require(cfg.scene_count >= 1, ErrorCode::invalid_argument,
            "gen-scenes needs at least one scene");
    ensure_dir(out_dir);
    const ShapeBank bank = synth_shape_bank(Rng::derive(cfg.seed, 200));
    for (std::size_t i = 0; i < cfg.scene_count; ++i) {
        SceneConfig sc;
        sc.models_per_scene = cfg.scene_models;
        sc.placement_range = cfg.scene_range;
        sc.points_per_scene = cfg.scene_points;
        sc.seed = Rng::derive(cfg.seed, 300 + i);
        save_cloud_binary(generate_scene(bank, sc),
                          out_dir + "/scene_" + pad3(i) + ".geopc");
    }
    nlohmann::json manifest;
    manifest["config_hash"] = config_hash(cfg);
    manifest["count"] = cfg.scene_count;
    write_manifest(manifest, out_dir);
    echo_config(cfg, out_dir);
    say(log, "gen-scenes: wrote " + std::to_string(cfg.scene_count) +
                 " scenes to " + out_dir);
}

void run_pretrain(const RunConfig& cfg, const std::string& scenes_dir,
                  const std::string& out_path, const LogFn& log) {
    const std::vector<std::string> files = list_files(scenes_dir, ".geopc");
    require(!files.empty(), ErrorCode::io,
            "pretrain: no scenes found in " + scenes_dir);
    std::vector<PointCloud> scenes;
    for (const std::string& f : files)
        scenes.push_back(load_cloud(scenes_dir + "/" + f));

    const int threads = resolve_threads(cfg.threads);
    const double scaling = scaling_factor(scenes, cfg.net_k, threads);
    for (PointCloud& scene : scenes)
        scene = normalize_cloud(scene, scaling);

    std::vector<PointCloud> train, val;
    split_validation(scenes, cfg.seed, train, val);

    PretrainConfig pc;
    pc.epochs = cfg.pretrain_epochs;
    pc.lr = cfg.pretrain_lr;
    pc.weight_decay = cfg.pretrain_weight_decay;
    pc.queries = cfg.pretrain_queries;
    pc.net = cfg.net();
    pc.decoder_m = cfg.pretrain_decoder_m;
    pc.seed = cfg.seed;
    pc.threads = threads;

    std::ostringstream curve;
    curve << "epoch,train_loss,val_loss\n";
    const PretrainResult result = pretrain_teacher(
        train, val, pc, scaling, [&](const EpochRecord& r) {
            char line[128];
            std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g", r.epoch,
                          r.train_loss, r.val_loss);
            curve << line << "\n";
            say(log, "pretrain: epoch " + std::to_string(r.epoch) + " train " +
                         std::to_string(r.train_loss) + " val " +
                         std::to_string(r.val_loss));
        });

    const fs::path out(out_path);
    if (out.has_parent_path())
        ensure_dir(out.parent_path().string());
    Checkpoint ckpt;
    store_param_store(ckpt, result.params);
    ckpt.meta["config_hash"] = config_hash(cfg);
    ckpt.meta["scaling"] = result.scaling;
    ckpt.meta["best_epoch"] = result.best_epoch;
    ckpt.meta["best_val_loss"] = result.best_val_loss;
    ckpt.meta["decoder_m"] = cfg.pretrain_decoder_m;
    put_net_meta(ckpt.meta, cfg);
    save_checkpoint(ckpt, out_path);
    write_text_file(out_path + ".curve.csv", curve.str());
    if (out.has_parent_path())
        echo_config(cfg, out.parent_path().string());
    say(log, "pretrain: best epoch " + std::to_string(result.best_epoch) +
                 ", val loss " + std::to_string(result.best_val_loss));
}

void run_train(const RunConfig& cfg, const std::string& teacher_path,
               const std::string& data_dir, const std::string& out_dir,
               const LogFn& log) {
    const nlohmann::json manifest = load_manifest(data_dir);
    const std::vector<std::string> categories = manifest_categories(manifest);
    const int threads = resolve_threads(cfg.threads);

    ParamStore<float> teacher;
    if (cfg.student_random_teacher) {
        // Ablation: score against an untrained teacher.
        Rng init_rng(Rng::derive(cfg.seed, 1));
        init_descriptor_params(teacher, cfg.net(), "teacher", init_rng);
    } else {
        const Checkpoint ckpt = load_checkpoint(teacher_path);
        check_net_meta(ckpt.meta, cfg, "teacher checkpoint");
        teacher = load_param_store(ckpt);
    }

    ensure_dir(out_dir);
    for (std::size_t ci = 0; ci < categories.size(); ++ci) {
        const std::string& cat = categories[ci];
        const std::string scan_dir = data_dir + "/" + cat + "/train";
        const std::vector<std::string> files = list_files(scan_dir, ".geoscan");
        require(!files.empty(), ErrorCode::io,
                "train: no training scans for category " + cat);

        double scaling = 0.0;
        const std::vector<PointCloud> clouds = load_category_clouds(
            cfg, scan_dir, files, Rng::derive(cfg.seed, 4000 + ci), threads,
            scaling);

        std::vector<PointCloud> train, val;
        split_validation(clouds, Rng::derive(cfg.seed, 40 + ci), train, val);

        const FeatureStats stats =
            compute_feature_stats(teacher_feature_fn(teacher, cfg.net()), train,
                                  cfg.net_k, cfg.net_d, threads);

        StudentConfig scfg;
        scfg.epochs = cfg.student_epochs;
        scfg.lr = cfg.student_lr;
        scfg.weight_decay = cfg.student_weight_decay;
        scfg.net = cfg.net();
        scfg.seed = Rng::derive(cfg.seed, 500 + ci);
        scfg.threads = threads;

        const StudentResult result = train_student(
            teacher, stats, train, val, scfg, [&](const EpochRecord& r) {
                say(log, "train[" + cat + "]: epoch " + std::to_string(r.epoch) +
                             " train " + std::to_string(r.train_loss) + " val " +
                             std::to_string(r.val_loss));
            });

        // Self-contained per-category model: teacher, best student, stats.
        ParamStore<float> merged;
        for (const auto& [name, entry] : teacher.params)
            if (name.rfind("teacher.", 0) == 0)
                merged.add(name, entry.value);
        for (const auto& [name, entry] : result.params.params)
            if (name.rfind("student.", 0) == 0)
                merged.add(name, entry.value);

        Checkpoint ckpt;
        store_param_store(ckpt, merged);
        Tensor<double> mu = Tensor<double>::zeros({stats.d()});
        Tensor<double> sigma = Tensor<double>::zeros({stats.d()});
        std::copy(stats.mu.begin(), stats.mu.end(), mu.data.begin());
        std::copy(stats.sigma.begin(), stats.sigma.end(), sigma.data.begin());
        ckpt.put_f64("stats.mu", mu);
        ckpt.put_f64("stats.sigma", sigma);
        ckpt.meta["config_hash"] = config_hash(cfg);
        ckpt.meta["category"] = cat;
        ckpt.meta["scaling"] = scaling;
        ckpt.meta["best_epoch"] = result.best_epoch;
        ckpt.meta["best_val_loss"] = result.best_val_loss;
        ckpt.meta["random_teacher"] = cfg.student_random_teacher;
        put_net_meta(ckpt.meta, cfg);
        ensure_dir(out_dir + "/" + cat);
        save_checkpoint(ckpt, out_dir + "/" + cat + "/model.gst");
        say(log, "train[" + cat + "]: best epoch " +
                     std::to_string(result.best_epoch) + ", val loss " +
                     std::to_string(result.best_val_loss));
    }
    echo_config(cfg, out_dir);
}

void run_score(const RunConfig& cfg, const std::string& model_dir,
               const std::string& data_dir, const std::string& out_dir,
               const LogFn& log) {
    const nlohmann::json manifest = load_manifest(data_dir);
    const std::vector<std::string> categories = manifest_categories(manifest);
    const int threads = resolve_threads(cfg.threads);

    ensure_dir(out_dir);
    for (std::size_t ci = 0; ci < categories.size(); ++ci) {
        const std::string& cat = categories[ci];
        const Checkpoint ckpt = load_checkpoint(model_dir + "/" + cat +
                                                "/model.gst");
        check_net_meta(ckpt.meta, cfg, "model checkpoint");
        const ParamStore<float> model = load_param_store(ckpt);
        const double scaling = ckpt.meta.at("scaling").get<double>();
        const Tensor<double> mu = ckpt.get_f64("stats.mu");
        const Tensor<double> sigma = ckpt.get_f64("stats.sigma");
        FeatureStats stats;
        stats.mu = mu.data;
        stats.sigma = sigma.data;

        const std::string scan_dir = data_dir + "/" + cat + "/test";
        const std::vector<std::string> files = list_files(scan_dir, ".geoscan");
        require(!files.empty(), ErrorCode::io,
                "score: no test scans for category " + cat);
        ensure_dir(out_dir + "/" + cat);

        for (std::size_t si = 0; si < files.size(); ++si) {
            const ScanCloud sc =
                scan_to_cloud(load_scan(scan_dir + "/" + files[si]));
            const std::size_t n = std::min(cfg.sample_points, sc.cloud.size());
            const auto idx = farthest_point_sample(
                sc.cloud, n, Rng::derive(Rng::derive(cfg.seed, 9000 + ci), si));
            const PointCloud cloud =
                normalize_cloud(select_points(sc.cloud, idx), scaling);
            const std::vector<double> scores =
                score_cloud(model, model, stats, cloud, cfg.net(), threads);

            ScoreFile sf;
            sf.indices.reserve(n);
            for (const std::uint32_t pi : idx)
                sf.indices.push_back(sc.pixel_of_point[pi]);
            sf.scores = scores;
            sf.meta["config_hash"] = config_hash(cfg);
            sf.meta["category"] = cat;
            sf.meta["scan"] = files[si];
            const std::string base =
                files[si].substr(0, files[si].size() - std::string(".geoscan").size());
            save_scores(sf, out_dir + "/" + cat + "/" + base + ".geoscore");
        }
        say(log, "score[" + cat + "]: scored " + std::to_string(files.size()) +
                     " scans");
    }
    echo_config(cfg, out_dir);
}

EvalResult run_eval(const RunConfig& cfg, const std::string& scores_dir,
                    const std::string& data_dir, const std::string& out_dir,
                    const LogFn& log) {
    const nlohmann::json manifest = load_manifest(data_dir);
    const std::vector<std::string> categories = manifest_categories(manifest);
    const std::string data_hash = manifest.at("config_hash").get<std::string>();
    const std::vector<double> limits = parse_limits(cfg.eval_limits);

    std::vector<CategoryEval> results;
    for (const std::string& cat : categories) {
        const std::vector<std::string> files =
            list_files(scores_dir + "/" + cat, ".geoscore");
        require(!files.empty(), ErrorCode::io,
                "eval: no score files for category " + cat);
        std::vector<AnomalyMap> maps;
        std::vector<OrganizedScan> scans;
        for (const std::string& f : files) {
            const ScoreFile sf = load_scores(scores_dir + "/" + cat + "/" + f);
            require(sf.meta.count("config_hash") &&
                        sf.meta.at("config_hash") == data_hash,
                    ErrorCode::invalid_argument,
                    "eval: score file " + f +
                        " does not match the scan directory (config hash)");
            require(sf.meta.count("scan"), ErrorCode::format,
                    "eval: score file " + f + " names no scan");
            const OrganizedScan scan =
                load_scan(data_dir + "/" + cat + "/test/" + sf.meta.at("scan"));
            std::vector<std::pair<std::uint32_t, double>> seeds;
            seeds.reserve(sf.indices.size());
            for (std::size_t i = 0; i < sf.indices.size(); ++i)
                seeds.emplace_back(sf.indices[i], sf.scores[i]);
            maps.push_back(harmonic_interpolate(scan, seeds));
            scans.push_back(scan);
        }
        results.push_back({cat, pro_curve(maps, scans)});
    }

    ensure_dir(out_dir);
    write_report_csv(out_dir + "/report.csv", results, limits);
    write_curves_csv(out_dir + "/curves.csv", results);
    write_text_file(out_dir + "/report.json",
                    report_json(results, limits).dump(2) + "\n");
    echo_config(cfg, out_dir);

    EvalResult out;
    out.limits = limits;
    out.mean_au_pro.assign(limits.size(), 0.0);
    for (const CategoryEval& r : results) {
        out.categories.push_back(r.category);
        std::vector<double> row;
        for (std::size_t li = 0; li < limits.size(); ++li) {
            row.push_back(au_pro(r.curve, limits[li]));
            out.mean_au_pro[li] += row.back() / static_cast<double>(results.size());
        }
        out.au_pro.push_back(row);
    }
    for (std::size_t ri = 0; ri <= out.categories.size(); ++ri) {
        const bool mean_row = ri == out.categories.size();
        std::ostringstream line;
        line << "au-pro " << (mean_row ? std::string("mean") : out.categories[ri])
             << ":";
        for (std::size_t li = 0; li < limits.size(); ++li) {
            char cell[48];
            std::snprintf(cell, sizeof(cell), " %g=%.4f", limits[li],
                          mean_row ? out.mean_au_pro[li] : out.au_pro[ri][li]);
            line << cell;
        }
        say(log, line.str());
    }
    return out;
}

EvalResult run_e2e(const RunConfig& cfg, const std::string& work_dir,
                   const LogFn& log) {
    ensure_dir(work_dir);
    const std::string data = work_dir + "/data";
    const std::string scenes = work_dir + "/scenes";
    const std::string teacher = work_dir + "/teacher.gst";
    const std::string models = work_dir + "/models";
    const std::string scores = work_dir + "/scores";
    const std::string evald = work_dir + "/eval";

    run_synth(cfg, data, log);
    if (!cfg.student_random_teacher) {
        run_gen_scenes(cfg, scenes, log);
        run_pretrain(cfg, scenes, teacher, log);
    }
    run_train(cfg, teacher, data, models, log);
    run_score(cfg, models, data, scores, log);
    EvalResult result = run_eval(cfg, scores, data, evald, log);
    echo_config(cfg, work_dir);
    return result;
}

}  // namespace geost
