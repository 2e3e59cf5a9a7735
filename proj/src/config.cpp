#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "error.hpp"
#include "io.hpp"

namespace geost {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && ptr == value.data() + value.size(),
            ErrorCode::format, "config: bad integer for " + key + ": " + value);
    return out;
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double out = std::stod(value, &pos);
        require(pos == value.size(), ErrorCode::format,
                "config: bad number for " + key + ": " + value);
        return out;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(ErrorCode::format, "config: bad number for " + key + ": " + value);
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    raise(ErrorCode::format, "config: bad boolean for " + key + ": " + value);
}

std::string format_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_preset(RunConfig& cfg, const std::string& name) {
    if (name == "paper")
        return;  // the defaults
    if (name == "desk") {
        cfg.net_d = 16;
        cfg.net_k = 8;
        cfg.scene_count = 30;
        cfg.scene_points = 2048;
        cfg.pretrain_epochs = 50;
        cfg.pretrain_lr = 3e-3;
        cfg.pretrain_decoder_m = 128;
        cfg.student_epochs = 250;
        cfg.student_lr = 3e-3;
        cfg.synth_resolution = 64;
        cfg.synth_train_scans = 20;
        cfg.synth_test_scans = 10;
        cfg.sample_points = 2048;
        return;
    }
    raise(ErrorCode::invalid_argument, "unknown preset: " + name);
}

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
    if (key == "seed")
        cfg.seed = parse_u64(key, value);
    else if (key == "threads")
        cfg.threads = static_cast<int>(parse_u64(key, value));
    else if (key == "net.d")
        cfg.net_d = parse_u64(key, value);
    else if (key == "net.k")
        cfg.net_k = parse_u64(key, value);
    else if (key == "net.blocks")
        cfg.net_blocks = parse_u64(key, value);
    else if (key == "net.use_absolute_coords")
        cfg.net_use_absolute_coords = parse_bool(key, value);
    else if (key == "scene.count")
        cfg.scene_count = parse_u64(key, value);
    else if (key == "scene.points")
        cfg.scene_points = parse_u64(key, value);
    else if (key == "scene.models")
        cfg.scene_models = parse_u64(key, value);
    else if (key == "scene.range")
        cfg.scene_range = parse_f64(key, value);
    else if (key == "pretrain.epochs")
        cfg.pretrain_epochs = parse_u64(key, value);
    else if (key == "pretrain.lr")
        cfg.pretrain_lr = parse_f64(key, value);
    else if (key == "pretrain.weight_decay")
        cfg.pretrain_weight_decay = parse_f64(key, value);
    else if (key == "pretrain.queries")
        cfg.pretrain_queries = parse_u64(key, value);
    else if (key == "pretrain.decoder_m")
        cfg.pretrain_decoder_m = parse_u64(key, value);
    else if (key == "student.epochs")
        cfg.student_epochs = parse_u64(key, value);
    else if (key == "student.lr")
        cfg.student_lr = parse_f64(key, value);
    else if (key == "student.weight_decay")
        cfg.student_weight_decay = parse_f64(key, value);
    else if (key == "student.random_teacher")
        cfg.student_random_teacher = parse_bool(key, value);
    else if (key == "synth.resolution")
        cfg.synth_resolution = parse_u64(key, value);
    else if (key == "synth.train_scans")
        cfg.synth_train_scans = parse_u64(key, value);
    else if (key == "synth.test_scans")
        cfg.synth_test_scans = parse_u64(key, value);
    else if (key == "synth.defects_per_scan")
        cfg.synth_defects_per_scan = parse_u64(key, value);
    else if (key == "synth.defects")
        cfg.synth_defects = value;
    else if (key == "synth.surfaces")
        cfg.synth_surfaces = value;
    else if (key == "sample.points")
        cfg.sample_points = parse_u64(key, value);
    else if (key == "eval.limits")
        cfg.eval_limits = value;
    else
        raise(ErrorCode::invalid_argument, "config: unknown key: " + key);
}

void parse_config_text(RunConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::format,
                "config: missing '=' on line " + std::to_string(lineno));
        set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    parse_config_text(cfg, read_text_file(path));
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "net.d = " << cfg.net_d << "\n";
    out << "net.k = " << cfg.net_k << "\n";
    out << "net.blocks = " << cfg.net_blocks << "\n";
    out << "net.use_absolute_coords = "
        << (cfg.net_use_absolute_coords ? "true" : "false") << "\n";
    out << "scene.count = " << cfg.scene_count << "\n";
    out << "scene.points = " << cfg.scene_points << "\n";
    out << "scene.models = " << cfg.scene_models << "\n";
    out << "scene.range = " << format_f64(cfg.scene_range) << "\n";
    out << "pretrain.epochs = " << cfg.pretrain_epochs << "\n";
    out << "pretrain.lr = " << format_f64(cfg.pretrain_lr) << "\n";
    out << "pretrain.weight_decay = " << format_f64(cfg.pretrain_weight_decay)
        << "\n";
    out << "pretrain.queries = " << cfg.pretrain_queries << "\n";
    out << "pretrain.decoder_m = " << cfg.pretrain_decoder_m << "\n";
    out << "student.epochs = " << cfg.student_epochs << "\n";
    out << "student.lr = " << format_f64(cfg.student_lr) << "\n";
    out << "student.weight_decay = " << format_f64(cfg.student_weight_decay)
        << "\n";
    out << "student.random_teacher = "
        << (cfg.student_random_teacher ? "true" : "false") << "\n";
    out << "synth.resolution = " << cfg.synth_resolution << "\n";
    out << "synth.train_scans = " << cfg.synth_train_scans << "\n";
    out << "synth.test_scans = " << cfg.synth_test_scans << "\n";
    out << "synth.defects_per_scan = " << cfg.synth_defects_per_scan << "\n";
    out << "synth.defects = " << cfg.synth_defects << "\n";
    out << "synth.surfaces = " << cfg.synth_surfaces << "\n";
    out << "sample.points = " << cfg.sample_points << "\n";
    out << "eval.limits = " << cfg.eval_limits << "\n";
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    // The config hash deliberately skips `threads`: results are required to
    // be thread-count independent, so artifacts from different thread counts
    // must stay interchangeable.
    RunConfig canon = cfg;
    canon.threads = 0;
    const std::string text = serialize_config(canon);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

std::vector<double> parse_limits(const std::string& text) {
    std::vector<double> out;
    for (const std::string& item : split_csv_list(text)) {
        const double v = parse_f64("eval.limits", item);
        require(v > 0.0 && v <= 1.0, ErrorCode::invalid_argument,
                "eval limit must be in (0, 1]: " + item);
        out.push_back(v);
    }
    require(!out.empty(), ErrorCode::invalid_argument, "no eval limits given");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace geost
