#include <geost/geost.h>

#include <cstring>
#include <exception>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "pipeline.hpp"

struct geost_config {
    geost::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error = "no error";

geost_status status_of(geost::ErrorCode code) {
    switch (code) {
        case geost::ErrorCode::invalid_argument:
            return GEOST_ERR_INVALID_ARGUMENT;
        case geost::ErrorCode::io:
            return GEOST_ERR_IO;
        case geost::ErrorCode::format:
            return GEOST_ERR_FORMAT;
        case geost::ErrorCode::numeric:
            return GEOST_ERR_NUMERIC;
        case geost::ErrorCode::internal:
            return GEOST_ERR_INTERNAL;
    }
    return GEOST_ERR_INTERNAL;
}

geost_status fail(geost_status status, const char* message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
geost_status guarded(Fn&& fn) {
    try {
        fn();
        return GEOST_OK;
    } catch (const geost::Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const std::exception& e) {
        return fail(GEOST_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(GEOST_ERR_INTERNAL, "unknown error");
    }
}

geost::LogFn make_log(geost_log_fn log, void* user_data) {
    if (!log)
        return {};
    return [log, user_data](const std::string& msg) {
        log(msg.c_str(), user_data);
    };
}

bool all_set(std::initializer_list<const void*> ptrs) {
    for (const void* p : ptrs)
        if (!p)
            return false;
    return true;
}

}  // namespace

extern "C" {

const char* geost_last_error(void) { return g_last_error.c_str(); }

geost_config* geost_config_new(void) {
    try {
        return new geost_config();
    } catch (...) {
        return nullptr;
    }
}

void geost_config_free(geost_config* config) { delete config; }

geost_status geost_config_preset(geost_config* config, const char* name) {
    if (!all_set({config, name}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { geost::apply_preset(config->cfg, name); });
}

geost_status geost_config_load_file(geost_config* config, const char* path) {
    if (!all_set({config, path}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { geost::load_config_file(config->cfg, path); });
}

geost_status geost_config_set(geost_config* config, const char* key,
                              const char* value) {
    if (!all_set({config, key, value}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { geost::set_config_key(config->cfg, key, value); });
}

geost_status geost_config_hash(const geost_config* config, char* buf,
                               size_t buf_len) {
    if (!all_set({config, buf}) || buf_len < 17)
        return fail(GEOST_ERR_INVALID_ARGUMENT,
                    "need a buffer of at least 17 bytes");
    return guarded([&] {
        const std::string hash = geost::config_hash(config->cfg);
        std::memcpy(buf, hash.c_str(), hash.size() + 1);
    });
}

geost_status geost_run_synth(const geost_config* config, const char* out_dir,
                             geost_log_fn log, void* user_data) {
    if (!all_set({config, out_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded(
        [&] { geost::run_synth(config->cfg, out_dir, make_log(log, user_data)); });
}

geost_status geost_run_gen_scenes(const geost_config* config,
                                  const char* out_dir, geost_log_fn log,
                                  void* user_data) {
    if (!all_set({config, out_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        geost::run_gen_scenes(config->cfg, out_dir, make_log(log, user_data));
    });
}

geost_status geost_run_pretrain(const geost_config* config,
                                const char* scenes_dir, const char* out_path,
                                geost_log_fn log, void* user_data) {
    if (!all_set({config, scenes_dir, out_path}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        geost::run_pretrain(config->cfg, scenes_dir, out_path,
                            make_log(log, user_data));
    });
}

geost_status geost_run_train(const geost_config* config,
                             const char* teacher_path, const char* data_dir,
                             const char* out_dir, geost_log_fn log,
                             void* user_data) {
    if (!all_set({config, teacher_path, data_dir, out_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        geost::run_train(config->cfg, teacher_path, data_dir, out_dir,
                         make_log(log, user_data));
    });
}

geost_status geost_run_score(const geost_config* config, const char* model_dir,
                             const char* data_dir, const char* out_dir,
                             geost_log_fn log, void* user_data) {
    if (!all_set({config, model_dir, data_dir, out_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        geost::run_score(config->cfg, model_dir, data_dir, out_dir,
                         make_log(log, user_data));
    });
}

geost_status geost_run_eval(const geost_config* config, const char* scores_dir,
                            const char* data_dir, const char* out_dir,
                            geost_log_fn log, void* user_data) {
    if (!all_set({config, scores_dir, data_dir, out_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        geost::run_eval(config->cfg, scores_dir, data_dir, out_dir,
                        make_log(log, user_data));
    });
}

geost_status geost_run_e2e(const geost_config* config, const char* work_dir,
                           geost_log_fn log, void* user_data) {
    if (!all_set({config, work_dir}))
        return fail(GEOST_ERR_INVALID_ARGUMENT, "null argument");
    return guarded(
        [&] { geost::run_e2e(config->cfg, work_dir, make_log(log, user_data)); });
}

}  // extern "C"
