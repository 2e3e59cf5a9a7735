#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tape.hpp"

namespace geost {

// Self-describing checkpoint container: magic "GST1", a JSON manifest of
// named arrays (name, shape, dtype), then raw little-endian payloads in
// manifest order. Carries hyperparameters and optimizer state in `meta` so
// training resumes exactly.
struct CheckpointArray {
    std::string dtype;  // "f32" or "f64"
    std::vector<std::size_t> shape;
    std::vector<double> data;  // converted at the file boundary
};

struct Checkpoint {
    nlohmann::json meta;
    std::map<std::string, CheckpointArray> arrays;

    void put_f32(const std::string& name, const Tensor<float>& t);
    void put_f64(const std::string& name, const Tensor<double>& t);
    Tensor<float> get_f32(const std::string& name) const;
    Tensor<double> get_f64(const std::string& name) const;
    bool has(const std::string& name) const { return arrays.count(name) != 0; }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ParamStore round trip. Parameters are stored under "param.<name>", Adam
// moments under "adam.m.<name>" / "adam.v.<name>", the step counter in
// meta["adam_step"].
void store_param_store(Checkpoint& ckpt, const ParamStore<float>& store);
ParamStore<float> load_param_store(const Checkpoint& ckpt);

}  // namespace geost
