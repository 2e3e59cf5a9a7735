#include "checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace geost {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape)
        n *= d;
    return n;
}

}  // namespace

void Checkpoint::put_f32(const std::string& name, const Tensor<float>& t) {
    CheckpointArray arr;
    arr.dtype = "f32";
    arr.shape = t.shape;
    arr.data.assign(t.data.begin(), t.data.end());
    arrays[name] = std::move(arr);
}

void Checkpoint::put_f64(const std::string& name, const Tensor<double>& t) {
    CheckpointArray arr;
    arr.dtype = "f64";
    arr.shape = t.shape;
    arr.data = t.data;
    arrays[name] = std::move(arr);
}

Tensor<float> Checkpoint::get_f32(const std::string& name) const {
    auto it = arrays.find(name);
    require(it != arrays.end(), ErrorCode::format,
            "checkpoint: missing array " + name);
    Tensor<float> t;
    t.shape = it->second.shape;
    t.data.assign(it->second.data.begin(), it->second.data.end());
    return t;
}

Tensor<double> Checkpoint::get_f64(const std::string& name) const {
    auto it = arrays.find(name);
    require(it != arrays.end(), ErrorCode::format,
            "checkpoint: missing array " + name);
    Tensor<double> t;
    t.shape = it->second.shape;
    t.data = it->second.data;
    return t;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json manifest;
    manifest["meta"] = ckpt.meta;
    manifest["arrays"] = nlohmann::json::array();
    for (const auto& [name, arr] : ckpt.arrays) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["dtype"] = arr.dtype;
        entry["shape"] = arr.shape;
        manifest["arrays"].push_back(entry);
    }
    const std::string manifest_str = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const std::uint64_t mlen = manifest_str.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(manifest_str.data(), static_cast<std::streamsize>(mlen));
    for (const auto& [name, arr] : ckpt.arrays) {
        require(arr.data.size() == shape_size(arr.shape), ErrorCode::internal,
                "checkpoint: shape/data mismatch for " + name);
        if (arr.dtype == "f32") {
            std::vector<float> buf(arr.data.begin(), arr.data.end());
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(buf.size() * sizeof(float)));
        } else if (arr.dtype == "f64") {
            out.write(reinterpret_cast<const char*>(arr.data.data()),
                      static_cast<std::streamsize>(arr.data.size() * sizeof(double)));
        } else {
            raise(ErrorCode::internal, "checkpoint: unknown dtype " + arr.dtype);
        }
    }
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io, "cannot open for reading: " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t mlen = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    require(in.good() && std::string(magic, 4) == std::string(kMagic, 4),
            ErrorCode::format, path + ": not a GST1 checkpoint");
    require(version == kVersion, ErrorCode::format,
            path + ": unsupported checkpoint version");

    std::string manifest_str(mlen, '\0');
    in.read(manifest_str.data(), static_cast<std::streamsize>(mlen));
    require(in.good(), ErrorCode::format, path + ": truncated manifest");
    nlohmann::json manifest = nlohmann::json::parse(manifest_str, nullptr, false);
    require(!manifest.is_discarded(), ErrorCode::format,
            path + ": malformed manifest JSON");

    Checkpoint ckpt;
    ckpt.meta = manifest.value("meta", nlohmann::json::object());
    for (const auto& entry : manifest.at("arrays")) {
        const std::string name = entry.at("name").get<std::string>();
        CheckpointArray arr;
        arr.dtype = entry.at("dtype").get<std::string>();
        arr.shape = entry.at("shape").get<std::vector<std::size_t>>();
        const std::size_t count = shape_size(arr.shape);
        if (arr.dtype == "f32") {
            std::vector<float> buf(count);
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(count * sizeof(float)));
            require(in.gcount() ==
                        static_cast<std::streamsize>(count * sizeof(float)),
                    ErrorCode::format, path + ": truncated payload for " + name);
            arr.data.assign(buf.begin(), buf.end());
        } else if (arr.dtype == "f64") {
            arr.data.resize(count);
            in.read(reinterpret_cast<char*>(arr.data.data()),
                    static_cast<std::streamsize>(count * sizeof(double)));
            require(in.gcount() ==
                        static_cast<std::streamsize>(count * sizeof(double)),
                    ErrorCode::format, path + ": truncated payload for " + name);
        } else {
            raise(ErrorCode::format, path + ": unknown dtype " + arr.dtype);
        }
        ckpt.arrays[name] = std::move(arr);
    }
    return ckpt;
}

void store_param_store(Checkpoint& ckpt, const ParamStore<float>& store) {
    for (const auto& [name, entry] : store.params) {
        ckpt.put_f32("param." + name, entry.value);
        ckpt.put_f32("adam.m." + name, entry.m);
        ckpt.put_f32("adam.v." + name, entry.v);
    }
    ckpt.meta["adam_step"] = store.step;
}

ParamStore<float> load_param_store(const Checkpoint& ckpt) {
    ParamStore<float> store;
    const std::string prefix = "param.";
    for (const auto& [name, arr] : ckpt.arrays) {
        if (name.rfind(prefix, 0) != 0)
            continue;
        const std::string pname = name.substr(prefix.size());
        store.add(pname, ckpt.get_f32(name));
        auto& entry = store.params.at(pname);
        if (ckpt.has("adam.m." + pname))
            entry.m = ckpt.get_f32("adam.m." + pname);
        if (ckpt.has("adam.v." + pname))
            entry.v = ckpt.get_f32("adam.v." + pname);
    }
    store.step = ckpt.meta.value("adam_step", std::int64_t(0));
    return store;
}

}  // namespace geost
