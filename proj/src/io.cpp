#include "io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

namespace geost {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ifstream open_input(const std::string& path, bool binary) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    require(in.good(), ErrorCode::io, "cannot open for reading: " + path);
    return in;
}

std::ofstream open_output(const std::string& path, bool binary) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    require(out.good(), ErrorCode::io, "cannot open for writing: " + path);
    return out;
}

void check_finite(const Vec3& p, const std::string& path) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        raise(ErrorCode::format, path + ": non-finite coordinate");
}

}  // namespace

ScanCloud scan_to_cloud(const OrganizedScan& scan) {
    ScanCloud out;
    for (std::size_t i = 0; i < scan.num_pixels(); ++i) {
        if (scan.valid[i]) {
            out.cloud.points.push_back(scan.xyz[i]);
            out.pixel_of_point.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return out;
}

void save_cloud_text(const PointCloud& cloud, const std::string& path) {
    auto out = open_output(path, false);
    out << "geopc v1 " << cloud.size() << "\n";
    for (const Vec3& p : cloud.points)
        out << format_double(p[0]) << ' ' << format_double(p[1]) << ' '
            << format_double(p[2]) << "\n";
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

void save_cloud_binary(const PointCloud& cloud, const std::string& path) {
    auto out = open_output(path, true);
    out.write("GPC1", 4);
    const std::uint64_t count = cloud.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(cloud.points.data()),
              static_cast<std::streamsize>(count * sizeof(Vec3)));
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

PointCloud load_cloud(const std::string& path) {
    auto probe = open_input(path, true);
    char magic[4] = {};
    probe.read(magic, 4);

    PointCloud cloud;
    if (probe.gcount() == 4 && std::string(magic, 4) == "GPC1") {
        std::uint64_t count = 0;
        probe.read(reinterpret_cast<char*>(&count), sizeof(count));
        require(probe.good(), ErrorCode::format, path + ": truncated header");
        cloud.points.resize(count);
        probe.read(reinterpret_cast<char*>(cloud.points.data()),
                   static_cast<std::streamsize>(count * sizeof(Vec3)));
        require(static_cast<std::uint64_t>(probe.gcount()) == count * sizeof(Vec3),
                ErrorCode::format, path + ": point count mismatch");
    } else {
        probe.close();
        auto in = open_input(path, false);
        std::string tag, version;
        std::uint64_t count = 0;
        in >> tag >> version >> count;
        require(in.good() && tag == "geopc" && version == "v1", ErrorCode::format,
                path + ": malformed geopc header");
        cloud.points.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            in >> cloud.points[i][0] >> cloud.points[i][1] >> cloud.points[i][2];
            require(!in.fail(), ErrorCode::format, path + ": point count mismatch");
        }
    }
    for (const Vec3& p : cloud.points)
        check_finite(p, path);
    return cloud;
}

void save_scan(const OrganizedScan& scan, const std::string& path) {
    require(scan.xyz.size() == scan.num_pixels() &&
                scan.valid.size() == scan.num_pixels() &&
                scan.gt.size() == scan.num_pixels(),
            ErrorCode::invalid_argument, "save_scan: inconsistent buffer sizes");
    auto out = open_output(path, false);
    out << "geoscan v1 " << scan.width << ' ' << scan.height << "\n";
    for (std::size_t i = 0; i < scan.num_pixels(); ++i) {
        if (scan.valid[i]) {
            const Vec3& p = scan.xyz[i];
            out << format_double(p[0]) << ' ' << format_double(p[1]) << ' '
                << format_double(p[2]);
        } else {
            out << "0 0 0";
        }
        out << ' ' << int(scan.valid[i] ? 1 : 0) << ' '
            << int(scan.gt[i] ? 1 : 0) << "\n";
    }
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

OrganizedScan load_scan(const std::string& path) {
    auto in = open_input(path, false);
    std::string tag, version;
    std::uint64_t width = 0, height = 0;
    in >> tag >> version >> width >> height;
    require(in.good() && tag == "geoscan" && version == "v1", ErrorCode::format,
            path + ": malformed geoscan header");

    OrganizedScan scan;
    scan.width = width;
    scan.height = height;
    const std::size_t n = scan.num_pixels();
    scan.xyz.assign(n, Vec3{0.0, 0.0, 0.0});
    scan.valid.assign(n, 0);
    scan.gt.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 p;
        int valid = 0, gt = 0;
        in >> p[0] >> p[1] >> p[2] >> valid >> gt;
        require(!in.fail(), ErrorCode::format, path + ": pixel count mismatch");
        require((valid == 0 || valid == 1) && (gt == 0 || gt == 1),
                ErrorCode::format, path + ": valid/gt flags must be 0 or 1");
        scan.valid[i] = static_cast<std::uint8_t>(valid);
        scan.gt[i] = static_cast<std::uint8_t>(gt);
        if (valid) {
            check_finite(p, path);
            scan.xyz[i] = p;
        }
    }
    return scan;
}

void save_scores(const ScoreFile& scores, const std::string& path) {
    require(scores.indices.size() == scores.scores.size(),
            ErrorCode::invalid_argument, "save_scores: index/score size mismatch");
    auto out = open_output(path, false);
    out << "geoscore v1 " << scores.scores.size() << "\n";
    for (const auto& [key, value] : scores.meta)
        out << "# " << key << ' ' << value << "\n";
    for (std::size_t i = 0; i < scores.scores.size(); ++i)
        out << scores.indices[i] << ' ' << format_double(scores.scores[i]) << "\n";
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

ScoreFile load_scores(const std::string& path) {
    auto in = open_input(path, false);
    std::string tag, version;
    std::uint64_t count = 0;
    in >> tag >> version >> count;
    require(in.good() && tag == "geoscore" && version == "v1", ErrorCode::format,
            path + ": malformed geoscore header");
    in.ignore();

    ScoreFile out;
    std::string line;
    while (out.scores.size() < count && std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key, value;
            ls >> key;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ')
                value.erase(0, 1);
            out.meta[key] = value;
            continue;
        }
        std::istringstream ls(line);
        std::uint32_t idx = 0;
        double score = 0.0;
        ls >> idx >> score;
        require(!ls.fail(), ErrorCode::format, path + ": malformed score line");
        require(std::isfinite(score), ErrorCode::format, path + ": non-finite score");
        out.indices.push_back(idx);
        out.scores.push_back(score);
    }
    require(out.scores.size() == count, ErrorCode::format,
            path + ": score count mismatch");
    return out;
}

std::string read_text_file(const std::string& path) {
    auto in = open_input(path, true);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    auto out = open_output(path, true);
    out << content;
    require(out.good(), ErrorCode::io, "write failed: " + path);
}

}  // namespace geost
