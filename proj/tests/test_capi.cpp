#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <geost/geost.h>

namespace {

std::string temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("geost_capi_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir.string();
}

struct ConfigHandle {
    geost_config* ptr = geost_config_new();
    ~ConfigHandle() { geost_config_free(ptr); }
};

}  // namespace

TEST_CASE("config lifecycle, presets and key validation") {
    ConfigHandle c;
    REQUIRE(c.ptr != nullptr);
    CHECK(geost_config_preset(c.ptr, "desk") == GEOST_OK);
    CHECK(geost_config_preset(c.ptr, "bogus") == GEOST_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(geost_last_error()) > 0);

    CHECK(geost_config_set(c.ptr, "net.d", "16") == GEOST_OK);
    CHECK(geost_config_set(c.ptr, "net.bogus", "1") ==
          GEOST_ERR_INVALID_ARGUMENT);
    CHECK(geost_config_set(c.ptr, "net.d", "not-a-number") ==
          GEOST_ERR_FORMAT);

    CHECK(geost_config_preset(nullptr, "desk") == GEOST_ERR_INVALID_ARGUMENT);
    CHECK(geost_config_set(c.ptr, nullptr, "1") == GEOST_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config hash fills a 17-byte buffer") {
    ConfigHandle c;
    char buf[17];
    CHECK(geost_config_hash(c.ptr, buf, sizeof(buf)) == GEOST_OK);
    CHECK(std::strlen(buf) == 16);
    for (const char ch : std::string(buf))
        CHECK(std::string("0123456789abcdef").find(ch) != std::string::npos);

    char tiny[8];
    CHECK(geost_config_hash(c.ptr, tiny, sizeof(tiny)) ==
          GEOST_ERR_INVALID_ARGUMENT);

    // The hash changes with the config and ignores the thread count.
    const std::string before(buf);
    CHECK(geost_config_set(c.ptr, "threads", "8") == GEOST_OK);
    CHECK(geost_config_hash(c.ptr, buf, sizeof(buf)) == GEOST_OK);
    CHECK(std::string(buf) == before);
    CHECK(geost_config_set(c.ptr, "seed", "123") == GEOST_OK);
    CHECK(geost_config_hash(c.ptr, buf, sizeof(buf)) == GEOST_OK);
    CHECK(std::string(buf) != before);
}

TEST_CASE("synth stage writes scans and reports progress") {
    ConfigHandle c;
    REQUIRE(geost_config_preset(c.ptr, "desk") == GEOST_OK);
    REQUIRE(geost_config_set(c.ptr, "synth.train_scans", "3") == GEOST_OK);
    REQUIRE(geost_config_set(c.ptr, "synth.test_scans", "3") == GEOST_OK);
    REQUIRE(geost_config_set(c.ptr, "synth.resolution", "32") == GEOST_OK);

    const std::string out = temp_dir("synth");
    std::vector<std::string> lines;
    const auto log = [](const char* message, void* user_data) {
        static_cast<std::vector<std::string>*>(user_data)->emplace_back(message);
    };
    CHECK(geost_run_synth(c.ptr, out.c_str(), log, &lines) == GEOST_OK);
    CHECK(std::filesystem::exists(out + "/manifest.json"));
    CHECK(std::filesystem::exists(out + "/plane/train/train_000.geoscan"));
    CHECK(!lines.empty());
    std::filesystem::remove_all(out);
}

TEST_CASE("pipeline stages surface errors through status codes") {
    ConfigHandle c;
    REQUIRE(geost_config_preset(c.ptr, "desk") == GEOST_OK);
    const std::string missing = temp_dir("missing") + "/nothing-here";
    const std::string out = temp_dir("out");
    CHECK(geost_run_eval(c.ptr, missing.c_str(), missing.c_str(), out.c_str(),
                         nullptr, nullptr) != GEOST_OK);
    CHECK(std::strlen(geost_last_error()) > 0);
    CHECK(geost_run_synth(c.ptr, nullptr, nullptr, nullptr) ==
          GEOST_ERR_INVALID_ARGUMENT);
    std::filesystem::remove_all(out);
}
