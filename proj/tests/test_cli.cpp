#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cpekit/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("cpekit_cli_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int call(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = cpekit::cli::run(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

}  // namespace

TEST_CASE("design then check") {
    TempDir d;
    const std::string dir = d.path.string();
    REQUIRE(call({"design", "--mode", "mosaic", "-m", "2", "-L", "5", "--lengths", "7,7,6,6,5", "--seed", "1", "-o",
                  dir}) == cpekit::cli::kExitOk);
    const json dj = read_json(d.path / "design.json");
    CHECK(dj["verification"]["ok"].get<bool>());
    CHECK(fs::exists(d.path / "design.txt"));
    CHECK(fs::exists(d.path / "manifest.json"));

    REQUIRE(call({"check", "--mode", "mosaic", "-L", "5", "--bundle", (d.path / "manifest.json").string(), "-o", dir}) ==
            cpekit::cli::kExitOk);
    const json cj = read_json(d.path / "check.json");
    CHECK(cj["verdict"].get<bool>());

    REQUIRE(call({"check", "--mode", "cumulative", "-L", "5", "--bundle", (d.path / "manifest.json").string(), "-o",
                  dir}) == cpekit::cli::kExitInput);  // unequal lengths cannot be summed

    // Same seed, same bundle.
    TempDir d2;
    REQUIRE(call({"design", "--mode", "mosaic", "-m", "2", "-L", "5", "--lengths", "7,7,6,6,5", "--seed", "1", "-o",
                  d2.path.string()}) == 0);
    CHECK(read_json(d2.path / "design.json")["ledger"] == dj["ledger"]);
}

TEST_CASE("simulate, identify and gain on designed data") {
    TempDir d;
    const std::string dir = d.path.string();
    REQUIRE(call({"design", "--mode", "cumulative", "-m", "2", "-L", "5", "--lengths", "14,14,14", "-o", dir}) == 0);
    REQUIRE(call({"simulate", "--system", "batch_reactor", "--inputs", (d.path / "manifest.json").string(), "-o",
                  dir}) == 0);
    const std::string recs = (d.path / "records.json").string();
    REQUIRE(call({"identify", "ls", "--mode", "cumulative", "--records", recs, "--system", "batch_reactor", "-o",
                  dir}) == 0);
    CHECK(read_json(d.path / "identify_ls.json")["unique"].get<bool>());
    REQUIRE(call({"gain", "--mode", "cumulative", "--records", recs, "--system", "batch_reactor", "-o", dir}) == 0);
    const json g = read_json(d.path / "gain.json");
    CHECK(g["success"].get<bool>());
    CHECK(g["radius"].get<double>() < 1.0);
}

TEST_CASE("exit codes") {
    TempDir d;
    const std::string dir = d.path.string();
    CHECK(call({"design", "--mode", "mosaic", "-m", "2", "-L", "5", "--lengths", "7,6,6,5,5", "-o", dir}) ==
          cpekit::cli::kExitInput);
    CHECK(call({"no-such-command"}) == cpekit::cli::kExitInput);
    CHECK(call({"bench", "flops", "-m", "2", "-L", "5", "--lengths", "7,7,6,6,5", "--trial-columns", "10,10", "-o",
                dir}) == 0);
    const json b = read_json(d.path / "bench_flops.json");
    CHECK(b.dump().find("2000") != std::string::npos);
    CHECK(b.dump().find("1100") != std::string::npos);
    std::string text;
    CHECK(call({"repro", "design-example", "-o", dir}, &text) == 0);
    CHECK(fs::exists(d.path / "repro_design_example.json"));
    for (const auto& e : fs::directory_iterator(d.path))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}
