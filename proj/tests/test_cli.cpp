#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bsdegame/cli.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bsdegame;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("bsdegame_cli_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

struct Result {
    int status;
    std::string out, err;
};

Result run(const std::string& command, cli::RunOverrides o) {
    std::ostringstream out, err;
    const int status = cli::run(command, o, out, err);
    return {status, out.str(), err.str()};
}

cli::RunOverrides with(const std::string& config, const fs::path& out) {
    cli::RunOverrides o;
    o.config_path = config;
    o.out_dir = out.string();
    return o;
}

const char* kBilinear = R"({
  "model": {"family": "bilinear-1d"},
  "partition": {"steps": 50},
  "grid": {"lo": [-5.0], "hi": [5.0], "nodes": [201]},
  "start_state": [0.0],
  "epsilon": 0.05,
  "paths": 2000,
  "seed": 11,
  "deviate": {"coarse_cells": 5, "paths": 200}
})";

const char* kControlFree = R"({
  "model": {"family": "control-free"},
  "partition": {"steps": 10},
  "grid": {"lo": [-4.0], "hi": [4.0], "nodes": [41]}
})";

}  // namespace

TEST_CASE("validate on the control-free fixture") {
    TempDir dir;
    const auto cfg = dir.write("cf.json", kControlFree);
    const Result r = run("validate", with(cfg, dir.path / "out"));
    CHECK(r.status == cli::kExitPass);
    CHECK(fs::exists(dir.path / "out" / "validation.json"));
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "out" / "manifest_validate.json"));
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    CHECK(manifest["exit_status"] == 0);
}

TEST_CASE("demo-fixedpoint needs no configuration") {
    TempDir dir;
    cli::RunOverrides o;
    o.out_dir = (dir.path / "demo").string();
    const Result r = run("demo-fixedpoint", o);
    CHECK(r.status == cli::kExitPass);
    CHECK(r.out.find("no fixed point") != std::string::npos);
}

TEST_CASE("isaacs exits 2 on the pennies fixture") {
    TempDir dir;
    const auto cfg = dir.write("p.json", R"({"model": {"family": "pennies"}, "grid": {"lo": [-4.0], "hi": [4.0], "nodes": [41]}})");
    CHECK(run("isaacs", with(cfg, dir.path / "out")).status == cli::kExitFail);
}

TEST_CASE("equilibrium, verify and deviate write reproducible artifacts") {
    TempDir dir;
    const auto cfg = dir.write("b.json", kBilinear);
    for (const std::string command : {"equilibrium", "verify", "deviate"}) {
        CAPTURE(command);
        CHECK(run(command, with(cfg, dir.path / "a")).status == cli::kExitPass);
        CHECK(run(command, with(cfg, dir.path / "b")).status == cli::kExitPass);
    }
    for (const std::string file : {"equilibrium.csv", "solution_1.csv", "solution_2.csv", "certificate.csv", "paths.csv",
                             "deviations.csv"}) {
        CAPTURE(file);
        const std::string a = slurp(dir.path / "a" / file);
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(dir.path / "b" / file));
    }
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "a" / "manifest_verify.json"));
    CHECK(manifest["seed"] == 11);
    CHECK(manifest["command"] == "verify");
}

TEST_CASE("seed override is recorded") {
    TempDir dir;
    const auto cfg = dir.write("cf.json", kControlFree);
    auto o = with(cfg, dir.path / "out");
    o.seed = 99;
    o.quiet = true;
    const Result r = run("validate", o);
    CHECK(r.status == cli::kExitPass);
    CHECK(r.out.empty());
    const auto manifest = nlohmann::json::parse(slurp(dir.path / "out" / "manifest_validate.json"));
    CHECK(manifest["seed"] == 99);
    CHECK(manifest["seed_override"] == true);
}

TEST_CASE("--out takes precedence over the environment and the config") {
    TempDir dir;
    std::string text = kControlFree;
    text.insert(text.rfind('}'), ", \"output_dir\": \"" + (dir.path / "from_config").string() + "\"");
    const auto cfg = dir.write("cf.json", text);
    cli::RunOverrides o;
    o.config_path = cfg;
    CHECK(run("validate", o).status == cli::kExitPass);
    CHECK(fs::exists(dir.path / "from_config" / "validation.json"));
    ::setenv("BSDEGAME_OUT", (dir.path / "from_env").string().c_str(), 1);
    CHECK(run("validate", o).status == cli::kExitPass);
    CHECK(fs::exists(dir.path / "from_env" / "validation.json"));
    o.out_dir = (dir.path / "from_flag").string();
    CHECK(run("validate", o).status == cli::kExitPass);
    CHECK(fs::exists(dir.path / "from_flag" / "validation.json"));
    ::unsetenv("BSDEGAME_OUT");
}

TEST_CASE("usage errors exit 1") {
    TempDir dir;
    const auto out = dir.path / "out";
    CHECK(run("nonsense", with(dir.write("cf.json", kControlFree), out)).status == cli::kExitUsage);
    CHECK(run("validate", cli::RunOverrides{}).status == cli::kExitUsage);
    CHECK(run("validate", with((dir.path / "missing.json").string(), out)).status == cli::kExitUsage);

    const Result syntax = run("validate", with(dir.write("bad.json", "{\n  \"model\": {\"family\": \n}"), out));
    CHECK(syntax.status == cli::kExitUsage);
    CHECK(syntax.err.find("line") != std::string::npos);

    const Result family = run("validate", with(dir.write("f.json", R"({"model": {"family": "nope"}})"), out));
    CHECK(family.status == cli::kExitUsage);
    CHECK(family.err.find("nope") != std::string::npos);

    const Result end = run("values", with(dir.write("e.json", R"({"model": {"family": "control-free"},
        "partition": {"end": 2.0}, "grid": {"lo": [-1.0], "hi": [1.0], "nodes": [5]}})"), out));
    CHECK(end.status == cli::kExitUsage);
    CHECK(end.err.find("partition.end") != std::string::npos);

    const Result steps = run("values", with(dir.write("s.json", R"({"model": {"family": "control-free"},
        "partition": {"steps": 0}, "grid": {"lo": [-1.0], "hi": [1.0], "nodes": [5]}})"), out));
    CHECK(steps.status == cli::kExitUsage);
}
