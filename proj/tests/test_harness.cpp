#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <unistd.h>

#include "json.hpp"

#include "fracmhd/harness.hpp"

using namespace fracmhd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path p = fs::temp_directory_path() /
                       ("fracmhd_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> registry_lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_SUITE("cli_harness") {

TEST_CASE("SHA-256 digest") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("scenario names") {
    for (auto s : {Scenario::Bootstrap, Scenario::SemigroupDecay, Scenario::Simulate, Scenario::Verify,
                   Scenario::Sweep}) {
        CHECK(scenario_from_name(scenario_name(s)) == s);
    }
    CHECK_FALSE(scenario_from_name("simulation").has_value());
}

TEST_CASE("defaults are filled in") {
    const auto c = parse_config("scenario = bootstrap\ngamma = 0.3\n");
    CHECK(c.scenario() == Scenario::Bootstrap);
    CHECK(c.text("alpha") == "1");
    CHECK(c.text("beta") == "1");
    CHECK(c.integer("max_steps") == 200);
    CHECK(c.integer("schema") == 1);
    CHECK(c.number("gamma") == 0.3);
    CHECK(c.entries().at("gamma").line == 2);
    CHECK(c.entries().at("alpha").line == 0);
}

TEST_CASE("run id ignores layout and comments") {
    const auto a = parse_config("scenario = bootstrap\ngamma = 0.3\nalpha = 0.9\n");
    const auto b = parse_config("# header\nalpha=0.9   # exponent\n\n  gamma =0.3\nscenario=bootstrap\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.run_id() == b.run_id());
    CHECK(a.run_id().size() == 16);
    CHECK(a.run_id() != parse_config("scenario = bootstrap\ngamma = 0.31\nalpha = 0.9\n").run_id());
}

TEST_CASE("fallback scenario") {
    const auto c = parse_config("gamma = 0.3\n", Scenario::Bootstrap);
    CHECK(c.scenario() == Scenario::Bootstrap);
    CHECK_THROWS_AS(parse_config("scenario = verify\n", Scenario::Bootstrap), ConfigError);
    CHECK_THROWS_AS(parse_config("gamma = 0.3\n"), ConfigError);
}

TEST_CASE("unknown key reports its position") {
    try {
        parse_config("scenario = bootstrap\ngamma = 0.3\n  colour = 3\n");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() == 3);
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
}

TEST_CASE("malformed values report their position") {
    try {
        parse_config("scenario = bootstrap\nalpha =  x1\ngamma = 0.3\n");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 10);
    }
    CHECK_THROWS_AS(parse_config("scenario = bootstrap\ngamma 0.3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = bootstrap\ngamma = 0.3\ngamma = 0.2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = simulate\nnonlinear = yes\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("scenario = simulation\n"), ConfigError);
}

TEST_CASE("out-of-range parameters are rejected") {
    CHECK_THROWS_AS(parse_config("scenario = bootstrap\nalpha = 0.7\ngamma = 0.3\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("scenario = bootstrap\ngamma = 0.5\n"), ValidationError);
    CHECK_NOTHROW(parse_config("scenario = bootstrap\nalpha = 0.9\nbeta = 0.9\ngamma = 0.5\n"));
    CHECK_THROWS_AS(parse_config("scenario = simulate\nN = 15\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("scenario = simulate\ndt = 2\nT = 1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("scenario = bootstrap\ngamma = 0.3, 0.4\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("scenario = sweep\nalpha = 0.9\n"), ValidationError);
    CHECK_THROWS_AS(parse_config("scenario = sweep\nsweep_scenario = sweep\n"), ValidationError);
}

TEST_CASE("overrides are validated") {
    const auto c = parse_config("scenario = simulate\n");
    CHECK(c.with("seed", "9").integer("seed") == 9);
    CHECK(c.with("seed", "9").run_id() != c.run_id());
    CHECK_THROWS_AS(c.with("alpha", "0.5"), ValidationError);
    CHECK_THROWS_AS(c.with("colour", "1"), ConfigError);
}

TEST_CASE("sweep expansion") {
    const auto s = parse_config(
        "scenario = sweep\nsweep_scenario = bootstrap\nalpha = 0.8, 0.9, 1\ngamma = 0.25, 0.45\n");
    const auto children = expand_sweep(s);
    REQUIRE(children.size() == 6);
    std::set<std::string> ids;
    for (const auto& c : children) {
        CHECK(c.scenario() == Scenario::Bootstrap);
        CHECK(c.integer("max_steps") == 200);
        ids.insert(c.run_id());
    }
    CHECK(ids.size() == 6);
    CHECK(children[0].text("alpha") == "0.8");
    CHECK(children[0].text("gamma") == "0.25");
    CHECK(children[1].text("gamma") == "0.45");
    const auto single = parse_config("scenario = bootstrap\ngamma = 0.3\n");
    CHECK(expand_sweep(single).size() == 1);
}

TEST_CASE("bootstrap dispatch writes artifacts and a registry line") {
    const auto dir = scratch_dir("dispatch");
    Registry registry(dir / "registry.jsonl");
    const auto c = parse_config("scenario = bootstrap\nalpha = 0.9\nbeta = 0.85\ngamma = 0.4\n");
    const auto rec = dispatch(c, dir, registry);
    CHECK(rec.ok);
    CHECK(rec.pass);
    CHECK(rec.run_id == c.run_id());
    REQUIRE(rec.artifacts.size() == 1);
    CHECK(fs::exists(dir / rec.artifacts[0]));
    const auto lines = registry_lines(dir / "registry.jsonl");
    REQUIRE(lines.size() == 1);
    const auto j = nlohmann::json::parse(lines[0]);
    CHECK(j["run_id"] == rec.run_id);
    CHECK(j["status"] == "ok");
    CHECK(j["scenario"] == "bootstrap");
    CHECK(j["result_hash"] == rec.result_hash);
    CHECK(j["config"]["alpha"] == "0.9");
    fs::remove_all(dir);
}

TEST_CASE("result hashes are reproducible") {
    const auto dir = scratch_dir("hash");
    Registry registry(dir / "registry.jsonl");
    for (const char* text : {"scenario = bootstrap\nalpha = 0.8\ngamma = 0.45\n",
                             "scenario = semigroup-decay\nalpha = 0.9\ngamma = 0.35\n",
                             "scenario = simulate\nN = 8\nT = 0.05\ndt = 0.01\nn = 10\n"}) {
        const auto c = parse_config(text);
        const auto a = dispatch(c, dir, registry);
        const auto b = dispatch(c, dir, registry);
        CHECK(a.ok);
        CHECK(a.result_hash == b.result_hash);
        CHECK(a.timestamp.size() == 20);
    }
    CHECK(registry_lines(dir / "registry.jsonl").size() == 6);
    fs::remove_all(dir);
}

TEST_CASE("semigroup and verify scenarios pass") {
    const auto dir = scratch_dir("scenarios");
    Registry registry(dir / "registry.jsonl");
    const auto s = dispatch(parse_config("scenario = semigroup-decay\nalpha = 0.8\ngamma = 0.3\n"), dir, registry);
    CHECK(s.ok);
    CHECK(s.pass);
    CHECK(s.artifacts.size() == 3);
    const auto v = dispatch(parse_config("scenario = verify\nN = 8\nalpha = 0.9\nbeta = 0.95\n"), dir, registry);
    CHECK(v.ok);
    CHECK(v.pass);
    fs::remove_all(dir);
}

TEST_CASE("simulate writes ledger and final fields") {
    const auto dir = scratch_dir("simulate");
    Registry registry(dir / "registry.jsonl");
    const auto r = dispatch(parse_config("scenario = simulate\nN = 8\nT = 0.05\ndt = 0.01\nn = 10\n"), dir, registry);
    CHECK(r.ok);
    CHECK(r.pass);
    std::set<std::string> names;
    for (const auto& a : r.artifacts) names.insert(fs::path(a).stem().string());
    CHECK(names == std::set<std::string>{"ledger", "final_u", "final_B"});
    fs::remove_all(dir);
}

TEST_CASE("sweep isolates failures") {
    const auto dir = scratch_dir("isolation");
    Registry registry(dir / "registry.jsonl");
    const auto s = parse_config("scenario = sweep\nsweep_scenario = bootstrap\nalpha = 0.7, 0.9\ngamma = 0.3\n");
    const auto records = sweep(expand_sweep(s), 2, dir, registry);
    REQUIRE(records.size() == 2);
    CHECK_FALSE(records[0].ok);
    CHECK(records[0].error.find("alpha") != std::string::npos);
    CHECK(records[1].ok);
    CHECK(records[1].pass);
    CHECK(registry_lines(dir / "registry.jsonl").size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("sweep results do not depend on the job count") {
    const auto s = parse_config(
        "scenario = sweep\nsweep_scenario = bootstrap\nalpha = 0.8, 0.9, 1\nbeta = 0.85, 1\ngamma = 0.25, 0.45\n");
    const auto children = expand_sweep(s);
    REQUIRE(children.size() == 12);
    std::vector<std::vector<std::string>> hashes;
    for (int jobs : {1, 4}) {
        const auto dir = scratch_dir("jobs");
        Registry registry(dir / "registry.jsonl");
        const auto records = sweep(children, jobs, dir, registry);
        std::vector<std::string> h;
        for (const auto& r : records) h.push_back(r.run_id + ":" + r.result_hash);
        hashes.push_back(h);
        CHECK(registry_lines(dir / "registry.jsonl").size() == 12);
        fs::remove_all(dir);
    }
    CHECK(hashes[0] == hashes[1]);
    const auto dir = scratch_dir("nojobs");
    Registry registry(dir / "registry.jsonl");
    CHECK_THROWS(sweep(children, 0, dir, registry));
    fs::remove_all(dir);
}

}  // TEST_SUITE
