#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "fracmhd/harness.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<long> seed;
    int jobs = 1;
};

int run(fracmhd::Scenario scenario, const Flags& flags) {
    std::ifstream in(flags.config);
    if (!in) {
        std::cerr << "error: cannot read config " << flags.config << '\n';
        return 2;
    }
    std::stringstream text;
    text << in.rdbuf();

    fracmhd::RunConfig cfg;
    try {
        cfg = fracmhd::parse_config(text.str(), scenario);
        if (flags.seed) cfg = cfg.with("seed", std::to_string(*flags.seed));
    } catch (const std::exception& e) {
        std::cerr << "error: " << flags.config << ": " << e.what() << '\n';
        return 2;
    }

    std::filesystem::path out = flags.out;
    if (out.empty()) out = cfg.has("output") ? cfg.text("output") : "runs";
    fracmhd::Registry registry(out / "registry.jsonl");

    const auto configs = fracmhd::expand_sweep(cfg);
    const auto records = fracmhd::sweep(configs, flags.jobs, out, registry);
    bool all_pass = true;
    for (const auto& r : records) {
        std::cout << r.to_json() << '\n';
        if (!r.ok) std::cerr << "run " << r.run_id << " failed: " << r.error << '\n';
        all_pass = all_pass && r.ok && r.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral laboratory for fractional MHD decay and bootstrap exponents"};
    app.require_subcommand(1);

    Flags flags;
    long seed = 0;
    const std::pair<const char*, fracmhd::Scenario> commands[] = {
        {"bootstrap", fracmhd::Scenario::Bootstrap},
        {"semigroup-decay", fracmhd::Scenario::SemigroupDecay},
        {"simulate", fracmhd::Scenario::Simulate},
        {"verify", fracmhd::Scenario::Verify},
        {"sweep", fracmhd::Scenario::Sweep},
    };
    std::optional<fracmhd::Scenario> chosen;
    for (const auto& [name, scenario] : commands) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " scenario");
        sub->add_option("--config", flags.config, "plain-text config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory (default: config 'output' or ./runs)");
        sub->add_option("--seed", seed, "override the config seed")->check(CLI::NonNegativeNumber);
        sub->add_option("--jobs", flags.jobs, "concurrent runs for sweeps")->check(CLI::PositiveNumber);
        sub->callback([&chosen, scenario = scenario] { chosen = scenario; });
    }
    CLI11_PARSE(app, argc, argv);
    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--seed") > 0) flags.seed = seed;
    }
    return run(*chosen, flags);
}
