#include "fracmhd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"

#include "fracmhd/decay_lab.hpp"
#include "fracmhd/exponent_engine.hpp"
#include "fracmhd/mild_solver.hpp"
#include "fracmhd/solenoidal.hpp"
#include "fracmhd/spectral_core.hpp"
#include "fracmhd/tabular.hpp"

namespace fracmhd {

namespace {

enum class KeyType { Integer, Number, Text, Flag, ScenarioName };

const std::map<std::string, KeyType>& schema_keys() {
    static const std::map<std::string, KeyType> keys = {
        {"schema", KeyType::Integer},     {"scenario", KeyType::ScenarioName},
        {"alpha", KeyType::Number},       {"beta", KeyType::Number},
        {"gamma", KeyType::Number},       {"N", KeyType::Integer},
        {"L", KeyType::Number},           {"n", KeyType::Integer},
        {"dt", KeyType::Number},          {"T", KeyType::Number},
        {"seed", KeyType::Integer},       {"window_lo", KeyType::Number},
        {"window_hi", KeyType::Number},   {"output", KeyType::Text},
        {"amplitude", KeyType::Number},   {"max_steps", KeyType::Integer},
        {"nonlinear", KeyType::Flag},     {"sweep_scenario", KeyType::ScenarioName},
    };
    return keys;
}

const std::map<std::string, std::string>& defaults_for(Scenario s) {
    static const std::map<Scenario, std::map<std::string, std::string>> table = {
        {Scenario::Bootstrap, {{"alpha", "1"}, {"beta", "1"}, {"max_steps", "200"}}},
        {Scenario::SemigroupDecay, {{"alpha", "1"}, {"window_lo", "100"}, {"window_hi", "10000"}}},
        {Scenario::Simulate,
         {{"alpha", "1"}, {"beta", "1"}, {"N", "16"}, {"L", "6.283185307179586"}, {"n", "1000"},
          {"dt", "0.001"}, {"T", "1"}, {"seed", "1"}, {"amplitude", "1"}, {"nonlinear", "true"}}},
        {Scenario::Verify, {{"alpha", "1"}, {"beta", "1"}, {"N", "16"}, {"seed", "1"}}},
        {Scenario::Sweep, {}},
    };
    return table.at(s);
}

void check_value(KeyType type, const std::string& v, int line, int column) {
    try {
        switch (type) {
            case KeyType::Integer: parse_long(v, line); break;
            case KeyType::Number: parse_rational(v); break;
            case KeyType::Flag:
                if (v != "true" && v != "false") throw std::invalid_argument("expected true or false");
                break;
            case KeyType::ScenarioName:
                if (!scenario_from_name(v)) throw std::invalid_argument("unknown scenario '" + v + "'");
                break;
            case KeyType::Text: break;
        }
    } catch (const std::exception& e) {
        throw ConfigError(line, column, std::string("bad value '") + v + "': " + e.what());
    }
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

Rational rational_of(const RunConfig& c, const std::string& key) { return parse_rational(c.text(key)); }

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

void check_exponent_key(const RunConfig& c, const std::string& key) {
    const Rational v = rational_of(c, key);
    require(v > Rational(3, 4) && v <= 1,
            key + " = " + c.text(key) + " is outside the admissible range 3/4 < " + key + " <= 1");
}

void check_gamma(const RunConfig& c, const std::string& beta_key) {
    const Rational a = rational_of(c, "alpha");
    const Rational b = rational_of(c, beta_key);
    if (auto err = decay_hypothesis_error<Rational>(a, b, rational_of(c, "gamma"))) {
        throw ValidationError("gamma = " + c.text("gamma") + " is not admissible: " + *err);
    }
}

void validate(const RunConfig& c) {
    require(c.integer("schema") == 1, "schema must be 1");
    for (const auto& [key, value] : c.entries()) {
        if (c.scenario() != Scenario::Sweep) {
            require(value.items.size() == 1, "key '" + key + "' takes a single value outside sweeps");
        }
    }
    switch (c.scenario()) {
        case Scenario::Bootstrap:
            require(c.has("gamma"), "bootstrap needs gamma");
            check_exponent_key(c, "alpha");
            check_exponent_key(c, "beta");
            check_gamma(c, "beta");
            require(c.integer("max_steps") >= 1, "max_steps must be >= 1");
            break;
        case Scenario::SemigroupDecay:
            require(c.has("gamma"), "semigroup-decay needs gamma");
            check_exponent_key(c, "alpha");
            check_gamma(c, "alpha");
            require(c.number("window_lo") > 0.0 && c.number("window_hi") > c.number("window_lo"),
                    "window needs 0 < window_lo < window_hi");
            break;
        case Scenario::Simulate: {
            check_exponent_key(c, "alpha");
            check_exponent_key(c, "beta");
            if (c.has("gamma")) check_gamma(c, "beta");
            const long n_grid = c.integer("N");
            require(n_grid >= 4 && n_grid % 2 == 0 && n_grid <= 256, "N must be even with 4 <= N <= 256");
            require(c.number("L") > 0.0, "L must be positive");
            require(c.integer("n") >= 1, "mollifier index n must be >= 1");
            require(c.number("dt") > 0.0 && c.number("dt") < c.number("T"), "time step needs 0 < dt < T");
            require(c.number("amplitude") >= 0.0, "amplitude must be nonnegative");
            require(c.integer("seed") >= 0, "seed must be nonnegative");
            break;
        }
        case Scenario::Verify: {
            check_exponent_key(c, "alpha");
            check_exponent_key(c, "beta");
            const long n_grid = c.integer("N");
            require(n_grid >= 4 && n_grid % 2 == 0 && n_grid <= 64, "N must be even with 4 <= N <= 64");
            require(c.integer("seed") >= 0, "seed must be nonnegative");
            break;
        }
        case Scenario::Sweep:
            require(c.has("sweep_scenario"), "sweep needs sweep_scenario");
            require(c.text("sweep_scenario") != "sweep", "sweeps cannot nest");
            break;
    }
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::vector<std::pair<std::string, std::string>> summary;
    std::vector<std::pair<std::string, std::string>> artifacts;  ///< name, csv content

    void add(const std::string& k, const std::string& v) { summary.emplace_back(k, v); }
    void add(const std::string& k, double v) { summary.emplace_back(k, format_double(v)); }
};

template <class Fn>
std::string render(Fn&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

Outcome run_bootstrap_scenario(const RunConfig& c) {
    const Rational a = rational_of(c, "alpha");
    const Rational b = rational_of(c, "beta");
    const Rational g = rational_of(c, "gamma");
    const int steps = static_cast<int>(c.integer("max_steps"));
    const auto trace = run_bootstrap(BootstrapInput<Rational>(a, b, g, steps));
    const auto fast = run_bootstrap(BootstrapInput<double>(to_double(a), to_double(b), to_double(g), steps));
    const auto o1 = inequality_audit_o1(a, b);
    const bool agree = fast.n0 == trace.n0 && fast.outcome == trace.outcome;

    Outcome out;
    out.add("outcome", outcome_name(trace.outcome));
    out.add("n0", trace.n0 ? std::to_string(*trace.n0) : "none");
    out.add("limit", to_double(trace.limit.value));
    out.add("limit_exact", to_string(trace.limit.value));
    out.add("branch", branch_name(trace.limit.branch));
    out.add("limit_class", limit_class_name(trace.limit.classification));
    for (int i = 0; i < 3; ++i) out.add("o1_margin_" + std::to_string(i + 1), to_string(o1.margins[i]));
    out.add("o1_holds", o1.holds ? "true" : "false");
    out.add("double_path_agrees", agree ? "true" : "false");
    out.pass = trace.outcome != BootstrapOutcome::NoTermination && o1.holds && agree;
    out.artifacts.emplace_back("trace", render([&](std::ostream& os) { write_trace(os, trace); }));
    return out;
}

Outcome run_semigroup_scenario(const RunConfig& c) {
    const FractionalExponent kappa(c.number("alpha"));
    const double gamma = c.number("gamma");
    const SpectralMeasure measure = SpectralMeasure::power_law(2.0 * kappa.value() * gamma - 1.0, 1.0);
    const auto times = log_grid(c.number("window_lo"), c.number("window_hi"), 41);
    const DecayCurve curve = linear_decay_curve(measure, kappa, times);
    const SlopeFit fit = fit_loglog_slope(curve, times.front(), times.back());
    const SmoothingAudit audit = audit_smoothing_bounds(measure, kappa, times);

    Outcome out;
    out.add("expected", gamma);
    out.add("fitted", fit.gamma_hat);
    out.add("residual", fit.residual);
    out.add("max_contraction_ratio", audit.max_contraction_ratio);
    out.add("max_smoothing_ratio", audit.max_smoothing_ratio);
    out.add("max_gradient_ratio", audit.max_gradient_ratio);
    out.add("smoothing_violations", std::to_string(audit.violations.size()));
    out.pass = std::abs(fit.gamma_hat - gamma) <= 0.01 && audit.passed();
    out.artifacts.emplace_back("curve", render([&](std::ostream& os) { write_curve(os, curve); }));
    out.artifacts.emplace_back("measure", render([&](std::ostream& os) { write_measure(os, measure); }));
    out.artifacts.emplace_back("summary", render([&](std::ostream& os) {
        os << "alpha,gamma,expected,fitted,residual,window_lo,window_hi,pass\n"
           << format_double(kappa.value()) << ',' << format_double(gamma) << ',' << format_double(gamma) << ','
           << format_double(fit.gamma_hat) << ',' << format_double(fit.residual) << ','
           << format_double(times.front()) << ',' << format_double(times.back()) << ','
           << (out.pass ? "true" : "false") << '\n';
    }));
    return out;
}

SolenoidalField normalized(SolenoidalField f, double norm) {
    const double l2 = l2_norm(f);
    return l2 > 0.0 ? f.scaled(norm / l2) : SolenoidalField::zero(f.grid());
}

Outcome run_simulate_scenario(const RunConfig& c) {
    const WaveGrid grid(static_cast<int>(c.integer("N")), c.number("L"));
    SolverOptions opts;
    opts.nonlinear = c.flag("nonlinear");
    const SolverParams params(c.number("alpha"), c.number("beta"), c.integer("n"), c.number("dt"),
                              c.number("T"), opts);
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    const double amplitude = c.number("amplitude");
    Outcome out;

    if (c.has("gamma")) {
        const double gamma = c.number("gamma");
        const Window w = algebraic_window(grid, params.alpha());
        DecayExperimentOptions dopt;
        const double energy = std::max(amplitude * amplitude, 1e-300);
        const auto u = calibrated_field(grid, gamma, params.alpha(), w, dopt.fit_samples, energy, seed);
        const auto b = calibrated_field(grid, gamma, params.beta(), w, dopt.fit_samples, energy, seed + 1);
        const DecayReport r = nonlinear_decay_experiment(u.field, b.field, params, {gamma, params.alpha().value()}, dopt);
        out.add("expected", r.expected);
        out.add("fitted", r.fit.gamma_hat);
        out.add("residual", r.fit.residual);
        out.add("fitted_max_norm", r.fit_max_norm.gamma_hat);
        out.add("fitted_snapshots", r.fit_snapshots.gamma_hat);
        out.add("control_fitted", r.control_fit->gamma_hat);
        out.add("linear_prediction", r.linear_prediction_fit.gamma_hat);
        out.add("window_lo", r.window.lo);
        out.add("window_hi", r.window.hi);
        out.add("con1_constant", r.con1.constant);
        out.add("caveat", r.caveat);
        out.pass = r.pass;
        out.artifacts.emplace_back("ledger", render([&](std::ostream& os) { write_ledger(os, r.ledger); }));
        out.artifacts.emplace_back("curve", render([&](std::ostream& os) { write_curve(os, r.curve); }));
        out.artifacts.emplace_back("control_curve", render([&](std::ostream& os) { write_curve(os, *r.control_curve); }));
        out.artifacts.emplace_back("decay_summary", render([&](std::ostream& os) {
            write_decay_summary(os, params.alpha().value(), params.beta().value(), r);
        }));
        return out;
    }

    const double k_cut = 3.0 * grid.fundamental();
    const SolenoidalField u = normalized(random_solenoidal(grid, seed, -1.0, k_cut), amplitude);
    const SolenoidalField b = normalized(random_solenoidal(grid, seed + 1, -1.0, k_cut), amplitude);
    const RunResult r = run_with_ledger(u, b, params);
    const auto& last = r.ledger.rows().back();
    out.add("initial_energy", r.initial_energy);
    out.add("mollified_energy", r.mollified_energy);
    out.add("final_energy", last.total());
    out.add("dissipation", last.dissipation_cum);
    out.add("max_energy", r.max_energy);
    out.add("steps", std::to_string(r.steps));
    out.pass = r.max_energy <= r.initial_energy;
    out.artifacts.emplace_back("ledger", render([&](std::ostream& os) { write_ledger(os, r.ledger); }));
    out.artifacts.emplace_back("final_u", render([&](std::ostream& os) { write_field(os, r.final_state.u); }));
    out.artifacts.emplace_back("final_B", render([&](std::ostream& os) { write_field(os, r.final_state.B); }));
    return out;
}

Outcome run_verify_scenario(const RunConfig& c) {
    const Rational a = rational_of(c, "alpha");
    const Rational b = rational_of(c, "beta");
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    std::mt19937_64 engine(seed);
    auto uniform = [&] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };
    Outcome out;
    std::ostringstream table;
    table << "check,value,threshold,pass\n";
    bool all = true;
    auto check = [&](const std::string& name, double value, double threshold, bool ok) {
        table << name << ',' << format_double(value) << ',' << format_double(threshold) << ','
              << (ok ? "true" : "false") << '\n';
        out.add(name, value);
        all = all && ok;
    };

    const auto o1 = inequality_audit_o1(a, b);
    check("o1_min_margin", to_double(std::min({o1.margins[0], o1.margins[1], o1.margins[2]})), 0.0, o1.holds);

    double worst_identity = 0.0;
    bool ordering = true;
    const double ad = to_double(a);
    const double bd = to_double(b);
    for (int i = 0; i < 200; ++i) {
        const double g = 0.5 * (1e-9 + (1.0 - 2e-9) * uniform());
        const auto rep = ordering_audit(g, ad, bd);
        worst_identity = std::max(worst_identity, rep.max_identity_error());
        ordering = ordering && rep.ordering_holds;
    }
    check("ordering_identity_error", worst_identity, 1e-12, worst_identity <= 1e-12 && ordering);

    const FractionalExponent kappa(ad);
    const auto times = log_grid(1e-3, 1e3, 61);
    const auto audit = audit_smoothing_bounds(SpectralMeasure::power_law(-0.5, 1e4), kappa, times);
    check("smoothing_max_ratio", std::max(audit.max_contraction_ratio, audit.max_smoothing_ratio), 1.0,
          audit.passed());

    const WaveGrid grid(static_cast<int>(c.integer("N")), 2.0 * std::numbers::pi);
    double worst_cancel = 0.0;
    double worst_div = 0.0;
    for (std::uint64_t k = 0; k < 5; ++k) {
        const MhdState s(0.0, random_solenoidal(grid, seed + 2 * k, -1.0, 1e9),
                         random_solenoidal(grid, seed + 2 * k + 1, -1.0, 1e9));
        const NonlinearTerms nl = rhs_nonlinear(s, 1000);
        worst_cancel = std::max(worst_cancel, std::abs(inner(nl.du, s.u) + inner(nl.dB, s.B)) / s.energy());
        worst_div = std::max({worst_div, nl.du.max_divergence_ratio(), nl.dB.max_divergence_ratio()});
    }
    check("nonlinear_cancellation", worst_cancel, 1e-10, worst_cancel <= 1e-10);
    check("divergence_ratio", worst_div, 1e-12, worst_div <= 1e-12);

    out.pass = all;
    out.artifacts.emplace_back("checks", table.str());
    return out;
}

Outcome run_scenario(const RunConfig& c) {
    switch (c.scenario()) {
        case Scenario::Bootstrap: return run_bootstrap_scenario(c);
        case Scenario::SemigroupDecay: return run_semigroup_scenario(c);
        case Scenario::Simulate: return run_simulate_scenario(c);
        case Scenario::Verify: return run_verify_scenario(c);
        case Scenario::Sweep: break;
    }
    throw std::invalid_argument("sweep configs go through sweep(), not dispatch()");
}

}  // namespace

const char* scenario_name(Scenario s) noexcept {
    switch (s) {
        case Scenario::Bootstrap: return "bootstrap";
        case Scenario::SemigroupDecay: return "semigroup-decay";
        case Scenario::Simulate: return "simulate";
        case Scenario::Verify: return "verify";
        case Scenario::Sweep: return "sweep";
    }
    return "?";
}

std::optional<Scenario> scenario_from_name(std::string_view name) noexcept {
    for (auto s : {Scenario::Bootstrap, Scenario::SemigroupDecay, Scenario::Simulate, Scenario::Verify,
                   Scenario::Sweep}) {
        if (name == scenario_name(s)) return s;
    }
    return std::nullopt;
}

ConfigError::ConfigError(int line, int column, const std::string& message)
    : std::runtime_error("config line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + message),
      line_(line), column_(column) {}

const std::string& RunConfig::text(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ValidationError("missing key '" + key + "'");
    if (it->second.items.size() != 1) throw ValidationError("key '" + key + "' holds a list");
    return it->second.items.front();
}

double RunConfig::number(const std::string& key) const { return to_double(parse_rational(text(key))); }
long RunConfig::integer(const std::string& key) const { return parse_long(text(key)); }
bool RunConfig::flag(const std::string& key) const { return text(key) == "true"; }

RunConfig RunConfig::with(const std::string& key, const std::string& value) const {
    const auto type = schema_keys().find(key);
    if (type == schema_keys().end()) throw ConfigError(0, 0, "unknown key '" + key + "'");
    check_value(type->second, value, 0, 0);
    RunConfig copy = *this;
    copy.entries_[key] = ConfigValue{{value}, 0, 0};
    if (scenario_ != Scenario::Sweep) validate(copy);
    return copy;
}

std::string RunConfig::canonical() const {
    std::string out;
    for (const auto& [key, value] : entries_) out += key + "=" + join(value.items) + "\n";
    return out;
}

std::string RunConfig::run_id() const { return sha256_hex(canonical()).substr(0, 16); }

RunConfig parse_config(std::string_view text, std::optional<Scenario> fallback) {
    RunConfig cfg;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = raw.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const int key_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
        if (eq == std::string::npos) throw ConfigError(line_no, key_col, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(line_no, key_col, "missing key before '='");
        const auto type = schema_keys().find(key);
        if (type == schema_keys().end()) throw ConfigError(line_no, key_col, "unknown key '" + key + "'");
        if (cfg.entries_.count(key)) throw ConfigError(line_no, key_col, "duplicate key '" + key + "'");
        const std::string rhs = line.substr(eq + 1);
        const auto first = rhs.find_first_not_of(" \t");
        const int value_col = static_cast<int>(eq + 2 + (first == std::string::npos ? 0 : first));
        ConfigValue value{split_csv(rhs), line_no, value_col};
        for (const auto& item : value.items) {
            if (item.empty()) throw ConfigError(line_no, value_col, "empty value for '" + key + "'");
            check_value(type->second, item, line_no, value_col);
        }
        cfg.entries_[key] = std::move(value);
    }

    if (cfg.entries_.count("scenario")) {
        const auto& v = cfg.entries_.at("scenario");
        if (v.items.size() != 1) throw ConfigError(v.line, v.column, "scenario takes a single value");
        cfg.scenario_ = *scenario_from_name(v.items.front());
        if (fallback && *fallback != cfg.scenario_) {
            throw ConfigError(v.line, v.column, std::string("config is for scenario '") +
                                                    scenario_name(cfg.scenario_) + "', not '" +
                                                    scenario_name(*fallback) + "'");
        }
    } else if (fallback) {
        cfg.scenario_ = *fallback;
        cfg.entries_["scenario"] = ConfigValue{{scenario_name(*fallback)}, 0, 0};
    } else {
        throw ConfigError(line_no + 1, 1, "missing 'scenario'");
    }
    if (!cfg.entries_.count("schema")) cfg.entries_["schema"] = ConfigValue{{"1"}, 0, 0};
    for (const auto& [key, value] : defaults_for(cfg.scenario_)) {
        if (!cfg.entries_.count(key)) cfg.entries_[key] = ConfigValue{{value}, 0, 0};
    }
    validate(cfg);
    return cfg;
}

std::vector<RunConfig> expand_sweep(const RunConfig& sweep) {
    if (sweep.scenario() != Scenario::Sweep) return {sweep};
    const Scenario child = *scenario_from_name(sweep.text("sweep_scenario"));
    std::vector<RunConfig> out(1);
    out[0].scenario_ = child;
    for (const auto& [key, value] : sweep.entries()) {
        if (key == "sweep_scenario") continue;
        std::vector<RunConfig> next;
        for (const auto& partial : out) {
            for (const auto& item : value.items) {
                RunConfig c = partial;
                c.entries_[key] = ConfigValue{{item}, value.line, value.column};
                next.push_back(std::move(c));
            }
        }
        out = std::move(next);
    }
    for (auto& c : out) {
        c.entries_["scenario"] = ConfigValue{{scenario_name(child)}, 0, 0};
        for (const auto& [key, value] : defaults_for(child)) {
            if (!c.entries_.count(key)) c.entries_[key] = ConfigValue{{value}, 0, 0};
        }
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string RunRecord::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["run_id"] = run_id;
    j["timestamp"] = timestamp;
    j["scenario"] = scenario_name(scenario);
    j["config"] = config;
    j["status"] = ok ? "ok" : "failed";
    j["pass"] = pass;
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : summary) s[k] = v;
    j["summary"] = s;
    j["artifacts"] = artifacts;
    j["result_hash"] = result_hash;
    if (!error.empty()) j["error"] = error;
    return j.dump();
}

Registry::Registry(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void Registry::append(const RunRecord& record) {
    const std::string line = record.to_json() + "\n";
    std::lock_guard lock(mutex_);
    std::ofstream os(path_, std::ios::app | std::ios::binary);
    if (!os) throw std::runtime_error("cannot open registry " + path_.string());
    os << line;
    os.flush();
}

RunRecord dispatch(const RunConfig& config, const std::filesystem::path& out, Registry& registry) {
    RunRecord rec;
    rec.run_id = config.run_id();
    rec.timestamp = utc_timestamp();
    rec.scenario = config.scenario();
    for (const auto& [key, value] : config.entries()) rec.config[key] = join(value.items);

    std::string hashed;
    try {
        validate(config);
        const Outcome o = run_scenario(config);
        const auto dir = out / rec.run_id;
        std::filesystem::create_directories(dir);
        for (const auto& [name, content] : o.artifacts) {
            std::ofstream os(dir / (name + ".csv"), std::ios::binary | std::ios::trunc);
            os << content;
            if (!os) throw std::runtime_error("cannot write artifact " + name);
            rec.artifacts.push_back(rec.run_id + "/" + name + ".csv");
        }
        rec.ok = true;
        rec.pass = o.pass;
        rec.summary = o.summary;
        for (const auto& [k, v] : o.summary) hashed += k + "=" + v + "\n";
        for (const auto& [name, content] : o.artifacts) hashed += "--" + name + "\n" + content;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.pass = false;
        rec.error = e.what();
        hashed = "error=" + rec.error + "\n";
    }
    rec.result_hash = sha256_hex(hashed);
    registry.append(rec);
    return rec;
}

std::vector<RunRecord> sweep(const std::vector<RunConfig>& configs, int jobs,
                             const std::filesystem::path& out, Registry& registry) {
    if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
    std::vector<RunRecord> records(configs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            records[i] = dispatch(configs[i], out, registry);
        }
    };
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), configs.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return records;
}

}  // namespace fracmhd
