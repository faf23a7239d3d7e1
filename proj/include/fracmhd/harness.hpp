#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fracmhd {

enum class Scenario { Bootstrap, SemigroupDecay, Simulate, Verify, Sweep };

const char* scenario_name(Scenario s) noexcept;
std::optional<Scenario> scenario_from_name(std::string_view name) noexcept;

/// Malformed document; line and column are 1-based.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, int column, const std::string& message);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed document whose parameters break a module precondition.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigValue {
    std::vector<std::string> items;  ///< more than one only for sweep axes
    int line = 0;                    ///< 0 for filled-in defaults
    int column = 0;
};

/// Validated configuration. Keys form a closed set; defaults are filled in per scenario.
///
/// Syntax: one `key = value` per line, `#` starts a comment, blank lines ignored.
/// Sweep configs may give comma-separated lists, expanded as a Cartesian product.
class RunConfig {
public:
    Scenario scenario() const noexcept { return scenario_; }
    const std::map<std::string, ConfigValue>& entries() const noexcept { return entries_; }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::string& text(const std::string& key) const;
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;

    /// Copy with one scalar entry replaced (re-validated).
    RunConfig with(const std::string& key, const std::string& value) const;

    /// Sorted `key=value` lines; the run id is its SHA-256.
    std::string canonical() const;
    std::string run_id() const;

private:
    friend RunConfig parse_config(std::string_view, std::optional<Scenario>);
    friend std::vector<RunConfig> expand_sweep(const RunConfig&);

    Scenario scenario_ = Scenario::Bootstrap;
    std::map<std::string, ConfigValue> entries_;
};

/// ConfigError for syntax problems, unknown keys and unparsable values; ValidationError for
/// out-of-range parameters. `fallback` supplies the scenario when the document has none.
RunConfig parse_config(std::string_view text, std::optional<Scenario> fallback = std::nullopt);

/// Child configs of a sweep, in row-major order of the keys' sorted names.
std::vector<RunConfig> expand_sweep(const RunConfig& sweep);

std::string sha256_hex(std::string_view data);

struct RunRecord {
    std::string run_id;
    std::string timestamp;
    Scenario scenario = Scenario::Bootstrap;
    std::map<std::string, std::string> config;
    bool ok = false;    ///< false when the run raised an error
    bool pass = false;  ///< embedded audits passed
    std::vector<std::pair<std::string, std::string>> summary;
    std::vector<std::string> artifacts;
    std::string result_hash;  ///< SHA-256 of summary and artifact bytes
    std::string error;

    std::string to_json() const;
};

/// Append-only `registry.jsonl`; appends from several threads are serialized.
class Registry {
public:
    explicit Registry(std::filesystem::path path);
    void append(const RunRecord& record);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::mutex mutex_;
};

/// Runs one non-sweep config, writes `<out>/<run id>/<artifact>.csv` and appends the record.
/// Module errors become a failed record; they are not rethrown.
RunRecord dispatch(const RunConfig& config, const std::filesystem::path& out, Registry& registry);

/// Runs configs on up to `jobs` threads. Records come back in input order.
std::vector<RunRecord> sweep(const std::vector<RunConfig>& configs, int jobs,
                             const std::filesystem::path& out, Registry& registry);

}  // namespace fracmhd
