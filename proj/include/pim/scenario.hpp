#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pim::cli {

/// Raised on malformed or unknown configuration input; carries the line number.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

/// Plain-text `key = value` scenario parameters with a per-scenario whitelist.
class ScenarioConfig {
public:
    ScenarioConfig(std::string scenario, std::map<std::string, std::string> values = {});

    /// Parses a config file; rejects unknown keys with their line numbers.
    static ScenarioConfig from_file(const std::string& scenario, const std::string& path);

    const std::string& scenario() const { return scenario_; }
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

    static const std::set<std::string>& known_keys(const std::string& scenario);
    static std::vector<std::string> scenario_names();

private:
    std::string scenario_;
    std::map<std::string, std::string> values_;
};

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ScenarioReport {
    std::string scenario;
    std::vector<Check> checks;
    double elapsed_seconds = 0.0;

    bool all_pass() const;
};

/// Runs one scenario: computes its checks, writes CSV outputs and a summary
/// file under out_dir (when given), and returns the report.
ScenarioReport run_scenario(const ScenarioConfig& config,
                            const std::optional<std::string>& out_dir, unsigned long long seed,
                            double tol_scale);

} // namespace pim::cli
