#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rothe/analysis.hpp"
#include "rothe/scheme.hpp"

namespace rothe {

/// Unreadable or ill-formed configuration. `key()` names the offending key
/// (empty for file-level problems).
class config_error : public std::runtime_error {
public:
    config_error(std::string key, const std::string& message) :
        std::runtime_error(message), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Flat `key = value` file. `[section]` headers group keys for readability
/// only; keys are unique across sections. `#` and `;` start comments.
class ConfigFile {
public:
    static ConfigFile parse(std::istream& in);
    static ConfigFile load(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] const std::string& get(const std::string& key) const;
    [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class Preset { ou_linear, heat_1d_additive, heat_1d_multiplicative, energy_norm_rho_half };
enum class OutputFormat { csv, jsonl };

std::string to_string(Preset preset);
std::string to_string(OutputFormat format);

struct ExperimentConfig {
    Preset preset = Preset::ou_linear;
    SchemeConfig scheme{};
    std::vector<std::size_t> k_list;
    std::filesystem::path output_dir = "out";
    OutputFormat format = OutputFormat::csv;

    double lambda = -1.0;       ///< ou_linear eigenvalue
    double noise_scale = 1.0;
    double u0_amplitude = 0.0;  ///< u_0 = amplitude * e_1
    std::optional<ScalarMap> g;
    ScalarMap h = ScalarMap::constant(1.0);
    ReferenceChoice reference = ReferenceChoice::ou_oracle();
    std::size_t propagation_steps = 0;
    std::size_t probe_paths = 2;
    std::size_t probes = 32;
    bool two_level_j = false;
    std::size_t threads = 0;

    /// Throws config_error naming the key for missing, unknown or ill-typed keys.
    static ExperimentConfig from_file(const ConfigFile& file);

    [[nodiscard]] Model build_model(std::size_t modes) const;
    [[nodiscard]] SpectralVector initial_state(std::size_t modes) const;
};

struct ValidationIssue {
    std::string key;
    std::string message;
};

/// Preset compatibility, the parameter conditions and the delta bound.
std::vector<ValidationIssue> validate_experiment(const ExperimentConfig& cfg);

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::filesystem::path> output_dir;
    std::optional<OutputFormat> format;
};

/// Exit codes: 0 ok, 1 validation or run failure, 2 unreadable / ill-formed config.
int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_convergence(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_propagation(const CommandOptions& options, std::ostream& out, std::ostream& err);

void write_error_tables(std::ostream& out, OutputFormat format, const std::vector<std::pair<std::size_t, ErrorTable>>& tables);
void write_gap_table(std::ostream& out, OutputFormat format, const GapTable& table);

}  // namespace rothe
