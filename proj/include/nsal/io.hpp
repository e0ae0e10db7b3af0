#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nsal/simulation.hpp"

namespace nsal {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration document. `what()` starts with "<source>:<line>:" when
/// the offending location is known.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grid axes for the sweep subcommand. Empty axes are not varied.
struct SweepSpec {
    std::vector<std::size_t> n_init;
    std::vector<double> sigma;
    std::vector<double> gamma;
    std::vector<StrategyKind> strategy;
    std::size_t max_points = 256;

    std::size_t points() const;
};

struct ParsedConfig {
    ExperimentConfig experiment;
    SweepSpec sweep;
    /// Canonical JSON of the experiment (no sweep block).
    nlohmann::ordered_json document;
};

/// Parses a config document. A run manifest is accepted too; its embedded
/// config is used. Throws ConfigError with a line-numbered message.
ParsedConfig parse_config(std::string_view text, std::string_view source = "config.json");
ParsedConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const ExperimentConfig& config);

nlohmann::ordered_json report_to_json(const RunReport& report);
/// Reads the config and replication records back; aggregates are recomputed.
RunReport report_from_json(const nlohmann::json& doc);

/// Fixed 12-significant-digit rendering independent of the locale; NaN is empty.
std::string format_number(double value);

std::string summary_csv(const RunReport& report);
std::string histogram_csv(const RunReport& report);

/// Header and rows of the combined sweep table; `point` labels the grid point.
std::string sweep_csv_header();
std::string sweep_csv_rows(std::size_t point, const ExperimentConfig& config, const RunReport& report);

}  // namespace nsal
