#pragma once

// Run configuration shared by every CLI command. Documents are merged onto
// the defaults; a key the defaults do not have is an error, and so is a value
// whose JSON type differs from the default's.

#include "tppmix/em.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tppmix {

struct GenerateOptions {
    /// One intensity per cluster, in IntensitySpec::parse syntax.
    std::vector<std::string> clusters{"sine", "negative-sine"};
    std::size_t per_cluster = 200;
    double horizon = 100.0;
    /// Extra clusters with random Hawkes parameters.
    std::size_t random_hawkes = 0;
};

struct EvaluateOptions {
    /// Predicted-label file (one JSON object per line: {"id", "cluster"}).
    std::string labels;
    /// Directory written by `train`; the final iteration is used.
    std::string checkpoint;
    std::vector<std::string> metrics{"purity", "rand_index", "eid"};
    double bin_width = 5.0;
    std::size_t eid_samples = 2000;
    std::size_t consistency_trials = 10;
    double consistency_split = 0.5;
};

struct ExportOptions {
    std::string checkpoint;
    double bin_width = 5.0;
    std::size_t samples = 1000;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string dataset;
    /// Empty selects $TPPMIX_OUTPUT_DIR, then "tppmix-out".
    std::string output_dir;
    GenerateOptions generate;
    TrainingConfig training;
    EvaluateOptions evaluate;
    ExportOptions export_intensity;
};

nlohmann::json to_json(const RunConfig& config);

/// Merges `doc` onto the defaults and converts. Throws std::invalid_argument
/// naming the offending key path.
RunConfig run_config_from_json(const nlohmann::json& doc);

/// Recursive merge; `path` prefixes error messages.
nlohmann::json merge_strict(const nlohmann::json& base, const nlohmann::json& overlay, const std::string& path = "");

/// Applies "a.b.c=value" to `doc` in place. The value is read as JSON when it
/// parses and the target is not a string, otherwise as a raw string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads a config file (JSON) and merges it onto the defaults.
nlohmann::json load_config_document(const std::filesystem::path& path);

std::filesystem::path resolve_output_dir(const RunConfig& config);

}  // namespace tppmix
