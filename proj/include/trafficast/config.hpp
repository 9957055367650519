#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trafficast/deepcluster.hpp"
#include "trafficast/ingest.hpp"
#include "trafficast/predict.hpp"

namespace trafficast {

struct DataSettings {
    /// Raw `segment_id,timestamp,speed` CSV. Empty means: generate a
    /// synthetic network into the output directory.
    std::string input;
    /// Optional `segment_id,archetype` ground truth used for the Rand index.
    std::string labels;
    std::size_t period = 288;
    std::int64_t step = 300;
    std::size_t max_gap = 2;
    CalendarFilter calendar;
    int utc_offset_hours = 8;
};

struct SynthSettings {
    std::size_t segments_per_archetype = 9;
    std::size_t days = 60;
    /// Multiplies every noise source of the default archetypes.
    double noise_scale = 1.0;
    CalendarDate start{2017, 9, 4};
};

struct IntervalSettings {
    double threshold = 0.8;
    std::size_t max_lag = 36;
    /// Fixed input interval; 0 selects it from the ACF.
    std::size_t stride = 0;
    /// Select one interval per group instead of one for the whole network.
    bool per_group = false;
};

struct PredictSettings {
    SampleOptions samples;
    PredictorConfig predictor;
    std::vector<std::size_t> horizons{1, 3};
    bool with_im = true;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    DataSettings data;
    SynthSettings synth;
    ClusterConfig cluster;
    IntervalSettings interval;
    PredictSettings predict;
};

/// Every accepted key as `section.name`, in canonical order.
[[nodiscard]] std::vector<std::string> config_keys();

/// Sets one key from its text form. Throws ConfigError naming the key.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);
[[nodiscard]] std::string get_config_value(const PipelineConfig& config, const std::string& key);

/// Parses INI text (`[section]` headers, `name = value` lines, `#` or `;`
/// comments). Unknown sections or keys are errors. All problems are
/// collected and reported together in one ConfigError, one per line.
[[nodiscard]] PipelineConfig parse_config(const std::string& text, const std::string& source = "<memory>");
[[nodiscard]] PipelineConfig load_config(const std::filesystem::path& path);

/// Applies TRAFFICAST_<SECTION>_<NAME> variables from `env` (for example
/// TRAFFICAST_PREDICT_LEARNING_RATE). Unknown TRAFFICAST_ variables are
/// errors.
void apply_env_overrides(PipelineConfig& config, const std::map<std::string, std::string>& env);
/// The TRAFFICAST_ variables of the process environment.
[[nodiscard]] std::map<std::string, std::string> trafficast_environment();

/// Checks every module precondition and throws one ConfigError listing each
/// failing field on its own line.
void validate(const PipelineConfig& config);

/// Canonical INI text with every key; parse_config(to_text(c)) == c.
[[nodiscard]] std::string to_text(const PipelineConfig& config);
/// 64-bit FNV-1a of to_text, as 16 hex digits.
[[nodiscard]] std::string config_hash(const PipelineConfig& config);

}  // namespace trafficast
