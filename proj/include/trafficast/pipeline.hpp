#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "trafficast/config.hpp"
#include "trafficast/deepcluster.hpp"
#include "trafficast/report.hpp"
#include "trafficast/series.hpp"
#include "trafficast/synth.hpp"

namespace trafficast {

/// Pipeline stages. Each stage reads its inputs from the configured data
/// source and from artifacts of earlier stages in `out_dir`, and writes its
/// own artifacts there, so running the stages one by one gives the same
/// files as `run_pipeline`.

/// The synthetic network described by the [synth] section.
[[nodiscard]] SynthSpec synth_spec(const PipelineConfig& config);

struct SegmentStats {
    std::string segment_id;
    std::size_t raw_samples = 0;
    std::size_t missing = 0;
    std::size_t days = 0;
};

struct PreparedData {
    /// Cleaned series: gaps filled, calendar filtered, incomplete days dropped.
    std::vector<SpeedSeries> series;
    std::vector<DayGrid> grids;
    std::vector<SegmentStats> stats;
    /// Ground-truth group per series, empty when no labels are known.
    std::vector<std::size_t> labels;
};

/// Path of the raw CSV the stages read: data.input, or series.csv in
/// `out_dir` when no input is configured.
[[nodiscard]] std::filesystem::path raw_input(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// series.csv and labels.csv.
SynthNetwork run_synth(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Loads and cleans the raw series. Generates the synthetic network first
/// when no input is configured and series.csv does not exist yet.
[[nodiscard]] PreparedData prepare_data(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// cleaned.csv and ingest.json.
PreparedData run_ingest(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Pooled day-to-day similarity CDF: similarity.csv, similarity.svg.
std::vector<std::pair<double, double>> run_similarity(const PipelineConfig& config,
                                                      const std::filesystem::path& out_dir);

/// Mean ACF over segments, computed on each segment's training span:
/// acf.csv, acf.svg.
AcfProfile run_acf(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Mean ACF of the training spans of `series`, lags 1..max_lag.
[[nodiscard]] AcfProfile training_acf(std::span<const SpeedSeries> series, double split, std::size_t max_lag);

struct IntervalSelection {
    AcfProfile profile;
    IntervalChoice choice;
    /// Interval of each group when per-group selection is on.
    std::vector<std::size_t> per_group;
};

/// interval.json. Per-group selection needs clusters.json.
IntervalSelection run_select_interval(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// clusters.json, embeddings.csv, embedder.ckpt.
ClusterOutcome run_cluster(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// One white-pixel-per-column image of a segment's day: raster_<id>_<day>.pgm.
std::filesystem::path run_rasterize(const PipelineConfig& config, const std::filesystem::path& out_dir,
                                    const std::string& segment_id, std::size_t day);

/// Trains every GM (and IM when enabled) per horizon: models.json and
/// models/*.ckpt. Needs clusters.json and interval.json.
void run_train(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// Evaluates the saved models: evaluation.json, predictions.csv and one
/// prediction_<horizon>.svg per horizon.
std::vector<HorizonReport> run_evaluate(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// report.json, report.csv and the MRE bar charts from evaluation.json.
void run_report(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// synth (when no input is configured), ingest, similarity, acf, cluster,
/// select-interval, train, evaluate, report.
void run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

/// manifest.json: command, seed, config text and hash, versions, and a
/// checksum of every artifact in `out_dir`.
void write_manifest(const PipelineConfig& config, const std::filesystem::path& out_dir, const std::string& command);

/// Group of each segment as recorded in clusters.json.
[[nodiscard]] std::map<std::string, std::size_t> read_assignment(const std::filesystem::path& out_dir);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
[[nodiscard]] std::string file_checksum(const std::filesystem::path& path);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace trafficast
