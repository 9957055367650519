#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafficast/predict.hpp"

namespace trafficast {

/// Column names of the group performance table, in order.
inline const std::vector<std::string> kReportColumns = {"horizon",  "group", "algorithm", "train MRE",
                                                        "test MRE", "gap",   "MARE",      "MIRE"};

struct ReportRow {
    std::string horizon;
    /// 1-based group number as printed.
    std::size_t group = 0;
    std::string algorithm;
    double train_mre = 0.0;
    double test_mre = 0.0;
    double gap = 0.0;
    double mare = 0.0;
    double mire = 0.0;
};

/// The evaluation of one horizon: GM always, IM when it was trained.
struct HorizonReport {
    std::size_t horizon = 1;
    EvalReport gm;
    std::optional<EvalReport> im;
};

struct ModelCount {
    std::size_t segments = 0;
    std::size_t groups = 0;

    /// (segments - groups) / segments
    [[nodiscard]] double reduction() const;
};

/// One row per horizon, group and algorithm (GM before IM).
[[nodiscard]] std::vector<ReportRow> report_rows(std::span<const HorizonReport> horizons, std::int64_t step = 300);

/// Throws DataError on an empty table.
[[nodiscard]] std::string report_csv(std::span<const ReportRow> rows);
[[nodiscard]] std::string report_json(std::span<const ReportRow> rows, const ModelCount& models);

/// Grouped bars of train MRE, test MRE and gap per group and algorithm for
/// one horizon.
[[nodiscard]] std::string mre_bar_svg(std::span<const ReportRow> rows, const std::string& horizon);

struct LineSeries {
    std::string name;
    std::vector<double> values;
};
/// Line plot of several series over a shared x axis.
[[nodiscard]] std::string line_svg(std::span<const LineSeries> lines, const std::string& title,
                                   const std::string& x_label, const std::string& y_label);

/// Writes report.json, report.csv, one mre_<horizon>.svg per horizon.
/// Throws DataError when `horizons` is empty.
void emit_report(std::span<const HorizonReport> horizons, const ModelCount& models,
                 const std::filesystem::path& dir, std::int64_t step = 300);

/// Writes `text` to `path`, creating parent directories; throws Error on
/// I/O failure.
void write_text(const std::filesystem::path& path, const std::string& text);
[[nodiscard]] std::string read_text(const std::filesystem::path& path);

}  // namespace trafficast
