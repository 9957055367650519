#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace trafficast {

/// Marker for a missing speed sample.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

[[nodiscard]] inline bool is_missing(double v) { return v != v; }

/// One road segment's equally spaced speed measurements (km/h).
///
/// While the series is contiguous, sample i was taken at t0 + i * step.
/// Calendar filtering removes whole periods; the start of every retained
/// period is then kept in `period_starts` so timestamps stay recoverable.
struct SpeedSeries {
    std::string segment_id;
    std::int64_t t0 = 0;
    std::int64_t step = 300;
    std::vector<double> values;
    std::vector<std::int64_t> period_starts;
    std::size_t period = 0;

    [[nodiscard]] std::size_t size() const { return values.size(); }
    [[nodiscard]] bool contiguous() const { return period_starts.empty(); }
    [[nodiscard]] std::int64_t timestamp(std::size_t i) const;
    [[nodiscard]] std::size_t missing_count() const;
};

struct CalendarDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    friend bool operator==(const CalendarDate&, const CalendarDate&) = default;
    [[nodiscard]] std::chrono::sys_days to_sys_days() const;
    [[nodiscard]] std::string to_string() const;
    /// Parses `YYYY-MM-DD`; throws ConfigError on anything else.
    static CalendarDate parse(const std::string& text);
};

struct CalendarFilter {
    bool exclude_weekends = false;
    std::vector<CalendarDate> exclude_dates;
    /// Days retained even when they fall on a weekend (make-up workdays).
    std::vector<CalendarDate> include_dates;

    [[nodiscard]] bool empty() const {
        return !exclude_weekends && exclude_dates.empty() && include_dates.empty();
    }
};

class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(double min, double max);

    [[nodiscard]] double min() const { return min_; }
    [[nodiscard]] double max() const { return max_; }
    [[nodiscard]] double transform(double v) const { return (v - min_) / (max_ - min_); }
    [[nodiscard]] double inverse(double v) const { return v * (max_ - min_) + min_; }

private:
    double min_ = 0.0;
    double max_ = 1.0;
};

struct LoadOptions {
    std::int64_t step = 300;
};

/// Reads `segment_id,timestamp,speed` rows. Timestamps are integer epoch
/// seconds or ISO-8601 (`YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM]`, UTC when no
/// zone is given). Absent grid slots become kMissing. Series are returned
/// in order of first appearance in the file.
[[nodiscard]] std::vector<SpeedSeries> load_csv(const std::filesystem::path& path,
                                                const LoadOptions& options = {});

/// Parses the CSV body directly; `source` is only used in error messages.
[[nodiscard]] std::vector<SpeedSeries> parse_csv(std::string_view text, const LoadOptions& options = {},
                                                 const std::string& source = "<memory>");

/// Writes series in the same CSV format, integer epoch timestamps, missing
/// samples omitted.
void write_csv(const std::filesystem::path& path, std::span<const SpeedSeries> series);

/// Parses an integer epoch or ISO-8601 timestamp; throws DataError.
[[nodiscard]] std::int64_t parse_timestamp(std::string_view text);

/// Linearly interpolates interior runs of at most `max_gap` missing values.
/// Runs of at most `max_gap` touching either end are filled with the
/// nearest present value; longer runs stay missing.
[[nodiscard]] SpeedSeries fill_gaps(const SpeedSeries& s, std::size_t max_gap);

/// Removes every day matched by the filter. `utc_offset` shifts epoch time
/// to local time for day boundaries. The series must start at local
/// midnight and hold whole days of `period` samples.
[[nodiscard]] SpeedSeries apply_calendar_filter(const SpeedSeries& s, const CalendarFilter& f, std::size_t period,
                                                std::chrono::seconds utc_offset = std::chrono::hours(8));

/// Drops every period that still contains a missing sample.
[[nodiscard]] SpeedSeries drop_incomplete_periods(const SpeedSeries& s, std::size_t period);

/// Throws DataError (degenerate scale) when fewer than two distinct
/// finite values are present.
[[nodiscard]] MinMaxScaler fit_minmax(std::span<const double> values);

/// Min-max normalizes one sub-series into [0,1]; a constant sub-series maps
/// to 0.5 everywhere.
[[nodiscard]] std::vector<double> normalize_unit(std::span<const double> values);

}  // namespace trafficast
