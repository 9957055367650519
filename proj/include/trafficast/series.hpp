#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trafficast/ingest.hpp"

namespace trafficast {

/// A segment's series split into whole periods (one row per day).
class DayGrid {
public:
    DayGrid() = default;
    DayGrid(std::string segment_id, std::size_t period, std::vector<double> values);

    [[nodiscard]] const std::string& segment_id() const { return segment_id_; }
    [[nodiscard]] std::size_t period() const { return period_; }
    [[nodiscard]] std::size_t days() const { return period_ == 0 ? 0 : values_.size() / period_; }
    [[nodiscard]] std::span<const double> row(std::size_t day) const {
        return std::span<const double>(values_).subspan(day * period_, period_);
    }
    /// Row-major concatenation of all rows.
    [[nodiscard]] std::span<const double> flat() const { return values_; }

private:
    std::string segment_id_;
    std::size_t period_ = 0;
    std::vector<double> values_;
};

struct AcfProfile {
    /// coefficients[i - 1] is the autocorrelation at lag i.
    std::vector<double> coefficients;
    double confidence_band = 0.0;

    [[nodiscard]] std::size_t max_lag() const { return coefficients.size(); }
    [[nodiscard]] double at(std::size_t lag) const { return coefficients.at(lag - 1); }
};

struct SimilarityResult {
    std::vector<double> sim;
    /// Set when every day-to-day gap is zero (perfectly periodic input).
    bool degenerate = false;
};

struct IntervalChoice {
    std::size_t interval = 1;
    /// No lag exceeded the threshold; fell back to interval 1.
    bool fallback = false;
};

/// Strided window x[start], x[start + stride], ... of `length` values.
/// `start` is zero-based.
[[nodiscard]] std::vector<double> slice(std::span<const double> x, std::size_t start, std::size_t length,
                                        std::size_t stride = 1);

/// Splits into rows of `period`. Periods containing missing samples are
/// dropped.
[[nodiscard]] DayGrid split_periodic(const SpeedSeries& s, std::size_t period);

/// SIM[t] = |x[t] - x[t+period]| / max_u |x[u] - x[u+period]| for every t
/// with a successor one period later.
[[nodiscard]] SimilarityResult traffic_similarity(std::span<const double> x, std::size_t period);

/// Empirical CDF sampled at thresholds 0, 0.01, ..., 1.
[[nodiscard]] std::vector<std::pair<double, double>> similarity_cdf(std::span<const double> sims);

/// Biased sample autocorrelation with the global mean, lags 1..max_lag,
/// and the 95% band 1.96 / sqrt(N).
[[nodiscard]] AcfProfile acf(std::span<const double> x, std::size_t max_lag);

/// Largest lag whose coefficient exceeds `threshold`.
[[nodiscard]] IntervalChoice select_interval(const AcfProfile& profile, double threshold);

/// ceil(period / stride)
[[nodiscard]] std::size_t input_length(std::size_t period, std::size_t stride);

}  // namespace trafficast
