#include "trafficast/series.hpp"

#include <algorithm>
#include <cmath>

#include "trafficast/error.hpp"

namespace trafficast {

DayGrid::DayGrid(std::string segment_id, std::size_t period, std::vector<double> values)
    : segment_id_(std::move(segment_id)), period_(period), values_(std::move(values)) {
    if (period_ == 0 || values_.size() % period_ != 0) {
        throw DataError("day grid for '" + segment_id_ + "' must hold whole periods");
    }
}

std::vector<double> slice(std::span<const double> x, std::size_t start, std::size_t length, std::size_t stride) {
    if (stride == 0 || length == 0) {
        throw ConfigError("slice needs length >= 1 and stride >= 1");
    }
    const std::size_t last = start + (length - 1) * stride;
    if (last >= x.size()) {
        throw ConfigError("slice [" + std::to_string(start) + " .. " + std::to_string(last) +
                          "] runs past a series of length " + std::to_string(x.size()));
    }
    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        out[i] = x[start + i * stride];
    }
    return out;
}

DayGrid split_periodic(const SpeedSeries& s, std::size_t period) {
    if (period == 0 || s.size() % period != 0) {
        throw DataError("series '" + s.segment_id + "' of length " + std::to_string(s.size()) +
                        " is not divisible by period " + std::to_string(period));
    }
    std::vector<double> rows;
    rows.reserve(s.size());
    for (std::size_t b = 0; b < s.size() / period; ++b) {
        const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(b * period);
        const auto last = first + static_cast<std::ptrdiff_t>(period);
        if (std::none_of(first, last, is_missing)) {
            rows.insert(rows.end(), first, last);
        }
    }
    if (rows.empty()) {
        throw DataError("series '" + s.segment_id + "' has no usable period");
    }
    return DayGrid(s.segment_id, period, std::move(rows));
}

SimilarityResult traffic_similarity(std::span<const double> x, std::size_t period) {
    if (period == 0 || x.size() <= period) {
        throw ConfigError("similarity needs a series longer than one period");
    }
    SimilarityResult out;
    out.sim.resize(x.size() - period);
    double largest = 0.0;
    for (std::size_t t = 0; t < out.sim.size(); ++t) {
        out.sim[t] = std::abs(x[t] - x[t + period]);
        largest = std::max(largest, out.sim[t]);
    }
    if (largest == 0.0) {
        out.degenerate = true;
        return out;
    }
    for (auto& v : out.sim) {
        v /= largest;
    }
    return out;
}

std::vector<std::pair<double, double>> similarity_cdf(std::span<const double> sims) {
    if (sims.empty()) {
        throw ConfigError("similarity CDF of an empty sample");
    }
    std::vector<double> sorted(sims.begin(), sims.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> cdf;
    cdf.reserve(101);
    const double n = static_cast<double>(sorted.size());
    for (int i = 0; i <= 100; ++i) {
        const double threshold = i / 100.0;
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), threshold) - sorted.begin();
        cdf.emplace_back(threshold, static_cast<double>(count) / n);
    }
    return cdf;
}

AcfProfile acf(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (max_lag == 0 || n <= max_lag) {
        throw ConfigError("acf needs 1 <= max_lag < series length");
    }
    double mean = 0.0;
    for (const double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (const double v : x) {
        denom += (v - mean) * (v - mean);
    }
    if (!(denom > 0.0)) {
        throw DataError("autocorrelation of a constant series is undefined");
    }
    AcfProfile out;
    out.coefficients.resize(max_lag);
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double num = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            num += (x[t] - mean) * (x[t + lag] - mean);
        }
        out.coefficients[lag - 1] = num / denom;
    }
    out.confidence_band = 1.96 / std::sqrt(static_cast<double>(n));
    return out;
}

IntervalChoice select_interval(const AcfProfile& profile, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("ACF threshold must lie in (0, 1)");
    }
    IntervalChoice choice{1, true};
    for (std::size_t lag = 1; lag <= profile.max_lag(); ++lag) {
        if (profile.at(lag) > threshold) {
            choice = {lag, false};
        }
    }
    return choice;
}

std::size_t input_length(std::size_t period, std::size_t stride) {
    if (period == 0 || stride == 0) {
        throw ConfigError("input_length needs period >= 1 and stride >= 1");
    }
    return (period + stride - 1) / stride;
}

}  // namespace trafficast
