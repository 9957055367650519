#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "trafficast/ingest.hpp"

namespace trafficast {

struct ControlPoint {
    double hour = 0.0;
    double speed = 0.0;
};

/// A family of segments sharing one daily speed shape.
///
/// A generated value is
///   amplitude * profile(hour - shift_d) + offset + jitter(t) + z_t + e_t
/// where shift_d is a per-day timing shift, jitter a smooth low-frequency
/// field, z_t a stationary AR(1) fluctuation and e_t white measurement noise.
struct Archetype {
    std::string name;
    /// Control points over [0, 24] hours, interpolated with a monotone
    /// piecewise cubic. The first and last speeds should match so that days
    /// join smoothly.
    std::vector<ControlPoint> profile;
    /// Standard deviation of the smooth day-to-day field (km/h).
    double day_jitter = 2.0;
    /// Standard deviation of the per-day timing shift (minutes).
    double peak_shift = 8.0;
    /// Stationary standard deviation of the AR(1) fluctuation (km/h).
    double fluctuation = 5.6;
    /// AR(1) coefficient per sampling step.
    double fluctuation_memory = 0.8;
    /// White measurement noise standard deviation (km/h).
    double obs_noise = 1.0;

    /// Profile sampled at `period` evenly spaced slots of one day.
    [[nodiscard]] std::vector<double> daily_profile(std::size_t period) const;
    void validate() const;
};

/// Evening breakdown, morning breakdown with mid-speed swings, and a
/// mid-speed plateau.
[[nodiscard]] std::vector<Archetype> default_archetypes();

struct SynthSpec {
    std::vector<Archetype> archetypes = default_archetypes();
    std::size_t segments_per_archetype = 9;
    std::size_t days = 60;
    std::size_t period = 288;
    std::int64_t step = 300;
    std::uint64_t seed = 1;
    /// Per-segment multiplicative and additive perturbation ranges.
    double amplitude_min = 0.85;
    double amplitude_max = 1.15;
    double offset_min = -5.0;
    double offset_max = 5.0;
    /// Spacing of the random knots of the day-to-day field.
    double jitter_knot_hours = 3.0;
    /// Degrees of freedom of the Student-t shocks driving the day-to-day
    /// field and the fluctuation (integer >= 3; 0 selects Gaussian shocks).
    /// Heavy tails make most day-to-day gaps small relative to the largest.
    double tail_dof = 3.0;
    /// First day, at local midnight.
    CalendarDate start{2017, 9, 4};
    int utc_offset_hours = 8;

    void validate() const;
};

struct SynthNetwork {
    std::vector<SpeedSeries> series;
    /// Archetype index of each series.
    std::vector<std::size_t> labels;
    std::vector<std::string> archetype_names;
};

/// Deterministic per seed. Segment ids are "seg01", "seg02", ... and the
/// archetype assignment order is shuffled so that ids carry no label.
[[nodiscard]] SynthNetwork generate(const SynthSpec& spec);

/// Writes `segment_id,archetype`.
void write_labels_csv(const std::filesystem::path& path, const SynthNetwork& network);

}  // namespace trafficast
