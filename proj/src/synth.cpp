#include "trafficast/synth.hpp"

#include <algorithm>
#include <cmath>

// Boost 1.74's pchip.hpp calls isnan unqualified on doubles, which only
// resolves if the name is visible at global scope.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <fstream>
#include <numeric>

#include "trafficast/error.hpp"
#include "trafficast/rng.hpp"

namespace trafficast {

namespace {

using boost::math::interpolators::pchip;

constexpr double kMinSpeed = 1.0;

pchip<std::vector<double>> make_profile(const Archetype& a) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& p : a.profile) {
        x.push_back(p.hour);
        y.push_back(p.speed);
    }
    return pchip<std::vector<double>>(std::move(x), std::move(y));
}

double wrap_hour(double h) {
    h = std::fmod(h, 24.0);
    return h < 0.0 ? h + 24.0 : h;
}

double uniform_between(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Student-t variate scaled to unit variance; Gaussian when dof is 0.
double shock(Rng& rng, double dof) {
    const double z = standard_normal(rng);
    if (dof == 0.0) {
        return z;
    }
    const auto n = static_cast<int>(dof);
    double chi2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = standard_normal(rng);
        chi2 += g * g;
    }
    return z / std::sqrt(chi2 / dof) * std::sqrt((dof - 2.0) / dof);
}

}  // namespace

std::vector<double> Archetype::daily_profile(std::size_t period) const {
    validate();
    const auto f = make_profile(*this);
    std::vector<double> out(period);
    for (std::size_t i = 0; i < period; ++i) {
        out[i] = f(24.0 * static_cast<double>(i) / static_cast<double>(period));
    }
    return out;
}

void Archetype::validate() const {
    if (profile.size() < 4) {
        throw ConfigError("archetype " + name + ": needs at least 4 control points");
    }
    if (profile.front().hour != 0.0 || profile.back().hour != 24.0) {
        throw ConfigError("archetype " + name + ": control points must span hours 0 to 24");
    }
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (i > 0 && !(profile[i].hour > profile[i - 1].hour)) {
            throw ConfigError("archetype " + name + ": control point hours must increase");
        }
        if (!(profile[i].speed >= 5.0 && profile[i].speed <= 120.0)) {
            throw ConfigError("archetype " + name + ": control speeds must lie in [5, 120] km/h");
        }
    }
    if (!(day_jitter >= 0.0) || !(peak_shift >= 0.0) || !(fluctuation >= 0.0) || !(obs_noise >= 0.0)) {
        throw ConfigError("archetype " + name + ": noise levels must be >= 0");
    }
    if (!(fluctuation_memory >= 0.0 && fluctuation_memory < 1.0)) {
        throw ConfigError("archetype " + name + ": fluctuation_memory must lie in [0, 1)");
    }
}

std::vector<Archetype> default_archetypes() {
    Archetype evening;
    evening.name = "evening-breakdown";
    evening.profile = {{0, 66},  {5, 68},   {7, 60},  {8, 54},   {9.5, 60}, {12, 62},  {15, 60},
                       {16.5, 56}, {17.5, 26}, {18.5, 20}, {19.5, 24}, {20.5, 52}, {22, 64}, {24, 66}};

    Archetype morning;
    morning.name = "morning-breakdown";
    morning.profile = {{0, 70},  {5, 70},  {6.5, 62}, {7.5, 24}, {8.5, 18}, {9.5, 30}, {10.5, 44},
                       {12, 36}, {13.5, 46}, {15, 37}, {16.5, 46}, {18, 36}, {20, 45}, {21.5, 66}, {24, 70}};

    Archetype plateau;
    plateau.name = "mid-plateau";
    plateau.profile = {{0, 46},  {2.5, 58}, {4, 58},  {6, 44},  {9, 42},   {12, 43},
                       {15, 42}, {17, 39},  {18.5, 38}, {20, 41}, {22, 43}, {24, 46}};
    return {evening, morning, plateau};
}

void SynthSpec::validate() const {
    if (archetypes.empty()) {
        throw ConfigError("synth: at least one archetype is required");
    }
    for (const auto& a : archetypes) {
        a.validate();
    }
    if (segments_per_archetype == 0) {
        throw ConfigError("synth.segments_per_archetype: must be at least 1");
    }
    if (days < 2) {
        throw ConfigError("synth.days: must be at least 2");
    }
    if (period < 2) {
        throw ConfigError("synth.period: must be at least 2");
    }
    if (step <= 0) {
        throw ConfigError("synth.step: must be positive");
    }
    if (!(amplitude_min > 0.0 && amplitude_max >= amplitude_min)) {
        throw ConfigError("synth.amplitude range: need 0 < min <= max");
    }
    if (!(offset_max >= offset_min)) {
        throw ConfigError("synth.offset range: need min <= max");
    }
    if (!(jitter_knot_hours > 0.0)) {
        throw ConfigError("synth.jitter_knot_hours: must be positive");
    }
}

SynthNetwork generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t n_arch = spec.archetypes.size();
    const std::size_t n_seg = n_arch * spec.segments_per_archetype;

    SynthNetwork net;
    for (const auto& a : spec.archetypes) {
        net.archetype_names.push_back(a.name);
    }
    net.labels.resize(n_seg);
    for (std::size_t i = 0; i < n_seg; ++i) {
        net.labels[i] = i / spec.segments_per_archetype;
    }
    Rng order = make_rng(spec.seed, "synth/order");
    shuffle(net.labels.begin(), net.labels.end(), order);

    std::vector<pchip<std::vector<double>>> profiles;
    for (const auto& a : spec.archetypes) {
        profiles.push_back(make_profile(a));
    }

    const std::int64_t t0 =
        std::chrono::duration_cast<std::chrono::seconds>(spec.start.to_sys_days().time_since_epoch()).count() -
        static_cast<std::int64_t>(spec.utc_offset_hours) * 3600;
    const std::size_t total = spec.days * spec.period;
    const double hours_per_slot = 24.0 / static_cast<double>(spec.period);
    const double span_hours = static_cast<double>(spec.days) * 24.0;
    const std::size_t knots = static_cast<std::size_t>(std::ceil(span_hours / spec.jitter_knot_hours)) + 1;
    const std::size_t width = n_seg >= 100 ? 3 : 2;

    for (std::size_t s = 0; s < n_seg; ++s) {
        const Archetype& arch = spec.archetypes[net.labels[s]];
        const auto& profile = profiles[net.labels[s]];
        Rng rng = make_rng(spec.seed, "synth/segment/" + std::to_string(s));
        const double amplitude = uniform_between(rng, spec.amplitude_min, spec.amplitude_max);
        const double offset = uniform_between(rng, spec.offset_min, spec.offset_max);

        std::vector<double> shifts(spec.days);
        for (auto& d : shifts) {
            d = arch.peak_shift / 60.0 * standard_normal(rng);
        }
        // The day-to-day field is one smooth curve over the whole span, so it
        // is continuous across midnight.
        std::vector<double> kx(knots);
        std::vector<double> ky(knots);
        for (std::size_t k = 0; k < knots; ++k) {
            kx[k] = static_cast<double>(k) * spec.jitter_knot_hours;
            ky[k] = arch.day_jitter * shock(rng, spec.tail_dof);
        }
        const pchip<std::vector<double>> jitter(std::move(kx), std::move(ky));

        SpeedSeries series;
        series.segment_id = "seg" + std::string(width - std::min(width, std::to_string(s + 1).size()), '0') +
                            std::to_string(s + 1);
        series.t0 = t0;
        series.step = spec.step;
        series.values.resize(total);
        const double phi = arch.fluctuation_memory;
        const double innovation = arch.fluctuation * std::sqrt(1.0 - phi * phi);
        double z = arch.fluctuation * standard_normal(rng);
        for (std::size_t i = 0; i < total; ++i) {
            const std::size_t day = i / spec.period;
            const double hour = static_cast<double>(i % spec.period) * hours_per_slot;
            const double base = profile(wrap_hour(hour - shifts[day]));
            const double t_hours = static_cast<double>(i) * hours_per_slot;
            if (i > 0) {
                z = phi * z + innovation * shock(rng, spec.tail_dof);
            }
            const double v = amplitude * base + offset + jitter(t_hours) + z + arch.obs_noise * standard_normal(rng);
            series.values[i] = std::max(kMinSpeed, v);
        }
        net.series.push_back(std::move(series));
    }
    return net;
}

void write_labels_csv(const std::filesystem::path& path, const SynthNetwork& network) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "segment_id,archetype\n";
    for (std::size_t i = 0; i < network.series.size(); ++i) {
        out << network.series[i].segment_id << ',' << network.archetype_names.at(network.labels[i]) << '\n';
    }
}

}  // namespace trafficast
