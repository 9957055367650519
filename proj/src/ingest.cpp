#include "trafficast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "trafficast/error.hpp"

namespace trafficast {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    if (s.empty()) {
        return false;
    }
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

std::chrono::sys_days local_day(std::int64_t epoch, std::chrono::seconds offset) {
    return std::chrono::sys_days(std::chrono::days(floor_div(epoch + offset.count(), kSecondsPerDay)));
}

std::size_t block_count(const SpeedSeries& s, std::size_t period) {
    if (period == 0 || s.size() % period != 0) {
        throw DataError("series '" + s.segment_id + "' of length " + std::to_string(s.size()) +
                        " is not a whole number of periods of " + std::to_string(period));
    }
    if (!s.contiguous() && s.period != period) {
        throw DataError("series '" + s.segment_id + "' was filtered with period " + std::to_string(s.period) +
                        ", not " + std::to_string(period));
    }
    return s.size() / period;
}

std::int64_t block_start(const SpeedSeries& s, std::size_t block, std::size_t period) {
    if (s.contiguous()) {
        return s.t0 + static_cast<std::int64_t>(block * period) * s.step;
    }
    return s.period_starts[block];
}

SpeedSeries keep_blocks(const SpeedSeries& s, std::size_t period, const std::vector<bool>& keep) {
    SpeedSeries out;
    out.segment_id = s.segment_id;
    out.step = s.step;
    out.period = period;
    for (std::size_t b = 0; b < keep.size(); ++b) {
        if (!keep[b]) {
            continue;
        }
        out.period_starts.push_back(block_start(s, b, period));
        const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(b * period);
        out.values.insert(out.values.end(), first, first + static_cast<std::ptrdiff_t>(period));
    }
    if (!out.period_starts.empty()) {
        out.t0 = out.period_starts.front();
    }
    return out;
}

}  // namespace

std::int64_t SpeedSeries::timestamp(std::size_t i) const {
    if (contiguous()) {
        return t0 + static_cast<std::int64_t>(i) * step;
    }
    return period_starts.at(i / period) + static_cast<std::int64_t>(i % period) * step;
}

std::size_t SpeedSeries::missing_count() const {
    return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_missing));
}

std::chrono::sys_days CalendarDate::to_sys_days() const {
    return std::chrono::sys_days(std::chrono::year(year) / std::chrono::month(month) / std::chrono::day(day));
}

std::string CalendarDate::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
    return buf;
}

CalendarDate CalendarDate::parse(const std::string& text) {
    const std::string_view t = trim(text);
    CalendarDate d;
    if (t.size() != 10 || t[4] != '-' || t[7] != '-' || !parse_number(t.substr(0, 4), d.year) ||
        !parse_number(t.substr(5, 2), d.month) || !parse_number(t.substr(8, 2), d.day)) {
        throw ConfigError("invalid date '" + text + "' (expected YYYY-MM-DD)");
    }
    const std::chrono::year_month_day ymd{std::chrono::year(d.year), std::chrono::month(d.month),
                                          std::chrono::day(d.day)};
    if (!ymd.ok()) {
        throw ConfigError("invalid calendar date '" + text + "'");
    }
    return d;
}

MinMaxScaler::MinMaxScaler(double min, double max) : min_(min), max_(max) {
    if (!(max > min) || !std::isfinite(min) || !std::isfinite(max)) {
        throw DataError("degenerate scale: max must exceed min");
    }
}

std::int64_t parse_timestamp(std::string_view text) {
    const std::string_view t = trim(text);
    std::int64_t epoch = 0;
    if (parse_number(t, epoch)) {
        return epoch;
    }
    // YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM|+HHMM]
    int year = 0;
    unsigned month = 0;
    unsigned day = 0;
    int hour = 0;
    int minute = 0;
    int second = 0;
    const auto fail = [&]() -> std::int64_t { throw DataError("invalid timestamp '" + std::string(text) + "'"); };
    if (t.size() < 16 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') || t[13] != ':') {
        return fail();
    }
    if (!parse_number(t.substr(0, 4), year) || !parse_number(t.substr(5, 2), month) ||
        !parse_number(t.substr(8, 2), day) || !parse_number(t.substr(11, 2), hour) ||
        !parse_number(t.substr(14, 2), minute)) {
        return fail();
    }
    std::string_view rest = t.substr(16);
    if (!rest.empty() && rest.front() == ':') {
        if (rest.size() < 3 || !parse_number(rest.substr(1, 2), second)) {
            return fail();
        }
        rest.remove_prefix(3);
    }
    std::int64_t zone = 0;
    if (rest == "Z") {
        rest = {};
    } else if (!rest.empty() && (rest.front() == '+' || rest.front() == '-')) {
        const int sign = rest.front() == '+' ? 1 : -1;
        rest.remove_prefix(1);
        int zh = 0;
        int zm = 0;
        if (rest.size() == 5 && rest[2] == ':') {
            if (!parse_number(rest.substr(0, 2), zh) || !parse_number(rest.substr(3, 2), zm)) {
                return fail();
            }
        } else if (rest.size() == 4) {
            if (!parse_number(rest.substr(0, 2), zh) || !parse_number(rest.substr(2, 2), zm)) {
                return fail();
            }
        } else {
            return fail();
        }
        zone = sign * (zh * 3600 + zm * 60);
        rest = {};
    }
    if (!rest.empty() || hour > 23 || minute > 59 || second > 60) {
        return fail();
    }
    const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month), std::chrono::day(day)};
    if (!ymd.ok()) {
        return fail();
    }
    const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
    return static_cast<std::int64_t>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second - zone;
}

std::vector<SpeedSeries> parse_csv(std::string_view text, const LoadOptions& options, const std::string& source) {
    if (options.step <= 0) {
        throw ConfigError("sampling step must be positive");
    }
    struct Row {
        std::int64_t ts;
        double speed;
        std::size_t line;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<Row>> rows;

    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view line = trim(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto where = [&] { return source + ":" + std::to_string(line_no) + ": "; };
        if (!header_seen) {
            if (line != "segment_id,timestamp,speed") {
                throw DataError(where() + "expected header 'segment_id,timestamp,speed'");
            }
            header_seen = true;
            continue;
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == line.npos ? line.npos : line.find(',', c1 + 1);
        if (c1 == line.npos || c2 == line.npos || line.find(',', c2 + 1) != line.npos) {
            throw DataError(where() + "malformed row (expected 3 fields)");
        }
        const std::string id(trim(line.substr(0, c1)));
        if (id.empty()) {
            throw DataError(where() + "empty segment_id");
        }
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(line.substr(c1 + 1, c2 - c1 - 1));
        } catch (const DataError& e) {
            throw DataError(where() + e.what());
        }
        double speed = 0.0;
        if (!parse_number(trim(line.substr(c2 + 1)), speed) || !std::isfinite(speed)) {
            throw DataError(where() + "malformed speed '" + std::string(line.substr(c2 + 1)) + "'");
        }
        if (speed < 0.0) {
            throw DataError(where() + "negative speed " + std::string(trim(line.substr(c2 + 1))));
        }
        auto [it, inserted] = rows.try_emplace(id);
        if (inserted) {
            order.push_back(id);
        }
        it->second.push_back({ts, speed, line_no});
    }
    if (!header_seen) {
        throw DataError(source + ": empty file (missing header)");
    }

    std::vector<SpeedSeries> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& r = rows[id];
        std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
        SpeedSeries s;
        s.segment_id = id;
        s.step = options.step;
        s.t0 = r.front().ts;
        const std::int64_t span = r.back().ts - s.t0;
        s.values.assign(static_cast<std::size_t>(span / options.step) + 1, kMissing);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto where = source + ":" + std::to_string(r[i].line) + ": ";
            if (i > 0 && r[i].ts == r[i - 1].ts) {
                throw DataError(where + "duplicate timestamp " + std::to_string(r[i].ts) + " for segment '" + id +
                                "' (first seen on line " + std::to_string(r[i - 1].line) + ")");
            }
            const std::int64_t off = r[i].ts - s.t0;
            if (off % options.step != 0) {
                throw DataError(where + "timestamp " + std::to_string(r[i].ts) + " is off the " +
                                std::to_string(options.step) + " s sampling grid of segment '" + id + "'");
            }
            s.values[static_cast<std::size_t>(off / options.step)] = r[i].speed;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SpeedSeries> load_csv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options, path.string());
}

void write_csv(const std::filesystem::path& path, std::span<const SpeedSeries> series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << "segment_id,timestamp,speed\n";
    char buf[64];
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (is_missing(s.values[i])) {
                continue;
            }
            auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), s.values[i]);
            out << s.segment_id << ',' << s.timestamp(i) << ',' << std::string_view(buf, end - buf) << '\n';
        }
    }
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

SpeedSeries fill_gaps(const SpeedSeries& s, std::size_t max_gap) {
    const std::size_t n = s.size();
    if (n == 0 || s.missing_count() == n) {
        throw DataError("series '" + s.segment_id + "' is entirely missing");
    }
    SpeedSeries out = s;
    auto& v = out.values;
    std::size_t i = 0;
    while (i < n) {
        if (!is_missing(v[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && is_missing(v[j])) {
            ++j;
        }
        const std::size_t run = j - i;
        if (run <= max_gap) {
            if (i == 0) {
                std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(j), v[j]);
            } else if (j == n) {
                std::fill(v.begin() + static_cast<std::ptrdiff_t>(i), v.end(), v[i - 1]);
            } else {
                const double left = v[i - 1];
                const double right = v[j];
                const double span = static_cast<double>(run + 1);
                for (std::size_t k = i; k < j; ++k) {
                    v[k] = left + (right - left) * static_cast<double>(k - i + 1) / span;
                }
            }
        }
        i = j;
    }
    return out;
}

SpeedSeries apply_calendar_filter(const SpeedSeries& s, const CalendarFilter& f, std::size_t period,
                                  std::chrono::seconds utc_offset) {
    const std::size_t blocks = block_count(s, period);
    if (static_cast<std::int64_t>(period) * s.step != kSecondsPerDay) {
        throw ConfigError("calendar filtering needs one period per day (period * step = 86400 s)");
    }
    if (blocks == 0) {
        throw DataError("series '" + s.segment_id + "' is empty");
    }
    if (f.empty()) {
        return s;
    }
    for (std::size_t b = 0; b < blocks; ++b) {
        if ((block_start(s, b, period) + utc_offset.count()) % kSecondsPerDay != 0) {
            throw DataError("series '" + s.segment_id + "' periods do not start at local midnight");
        }
    }
    const auto first_day = local_day(block_start(s, 0, period), utc_offset);
    const auto last_day = local_day(block_start(s, blocks - 1, period), utc_offset);
    for (const auto* list : {&f.exclude_dates, &f.include_dates}) {
        for (const auto& d : *list) {
            const auto day = d.to_sys_days();
            if (day < first_day || day > last_day) {
                throw ConfigError("calendar date " + d.to_string() + " lies outside the span of series '" +
                                  s.segment_id + "'");
            }
        }
    }
    std::vector<bool> keep(blocks, true);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto day = local_day(block_start(s, b, period), utc_offset);
        const auto matches = [&](const std::vector<CalendarDate>& list) {
            return std::any_of(list.begin(), list.end(), [&](const CalendarDate& d) { return d.to_sys_days() == day; });
        };
        const std::chrono::weekday wd{day};
        const bool weekend = wd == std::chrono::Saturday || wd == std::chrono::Sunday;
        if (f.exclude_weekends && weekend && !matches(f.include_dates)) {
            keep[b] = false;
        }
        if (matches(f.exclude_dates)) {
            keep[b] = false;
        }
    }
    if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
        throw DataError("calendar filter removes every day of series '" + s.segment_id + "'");
    }
    return keep_blocks(s, period, keep);
}

SpeedSeries drop_incomplete_periods(const SpeedSeries& s, std::size_t period) {
    const std::size_t blocks = block_count(s, period);
    std::vector<bool> keep(blocks, true);
    bool all = true;
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto first = s.values.begin() + static_cast<std::ptrdiff_t>(b * period);
        keep[b] = std::none_of(first, first + static_cast<std::ptrdiff_t>(period), is_missing);
        all = all && keep[b];
    }
    if (all) {
        return s;
    }
    if (std::none_of(keep.begin(), keep.end(), [](bool k) { return k; })) {
        throw DataError("series '" + s.segment_id + "' has no complete period");
    }
    return keep_blocks(s, period, keep);
}

MinMaxScaler fit_minmax(std::span<const double> values) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const double v : values) {
        if (!std::isfinite(v)) {
            continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) {
        throw DataError("degenerate scale: fewer than two distinct finite values");
    }
    return MinMaxScaler(lo, hi);
}

std::vector<double> normalize_unit(std::span<const double> values) {
    std::vector<double> out(values.size(), 0.5);
    if (values.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::clamp((values[i] - *lo) / range, 0.0, 1.0);
    }
    return out;
}

}  // namespace trafficast
