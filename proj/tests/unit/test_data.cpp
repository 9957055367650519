#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "trafficast/error.hpp"
#include "trafficast/ingest.hpp"
#include "trafficast/raster.hpp"
#include "trafficast/rng.hpp"
#include "trafficast/series.hpp"

using namespace trafficast;
namespace fs = std::filesystem;

namespace {

SpeedSeries make_series(std::vector<double> values, std::int64_t t0 = 0) {
    SpeedSeries s;
    s.segment_id = "s";
    s.t0 = t0;
    s.values = std::move(values);
    return s;
}

fs::path temp_path(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "trafficast_unit";
    fs::create_directories(dir);
    return dir / name;
}

// 2017-09-04 00:00 local time (UTC+8), a Monday.
constexpr std::int64_t kMonday = 1504454400;

}  // namespace

TEST_CASE("load_csv reads one segment with a 300 s step") {
    const auto series = parse_csv(
        "segment_id,timestamp,speed\n"
        "a,2017-09-04T00:00:00Z,50\n"
        "a,2017-09-04T00:05:00Z,51\n"
        "a,2017-09-04T00:10:00Z,52\n");
    REQUIRE(series.size() == 1);
    CHECK(series[0].size() == 3);
    CHECK(series[0].step == 300);
    CHECK(series[0].values == std::vector<double>{50, 51, 52});
}

TEST_CASE("load_csv rejects a negative speed and names the line") {
    try {
        (void)parse_csv("segment_id,timestamp,speed\na,0,50\na,300,-5\n");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("load_csv rejects malformed rows and duplicate timestamps") {
    CHECK_THROWS_AS((void)parse_csv("segment_id,timestamp,speed\na,0\n"), DataError);
    CHECK_THROWS_AS((void)parse_csv("segment_id,timestamp,speed\na,0,1\na,0,2\n"), DataError);
    CHECK_THROWS_AS((void)parse_csv("segment_id,timestamp,speed\na,zero,1\n"), DataError);
}

TEST_CASE("load_csv marks absent slots missing and keeps first-appearance order") {
    const auto series = parse_csv("segment_id,timestamp,speed\nb,600,3\nb,0,1\na,0,7\na,300,8\n");
    REQUIRE(series.size() == 2);
    CHECK(series[0].segment_id == "b");
    REQUIRE(series[0].size() == 3);
    CHECK(series[0].values[0] == 1);
    CHECK(is_missing(series[0].values[1]));
    CHECK(series[0].values[2] == 3);
    CHECK(series[0].missing_count() == 1);
}

TEST_CASE("timestamps round-trip through write_csv and load_csv") {
    std::vector<SpeedSeries> in{make_series({10, kMissing, 12, 13}, kMonday), make_series({1, 2, 3, 4}, kMonday + 300)};
    in[1].segment_id = "t";
    const auto path = temp_path("roundtrip.csv");
    write_csv(path, in);
    const auto out = load_csv(path);
    REQUIRE(out.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(out[k].segment_id == in[k].segment_id);
        REQUIRE(out[k].size() == in[k].size());
        for (std::size_t i = 0; i < in[k].size(); ++i) {
            CHECK(out[k].timestamp(i) == in[k].timestamp(i));
        }
    }
    CHECK(is_missing(out[0].values[1]));
}

TEST_CASE("parse_timestamp accepts epoch seconds and ISO-8601 with zones") {
    CHECK(parse_timestamp("1504454400") == 1504454400);
    CHECK(parse_timestamp("2017-09-03T16:00:00Z") == 1504454400);
    CHECK(parse_timestamp("2017-09-04 00:00:00+08:00") == 1504454400);
    CHECK(parse_timestamp("2017-09-03T16:00") == 1504454400);
    CHECK_THROWS_AS((void)parse_timestamp("2017-13-01T00:00"), DataError);
}

TEST_CASE("fill_gaps interpolates short interior runs") {
    const auto filled = fill_gaps(make_series({50, kMissing, 60}), 1);
    CHECK(filled.values == std::vector<double>{50, 55, 60});
}

TEST_CASE("fill_gaps leaves runs longer than max_gap missing") {
    const auto filled = fill_gaps(make_series({50, kMissing, kMissing, 60, 61, 62}), 1);
    CHECK(is_missing(filled.values[1]));
    CHECK(is_missing(filled.values[2]));
    const auto kept = drop_incomplete_periods(filled, 2);
    CHECK(kept.values == std::vector<double>{61, 62});
}

TEST_CASE("fill_gaps is the identity on complete series and rejects all-missing input") {
    const auto s = make_series({1, 2, 3});
    CHECK(fill_gaps(s, 2).values == s.values);
    CHECK_THROWS_AS((void)fill_gaps(make_series({kMissing, kMissing}), 2), DataError);
}

TEST_CASE("calendar filter drops weekends from a Monday-start week") {
    const std::size_t period = 4;
    auto s = make_series(std::vector<double>(7 * period, 1.0), kMonday);
    s.step = 86400 / period;
    CalendarFilter f;
    f.exclude_weekends = true;
    const auto out = apply_calendar_filter(s, f, period);
    CHECK(out.size() == 5 * period);
    CHECK(out.period_starts.size() == 5);
    CHECK(out.timestamp(4 * period) == kMonday + 4 * 86400);
}

TEST_CASE("calendar filter reproduces the 90-day to 60-day reduction") {
    // 2017-09-04 .. 2017-12-02: 90 days, 25 weekend days and the five
    // weekdays of the National Day holiday (Oct 2-6).
    const std::size_t period = 2;
    auto s = make_series(std::vector<double>(90 * period, 1.0), kMonday);
    s.step = 86400 / period;
    CalendarFilter f;
    f.exclude_weekends = true;
    for (unsigned d = 1; d <= 8; ++d) {
        f.exclude_dates.push_back({2017, 10, d});
    }
    CHECK(apply_calendar_filter(s, f, period).size() / period == 60);
    // Keeping the Saturday make-up workday adds it back.
    f.include_dates.push_back({2017, 9, 30});
    CHECK(apply_calendar_filter(s, f, period).size() / period == 61);
}

TEST_CASE("empty calendar filter is the identity; removing every day is an error") {
    auto s = make_series(std::vector<double>(14, 1.0), kMonday);
    s.step = 86400 / 2;
    CHECK(apply_calendar_filter(s, {}, 2).values == s.values);
    CalendarFilter all;
    for (unsigned d = 4; d <= 10; ++d) {
        all.exclude_dates.push_back({2017, 9, d});
    }
    CHECK_THROWS_AS((void)apply_calendar_filter(s, all, 2), DataError);
}

TEST_CASE("fit_minmax") {
    const std::vector<double> a{20, 70};
    const auto sc = fit_minmax(a);
    CHECK(sc.min() == 20);
    CHECK(sc.max() == 70);
    CHECK(sc.transform(45) == doctest::Approx(0.5));
    const std::vector<double> b{0, 1};
    const auto id = fit_minmax(b);
    for (double v : {0.0, 0.3, 1.0}) {
        CHECK(id.transform(v) == v);
    }
    const std::vector<double> c{30, 30, 30};
    CHECK_THROWS_AS((void)fit_minmax(c), DataError);
}

TEST_CASE("MinMaxScaler inverse undoes transform") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double lo = 100 * uniform01(rng);
        const double hi = lo + 1 + 100 * uniform01(rng);
        const MinMaxScaler sc(lo, hi);
        const double v = lo + (hi - lo) * uniform01(rng);
        CHECK(sc.inverse(sc.transform(v)) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("normalize_unit maps a constant sub-series to 0.5") {
    const std::vector<double> c{4, 4, 4};
    CHECK(normalize_unit(c) == std::vector<double>{0.5, 0.5, 0.5});
    const std::vector<double> v{10, 20, 15};
    CHECK(normalize_unit(v) == std::vector<double>{0, 1, 0.5});
}

TEST_CASE("slice takes strided windows with a zero-based start") {
    std::vector<double> x(10);
    for (int i = 0; i < 10; ++i) {
        x[i] = i + 1;
    }
    CHECK(slice(x, 0, 3, 2) == std::vector<double>{1, 3, 5});
    CHECK(slice(x, 7, 3, 1) == std::vector<double>{8, 9, 10});
    CHECK_THROWS_AS((void)slice(x, 9, 3, 2), ConfigError);
}

TEST_CASE("split_periodic") {
    std::vector<double> v(25920);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<double>(i % 97);
    }
    CHECK(split_periodic(make_series(v), 288).days() == 90);
    std::vector<double> one(v.begin(), v.begin() + 288);
    const auto g = split_periodic(make_series(one), 288);
    REQUIRE(g.days() == 1);
    CHECK(std::equal(g.row(0).begin(), g.row(0).end(), one.begin()));
    CHECK_THROWS_AS((void)split_periodic(make_series(std::vector<double>(300, 1.0)), 288), DataError);
}

TEST_CASE("traffic_similarity") {
    const std::vector<double> periodic{10, 20, 10, 20};
    const auto flat = traffic_similarity(periodic, 2);
    CHECK(flat.degenerate);
    CHECK(flat.sim == std::vector<double>{0, 0});
    const std::vector<double> x{10, 20, 14, 26};
    const auto r = traffic_similarity(x, 2);
    CHECK_FALSE(r.degenerate);
    REQUIRE(r.sim.size() == 2);
    CHECK(r.sim[0] == doctest::Approx(4.0 / 6.0));
    CHECK(r.sim[1] == 1.0);
}

TEST_CASE("similarity_cdf") {
    const std::vector<double> s{0.1, 0.1, 0.9};
    const auto cdf = similarity_cdf(s);
    REQUIRE(cdf.size() == 101);
    CHECK(cdf[20].first == doctest::Approx(0.2));
    CHECK(cdf[20].second == doctest::Approx(2.0 / 3.0));
    CHECK(cdf[100].second == 1.0);
    const std::vector<double> zeros(5, 0.0);
    CHECK(similarity_cdf(zeros)[0].second == 1.0);
    CHECK_THROWS_AS((void)similarity_cdf(std::vector<double>{}), Error);
}

TEST_CASE("acf of a sinusoid peaks at its period") {
    std::vector<double> x(1200);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(2 * std::numbers::pi * static_cast<double>(i) / 12.0);
    }
    const auto a = acf(x, 24);
    CHECK(a.at(12) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(a.at(6) == doctest::Approx(-1.0).epsilon(0.02));
    CHECK(a.confidence_band == doctest::Approx(1.96 / std::sqrt(1200.0)));
}

TEST_CASE("acf of white noise stays inside 0.05") {
    Rng rng(11);
    std::vector<double> x(10000);
    for (auto& v : x) {
        v = standard_normal(rng);
    }
    const auto a = acf(x, 36);
    for (std::size_t i = 1; i <= 36; ++i) {
        CHECK(std::abs(a.at(i)) < 0.05);
    }
}

TEST_CASE("acf of a constant series is an error") {
    CHECK_THROWS_AS((void)acf(std::vector<double>(50, 3.0), 5), DataError);
}

TEST_CASE("select_interval picks the last lag above the threshold") {
    CHECK(select_interval({{0.9, 0.85, 0.4}, 0}, 0.8).interval == 2);
    const auto none = select_interval({{0.5, 0.3}, 0}, 0.8);
    CHECK(none.interval == 1);
    CHECK(none.fallback);
}

TEST_CASE("input_length") {
    CHECK(input_length(288, 5) == 58);
    CHECK(input_length(288, 1) == 288);
    CHECK(input_length(288, 7) == 42);
}

TEST_CASE("rasterize applies the ceiling rule with the zero clamp") {
    const std::vector<double> x{0, 1, 0.5, 0.25};
    const auto img = rasterize(x, 4);
    const std::vector<std::uint16_t> expect{1, 4, 2, 1};
    CHECK(std::equal(img.positions().begin(), img.positions().end(), expect.begin(), expect.end()));
    const std::vector<double> c(4, 0.5);
    const auto flat = rasterize(c, 4);
    for (auto p : flat.positions()) {
        CHECK(p == 2);
    }
    CHECK_THROWS_AS((void)rasterize(std::vector<double>{0.5, 1.2}, 4), ConfigError);
    CHECK_THROWS_AS((void)rasterize(std::vector<double>{-0.1, 0.2}, 4), ConfigError);
}

TEST_CASE("rasterize keeps full resolution without resampling") {
    std::vector<double> day(288);
    for (std::size_t i = 0; i < day.size(); ++i) {
        day[i] = static_cast<double>(i) / 287.0;
    }
    const auto img = rasterize(day, 288);
    CHECK(img.resolution() == 288);
    CHECK(img.positions().size() == 288);
    CHECK(img.pixels().size() == 288u * 288u);
    CHECK(resample_linear(day, 288) == day);
}

TEST_CASE("resample_linear keeps both endpoints") {
    const std::vector<double> x{0, 10};
    const auto r = resample_linear(x, 5);
    CHECK(r == std::vector<double>{0, 2.5, 5, 7.5, 10});
}

TEST_CASE("derasterize returns pixel centres") {
    const auto img = rasterize(std::vector<double>{0.5, 0.5}, 2);
    const auto back = derasterize(img);
    CHECK(back == std::vector<double>{0.25, 0.25});
}

TEST_CASE("derasterize error is at most 1/R on random series") {
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t r = 2 + uniform_index(rng, 63);
        std::vector<double> x(r);
        for (auto& v : x) {
            v = uniform01(rng);
        }
        const auto back = derasterize(rasterize(x, r));
        for (std::size_t i = 0; i < r; ++i) {
            CHECK(std::abs(back[i] - x[i]) <= 1.0 / static_cast<double>(r));
        }
    }
}

TEST_CASE("pixel grids must hold exactly one white pixel per column") {
    std::vector<std::uint8_t> px(4, 0);
    px[0] = 255;
    px[2] = 255;  // column 0 fully white, column 1 empty
    CHECK_THROWS_AS((void)RasterImage::from_pixels(2, px), DataError);
    px[2] = 0;
    px[3] = 255;
    const auto ok = RasterImage::from_pixels(2, px);
    CHECK(ok.positions()[0] == 1);
    CHECK(ok.positions()[1] == 2);
}

TEST_CASE("write_pgm stores rows top first") {
    const auto img = RasterImage::from_positions(4, {1, 4, 2, 1});
    const auto path = temp_path("p.pgm");
    write_pgm(img, path);
    std::ifstream in(path, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string header = "P5\n4 4\n255\n";
    REQUIRE(bytes.size() == header.size() + 16);
    CHECK(bytes.substr(0, header.size()) == header);
    const std::size_t top_row[] = {4, 1, 3, 4};
    for (std::size_t col = 0; col < 4; ++col) {
        for (std::size_t row = 1; row <= 4; ++row) {
            const auto b = static_cast<unsigned char>(bytes[header.size() + (row - 1) * 4 + col]);
            CHECK(b == (row == top_row[col] ? 255 : 0));
        }
    }
    CHECK(read_pgm(path) == img);
}

TEST_CASE("flipping mirrors rows") {
    const auto img = RasterImage::from_positions(4, {1, 4, 2, 1});
    const auto f = img.flipped();
    const std::vector<std::uint16_t> expect{4, 1, 3, 4};
    CHECK(std::equal(f.positions().begin(), f.positions().end(), expect.begin(), expect.end()));
    CHECK(f.flipped() == img);
}
