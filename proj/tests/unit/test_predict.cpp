#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "trafficast/error.hpp"
#include "trafficast/predict.hpp"
#include "trafficast/series.hpp"
#include "trafficast/synth.hpp"

using namespace trafficast;

namespace {

SpeedSeries ramp(std::size_t n, double first = 1.0) {
    SpeedSeries s;
    s.segment_id = "r";
    s.t0 = 1000;
    for (std::size_t i = 0; i < n; ++i) {
        s.values.push_back(first + static_cast<double>(i));
    }
    return s;
}

// Windows listed straight from the definition of the target index.
struct Window {
    std::vector<double> input;
    double target;
};
std::vector<Window> brute_windows(const std::vector<double>& x, std::size_t n_i, std::size_t l, std::size_t n_o,
                                  TargetConvention c) {
    std::vector<Window> out;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const std::size_t target = c == TargetConvention::after_last_input ? t + (n_i - 1) * l + n_o : t + n_i + n_o;
        const std::size_t last = t + (n_i - 1) * l;
        if (target >= x.size() || last >= x.size()) {
            break;
        }
        Window w;
        for (std::size_t i = 0; i < n_i; ++i) {
            w.input.push_back(x[t + i * l]);
        }
        w.target = x[target];
        out.push_back(w);
    }
    return out;
}

SampleOptions toy_options() {
    SampleOptions o;
    o.input_length = 3;
    o.stride = 2;
    o.horizon = 1;
    return o;
}

PredictorConfig quick(std::size_t epochs) {
    PredictorConfig c;
    c.train.epochs = epochs;
    c.train.batch_size = 16;
    c.patience = 0;
    return c;
}

bool same_parameters(const nn::Network& a, const nn::Network& b) {
    return std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin(), b.parameters().end());
}

SegmentErrors errors_of(std::string id, std::size_t group, std::vector<double> test, std::vector<double> train = {}) {
    SegmentErrors e;
    e.segment_id = std::move(id);
    e.group = group;
    e.test_re = std::move(test);
    e.train_re = std::move(train);
    return e;
}

}  // namespace

TEST_CASE("input length follows the sampling period and interval") {
    SampleOptions o;
    o.input_length = input_length(288, 5);
    CHECK(o.input_length == 58);
    const auto s = make_samples(ramp(2000), o);
    CHECK(s.train.input_length == 58);
    CHECK(s.train.input(0).size() == 58);
}

TEST_CASE("make_samples matches a brute-force enumeration") {
    for (auto c : {TargetConvention::after_last_input, TargetConvention::literal}) {
        auto o = toy_options();
        o.convention = c;
        o.split = 0.5;
        const auto series = ramp(20);
        const auto s = make_samples(series, o);
        const auto expect = brute_windows(series.values, 3, 2, 1, c);
        REQUIRE(s.train.size() + s.test.size() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            const auto& set = i < s.train.size() ? s.train : s.test;
            const std::size_t row = i < s.train.size() ? i : i - s.train.size();
            const auto in = set.input(row);
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(s.scaler.inverse(in[j]) == doctest::Approx(expect[i].input[j]));
            }
            CHECK(s.scaler.inverse(set.targets[row]) == doctest::Approx(expect[i].target));
            CHECK(set.start[row] == i);
        }
    }
    const auto first = make_samples(ramp(20), toy_options());
    CHECK(first.scaler.inverse(first.train.input(0)[2]) == doctest::Approx(5.0));
    CHECK(first.scaler.inverse(first.train.targets[0]) == doctest::Approx(6.0));
    CHECK(first.train.target_time[0] == 1000 + 5 * 300);
}

TEST_CASE("make_samples splits chronologically without overlap") {
    // 105 values and a target offset of 5 give 100 windows.
    const auto s = make_samples(ramp(105), toy_options());
    CHECK(s.train.size() == 80);
    CHECK(s.test.size() == 20);
    CHECK(*std::max_element(s.train.start.begin(), s.train.start.end()) <
          *std::min_element(s.test.start.begin(), s.test.start.end()));
}

TEST_CASE("make_samples fits the scaler on the training span only") {
    const auto s = make_samples(ramp(105), toy_options());
    // Training windows start at 0..79 and reach 5 slots ahead.
    CHECK(s.scaler.min() == 1.0);
    CHECK(s.scaler.max() == 85.0);
}

TEST_CASE("make_samples skips windows that touch missing values") {
    auto series = ramp(60);
    series.values[10] = kMissing;
    const auto s = make_samples(series, toy_options());
    std::set<std::size_t> starts(s.train.start.begin(), s.train.start.end());
    starts.insert(s.test.start.begin(), s.test.start.end());
    for (std::size_t t : {10u, 8u, 6u, 5u}) {
        CHECK(starts.count(t) == 0);
    }
    CHECK(starts.count(7) == 1);
}

TEST_CASE("make_samples rejects short series and a zero horizon") {
    CHECK_THROWS_AS((void)make_samples(ramp(5), toy_options()), DataError);
    auto o = toy_options();
    o.horizon = 0;
    CHECK_THROWS_AS((void)make_samples(ramp(50), o), ConfigError);
}

TEST_CASE("sample_step thins the training windows") {
    auto o = toy_options();
    o.sample_step = 4;
    const auto s = make_samples(ramp(105), o);
    CHECK(s.train.size() == 20);
    CHECK(s.train.start[1] == 4);
    CHECK(s.test.size() == 20);
}

TEST_CASE("kfold_split partitions the samples") {
    const auto folds = kfold_split(100, 10);
    REQUIRE(folds.size() == 10);
    std::vector<int> seen(100, 0);
    for (const auto& [train, val] : folds) {
        CHECK(val.size() == 10);
        CHECK(train.size() == 90);
        for (auto i : val) {
            ++seen[i];
        }
        std::set<std::size_t> both(train.begin(), train.end());
        both.insert(val.begin(), val.end());
        CHECK(both.size() == 100);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    const auto half = kfold_split(10, 2);
    CHECK(half[0].second.size() == 5);
    CHECK(half[1].second.size() == 5);
    CHECK_THROWS_AS((void)kfold_split(3, 5), ConfigError);
}

TEST_CASE("zero-epoch training returns the initialization") {
    const auto s = make_samples(ramp(200), toy_options());
    const auto m = train_im(s, quick(0), 3);
    auto fresh = nn::make_predictor(3);
    Rng init = make_rng(3, "predictor/init");
    fresh.initialize(init);
    CHECK(same_parameters(m.network, fresh));
}

TEST_CASE("a single-member group model is the individual model") {
    const auto s = make_samples(ramp(200), toy_options());
    const auto gm = train_gm(std::span<const SegmentSamples>(&s, 1), quick(2), 9);
    const auto im = train_im(s, quick(2), 9);
    CHECK(same_parameters(gm.network, im.network));
    CHECK(gm.history.train_loss == im.history.train_loss);
}

TEST_CASE("two identical members pool a duplicated sample set") {
    const auto s = make_samples(ramp(200), toy_options());
    SampleSet pooled;
    pooled.append(s.train, 0);
    pooled.append(s.train, 1);
    REQUIRE(pooled.size() == 2 * s.train.size());
    std::multiset<std::vector<double>> got;
    std::multiset<std::vector<double>> want;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        auto row = std::vector<double>(pooled.input(i).begin(), pooled.input(i).end());
        row.push_back(pooled.targets[i]);
        got.insert(row);
    }
    for (int copy = 0; copy < 2; ++copy) {
        for (std::size_t i = 0; i < s.train.size(); ++i) {
            auto row = std::vector<double>(s.train.input(i).begin(), s.train.input(i).end());
            row.push_back(s.train.targets[i]);
            want.insert(row);
        }
    }
    CHECK(got == want);

    const std::vector<SegmentSamples> twins{s, s};
    const auto gm = train_gm(twins, quick(1), 4);
    CHECK(gm.members.size() == 2);
    CHECK(gm.history.train_loss.size() == 1);
}

TEST_CASE("training is deterministic per seed and rejects an empty group") {
    const auto s = make_samples(ramp(200), toy_options());
    const auto a = train_im(s, quick(2), 5);
    const auto b = train_im(s, quick(2), 5);
    CHECK(same_parameters(a.network, b.network));
    CHECK_THROWS_AS((void)train_gm(std::span<const SegmentSamples>(), quick(1), 1), ConfigError);
}

TEST_CASE("early stopping keeps the best validation epoch") {
    const auto s = make_samples(ramp(300), toy_options());
    auto cfg = quick(6);
    cfg.patience = 2;
    cfg.folds = 5;
    const auto m = train_im(s, cfg, 2);
    REQUIRE(!m.history.validation_mre.empty());
    const auto best = std::min_element(m.history.validation_mre.begin(), m.history.validation_mre.end());
    CHECK(m.history.best_epoch == static_cast<std::size_t>(best - m.history.validation_mre.begin()) + 1);
}

TEST_CASE("relative_error") {
    CHECK(*relative_error(50, 45) == doctest::Approx(0.10));
    CHECK(*relative_error(50, 50) == 0.0);
    CHECK_FALSE(relative_error(0, 3).has_value());
    CHECK_FALSE(relative_error(-1, 3).has_value());
}

TEST_CASE("predict_network routes each segment through its group's model") {
    const auto a = make_samples(ramp(200), toy_options());
    auto b_series = ramp(200, 30.0);
    b_series.segment_id = "q";
    const auto b = make_samples(b_series, toy_options());
    std::vector<GroupModel> models{train_im(a, quick(1), 1), train_im(b, quick(1), 2)};
    models[1].group = 1;
    const std::map<std::string, std::size_t> assignment{{"r", 0}, {"q", 1}};

    const std::vector<double> w{40, 42, 44};
    const auto out = predict_network(models, assignment, {{"r", {w}}, {"q", {w}}});
    SampleSet one;
    one.input_length = 3;
    for (double v : w) {
        one.inputs.push_back(a.scaler.transform(v));
    }
    one.targets.push_back(0);
    CHECK(out.at("r")[0] == doctest::Approx(a.scaler.inverse(predict(models[0].network, one)[0])));
    CHECK(out.at("r")[0] != out.at("q")[0]);

    CHECK_THROWS_AS((void)predict_network(models, assignment, {{"nope", {w}}}), ConfigError);
    CHECK_THROWS_AS((void)predict_network(std::span<const GroupModel>(models.data(), 1), assignment, {{"q", {w}}}),
                    ConfigError);
}

TEST_CASE("swapping inputs of two members of one group swaps their predictions") {
    auto s1 = ramp(200);
    auto s2 = ramp(200);
    s2.segment_id = "q";
    const std::vector<SegmentSamples> members{make_samples(s1, toy_options()), make_samples(s2, toy_options())};
    const std::vector<GroupModel> models{train_gm(members, quick(1), 1)};
    const std::map<std::string, std::size_t> assignment{{"r", 0}, {"q", 0}};
    const std::vector<double> w1{10, 20, 30};
    const std::vector<double> w2{50, 40, 30};
    const auto a = predict_network(models, assignment, {{"r", {w1}}, {"q", {w2}}});
    const auto b = predict_network(models, assignment, {{"r", {w2}}, {"q", {w1}}});
    CHECK(a.at("r")[0] == b.at("q")[0]);
    CHECK(a.at("q")[0] == b.at("r")[0]);
}

TEST_CASE("aggregate_metrics") {
    const std::vector<SegmentErrors> two{errors_of("a", 0, {0.03, 0.05}), errors_of("b", 0, {0.06})};
    const auto r = aggregate_metrics(two);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].test_mre == doctest::Approx(0.05));
    CHECK(r.groups[0].mare == doctest::Approx(0.06));
    CHECK(r.groups[0].mire == doctest::Approx(0.04));

    const std::vector<SegmentErrors> one{errors_of("a", 0, {0.1, 0.3}, {0.1})};
    const auto s = aggregate_metrics(one);
    CHECK(s.groups[0].test_mre == s.groups[0].mare);
    CHECK(s.groups[0].test_mre == s.groups[0].mire);
    CHECK(s.groups[0].gap == doctest::Approx(0.1));

    const std::vector<SegmentErrors> hole{errors_of("a", 1, {0.1})};
    CHECK_THROWS_AS((void)aggregate_metrics(hole), DataError);
    CHECK_THROWS_AS((void)aggregate_metrics(std::span<const SegmentErrors>()), DataError);
}

TEST_CASE("aggregate_metrics matches a naive recomputation") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 1 + uniform_index(rng, 4);
        std::vector<SegmentErrors> errs;
        for (std::size_t i = 0; i < k + uniform_index(rng, 8); ++i) {
            std::vector<double> test(1 + uniform_index(rng, 20));
            std::vector<double> train(1 + uniform_index(rng, 20));
            for (auto& v : test) {
                v = 0.2 * uniform01(rng);
            }
            for (auto& v : train) {
                v = 0.2 * uniform01(rng);
            }
            errs.push_back(errors_of("s" + std::to_string(i), i < k ? i : uniform_index(rng, k), test, train));
        }
        const auto r = aggregate_metrics(errs);
        for (std::size_t g = 0; g < k; ++g) {
            double tr = 0, te = 0, hi = -1, lo = 2;
            std::size_t n = 0;
            for (const auto& e : errs) {
                if (e.group != g) {
                    continue;
                }
                double a = 0, b = 0;
                for (double v : e.train_re) a += v;
                for (double v : e.test_re) b += v;
                a /= e.train_re.size();
                b /= e.test_re.size();
                tr += a;
                te += b;
                hi = std::max(hi, b);
                lo = std::min(lo, b);
                ++n;
            }
            CHECK(r.groups[g].train_mre == tr / n);
            CHECK(r.groups[g].test_mre == te / n);
            CHECK(r.groups[g].mare == hi);
            CHECK(r.groups[g].mire == lo);
            CHECK(r.groups[g].mire <= r.groups[g].test_mre);
            CHECK(r.groups[g].test_mre <= r.groups[g].mare);
        }
    }
}

TEST_CASE("horizon labels") {
    CHECK(horizon_label(1) == "five-minute");
    CHECK(horizon_label(2) == "ten-minute");
    CHECK(horizon_label(3) == "fifteen-minute");
}

TEST_CASE("an empty horizon set gives an empty table") {
    const std::vector<SpeedSeries> series{ramp(200)};
    const std::vector<std::size_t> assignment{0};
    const auto out = horizon_sweep(series, assignment, toy_options(), quick(1), std::span<const std::size_t>(), 1);
    CHECK(out.empty());
}

TEST_CASE("test error grows with the horizon on smooth synthetic data") {
    // No white measurement noise: what remains is the smooth daily shape
    // and the autocorrelated fluctuation, whose forecast error grows with
    // the horizon.
    SynthSpec spec;
    spec.archetypes.resize(1);
    spec.archetypes[0].obs_noise = 0;
    spec.segments_per_archetype = 3;
    spec.days = 8;
    spec.seed = 3;
    const auto net = generate(spec);
    SampleOptions o;
    o.sample_step = 4;
    auto cfg = quick(10);
    cfg.train.batch_size = 32;
    const std::vector<std::size_t> horizons{1, 2, 3};
    const auto res = horizon_sweep(net.series, net.labels, o, cfg, horizons, 1, false);
    REQUIRE(res.size() == 3);
    CHECK(res[0].gm.network_test_mre <= res[1].gm.network_test_mre);
    CHECK(res[1].gm.network_test_mre <= res[2].gm.network_test_mre);
}

TEST_CASE("a group model of nine same-archetype segments stays under 8% test MRE") {
    SynthSpec spec;
    spec.archetypes.resize(1);
    spec.days = 20;
    spec.seed = 2;
    const auto net = generate(spec);
    SampleOptions o;
    o.sample_step = 8;
    o.eval_step = 4;
    auto cfg = quick(10);
    cfg.train.batch_size = 32;
    const std::vector<std::size_t> h{1};
    const auto res = horizon_sweep(net.series, net.labels, o, cfg, h, 1, false);
    CHECK(res[0].gm.groups[0].test_mre < 0.08);
}
