#include "trafficast/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trafficast/error.hpp"
#include "trafficast/nn/loss.hpp"
#include "trafficast/rng.hpp"

namespace trafficast {

namespace {

constexpr std::size_t kPredictChunk = 256;

double mean_of(std::span<const double> v) {
    if (v.empty()) {
        return 0.0;
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct Pool {
    SampleSet set;
    /// Scaler of each row's member.
    std::vector<const MinMaxScaler*> scaler;

    void add(const SampleSet& rows, const MinMaxScaler& s, std::size_t member) {
        set.append(rows, member);
        scaler.insert(scaler.end(), rows.size(), &s);
    }
};

double mean_relative_error(const nn::Network& net, const Pool& pool) {
    const auto pred = predict(net, pool.set);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto re = relative_error(pool.scaler[i]->inverse(pool.set.targets[i]), pool.scaler[i]->inverse(pred[i]));
        if (re) {
            sum += *re;
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

/// Trains a fresh predictor on `train`; with a non-empty `validation` and
/// patience > 0 it keeps the parameters of the best validation epoch.
nn::Network fit(const Pool& train, const Pool& validation, const PredictorConfig& config, std::uint64_t seed,
                std::size_t input_length, TrainHistory& history) {
    nn::Network net = nn::make_predictor(input_length);
    Rng init = make_rng(seed, "predictor/init");
    net.initialize(init);
    if (train.set.size() == 0) {
        throw DataError("no training windows");
    }
    Rng order_rng = make_rng(seed, "predictor/shuffle");
    nn::Adam adam(net.parameter_count(), config.train);
    const bool early = config.patience > 0 && validation.set.size() > 0;
    std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    const std::size_t n = train.set.size();
    const std::size_t B = config.train.batch_size;
    const std::size_t T = input_length;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grads(net.parameter_count());
    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), order_rng);
        double loss_sum = 0.0;
        for (std::size_t first = 0; first < n; first += B) {
            const std::size_t count = std::min(B, n - first);
            nn::Tensor x({count, T, 1});
            nn::Tensor y({count, 1});
            for (std::size_t b = 0; b < count; ++b) {
                const auto row = order[first + b];
                const auto in = train.set.input(row);
                std::copy(in.begin(), in.end(), x.data().begin() + static_cast<std::ptrdiff_t>(b * T));
                y[b] = train.set.targets[row];
            }
            nn::Trace trace;
            const nn::Tensor out = net.forward(x, trace);
            nn::Tensor grad;
            const double loss = nn::mse_loss(out, y, &grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("predictor loss became non-finite in epoch " + std::to_string(epoch + 1));
            }
            loss_sum += loss * static_cast<double>(count);
            std::fill(grads.begin(), grads.end(), 0.0);
            net.backward(trace, grad, grads);
            adam.step(net.parameters(), grads);
        }
        history.train_loss.push_back(loss_sum / static_cast<double>(n));
        if (!early) {
            continue;
        }
        const double val = mean_relative_error(net, validation);
        history.validation_mre.push_back(val);
        if (val < best) {
            best = val;
            history.best_epoch = epoch + 1;
            std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    if (early && !history.validation_mre.empty()) {
        std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
    } else {
        history.best_epoch = history.train_loss.size();
    }
    return net;
}

}  // namespace

std::size_t SampleOptions::target_offset() const {
    return convention == TargetConvention::after_last_input ? (input_length - 1) * stride + horizon
                                                            : input_length + horizon;
}

void SampleOptions::validate() const {
    if (input_length == 0) {
        throw ConfigError("predict.input_length: must be at least 1");
    }
    if (stride == 0) {
        throw ConfigError("predict.stride: must be at least 1");
    }
    if (horizon == 0) {
        throw ConfigError("predict.horizon: must be at least 1");
    }
    if (!(split > 0.0 && split < 1.0)) {
        throw ConfigError("predict.split: must lie strictly between 0 and 1");
    }
    if (sample_step == 0 || eval_step == 0) {
        throw ConfigError("predict.sample_step/eval_step: must be at least 1");
    }
}

void SampleSet::append(const SampleSet& other, std::size_t member_index) {
    if (input_length == 0) {
        input_length = other.input_length;
    }
    if (other.size() > 0 && other.input_length != input_length) {
        throw ConfigError("cannot pool windows of different lengths");
    }
    inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
    targets.insert(targets.end(), other.targets.begin(), other.targets.end());
    member.insert(member.end(), other.size(), member_index);
    start.insert(start.end(), other.start.begin(), other.start.end());
    target_time.insert(target_time.end(), other.target_time.begin(), other.target_time.end());
}

SampleSet SampleSet::subset(std::span<const std::size_t> rows) const {
    SampleSet out;
    out.input_length = input_length;
    for (auto r : rows) {
        const auto in = input(r);
        out.inputs.insert(out.inputs.end(), in.begin(), in.end());
        out.targets.push_back(targets.at(r));
        out.member.push_back(member.at(r));
        out.start.push_back(start.at(r));
        out.target_time.push_back(target_time.at(r));
    }
    return out;
}

SegmentSamples make_samples(const SpeedSeries& s, const SampleOptions& options) {
    options.validate();
    const std::size_t off = options.target_offset();
    const std::size_t last_input = (options.input_length - 1) * options.stride;
    const std::size_t extent = std::max(off, last_input);
    if (s.size() <= extent) {
        throw DataError("series '" + s.segment_id + "' of length " + std::to_string(s.size()) +
                        " is too short for one window spanning " + std::to_string(extent + 1) + " slots");
    }
    std::vector<std::size_t> valid;
    for (std::size_t t = 0; t + extent < s.size(); ++t) {
        bool ok = !is_missing(s.values[t + off]);
        for (std::size_t i = 0; ok && i < options.input_length; ++i) {
            ok = !is_missing(s.values[t + i * options.stride]);
        }
        if (ok) {
            valid.push_back(t);
        }
    }
    const auto n_train = static_cast<std::size_t>(std::floor(options.split * static_cast<double>(valid.size())));
    if (n_train == 0 || n_train == valid.size()) {
        throw DataError("series '" + s.segment_id + "' yields " + std::to_string(valid.size()) +
                        " windows, too few to split into train and test");
    }

    SegmentSamples out;
    out.segment_id = s.segment_id;
    {
        std::vector<double> touched;
        for (std::size_t i = valid.front(); i <= valid[n_train - 1] + extent; ++i) {
            if (!is_missing(s.values[i])) {
                touched.push_back(s.values[i]);
            }
        }
        out.scaler = fit_minmax(touched);
    }
    auto emit = [&](SampleSet& set, std::size_t t) {
        set.input_length = options.input_length;
        for (std::size_t i = 0; i < options.input_length; ++i) {
            set.inputs.push_back(out.scaler.transform(s.values[t + i * options.stride]));
        }
        set.targets.push_back(out.scaler.transform(s.values[t + off]));
        set.member.push_back(0);
        set.start.push_back(t);
        set.target_time.push_back(s.timestamp(t + off));
    };
    out.train.input_length = options.input_length;
    out.test.input_length = options.input_length;
    for (std::size_t i = 0; i < n_train; i += options.sample_step) {
        emit(out.train, valid[i]);
    }
    for (std::size_t i = n_train; i < valid.size(); i += options.eval_step) {
        emit(out.test, valid[i]);
    }
    return out;
}

std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(std::size_t samples,
                                                                                      std::size_t folds) {
    if (folds < 2) {
        throw ConfigError("k-fold split needs at least 2 folds");
    }
    if (samples < folds) {
        throw ConfigError("k-fold split needs at least as many samples (" + std::to_string(samples) +
                          ") as folds (" + std::to_string(folds) + ")");
    }
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t lo = f * samples / folds;
        const std::size_t hi = (f + 1) * samples / folds;
        for (std::size_t i = 0; i < samples; ++i) {
            (i >= lo && i < hi ? out[f].second : out[f].first).push_back(i);
        }
    }
    return out;
}

void PredictorConfig::validate() const {
    train.validate();
    if (folds < 2) {
        throw ConfigError("predict.folds: must be at least 2");
    }
}

GroupModel train_gm(std::span<const SegmentSamples> members, const PredictorConfig& config, std::uint64_t seed,
                    std::size_t group) {
    config.validate();
    if (members.empty()) {
        throw ConfigError("cannot train a model for an empty group");
    }
    GroupModel model;
    model.group = group;
    const std::size_t input_length = members[0].train.input_length;
    for (const auto& m : members) {
        if (m.train.input_length != input_length) {
            throw ConfigError("group members disagree on the input length");
        }
        model.members.push_back(m.segment_id);
        model.scalers[m.segment_id] = m.scaler;
    }

    const bool early = config.patience > 0;
    Pool train;
    Pool validation;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        if (early && m.train.size() >= config.folds) {
            const auto split = kfold_split(m.train.size(), config.folds).back();
            train.add(m.train.subset(split.first), m.scaler, i);
            validation.add(m.train.subset(split.second), m.scaler, i);
        } else {
            train.add(m.train, m.scaler, i);
        }
    }
    model.network = fit(train, validation, config, seed, input_length, model.history);

    if (config.cross_validate) {
        std::vector<std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>> splits;
        for (const auto& m : members) {
            splits.push_back(kfold_split(m.train.size(), config.folds));
        }
        double total = 0.0;
        for (std::size_t f = 0; f < config.folds; ++f) {
            Pool fold_train;
            Pool fold_val;
            for (std::size_t i = 0; i < members.size(); ++i) {
                fold_train.add(members[i].train.subset(splits[i][f].first), members[i].scaler, i);
                fold_val.add(members[i].train.subset(splits[i][f].second), members[i].scaler, i);
            }
            PredictorConfig fixed = config;
            fixed.patience = 0;
            TrainHistory h;
            const nn::Network net = fit(fold_train, {}, fixed, derive_seed(seed, "cv/fold" + std::to_string(f)),
                                        input_length, h);
            total += mean_relative_error(net, fold_val);
        }
        model.history.cv_mre = total / static_cast<double>(config.folds);
    }
    return model;
}

GroupModel train_im(const SegmentSamples& segment, const PredictorConfig& config, std::uint64_t seed) {
    return train_gm(std::span<const SegmentSamples>(&segment, 1), config, seed, 0);
}

std::vector<double> predict(const nn::Network& network, const SampleSet& set) {
    const std::size_t T = set.input_length;
    std::vector<double> out;
    out.reserve(set.size());
    for (std::size_t first = 0; first < set.size(); first += kPredictChunk) {
        const std::size_t count = std::min(kPredictChunk, set.size() - first);
        nn::Tensor x({count, T, 1});
        std::copy_n(set.inputs.begin() + static_cast<std::ptrdiff_t>(first * T), count * T, x.data().begin());
        const nn::Tensor y = network.forward(x);
        out.insert(out.end(), y.data().begin(), y.data().end());
    }
    return out;
}

std::optional<double> relative_error(double truth, double prediction) {
    if (!(truth > 0.0)) {
        return std::nullopt;
    }
    return std::abs(truth - prediction) / truth;
}

std::map<std::string, std::vector<double>> predict_network(
    std::span<const GroupModel> models, const std::map<std::string, std::size_t>& assignment,
    const std::map<std::string, std::vector<std::vector<double>>>& windows) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [segment, rows] : windows) {
        const auto group = assignment.find(segment);
        if (group == assignment.end()) {
            throw ConfigError("segment '" + segment + "' is not assigned to any group");
        }
        const auto model = std::find_if(models.begin(), models.end(),
                                        [&](const GroupModel& m) { return m.group == group->second; });
        if (model == models.end()) {
            throw ConfigError("group " + std::to_string(group->second) + " has no trained model");
        }
        const auto scaler = model->scalers.find(segment);
        if (scaler == model->scalers.end()) {
            throw ConfigError("model of group " + std::to_string(group->second) + " has no scaler for segment '" +
                              segment + "'");
        }
        SampleSet set;
        set.input_length = model->network.input_shape().at(0);
        for (const auto& w : rows) {
            if (w.size() != set.input_length) {
                throw ConfigError("window of length " + std::to_string(w.size()) + " for segment '" + segment +
                                  "', model expects " + std::to_string(set.input_length));
            }
            for (double v : w) {
                set.inputs.push_back(scaler->second.transform(v));
            }
            set.targets.push_back(0.0);
        }
        auto pred = predict(model->network, set);
        for (auto& p : pred) {
            p = scaler->second.inverse(p);
        }
        out[segment] = std::move(pred);
    }
    return out;
}

SegmentErrors evaluate_segment(const GroupModel& model, const SegmentSamples& segment, std::size_t group,
                               std::size_t eval_step) {
    if (eval_step == 0) {
        throw ConfigError("eval_step must be at least 1");
    }
    SegmentErrors out;
    out.segment_id = segment.segment_id;
    out.group = group;
    const MinMaxScaler& scaler = segment.scaler;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < segment.train.size(); i += eval_step) {
        rows.push_back(i);
    }
    const SampleSet train = segment.train.subset(rows);
    const auto train_pred = predict(model.network, train);
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (auto re = relative_error(scaler.inverse(train.targets[i]), scaler.inverse(train_pred[i]))) {
            out.train_re.push_back(*re);
        }
    }
    const auto test_pred = predict(model.network, segment.test);
    for (std::size_t i = 0; i < segment.test.size(); ++i) {
        PointPrediction p;
        p.timestamp = segment.test.target_time[i];
        p.truth = scaler.inverse(segment.test.targets[i]);
        p.prediction = scaler.inverse(test_pred[i]);
        p.re = relative_error(p.truth, p.prediction);
        if (p.re) {
            out.test_re.push_back(*p.re);
        } else {
            ++out.excluded;
        }
        out.test_points.push_back(p);
    }
    return out;
}

EvalReport aggregate_metrics(std::span<const SegmentErrors> errors) {
    if (errors.empty()) {
        throw DataError("no segments to aggregate");
    }
    EvalReport report;
    std::size_t k = 0;
    for (const auto& e : errors) {
        if (e.test_re.empty()) {
            throw DataError("segment '" + e.segment_id + "' has no test errors");
        }
        k = std::max(k, e.group + 1);
        SegmentMetrics m;
        m.segment_id = e.segment_id;
        m.group = e.group;
        m.train_mre = mean_of(e.train_re);
        m.test_mre = mean_of(e.test_re);
        m.test_points = e.test_re.size();
        m.excluded = e.excluded;
        report.excluded += e.excluded;
        report.segments.push_back(m);
    }
    for (std::size_t g = 0; g < k; ++g) {
        GroupMetrics gm;
        gm.group = g;
        gm.mare = -std::numeric_limits<double>::infinity();
        gm.mire = std::numeric_limits<double>::infinity();
        double pooled = 0.0;
        std::size_t points = 0;
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (errors[i].group != g) {
                continue;
            }
            const auto& m = report.segments[i];
            ++gm.members;
            gm.train_mre += m.train_mre;
            gm.test_mre += m.test_mre;
            gm.mare = std::max(gm.mare, m.test_mre);
            gm.mire = std::min(gm.mire, m.test_mre);
            pooled += std::accumulate(errors[i].test_re.begin(), errors[i].test_re.end(), 0.0);
            points += errors[i].test_re.size();
        }
        if (gm.members == 0) {
            throw DataError("group " + std::to_string(g) + " has no segments");
        }
        gm.train_mre /= static_cast<double>(gm.members);
        gm.test_mre /= static_cast<double>(gm.members);
        gm.gap = gm.test_mre - gm.train_mre;
        gm.pooled_test_mre = pooled / static_cast<double>(points);
        report.groups.push_back(gm);
    }
    for (const auto& m : report.segments) {
        report.network_train_mre += m.train_mre;
        report.network_test_mre += m.test_mre;
    }
    report.network_train_mre /= static_cast<double>(report.segments.size());
    report.network_test_mre /= static_cast<double>(report.segments.size());
    return report;
}

std::string horizon_label(std::size_t horizon, std::int64_t step) {
    static const char* const kNumbers[] = {"zero",   "one",    "two",     "three",    "four",    "five",
                                           "six",    "seven",  "eight",   "nine",     "ten",     "eleven",
                                           "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen",
                                           "eighteen", "nineteen", "twenty"};
    const auto seconds = static_cast<std::int64_t>(horizon) * step;
    if (seconds % 60 != 0) {
        return std::to_string(seconds) + "-second";
    }
    const auto minutes = seconds / 60;
    std::string words;
    if (minutes <= 20) {
        words = kNumbers[minutes];
    } else if (minutes < 60 && minutes % 5 == 0) {
        static const char* const kTens[] = {"", "", "twenty", "thirty", "forty", "fifty"};
        words = kTens[minutes / 10];
        if (minutes % 10 != 0) {
            words += std::string("-") + kNumbers[minutes % 10];
        }
    } else {
        words = std::to_string(minutes);
    }
    return words + "-minute";
}

std::vector<HorizonResult> horizon_sweep(std::span<const SpeedSeries> series, std::span<const std::size_t> assignment,
                                         const SampleOptions& options, const PredictorConfig& config,
                                         std::span<const std::size_t> horizons, std::uint64_t seed, bool with_im) {
    if (assignment.empty()) {
        throw ConfigError("horizon sweep needs one group assignment per series");
    }
    const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    const std::vector<SampleOptions> per_group(k, options);
    return horizon_sweep(series, assignment, per_group, config, horizons, seed, with_im);
}

std::vector<HorizonResult> horizon_sweep(std::span<const SpeedSeries> series, std::span<const std::size_t> assignment,
                                         std::span<const SampleOptions> per_group, const PredictorConfig& config,
                                         std::span<const std::size_t> horizons, std::uint64_t seed, bool with_im) {
    if (assignment.size() != series.size() || series.empty()) {
        throw ConfigError("horizon sweep needs one group assignment per series");
    }
    std::vector<HorizonResult> out;
    if (horizons.empty()) {
        return out;
    }
    const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    if (per_group.size() != k) {
        throw ConfigError("horizon sweep needs sample options for each of the " + std::to_string(k) + " groups");
    }
    for (const std::size_t h : horizons) {
        std::vector<SegmentSamples> samples;
        for (std::size_t i = 0; i < series.size(); ++i) {
            SampleOptions opt = per_group[assignment[i]];
            opt.horizon = h;
            samples.push_back(make_samples(series[i], opt));
        }
        HorizonResult result;
        result.horizon = h;
        result.gm_errors.resize(series.size());
        for (std::size_t g = 0; g < k; ++g) {
            std::vector<SegmentSamples> members;
            std::vector<std::size_t> index;
            for (std::size_t i = 0; i < series.size(); ++i) {
                if (assignment[i] == g) {
                    members.push_back(samples[i]);
                    index.push_back(i);
                }
            }
            if (members.empty()) {
                throw ConfigError("group " + std::to_string(g) + " has no segments");
            }
            const auto gseed = derive_seed(seed, "gm/h" + std::to_string(h) + "/g" + std::to_string(g));
            result.gm_models.push_back(train_gm(members, config, gseed, g));
            for (auto i : index) {
                result.gm_errors[i] = evaluate_segment(result.gm_models.back(), samples[i], g, per_group[g].eval_step);
            }
        }
        result.gm = aggregate_metrics(result.gm_errors);
        if (with_im) {
            for (std::size_t i = 0; i < series.size(); ++i) {
                const auto iseed = derive_seed(seed, "im/h" + std::to_string(h) + "/" + series[i].segment_id);
                result.im_models.push_back(train_im(samples[i], config, iseed));
                result.im_errors.push_back(
                    evaluate_segment(result.im_models.back(), samples[i], assignment[i],
                                     per_group[assignment[i]].eval_step));
            }
            result.im = aggregate_metrics(result.im_errors);
        }
        out.push_back(std::move(result));
    }
    return out;
}

}  // namespace trafficast
