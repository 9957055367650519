#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trafficast/ingest.hpp"
#include "trafficast/nn/network.hpp"
#include "trafficast/nn/optimizer.hpp"

namespace trafficast {

enum class TargetConvention {
    /// Target sits `horizon` slots after the last input value:
    /// index t + (N_i - 1) * l + N_o.
    after_last_input,
    /// Target index t + N_i + N_o, read literally.
    literal,
};

struct SampleOptions {
    /// N_i, the number of input values per window.
    std::size_t input_length = 58;
    /// l, the spacing between input values.
    std::size_t stride = 5;
    /// N_o, prediction horizon in sampling slots.
    std::size_t horizon = 1;
    /// Chronological fraction of windows used for training.
    double split = 0.8;
    TargetConvention convention = TargetConvention::after_last_input;
    /// Keep every k-th training window (1 keeps all).
    std::size_t sample_step = 1;
    /// Keep every k-th test window when evaluating.
    std::size_t eval_step = 1;

    [[nodiscard]] std::size_t target_offset() const;
    void validate() const;
};

/// Windows of one or more segments. Values are normalized by the owning
/// segment's scaler.
struct SampleSet {
    std::size_t input_length = 0;
    /// size() * input_length values, one window per row.
    std::vector<double> inputs;
    std::vector<double> targets;
    /// Index of the owning segment within its group.
    std::vector<std::size_t> member;
    /// 0-based window start in the owning series.
    std::vector<std::size_t> start;
    /// Epoch seconds of each target.
    std::vector<std::int64_t> target_time;

    [[nodiscard]] std::size_t size() const { return targets.size(); }
    [[nodiscard]] std::span<const double> input(std::size_t i) const {
        return std::span<const double>(inputs).subspan(i * input_length, input_length);
    }
    void append(const SampleSet& other, std::size_t member_index);
    /// The listed rows, in the order given.
    [[nodiscard]] SampleSet subset(std::span<const std::size_t> rows) const;
};

struct SegmentSamples {
    std::string segment_id;
    MinMaxScaler scaler;
    SampleSet train;
    SampleSet test;
};

/// Every window whose inputs and target are present, split chronologically:
/// the first floor(split * n) windows train, the rest test. The scaler is fit
/// on the values the training windows touch.
[[nodiscard]] SegmentSamples make_samples(const SpeedSeries& s, const SampleOptions& options);

/// Contiguous time-ordered folds: fold f validates on rows
/// [f * n / folds, (f + 1) * n / folds) and trains on the rest.
[[nodiscard]] std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    std::size_t samples, std::size_t folds);

struct PredictorConfig {
    nn::TrainConfig train{.learning_rate = 1e-3, .batch_size = 64, .epochs = 30};
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping.
    std::size_t patience = 5;
    /// The last 1/folds of each member's training windows validates the
    /// early-stopping rule.
    std::size_t folds = 10;
    /// Run full k-fold cross-validation (one extra model per fold) and report
    /// the mean validation MRE. Costly; off by default.
    bool cross_validate = false;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_mre;
    std::size_t best_epoch = 0;
    /// Mean validation MRE over folds when cross-validation ran.
    std::optional<double> cv_mre;
};

/// One trained predictor shared by its members.
struct GroupModel {
    std::size_t group = 0;
    std::vector<std::string> members;
    std::map<std::string, MinMaxScaler> scalers;
    nn::Network network;
    TrainHistory history;
};

/// Pools the training windows of all members, trains with MSE on shuffled
/// batches and early stopping on validation MRE. Deterministic per seed.
[[nodiscard]] GroupModel train_gm(std::span<const SegmentSamples> members, const PredictorConfig& config,
                                  std::uint64_t seed, std::size_t group = 0);
/// The individual model: train_gm over a single member.
[[nodiscard]] GroupModel train_im(const SegmentSamples& segment, const PredictorConfig& config, std::uint64_t seed);

/// Normalized predictions of a network for every window of `set`.
[[nodiscard]] std::vector<double> predict(const nn::Network& network, const SampleSet& set);

/// |true - pred| / true, or nothing when true <= 0.
[[nodiscard]] std::optional<double> relative_error(double truth, double prediction);

/// Routes raw (km/h) windows of each segment through its group's model and
/// returns km/h predictions. Throws ConfigError for a segment without a
/// group or a group without a model.
[[nodiscard]] std::map<std::string, std::vector<double>> predict_network(
    std::span<const GroupModel> models, const std::map<std::string, std::size_t>& assignment,
    const std::map<std::string, std::vector<std::vector<double>>>& windows);

struct PointPrediction {
    std::int64_t timestamp = 0;
    double truth = 0.0;
    double prediction = 0.0;
    std::optional<double> re;
};

struct SegmentErrors {
    std::string segment_id;
    std::size_t group = 0;
    std::vector<double> train_re;
    std::vector<double> test_re;
    /// Points skipped because the true speed was <= 0.
    std::size_t excluded = 0;
    std::vector<PointPrediction> test_points;
};

/// Errors of a model on one segment's training and test windows.
[[nodiscard]] SegmentErrors evaluate_segment(const GroupModel& model, const SegmentSamples& segment,
                                             std::size_t group, std::size_t eval_step = 1);

struct SegmentMetrics {
    std::string segment_id;
    std::size_t group = 0;
    double train_mre = 0.0;
    double test_mre = 0.0;
    std::size_t test_points = 0;
    std::size_t excluded = 0;
};

struct GroupMetrics {
    std::size_t group = 0;
    std::size_t members = 0;
    double train_mre = 0.0;
    double test_mre = 0.0;
    double gap = 0.0;
    double mare = 0.0;
    double mire = 0.0;
    /// Mean over all test points of the group rather than over segments.
    double pooled_test_mre = 0.0;
};

struct EvalReport {
    std::vector<SegmentMetrics> segments;
    std::vector<GroupMetrics> groups;
    double network_train_mre = 0.0;
    double network_test_mre = 0.0;
    std::size_t excluded = 0;
};

/// Segment MRE is the mean of its REs; group MRE the unweighted mean of its
/// members' MREs; MARE and MIRE the largest and smallest member test MRE.
/// Groups are numbered 0..K-1 and each must have a member.
[[nodiscard]] EvalReport aggregate_metrics(std::span<const SegmentErrors> errors);

/// "five-minute", "ten-minute", ... for a horizon in slots of `step` seconds.
[[nodiscard]] std::string horizon_label(std::size_t horizon, std::int64_t step = 300);

struct HorizonResult {
    std::size_t horizon = 0;
    EvalReport gm;
    EvalReport im;
    std::vector<GroupModel> gm_models;
    std::vector<GroupModel> im_models;
    std::vector<SegmentErrors> gm_errors;
    std::vector<SegmentErrors> im_errors;
};

/// Trains one GM per group (and one IM per segment when `with_im`) for each
/// horizon and evaluates both on every segment.
[[nodiscard]] std::vector<HorizonResult> horizon_sweep(std::span<const SpeedSeries> series,
                                                       std::span<const std::size_t> assignment,
                                                       const SampleOptions& options, const PredictorConfig& config,
                                                       std::span<const std::size_t> horizons, std::uint64_t seed,
                                                       bool with_im = true);
/// Same, with separate sample options (input interval and length) for each
/// group; `per_group[g]` applies to the members of group g.
[[nodiscard]] std::vector<HorizonResult> horizon_sweep(std::span<const SpeedSeries> series,
                                                       std::span<const std::size_t> assignment,
                                                       std::span<const SampleOptions> per_group,
                                                       const PredictorConfig& config,
                                                       std::span<const std::size_t> horizons, std::uint64_t seed,
                                                       bool with_im = true);

}  // namespace trafficast
