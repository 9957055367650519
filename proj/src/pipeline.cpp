#include "trafficast/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "trafficast/error.hpp"
#include "trafficast/nn/checkpoint.hpp"
#include "trafficast/raster.hpp"
#include "trafficast/rng.hpp"

namespace trafficast {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr std::int64_t kSecondsPerDay = 86400;

/// Shortest text that reads back as the same double.
std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json read_json(const fs::path& path) {
    if (!fs::exists(path)) {
        throw Error(path.filename().string() + " not found in " + path.parent_path().string() +
                    "; run the stage that produces it first");
    }
    try {
        return Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
    const std::int64_t r = a % b;
    return r < 0 ? r + b : r;
}

/// Cuts a raw series to whole periods. Daily periods are aligned to local
/// midnight; others start at the first sample.
SpeedSeries trim_to_periods(const SpeedSeries& s, std::size_t period, std::chrono::seconds offset) {
    SpeedSeries out = s;
    std::size_t skip = 0;
    if (static_cast<std::int64_t>(period) * s.step == kSecondsPerDay) {
        const std::int64_t into_day = floor_mod(s.t0 + offset.count(), kSecondsPerDay);
        if (into_day % s.step != 0) {
            throw DataError("series '" + s.segment_id + "' samples are not aligned to the sampling grid");
        }
        skip = into_day == 0 ? 0 : static_cast<std::size_t>((kSecondsPerDay - into_day) / s.step);
    }
    if (skip >= s.size()) {
        throw DataError("series '" + s.segment_id + "' does not cover one whole period");
    }
    const std::size_t whole = (s.size() - skip) / period * period;
    if (whole == 0) {
        throw DataError("series '" + s.segment_id + "' does not cover one whole period");
    }
    out.t0 = s.t0 + static_cast<std::int64_t>(skip) * s.step;
    out.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(skip),
                      s.values.begin() + static_cast<std::ptrdiff_t>(skip + whole));
    return out;
}

std::vector<std::size_t> read_labels(const fs::path& path, std::span<const SpeedSeries> series) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open labels file " + path.string());
    }
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::size_t> names;
    std::map<std::string, std::size_t> by_segment;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected segment_id,archetype");
        }
        const std::string name = line.substr(comma + 1);
        const auto [it, inserted] = names.emplace(name, names.size());
        by_segment[line.substr(0, comma)] = it->second;
    }
    std::vector<std::size_t> out;
    for (const auto& s : series) {
        const auto it = by_segment.find(s.segment_id);
        if (it == by_segment.end()) {
            throw DataError("labels file " + path.string() + " has no entry for '" + s.segment_id + "'");
        }
        out.push_back(it->second);
    }
    return out;
}

fs::path labels_path(const PipelineConfig& config, const fs::path& out_dir) {
    if (!config.data.labels.empty()) {
        return config.data.labels;
    }
    if (config.data.input.empty() && fs::exists(out_dir / "labels.csv")) {
        return out_dir / "labels.csv";
    }
    return {};
}

std::vector<std::size_t> ordered_assignment(std::span<const SpeedSeries> series,
                                            const std::map<std::string, std::size_t>& groups) {
    std::vector<std::size_t> out;
    for (const auto& s : series) {
        const auto it = groups.find(s.segment_id);
        if (it == groups.end()) {
            throw DataError("segment '" + s.segment_id + "' is missing from clusters.json");
        }
        out.push_back(it->second);
    }
    return out;
}

Json metrics_json(const EvalReport& r) {
    Json segments = Json::array();
    for (const auto& m : r.segments) {
        segments.push_back({{"segment_id", m.segment_id},
                            {"group", m.group},
                            {"train_mre", m.train_mre},
                            {"test_mre", m.test_mre},
                            {"test_points", m.test_points},
                            {"excluded", m.excluded}});
    }
    Json groups = Json::array();
    for (const auto& g : r.groups) {
        groups.push_back({{"group", g.group},
                          {"members", g.members},
                          {"train_mre", g.train_mre},
                          {"test_mre", g.test_mre},
                          {"gap", g.gap},
                          {"mare", g.mare},
                          {"mire", g.mire},
                          {"pooled_test_mre", g.pooled_test_mre}});
    }
    return {{"network_train_mre", r.network_train_mre},
            {"network_test_mre", r.network_test_mre},
            {"excluded", r.excluded},
            {"groups", groups},
            {"segments", segments}};
}

EvalReport metrics_from_json(const Json& j) {
    EvalReport r;
    r.network_train_mre = j.at("network_train_mre").get<double>();
    r.network_test_mre = j.at("network_test_mre").get<double>();
    r.excluded = j.at("excluded").get<std::size_t>();
    for (const auto& g : j.at("groups")) {
        GroupMetrics m;
        m.group = g.at("group").get<std::size_t>();
        m.members = g.at("members").get<std::size_t>();
        m.train_mre = g.at("train_mre").get<double>();
        m.test_mre = g.at("test_mre").get<double>();
        m.gap = g.at("gap").get<double>();
        m.mare = g.at("mare").get<double>();
        m.mire = g.at("mire").get<double>();
        m.pooled_test_mre = g.at("pooled_test_mre").get<double>();
        r.groups.push_back(m);
    }
    for (const auto& s : j.at("segments")) {
        SegmentMetrics m;
        m.segment_id = s.at("segment_id").get<std::string>();
        m.group = s.at("group").get<std::size_t>();
        m.train_mre = s.at("train_mre").get<double>();
        m.test_mre = s.at("test_mre").get<double>();
        m.test_points = s.at("test_points").get<std::size_t>();
        m.excluded = s.at("excluded").get<std::size_t>();
        r.segments.push_back(m);
    }
    return r;
}

Json history_json(const TrainHistory& h) {
    Json j = {{"best_epoch", h.best_epoch}, {"train_loss", h.train_loss}, {"validation_mre", h.validation_mre}};
    if (h.cv_mre) {
        j["cv_mre"] = *h.cv_mre;
    }
    return j;
}

/// Sample options of each group for the chosen intervals.
std::vector<SampleOptions> group_options(const PipelineConfig& config, const fs::path& out_dir, std::size_t k) {
    std::vector<std::size_t> strides(k, config.interval.stride);
    if (config.interval.stride == 0) {
        const Json doc = read_json(out_dir / "interval.json");
        const auto global = doc.at("interval").get<std::size_t>();
        std::fill(strides.begin(), strides.end(), global);
        if (config.interval.per_group) {
            const auto per = doc.at("per_group").get<std::vector<std::size_t>>();
            if (per.size() != k) {
                throw DataError("interval.json lists " + std::to_string(per.size()) + " group intervals, expected " +
                                std::to_string(k));
            }
            strides = per;
        }
    }
    std::vector<SampleOptions> out;
    for (const auto l : strides) {
        SampleOptions o = config.predict.samples;
        o.stride = l;
        o.input_length = input_length(config.data.period, l);
        out.push_back(o);
    }
    return out;
}

std::string gm_file(std::size_t horizon, std::size_t group) {
    return "models/gm_h" + std::to_string(horizon) + "_g" + std::to_string(group + 1) + ".ckpt";
}

std::string im_file(std::size_t horizon, const std::string& segment) {
    return "models/im_h" + std::to_string(horizon) + "_" + segment + ".ckpt";
}

Json model_entry(const GroupModel& m, const std::string& file, const SampleOptions& o) {
    Json scalers = Json::array();
    for (const auto& id : m.members) {
        const auto& s = m.scalers.at(id);
        scalers.push_back({{"segment_id", id}, {"min", s.min()}, {"max", s.max()}});
    }
    return {{"group", m.group},          {"file", file},       {"stride", o.stride},
            {"input_length", o.input_length}, {"members", m.members}, {"scalers", scalers},
            {"history", history_json(m.history)}};
}

}  // namespace

SynthSpec synth_spec(const PipelineConfig& config) {
    SynthSpec spec;
    spec.segments_per_archetype = config.synth.segments_per_archetype;
    spec.days = config.synth.days;
    spec.period = config.data.period;
    spec.step = config.data.step;
    spec.seed = derive_seed(config.seed, "synth");
    spec.start = config.synth.start;
    spec.utc_offset_hours = config.data.utc_offset_hours;
    for (auto& a : spec.archetypes) {
        a.day_jitter *= config.synth.noise_scale;
        a.peak_shift *= config.synth.noise_scale;
        a.fluctuation *= config.synth.noise_scale;
        a.obs_noise *= config.synth.noise_scale;
    }
    return spec;
}

fs::path raw_input(const PipelineConfig& config, const fs::path& out_dir) {
    return config.data.input.empty() ? out_dir / "series.csv" : fs::path(config.data.input);
}

SynthNetwork run_synth(const PipelineConfig& config, const fs::path& out_dir) {
    SynthNetwork net = generate(synth_spec(config));
    fs::create_directories(out_dir);
    write_csv(out_dir / "series.csv", net.series);
    write_labels_csv(out_dir / "labels.csv", net);
    return net;
}

PreparedData prepare_data(const PipelineConfig& config, const fs::path& out_dir) {
    const fs::path input = raw_input(config, out_dir);
    if (config.data.input.empty() && !fs::exists(input)) {
        run_synth(config, out_dir);
    }
    const auto offset = std::chrono::seconds(std::int64_t{config.data.utc_offset_hours} * 3600);
    PreparedData data;
    for (const auto& raw : load_csv(input, LoadOptions{config.data.step})) {
        SegmentStats st;
        st.segment_id = raw.segment_id;
        st.raw_samples = raw.size();
        st.missing = raw.missing_count();
        SpeedSeries s = trim_to_periods(fill_gaps(raw, config.data.max_gap), config.data.period, offset);
        if (!config.data.calendar.empty()) {
            s = apply_calendar_filter(s, config.data.calendar, config.data.period, offset);
        }
        s = drop_incomplete_periods(s, config.data.period);
        data.grids.push_back(split_periodic(s, config.data.period));
        st.days = data.grids.back().days();
        data.stats.push_back(st);
        data.series.push_back(std::move(s));
    }
    if (data.series.empty()) {
        throw DataError(input.string() + " holds no series");
    }
    if (const fs::path labels = labels_path(config, out_dir); !labels.empty()) {
        data.labels = read_labels(labels, data.series);
    }
    return data;
}

PreparedData run_ingest(const PipelineConfig& config, const fs::path& out_dir) {
    PreparedData data = prepare_data(config, out_dir);
    write_csv(out_dir / "cleaned.csv", data.series);
    Json segments = Json::array();
    for (const auto& st : data.stats) {
        segments.push_back({{"segment_id", st.segment_id},
                            {"raw_samples", st.raw_samples},
                            {"missing", st.missing},
                            {"days", st.days}});
    }
    write_json(out_dir / "ingest.json",
               {{"period", config.data.period}, {"max_gap", config.data.max_gap}, {"segments", segments}});
    return data;
}

std::vector<std::pair<double, double>> run_similarity(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    std::vector<double> pooled;
    for (const auto& s : data.series) {
        if (s.size() <= config.data.period) {
            continue;
        }
        const auto r = traffic_similarity(s.values, config.data.period);
        pooled.insert(pooled.end(), r.sim.begin(), r.sim.end());
    }
    if (pooled.empty()) {
        throw DataError("similarity needs at least one segment with two or more days");
    }
    const auto cdf = similarity_cdf(pooled);
    std::string csv = "threshold,fraction\n";
    LineSeries line{"CDF", {}};
    for (const auto& [t, f] : cdf) {
        csv += number(t) + "," + number(f) + "\n";
        line.values.push_back(f);
    }
    write_text(out_dir / "similarity.csv", csv);
    write_text(out_dir / "similarity.svg",
               line_svg(std::span(&line, 1), "Day-to-day similarity CDF", "threshold (0 to 1)", "fraction"));
    return cdf;
}

AcfProfile training_acf(std::span<const SpeedSeries> series, double split, std::size_t max_lag) {
    if (series.empty()) {
        throw DataError("ACF needs at least one series");
    }
    AcfProfile mean;
    mean.coefficients.assign(max_lag, 0.0);
    for (const auto& s : series) {
        const auto n = static_cast<std::size_t>(std::floor(split * static_cast<double>(s.size())));
        const AcfProfile p = acf(std::span<const double>(s.values).first(n), max_lag);
        for (std::size_t i = 0; i < max_lag; ++i) {
            mean.coefficients[i] += p.coefficients[i];
        }
        mean.confidence_band += p.confidence_band;
    }
    const auto count = static_cast<double>(series.size());
    for (auto& c : mean.coefficients) {
        c /= count;
    }
    mean.confidence_band /= count;
    return mean;
}

AcfProfile run_acf(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    const AcfProfile p = training_acf(data.series, config.predict.samples.split, config.interval.max_lag);
    std::string csv = "lag,coefficient\n";
    for (std::size_t i = 1; i <= p.max_lag(); ++i) {
        csv += std::to_string(i) + "," + number(p.at(i)) + "\n";
    }
    write_text(out_dir / "acf.csv", csv);
    const LineSeries lines[] = {{"ACF", p.coefficients},
                                {"threshold", std::vector<double>(p.max_lag(), config.interval.threshold)},
                                {"95% band", std::vector<double>(p.max_lag(), p.confidence_band)}};
    write_text(out_dir / "acf.svg", line_svg(lines, "Mean autocorrelation of the training spans",
                                             "lag 1.." + std::to_string(p.max_lag()), "coefficient"));
    return p;
}

IntervalSelection run_select_interval(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    IntervalSelection out;
    out.profile = training_acf(data.series, config.predict.samples.split, config.interval.max_lag);
    out.choice = select_interval(out.profile, config.interval.threshold);
    if (config.interval.per_group) {
        const auto assignment = ordered_assignment(data.series, read_assignment(out_dir));
        const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
        for (std::size_t g = 0; g < k; ++g) {
            std::vector<SpeedSeries> members;
            for (std::size_t i = 0; i < data.series.size(); ++i) {
                if (assignment[i] == g) {
                    members.push_back(data.series[i]);
                }
            }
            const auto p = training_acf(members, config.predict.samples.split, config.interval.max_lag);
            out.per_group.push_back(select_interval(p, config.interval.threshold).interval);
        }
    }
    write_json(out_dir / "interval.json", {{"threshold", config.interval.threshold},
                                           {"interval", out.choice.interval},
                                           {"fallback", out.choice.fallback},
                                           {"input_length", input_length(config.data.period, out.choice.interval)},
                                           {"per_group", out.per_group},
                                           {"confidence_band", out.profile.confidence_band},
                                           {"acf", out.profile.coefficients}});
    return out;
}

ClusterOutcome run_cluster(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    ClusterOutcome outcome = cluster_network(data.grids, config.cluster, derive_seed(config.seed, "cluster"));
    const auto& c = outcome.clustering;
    Json assignments = Json::array();
    for (std::size_t i = 0; i < data.series.size(); ++i) {
        assignments.push_back({{"segment_id", data.series[i].segment_id}, {"group", c.assignments[i]}});
    }
    Json candidates = Json::array();
    for (const auto& cand : outcome.candidates) {
        candidates.push_back({{"k", cand.k},
                              {"silhouette", std::isnan(cand.silhouette) ? Json(nullptr) : Json(cand.silhouette)},
                              {"inertia", cand.inertia}});
    }
    Json doc = {{"k", c.k},
                {"silhouette", std::isnan(c.silhouette) ? Json(nullptr) : Json(c.silhouette)},
                {"inertia", c.inertia},
                {"assignments", assignments},
                {"candidates", candidates},
                {"initial_loss", outcome.embedder.initial_loss},
                {"loss_history", outcome.embedder.loss_history}};
    if (!data.labels.empty()) {
        doc["rand_index"] = rand_index(c.assignments, data.labels);
    }
    write_json(out_dir / "clusters.json", doc);

    std::string csv = "segment_id";
    for (std::size_t d = 0; d < config.cluster.embedder.embedding_dim; ++d) {
        csv += ",e" + std::to_string(d + 1);
    }
    csv += "\n";
    for (std::size_t i = 0; i < data.series.size(); ++i) {
        csv += data.series[i].segment_id;
        for (double v : outcome.representations[i]) {
            csv += "," + number(v);
        }
        csv += "\n";
    }
    write_text(out_dir / "embeddings.csv", csv);
    nn::save_checkpoint(outcome.embedder.network, out_dir / "embedder.ckpt");
    return outcome;
}

fs::path run_rasterize(const PipelineConfig& config, const fs::path& out_dir, const std::string& segment_id,
                       std::size_t day) {
    const PreparedData data = prepare_data(config, out_dir);
    for (const auto& g : data.grids) {
        if (!segment_id.empty() && g.segment_id() != segment_id) {
            continue;
        }
        if (day >= g.days()) {
            throw ConfigError("day: segment '" + g.segment_id() + "' has " + std::to_string(g.days()) + " days");
        }
        const RasterImage image = rasterize(normalize_unit(g.row(day)), config.cluster.embedder.resolution);
        const fs::path path = out_dir / ("raster_" + g.segment_id() + "_" + std::to_string(day) + ".pgm");
        fs::create_directories(out_dir);
        write_pgm(image, path);
        return path;
    }
    throw ConfigError("segment: no segment named '" + segment_id + "'");
}

std::map<std::string, std::size_t> read_assignment(const fs::path& out_dir) {
    const Json doc = read_json(out_dir / "clusters.json");
    std::map<std::string, std::size_t> out;
    for (const auto& a : doc.at("assignments")) {
        out[a.at("segment_id").get<std::string>()] = a.at("group").get<std::size_t>();
    }
    return out;
}

void run_train(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    const auto assignment = ordered_assignment(data.series, read_assignment(out_dir));
    const std::size_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    const auto options = group_options(config, out_dir, k);
    const auto results = horizon_sweep(data.series, assignment, options, config.predict.predictor,
                                       config.predict.horizons, derive_seed(config.seed, "predict"),
                                       config.predict.with_im);
    fs::create_directories(out_dir / "models");
    Json horizons = Json::array();
    for (const auto& r : results) {
        Json gm = Json::array();
        for (const auto& m : r.gm_models) {
            const std::string file = gm_file(r.horizon, m.group);
            nn::save_checkpoint(m.network, out_dir / file);
            gm.push_back(model_entry(m, file, options[m.group]));
        }
        Json im = Json::array();
        for (std::size_t i = 0; i < r.im_models.size(); ++i) {
            GroupModel m = r.im_models[i];
            m.group = assignment[i];
            const std::string file = im_file(r.horizon, data.series[i].segment_id);
            nn::save_checkpoint(m.network, out_dir / file);
            im.push_back(model_entry(m, file, options[m.group]));
        }
        horizons.push_back({{"horizon", r.horizon}, {"gm", gm}, {"im", im}});
    }
    write_json(out_dir / "models.json",
               {{"segments", data.series.size()}, {"groups", k}, {"horizons", horizons}});
}

std::vector<HorizonReport> run_evaluate(const PipelineConfig& config, const fs::path& out_dir) {
    const PreparedData data = prepare_data(config, out_dir);
    const Json doc = read_json(out_dir / "models.json");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.series.size(); ++i) {
        index[data.series[i].segment_id] = i;
    }
    std::vector<HorizonReport> out;
    Json horizons = Json::array();
    std::string predictions = "horizon,algorithm,segment_id,timestamp,true,pred,re\n";
    for (const auto& h : doc.at("horizons")) {
        const auto horizon = h.at("horizon").get<std::size_t>();
        const std::string label = horizon_label(horizon, config.data.step);
        HorizonReport report;
        report.horizon = horizon;
        std::map<std::string, std::vector<double>> plot;
        std::string plot_segment;
        const auto evaluate_all = [&](const Json& entries, const std::string& algorithm) {
            std::vector<SegmentErrors> errors(data.series.size());
            std::vector<bool> seen(data.series.size(), false);
            for (const auto& e : entries) {
                GroupModel model;
                model.group = e.at("group").get<std::size_t>();
                model.members = e.at("members").get<std::vector<std::string>>();
                model.network = nn::load_checkpoint(out_dir / e.at("file").get<std::string>());
                SampleOptions o = config.predict.samples;
                o.stride = e.at("stride").get<std::size_t>();
                o.input_length = e.at("input_length").get<std::size_t>();
                o.horizon = horizon;
                for (const auto& id : model.members) {
                    const auto it = index.find(id);
                    if (it == index.end()) {
                        throw DataError("models.json names unknown segment '" + id + "'");
                    }
                    const SegmentSamples samples = make_samples(data.series[it->second], o);
                    model.scalers[id] = samples.scaler;
                    errors[it->second] = evaluate_segment(model, samples, model.group, o.eval_step);
                    seen[it->second] = true;
                }
            }
            for (std::size_t i = 0; i < data.series.size(); ++i) {
                if (!seen[i]) {
                    throw DataError(algorithm + " models do not cover segment '" + data.series[i].segment_id + "'");
                }
                for (const auto& p : errors[i].test_points) {
                    predictions += std::to_string(horizon) + "," + algorithm + "," + errors[i].segment_id + "," +
                                   std::to_string(p.timestamp) + "," + number(p.truth) + "," +
                                   number(p.prediction) + "," + (p.re ? number(*p.re) : std::string()) + "\n";
                }
            }
            if (plot_segment.empty()) {
                plot_segment = errors[0].segment_id;
                for (const auto& p : errors[0].test_points) {
                    plot["true"].push_back(p.truth);
                }
            }
            for (const auto& p : errors[0].test_points) {
                plot[algorithm].push_back(p.prediction);
            }
            return aggregate_metrics(errors);
        };
        report.gm = evaluate_all(h.at("gm"), "GM");
        Json entry = {{"horizon", horizon}, {"label", label}, {"gm", metrics_json(report.gm)}};
        if (!h.at("im").empty()) {
            report.im = evaluate_all(h.at("im"), "IM");
            entry["im"] = metrics_json(*report.im);
        }
        horizons.push_back(entry);
        std::vector<LineSeries> lines;
        for (const char* name : {"true", "GM", "IM"}) {
            if (plot.count(name)) {
                auto values = plot[name];
                const std::size_t day = std::max<std::size_t>(1, config.data.period / config.predict.samples.eval_step);
                values.resize(std::min(values.size(), day));
                lines.push_back({name, values});
            }
        }
        write_text(out_dir / ("prediction_" + label + ".svg"),
                   line_svg(lines, "Segment " + plot_segment + ", " + label + " prediction, first test day",
                            "test window", "speed (km/h)"));
        out.push_back(std::move(report));
    }
    write_json(out_dir / "evaluation.json",
               {{"segments", data.series.size()}, {"groups", doc.at("groups")}, {"horizons", horizons}});
    write_text(out_dir / "predictions.csv", predictions);
    return out;
}

void run_report(const PipelineConfig& config, const fs::path& out_dir) {
    const Json doc = read_json(out_dir / "evaluation.json");
    std::vector<HorizonReport> horizons;
    for (const auto& h : doc.at("horizons")) {
        HorizonReport r;
        r.horizon = h.at("horizon").get<std::size_t>();
        r.gm = metrics_from_json(h.at("gm"));
        if (h.contains("im")) {
            r.im = metrics_from_json(h.at("im"));
        }
        horizons.push_back(std::move(r));
    }
    const ModelCount models{doc.at("segments").get<std::size_t>(), doc.at("groups").get<std::size_t>()};
    emit_report(horizons, models, out_dir, config.data.step);
}

void run_pipeline(const PipelineConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    if (config.data.input.empty()) {
        run_synth(config, out_dir);
    }
    run_ingest(config, out_dir);
    run_similarity(config, out_dir);
    run_acf(config, out_dir);
    run_cluster(config, out_dir);
    run_select_interval(config, out_dir);
    run_train(config, out_dir);
    run_evaluate(config, out_dir);
    run_report(config, out_dir);
}

std::string file_checksum(const fs::path& path) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char ch : read_text(path)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const PipelineConfig& config, const fs::path& out_dir, const std::string& command) {
    std::set<std::string> files;
    if (fs::exists(out_dir)) {
        for (const auto& e : fs::recursive_directory_iterator(out_dir)) {
            if (e.is_regular_file() && e.path().filename() != "manifest.json") {
                files.insert(fs::relative(e.path(), out_dir).generic_string());
            }
        }
    }
    Json artifacts = Json::object();
    for (const auto& f : files) {
        artifacts[f] = file_checksum(out_dir / f);
    }
    Json doc = {{"tool", "trafficast"},
                {"version", kVersion},
                {"command", command},
                {"seed", config.seed},
                {"threads", config.threads},
                {"config_hash", config_hash(config)},
                {"config", to_text(config)},
                {"compiler", __VERSION__},
                {"boost", BOOST_LIB_VERSION},
                {"artifacts", artifacts}};
    write_json(out_dir / "manifest.json", doc);
}

}  // namespace trafficast
