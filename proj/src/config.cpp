#include "trafficast/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "trafficast/error.hpp"

extern char** environ;

namespace trafficast {
namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

template <class T>
T parse_integer(const std::string& text) {
    const std::string t = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError("expected an integer, got '" + text + "'");
    }
    return value;
}

std::size_t parse_count(const std::string& text) {
    if (trim(text).starts_with('-')) {
        throw ConfigError("expected a non-negative integer, got '" + text + "'");
    }
    return parse_integer<std::size_t>(text);
}

double parse_real(const std::string& text) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw ConfigError("expected a number, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "yes" || t == "on" || t == "1") {
        return true;
    }
    if (t == "false" || t == "no" || t == "off" || t == "0") {
        return false;
    }
    throw ConfigError("expected true or false, got '" + text + "'");
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

std::vector<CalendarDate> parse_dates(const std::string& text) {
    std::vector<CalendarDate> out;
    for (const auto& item : split_list(text)) {
        out.push_back(CalendarDate::parse(item));
    }
    return out;
}

std::string format_dates(const std::vector<CalendarDate>& dates) {
    std::string out;
    for (const auto& d : dates) {
        out += (out.empty() ? "" : ",") + d.to_string();
    }
    return out;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        out.push_back(parse_count(item));
    }
    return out;
}

std::string format_counts(const std::vector<std::size_t>& values) {
    std::string out;
    for (auto v : values) {
        out += (out.empty() ? "" : ",") + std::to_string(v);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define TRAFFICAST_FIELD(key, member, parse, format)                                            \
    Field {                                                                                     \
        key, [](PipelineConfig& c, const std::string& v) { c.member = parse(v); },              \
            [](const PipelineConfig& c) { return format(c.member); }                            \
    }
#define TRAFFICAST_COUNT(key, member) TRAFFICAST_FIELD(key, member, parse_count, std::to_string)
#define TRAFFICAST_REAL(key, member) TRAFFICAST_FIELD(key, member, parse_real, format_real)
#define TRAFFICAST_BOOL(key, member) TRAFFICAST_FIELD(key, member, parse_bool, format_bool)

std::string identity(const std::string& s) { return trim(s); }

TargetConvention parse_convention(const std::string& text) {
    const std::string t = trim(text);
    if (t == "after_last_input") {
        return TargetConvention::after_last_input;
    }
    if (t == "literal") {
        return TargetConvention::literal;
    }
    throw ConfigError("expected after_last_input or literal, got '" + text + "'");
}

std::string format_convention(TargetConvention c) {
    return c == TargetConvention::literal ? "literal" : "after_last_input";
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        TRAFFICAST_FIELD("run.seed", seed, parse_integer<std::uint64_t>, std::to_string),
        TRAFFICAST_COUNT("run.threads", threads),

        TRAFFICAST_FIELD("data.input", data.input, identity, identity),
        TRAFFICAST_FIELD("data.labels", data.labels, identity, identity),
        TRAFFICAST_COUNT("data.period", data.period),
        TRAFFICAST_FIELD("data.step", data.step, parse_integer<std::int64_t>, std::to_string),
        TRAFFICAST_COUNT("data.max_gap", data.max_gap),
        TRAFFICAST_BOOL("data.exclude_weekends", data.calendar.exclude_weekends),
        TRAFFICAST_FIELD("data.exclude_dates", data.calendar.exclude_dates, parse_dates, format_dates),
        TRAFFICAST_FIELD("data.include_dates", data.calendar.include_dates, parse_dates, format_dates),
        TRAFFICAST_FIELD("data.utc_offset_hours", data.utc_offset_hours, parse_integer<int>, std::to_string),

        TRAFFICAST_COUNT("synth.segments_per_archetype", synth.segments_per_archetype),
        TRAFFICAST_COUNT("synth.days", synth.days),
        TRAFFICAST_REAL("synth.noise_scale", synth.noise_scale),
        Field{"synth.start", [](PipelineConfig& c, const std::string& v) { c.synth.start = CalendarDate::parse(trim(v)); },
              [](const PipelineConfig& c) { return c.synth.start.to_string(); }},

        TRAFFICAST_COUNT("cluster.resolution", cluster.embedder.resolution),
        TRAFFICAST_COUNT("cluster.embedding_dim", cluster.embedder.embedding_dim),
        TRAFFICAST_COUNT("cluster.epochs", cluster.embedder.train.epochs),
        TRAFFICAST_COUNT("cluster.batches_per_epoch", cluster.embedder.batches_per_epoch),
        TRAFFICAST_COUNT("cluster.batch_size", cluster.embedder.composition.batch_size),
        TRAFFICAST_COUNT("cluster.segments_per_batch", cluster.embedder.composition.segments_per_batch),
        TRAFFICAST_COUNT("cluster.images_per_segment", cluster.embedder.composition.images_per_segment),
        TRAFFICAST_REAL("cluster.learning_rate", cluster.embedder.train.learning_rate),
        TRAFFICAST_REAL("cluster.margin", cluster.embedder.train.margin),
        TRAFFICAST_COUNT("cluster.k_min", cluster.k_min),
        TRAFFICAST_COUNT("cluster.k_max", cluster.k_max),
        TRAFFICAST_COUNT("cluster.forced_k", cluster.forced_k),
        TRAFFICAST_COUNT("cluster.kmeans_restarts", cluster.kmeans.restarts),
        TRAFFICAST_COUNT("cluster.kmeans_iterations", cluster.kmeans.max_iterations),

        TRAFFICAST_REAL("interval.threshold", interval.threshold),
        TRAFFICAST_COUNT("interval.max_lag", interval.max_lag),
        TRAFFICAST_COUNT("interval.stride", interval.stride),
        TRAFFICAST_BOOL("interval.per_group", interval.per_group),

        TRAFFICAST_FIELD("predict.horizons", predict.horizons, parse_counts, format_counts),
        TRAFFICAST_REAL("predict.split", predict.samples.split),
        TRAFFICAST_FIELD("predict.target_convention", predict.samples.convention, parse_convention,
                         format_convention),
        TRAFFICAST_COUNT("predict.sample_step", predict.samples.sample_step),
        TRAFFICAST_COUNT("predict.eval_step", predict.samples.eval_step),
        TRAFFICAST_REAL("predict.learning_rate", predict.predictor.train.learning_rate),
        TRAFFICAST_COUNT("predict.batch_size", predict.predictor.train.batch_size),
        TRAFFICAST_COUNT("predict.epochs", predict.predictor.train.epochs),
        TRAFFICAST_COUNT("predict.patience", predict.predictor.patience),
        TRAFFICAST_COUNT("predict.folds", predict.predictor.folds),
        TRAFFICAST_BOOL("predict.cross_validate", predict.predictor.cross_validate),
        TRAFFICAST_BOOL("predict.with_im", predict.with_im),
    };
    return table;
}

#undef TRAFFICAST_BOOL
#undef TRAFFICAST_REAL
#undef TRAFFICAST_COUNT
#undef TRAFFICAST_FIELD

const Field* find_field(const std::string& key) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            return &f;
        }
    }
    return nullptr;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += (out.empty() ? "" : "\n") + l;
    }
    return out;
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) {
        out.push_back(f.key);
    }
    return out;
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
    const Field* f = find_field(key);
    if (f == nullptr) {
        throw ConfigError(key + ": unknown key");
    }
    try {
        f->set(config, value);
    } catch (const Error& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::string get_config_value(const PipelineConfig& config, const std::string& key) {
    const Field* f = find_field(key);
    if (f == nullptr) {
        throw ConfigError(key + ": unknown key");
    }
    return f->get(config);
}

PipelineConfig parse_config(const std::string& text, const std::string& source) {
    boost::property_tree::ptree tree;
    try {
        std::istringstream in(text);
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
    }
    PipelineConfig config;
    std::vector<std::string> problems;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            problems.push_back(section + ": keys must sit inside a [section]");
            continue;
        }
        for (const auto& [name, value] : body) {
            try {
                set_config_value(config, section + "." + name, value.data());
            } catch (const ConfigError& e) {
                problems.push_back(e.what());
            }
        }
    }
    if (!problems.empty()) {
        throw ConfigError(source + ":\n" + join_lines(problems));
    }
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string());
}

void apply_env_overrides(PipelineConfig& config, const std::map<std::string, std::string>& env) {
    std::map<std::string, const Field*> by_variable;
    for (const auto& f : fields()) {
        std::string var = "TRAFFICAST_" + f.key;
        std::transform(var.begin(), var.end(), var.begin(), [](unsigned char c) {
            return c == '.' ? '_' : static_cast<char>(std::toupper(c));
        });
        by_variable[var] = &f;
    }
    std::vector<std::string> problems;
    for (const auto& [name, value] : env) {
        if (!name.starts_with("TRAFFICAST_")) {
            continue;
        }
        const auto it = by_variable.find(name);
        if (it == by_variable.end()) {
            problems.push_back(name + ": unknown environment override");
            continue;
        }
        try {
            set_config_value(config, it->second->key, value);
        } catch (const ConfigError& e) {
            problems.push_back(name + " (" + e.what() + ")");
        }
    }
    if (!problems.empty()) {
        throw ConfigError(join_lines(problems));
    }
}

std::map<std::string, std::string> trafficast_environment() {
    std::map<std::string, std::string> out;
    for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos && entry.starts_with("TRAFFICAST_")) {
            out[entry.substr(0, eq)] = entry.substr(eq + 1);
        }
    }
    return out;
}

void validate(const PipelineConfig& c) {
    std::vector<std::string> problems;
    const auto check = [&](bool ok, const std::string& message) {
        if (!ok) {
            problems.push_back(message);
        }
    };
    check(c.threads >= 1, "run.threads: must be at least 1");
    check(c.data.period >= 2, "data.period: must be at least 2");
    check(c.data.step > 0, "data.step: must be positive");
    check(c.data.utc_offset_hours >= -14 && c.data.utc_offset_hours <= 14,
          "data.utc_offset_hours: must lie in [-14, 14]");
    check(c.synth.segments_per_archetype >= 1, "synth.segments_per_archetype: must be at least 1");
    check(c.synth.days >= 2, "synth.days: must be at least 2");
    check(c.synth.noise_scale >= 0.0 && std::isfinite(c.synth.noise_scale),
          "synth.noise_scale: must be finite and non-negative");

    const auto& e = c.cluster.embedder;
    check(e.train.learning_rate > 0.0 && std::isfinite(e.train.learning_rate),
          "cluster.learning_rate: must be positive");
    check(e.train.margin > 0.0 && std::isfinite(e.train.margin), "cluster.margin: must be positive");
    check(e.train.epochs >= 1, "cluster.epochs: must be at least 1");
    check(e.resolution >= 16, "cluster.resolution: must be at least 16");
    check(e.embedding_dim >= 1, "cluster.embedding_dim: must be at least 1");
    check(e.batches_per_epoch >= 1, "cluster.batches_per_epoch: must be at least 1");
    check(e.composition.batch_size >= 1, "cluster.batch_size: must be at least 1");
    check(e.composition.segments_per_batch >= 2, "cluster.segments_per_batch: must be at least 2");
    check(e.composition.images_per_segment >= 2, "cluster.images_per_segment: must be at least 2");
    check(c.cluster.forced_k != 0 || (c.cluster.k_min >= 2 && c.cluster.k_max >= c.cluster.k_min),
          "cluster.k_min/k_max: need 2 <= k_min <= k_max");
    check(c.cluster.kmeans.restarts >= 1, "cluster.kmeans_restarts: must be at least 1");
    check(c.cluster.kmeans.max_iterations >= 1, "cluster.kmeans_iterations: must be at least 1");

    check(c.interval.threshold > 0.0 && c.interval.threshold < 1.0,
          "interval.threshold: must lie strictly between 0 and 1");
    check(c.interval.max_lag >= 1, "interval.max_lag: must be at least 1");

    const auto& p = c.predict;
    check(!p.horizons.empty(), "predict.horizons: need at least one horizon");
    check(std::all_of(p.horizons.begin(), p.horizons.end(), [](std::size_t h) { return h >= 1; }),
          "predict.horizons: every horizon must be at least 1");
    check(p.samples.split > 0.0 && p.samples.split < 1.0, "predict.split: must lie strictly between 0 and 1");
    check(p.samples.sample_step >= 1, "predict.sample_step: must be at least 1");
    check(p.samples.eval_step >= 1, "predict.eval_step: must be at least 1");
    check(p.predictor.train.learning_rate > 0.0 && std::isfinite(p.predictor.train.learning_rate),
          "predict.learning_rate: must be positive");
    check(p.predictor.train.batch_size >= 1, "predict.batch_size: must be at least 1");
    check(p.predictor.train.epochs >= 1, "predict.epochs: must be at least 1");
    check(p.predictor.folds >= 2, "predict.folds: must be at least 2");
    if (!problems.empty()) {
        throw ConfigError("invalid configuration:\n" + join_lines(problems));
    }
}

std::string to_text(const PipelineConfig& config) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        const auto dot = f.key.find('.');
        const std::string s = f.key.substr(0, dot);
        if (s != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + s + "]\n";
            section = s;
        }
        out += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
    }
    return out;
}

std::string config_hash(const PipelineConfig& config) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char ch : to_text(config)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace trafficast
