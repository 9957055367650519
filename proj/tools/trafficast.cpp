#include <omp.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include "trafficast/error.hpp"
#include "trafficast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trafficast;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::string segment;
    std::size_t day = 0;
};

PipelineConfig resolve(const Options& opt) {
    PipelineConfig config = opt.config_path.empty() ? PipelineConfig{} : load_config(opt.config_path);
    apply_env_overrides(config, trafficast_environment());
    for (const auto& o : opt.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + o + "'");
        }
        set_config_value(config, o.substr(0, eq), o.substr(eq + 1));
    }
    if (opt.seed) {
        config.seed = *opt.seed;
    }
    if (opt.threads) {
        config.threads = *opt.threads;
    }
    validate(config);
    return config;
}

void print_report_table(const fs::path& out_dir) {
    std::cout << read_text(out_dir / "report.csv");
}

int run(const std::string& command, const Options& opt) {
    const PipelineConfig config = resolve(opt);
    omp_set_num_threads(static_cast<int>(config.threads));
    const fs::path out = opt.out_dir;
    fs::create_directories(out);

    if (command == "synth") {
        const auto net = run_synth(config, out);
        std::printf("wrote %zu series (%zu archetypes) to %s\n", net.series.size(), net.archetype_names.size(),
                    (out / "series.csv").c_str());
    } else if (command == "ingest") {
        const auto data = run_ingest(config, out);
        for (const auto& st : data.stats) {
            std::printf("%s: %zu samples, %zu missing, %zu usable days\n", st.segment_id.c_str(), st.raw_samples,
                        st.missing, st.days);
        }
    } else if (command == "similarity") {
        const auto cdf = run_similarity(config, out);
        std::printf("fraction of similarity values <= 0.2: %.4f\n", cdf[20].second);
    } else if (command == "acf") {
        const auto p = run_acf(config, out);
        std::printf("lag,coefficient\n");
        for (std::size_t i = 1; i <= p.max_lag(); ++i) {
            std::printf("%zu,%.6f\n", i, p.at(i));
        }
    } else if (command == "rasterize") {
        const auto path = run_rasterize(config, out, opt.segment, opt.day);
        std::printf("wrote %s\n", path.c_str());
    } else if (command == "cluster") {
        const auto outcome = run_cluster(config, out);
        std::printf("k,silhouette,inertia\n");
        for (const auto& c : outcome.candidates) {
            std::printf("%zu,%.6f,%.6f\n", c.k, c.silhouette, c.inertia);
        }
        std::printf("chosen K = %zu\n", outcome.clustering.k);
    } else if (command == "select-interval") {
        const auto sel = run_select_interval(config, out);
        std::printf("lag,coefficient,above_threshold\n");
        for (std::size_t i = 1; i <= sel.profile.max_lag(); ++i) {
            std::printf("%zu,%.6f,%s\n", i, sel.profile.at(i), sel.profile.at(i) > config.interval.threshold ? "yes" : "no");
        }
        if (sel.choice.fallback) {
            std::fprintf(stderr, "warning: no lag exceeds the threshold %.3f; using interval 1\n",
                         config.interval.threshold);
        }
        std::printf("threshold %.3f -> interval l = %zu (input length %zu)\n", config.interval.threshold,
                    sel.choice.interval, input_length(config.data.period, sel.choice.interval));
        for (std::size_t g = 0; g < sel.per_group.size(); ++g) {
            std::printf("group %zu -> interval l = %zu\n", g + 1, sel.per_group[g]);
        }
    } else if (command == "train") {
        run_train(config, out);
        std::printf("wrote %s\n", (out / "models.json").c_str());
    } else if (command == "evaluate") {
        const auto reports = run_evaluate(config, out);
        for (const auto& r : reports) {
            std::printf("horizon %zu: GM network test MRE %.4f", r.horizon, r.gm.network_test_mre);
            if (r.im) {
                std::printf(", IM %.4f", r.im->network_test_mre);
            }
            std::printf("\n");
        }
    } else if (command == "report") {
        run_report(config, out);
        print_report_table(out);
    } else if (command == "pipeline") {
        run_pipeline(config, out);
        print_report_table(out);
    }
    write_manifest(config, out, command);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster road segments by traffic shape and train one shared predictor per cluster"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--config", opt.config_path, "INI configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", opt.seed, "Root seed (overrides run.seed)");
    app.add_option("--threads", opt.threads, "OpenMP threads (overrides run.threads)")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", opt.out_dir, "Directory for every artifact")->capture_default_str();
    app.add_option("--set", opt.overrides, "Override one config key, section.name=value (repeatable)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "Generate the synthetic network (series.csv, labels.csv)"},
        {"ingest", "Load, clean and summarize the raw series"},
        {"similarity", "Day-to-day similarity CDF"},
        {"acf", "Mean autocorrelation of the training spans"},
        {"rasterize", "Write one day of one segment as a PGM image"},
        {"cluster", "Train the embedder and cluster the segments"},
        {"select-interval", "Choose the input interval from the ACF"},
        {"train", "Train group models (and individual models)"},
        {"evaluate", "Evaluate the trained models"},
        {"report", "Write the group performance table and charts"},
        {"pipeline", "Run every stage end to end"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (name == "rasterize") {
            sub->add_option("--segment", opt.segment, "Segment id (default: the first)");
            sub->add_option("--day", opt.day, "0-based day index")->capture_default_str();
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, opt);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
