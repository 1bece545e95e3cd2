#include "floweval/dataset.hpp"
#include "floweval/geometry.hpp"
#include "floweval/metrics.hpp"
#include "floweval/report.hpp"
#include "floweval/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <sys/resource.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>

namespace {

using namespace floweval;
using nlohmann::json;

int default_jobs() {
    if (const char* env = std::getenv("FLOW_EVAL_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

std::optional<double> peak_rss_mb() {
    rusage usage{};
    if (getrusage(RUSAGE_SELF, &usage) != 0) return std::nullopt;
    return static_cast<double>(usage.ru_maxrss) / 1024.0; // linux reports KiB
}

struct ConfigFile {
    EvalConfig config;
    ChannelMap mapping;
};

ConfigFile read_config_file(const std::string& path) {
    ConfigFile out;
    if (path.empty()) return out;
    std::ifstream f(path);
    if (!f) raise(ErrorCode::IoError, "cannot open config " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, "bad config " + path + ": " + e.what());
    }
    out.config = config_from_json(j);
    if (j.contains("mapping")) {
        const json& m = j["mapping"];
        ChannelMap& map = out.mapping;
        map.input_array = m.value("input_array", map.input_array);
        map.output_array = m.value("output_array", map.output_array);
        map.geometry_channel = m.value("geometry_channel", map.geometry_channel);
        map.re_channel = m.value("re_channel", map.re_channel);
        map.u_channel = m.value("u_channel", map.u_channel);
        map.v_channel = m.value("v_channel", map.v_channel);
        map.p_channel = m.value("p_channel", map.p_channel);
        map.geometry_kind = m.value("geometry_kind", map.geometry_kind);
        map.x0 = m.value("x0", map.x0);
        map.x1 = m.value("x1", map.x1);
        map.y0 = m.value("y0", map.y0);
        map.y1 = m.value("y1", map.y1);
    }
    return out;
}

void apply_band_flag(EvalConfig& config, const std::string& band) {
    if (band.empty()) return;
    const auto colon = band.find(':');
    if (colon == std::string::npos)
        raise(ErrorCode::InvalidArgument, "--band expects LO:HI, got '" + band + "'");
    try {
        config.band_lo = std::stod(band.substr(0, colon));
        const std::string hi = band.substr(colon + 1);
        config.band_hi = (hi == "inf") ? std::numeric_limits<double>::infinity()
                                       : std::stod(hi);
    } catch (const std::exception&) {
        raise(ErrorCode::InvalidArgument, "--band expects LO:HI, got '" + band + "'");
    }
    config.validate();
}

struct EvaluateArgs {
    std::string data, pred, geometry = "sdf", band, split, config, out;
    std::string format = "json", model = "model";
    int subset = 0;
    int jobs = default_jobs();
    bool timing = false;
    bool align_by_order = false;
};

int run_evaluate(const EvaluateArgs& args) {
    ConfigFile cfg = read_config_file(args.config);
    apply_band_flag(cfg.config, args.band);
    if (args.geometry != "sdf" && args.geometry != "mask")
        raise(ErrorCode::InvalidArgument, "--geometry must be sdf or mask");
    cfg.mapping.geometry_kind = args.geometry;

    const Dataset dataset = load_archive(args.data, LoadOptions{cfg.mapping, false});

    // pick the evaluated samples (split test ids, or the whole archive)
    std::vector<const Sample*> selected;
    std::optional<SplitSummary> split_summary;
    if (!args.split.empty()) {
        const SplitResult split = load_split(args.split);
        for (const std::string& id : split.test_ids) {
            const Sample* s = dataset.find(id);
            if (!s)
                raise(ErrorCode::InvalidArgument,
                      "split test id " + id + " is not in the dataset");
            selected.push_back(s);
        }
        SplitSummary summary;
        summary.protocol = split.base_protocol ? *split.base_protocol
                                               : to_string(split.protocol);
        summary.seed = split.seed;
        summary.n_train = split.train_ids.size();
        summary.n_test = split.test_ids.size();
        split_summary = summary;
    } else {
        for (const Sample& s : dataset.samples) selected.push_back(&s);
    }
    if (args.subset > 0 && static_cast<std::size_t>(args.subset) < selected.size())
        selected.resize(args.subset);

    const PredictionSet preds = load_predictions(args.pred, LoadOptions{cfg.mapping});
    std::vector<FlowField> pred_fields;
    if (args.align_by_order) {
        if (preds.fields.size() != selected.size())
            raise(ErrorCode::LengthMismatch,
                  "got " + std::to_string(preds.fields.size()) + " predictions for " +
                      std::to_string(selected.size()) + " evaluated samples");
        pred_fields = preds.fields;
    } else {
        std::map<std::string, const FlowField*> by_id;
        for (std::size_t k = 0; k < preds.ids.size(); ++k)
            by_id[preds.ids[k]] = &preds.fields[k];
        for (const Sample* s : selected) {
            const auto it = by_id.find(s->id);
            if (it == by_id.end())
                raise(ErrorCode::LengthMismatch,
                      "no prediction for sample " + s->id +
                          " (use --align-by-order for unnamed archives)");
            pred_fields.push_back(*it->second);
        }
    }

    // materialize the chosen geometry representation
    std::vector<Sample> eval_samples;
    for (const Sample* s : selected) {
        if (args.geometry == "mask") {
            if (!s->mask)
                raise(ErrorCode::MissingChannel,
                      "sample " + s->id + " has no mask (--geometry mask)");
            eval_samples.push_back(Sample::make(s->id, s->re, s->mask,
                                                sdf_from_mask(*s->mask), s->truth,
                                                s->category));
        } else {
            eval_samples.push_back(*s);
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const MetricReport metrics =
        evaluate_dataset(pred_fields, eval_samples, cfg.config, args.jobs);
    const auto t1 = std::chrono::steady_clock::now();

    EvalReport report;
    report.model = args.model;
    report.representation = args.geometry;
    report.dataset = args.data;
    report.config = cfg.config;
    report.config_hash = config_hash(cfg.config);
    report.split = split_summary;
    report.metrics = metrics;
    if (args.timing) {
        TimingRecord t;
        t.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        t.samples_per_second =
            t.wall_seconds > 0 ? eval_samples.size() / t.wall_seconds : 0.0;
        t.peak_rss_mb = peak_rss_mb();
        report.timing = t;
    }

    save_report(args.out, report);
    if (args.format == "csv") {
        LeaderboardTable table = build_table({report});
        std::filesystem::path csv = args.out;
        csv.replace_extension(".csv");
        write_text_atomic(csv, render_table_csv(table));
    }
    std::cout << "evaluated " << metrics.n_samples << " samples: m1=" << metrics.m1_score
              << " m2=" << metrics.m2_score << " m3=" << metrics.m3_score << "\n";
    return 0;
}

struct SplitArgs {
    std::string data, protocol = "random", out, config;
    double fraction = -1.0;
    std::uint64_t seed = 0;
    int subset = 0;
    bool span_tails = false;
};

int run_split(const SplitArgs& args) {
    ConfigFile cfg = read_config_file(args.config);
    const Dataset dataset = load_archive(args.data, LoadOptions{cfg.mapping, true});

    SplitResult split;
    if (args.protocol == "random") {
        split = random_split(dataset, args.fraction < 0 ? 0.2 : args.fraction, args.seed);
    } else if (args.protocol == "extrapolatory") {
        split = extrapolatory_split(dataset, args.fraction < 0 ? 0.1 : args.fraction,
                                    args.span_tails);
    } else {
        raise(ErrorCode::InvalidArgument, "--protocol must be random or extrapolatory");
    }
    if (args.subset > 0) split = subsample(split, args.subset, args.seed);
    save_split(args.out, split);

    const auto re_range = [&](const std::vector<std::string>& ids) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const std::string& id : ids) {
            const Sample* s = dataset.find(id);
            lo = std::min(lo, s->re);
            hi = std::max(hi, s->re);
        }
        return std::pair{lo, hi};
    };
    const auto [train_lo, train_hi] = re_range(split.train_ids);
    const auto [test_lo, test_hi] = re_range(split.test_ids);
    std::cout << "train: " << split.train_ids.size() << " samples, Re in [" << train_lo
              << ", " << train_hi << "]\n"
              << "test:  " << split.test_ids.size() << " samples, Re in [" << test_lo
              << ", " << test_hi << "]\n";
    return 0;
}

struct TableArgs {
    std::vector<std::string> reports;
    std::string out, format = "csv";
};

int run_table(const TableArgs& args) {
    std::vector<EvalReport> reports;
    for (const std::string& path : args.reports) reports.push_back(load_report(path));
    const LeaderboardTable table = build_table(reports);
    const std::string text =
        args.format == "md" ? render_table_markdown(table) : render_table_csv(table);
    if (args.out.empty())
        std::cout << text;
    else
        write_text_atomic(args.out, text);
    return 0;
}

int run_verify(const std::string& filter) {
    const auto results = verify::run_checks(filter);
    if (results.empty()) {
        std::cerr << "no checks match filter '" << filter << "'\n";
        return 1;
    }
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flow-eval: scores predicted steady incompressible-flow fields "
                 "(global accuracy, boundary-layer accuracy, momentum-residual "
                 "consistency)"};
    app.require_subcommand(1);

    EvaluateArgs eval_args;
    CLI::App* eval = app.add_subcommand("evaluate", "score predictions against a dataset");
    eval->add_option("--data", eval_args.data, "dataset archive")->required();
    eval->add_option("--pred", eval_args.pred, "prediction archive")->required();
    eval->add_option("--geometry", eval_args.geometry, "geometry representation: sdf|mask");
    eval->add_option("--band", eval_args.band, "boundary-layer band LO:HI");
    eval->add_option("--split", eval_args.split, "split JSON; evaluates its test ids");
    eval->add_option("--subset", eval_args.subset, "evaluate only the first N test samples");
    eval->add_option("--config", eval_args.config, "config JSON file");
    eval->add_option("--out", eval_args.out, "report JSON path")->required();
    eval->add_option("--format", eval_args.format, "json | csv (csv adds a table row file)");
    eval->add_option("--jobs", eval_args.jobs, "sample-level worker threads");
    eval->add_option("--model", eval_args.model, "model label for the report");
    eval->add_flag("--timing", eval_args.timing, "record wall time and throughput");
    eval->add_flag("--align-by-order", eval_args.align_by_order,
                   "match predictions to samples by position instead of id");

    SplitArgs split_args;
    CLI::App* split = app.add_subcommand("split", "write a train/test split JSON");
    split->add_option("--data", split_args.data, "dataset archive")->required();
    split->add_option("--protocol", split_args.protocol, "random | extrapolatory");
    split->add_option("--fraction", split_args.fraction,
                      "test fraction (random, default 0.2) or tail fraction "
                      "(extrapolatory, default 0.1)");
    split->add_option("--seed", split_args.seed, "split seed");
    split->add_option("--subset", split_args.subset, "subsample the train side to N ids");
    split->add_option("--config", split_args.config, "config JSON (npz mapping)");
    split->add_flag("--span-tails", split_args.span_tails,
                    "cut extrapolatory tails on the numeric Re span instead of quantiles");
    split->add_option("--out", split_args.out, "split JSON path")->required();

    TableArgs table_args;
    CLI::App* table = app.add_subcommand("table", "merge reports into a leaderboard");
    table->add_option("reports", table_args.reports, "report JSON files")->required();
    table->add_option("--out", table_args.out, "output path (stdout if omitted)");
    table->add_option("--format", table_args.format, "csv | md");

    std::string verify_filter;
    CLI::App* verify_cmd = app.add_subcommand("verify", "run the built-in oracle checks");
    verify_cmd->add_option("--filter", verify_filter, "run only checks matching substring");

    try {
        app.parse(argc, argv);
        if (eval->parsed()) return run_evaluate(eval_args);
        if (split->parsed()) return run_split(split_args);
        if (table->parsed()) return run_table(table_args);
        if (verify_cmd->parsed()) return run_verify(verify_filter);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const floweval::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return floweval::exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
