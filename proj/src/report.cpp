#include "floweval/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>

namespace floweval {

using nlohmann::json;

json config_to_json(const EvalConfig& config) {
    json channels = json::array();
    if (config.channels.u) channels.push_back("u");
    if (config.channels.v) channels.push_back("v");
    if (config.channels.p) channels.push_back("p");
    // JSON has no infinity; an unbounded band is stored as the string "inf"
    const json band_hi = std::isinf(config.band_hi) ? json("inf") : json(config.band_hi);
    return json{{"band_lo", config.band_lo},
                {"band_hi", band_hi},
                {"mse_min", config.mse_min},
                {"mse_max", config.mse_max},
                {"exclusion_halo", config.exclusion_halo},
                {"channels", channels},
                {"aggregate_scores", config.aggregate_scores}};
}

EvalConfig config_from_json(const json& j) {
    EvalConfig c;
    try {
        c.band_lo = j.value("band_lo", c.band_lo);
        if (j.contains("band_hi")) {
            if (j["band_hi"].is_string())
                c.band_hi = std::numeric_limits<double>::infinity();
            else
                c.band_hi = j["band_hi"].get<double>();
        }
        c.mse_min = j.value("mse_min", c.mse_min);
        c.mse_max = j.value("mse_max", c.mse_max);
        c.exclusion_halo = j.value("exclusion_halo", c.exclusion_halo);
        c.aggregate_scores = j.value("aggregate_scores", c.aggregate_scores);
        if (j.contains("channels")) {
            c.channels = Channels{false, false, false};
            for (const auto& ch : j["channels"]) {
                const auto name = ch.get<std::string>();
                if (name == "u")
                    c.channels.u = true;
                else if (name == "v")
                    c.channels.v = true;
                else if (name == "p")
                    c.channels.p = true;
                else
                    raise(ErrorCode::ParseError, "unknown channel '" + name + "'");
            }
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string config_hash(const EvalConfig& config) {
    const std::string text = config_to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : text) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

namespace {

json metrics_to_json(const MetricReport& m) {
    json j{{"n_samples", m.n_samples},
           {"m1", {{"raw", m.m1_mse}, {"score", m.m1_score}}},
           {"m2", {{"raw", m.m2_mse}, {"score", m.m2_score}}},
           {"m3", {{"raw", m.m3_raw}, {"score", m.m3_score}}}};
    if (m.m1_per_channel && m.m2_per_channel) {
        j["per_channel"] = {
            {"m1", {{"u", m.m1_per_channel->u}, {"v", m.m1_per_channel->v},
                    {"p", m.m1_per_channel->p}}},
            {"m2", {{"u", m.m2_per_channel->u}, {"v", m.m2_per_channel->v},
                    {"p", m.m2_per_channel->p}}}};
    }
    return j;
}

MetricReport metrics_from_json(const json& j) {
    MetricReport m;
    m.n_samples = j.at("n_samples").get<std::int64_t>();
    m.m1_mse = j.at("m1").at("raw").get<double>();
    m.m1_score = j.at("m1").at("score").get<double>();
    m.m2_mse = j.at("m2").at("raw").get<double>();
    m.m2_score = j.at("m2").at("score").get<double>();
    m.m3_raw = j.at("m3").at("raw").get<double>();
    m.m3_score = j.at("m3").at("score").get<double>();
    if (j.contains("per_channel")) {
        const json& pc = j["per_channel"];
        m.m1_per_channel = PerChannelMse{pc.at("m1").at("u").get<double>(),
                                         pc.at("m1").at("v").get<double>(),
                                         pc.at("m1").at("p").get<double>()};
        m.m2_per_channel = PerChannelMse{pc.at("m2").at("u").get<double>(),
                                         pc.at("m2").at("v").get<double>(),
                                         pc.at("m2").at("p").get<double>()};
    }
    return m;
}

} // namespace

json report_to_json(const EvalReport& report) {
    json j;
    j["model"] = report.model;
    j["representation"] = report.representation;
    j["dataset"] = report.dataset;
    j["config"] = config_to_json(report.config);
    j["config_hash"] = report.config_hash;
    if (report.split) {
        j["split"] = {{"protocol", report.split->protocol},
                      {"seed", report.split->seed},
                      {"n_train", report.split->n_train},
                      {"n_test", report.split->n_test}};
    } else {
        j["split"] = nullptr;
    }
    j["n_samples"] = report.metrics.n_samples;
    const json metrics = metrics_to_json(report.metrics);
    j["m1"] = metrics["m1"];
    j["m2"] = metrics["m2"];
    j["m3"] = metrics["m3"];
    if (metrics.contains("per_channel")) j["per_channel"] = metrics["per_channel"];
    if (report.timing) {
        json t{{"wall_seconds", report.timing->wall_seconds},
               {"samples_per_second", report.timing->samples_per_second}};
        if (report.timing->peak_rss_mb) t["peak_rss_mb"] = *report.timing->peak_rss_mb;
        j["timing"] = t;
    }
    return j;
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    try {
        r.model = j.at("model").get<std::string>();
        r.representation = j.at("representation").get<std::string>();
        r.dataset = j.at("dataset").get<std::string>();
        r.config = config_from_json(j.at("config"));
        r.config_hash = j.at("config_hash").get<std::string>();
        if (j.contains("split") && !j["split"].is_null()) {
            SplitSummary s;
            s.protocol = j["split"].at("protocol").get<std::string>();
            s.seed = j["split"].at("seed").get<std::uint64_t>();
            s.n_train = j["split"].at("n_train").get<std::size_t>();
            s.n_test = j["split"].at("n_test").get<std::size_t>();
            r.split = s;
        }
        json metrics{{"n_samples", j.at("n_samples")},
                     {"m1", j.at("m1")},
                     {"m2", j.at("m2")},
                     {"m3", j.at("m3")}};
        if (j.contains("per_channel")) metrics["per_channel"] = j["per_channel"];
        r.metrics = metrics_from_json(metrics);
        if (j.contains("timing")) {
            TimingRecord t;
            t.wall_seconds = j["timing"].at("wall_seconds").get<double>();
            t.samples_per_second = j["timing"].at("samples_per_second").get<double>();
            if (j["timing"].contains("peak_rss_mb"))
                t.peak_rss_mb = j["timing"]["peak_rss_mb"].get<double>();
            r.timing = t;
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("bad report: ") + e.what());
    }
    return r;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) raise(ErrorCode::IoError, "cannot write " + tmp.string());
        f << text;
        if (!f) raise(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) raise(ErrorCode::IoError, "cannot move report into place: " + ec.message());
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
    write_text_atomic(path, report_to_json(report).dump(2) + "\n");
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, "bad report " + path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

LeaderboardTable build_table(const std::vector<EvalReport>& reports) {
    if (reports.empty()) raise(ErrorCode::InvalidArgument, "no reports to merge");
    LeaderboardTable table;
    table.dataset = reports.front().dataset;
    table.config_hash = reports.front().config_hash;
    for (const EvalReport& r : reports) {
        if (r.dataset != table.dataset)
            raise(ErrorCode::ConflictingMetadata,
                  "reports mix datasets '" + table.dataset + "' and '" + r.dataset + "'");
        if (r.config_hash != table.config_hash)
            raise(ErrorCode::ConflictingMetadata,
                  "reports mix config hashes " + table.config_hash + " and " +
                      r.config_hash);
    }

    std::map<std::tuple<std::string, std::string, std::size_t>, LeaderboardRow> rows;
    for (const EvalReport& r : reports) {
        const std::size_t train_size = r.split ? r.split->n_train : 0;
        auto& row = rows[{r.model, r.representation, train_size}];
        row.model = r.model;
        row.representation = r.representation;
        row.train_size = train_size;
        std::string difficulty = r.split ? r.split->protocol : "random";
        if (difficulty == "extrapolatory")
            row.extrapolatory = r.metrics;
        else
            row.random = r.metrics;
    }
    for (auto& [key, row] : rows) table.rows.push_back(std::move(row));
    // std::map ordering already sorts by model name first
    return table;
}

namespace {

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

struct ColumnBest {
    double random[3] = {-1, -1, -1};
    double extrapolatory[3] = {-1, -1, -1};
};

ColumnBest column_best(const LeaderboardTable& table) {
    ColumnBest best;
    for (const auto& row : table.rows) {
        if (row.random) {
            best.random[0] = std::max(best.random[0], row.random->m1_score);
            best.random[1] = std::max(best.random[1], row.random->m2_score);
            best.random[2] = std::max(best.random[2], row.random->m3_score);
        }
        if (row.extrapolatory) {
            best.extrapolatory[0] = std::max(best.extrapolatory[0], row.extrapolatory->m1_score);
            best.extrapolatory[1] = std::max(best.extrapolatory[1], row.extrapolatory->m2_score);
            best.extrapolatory[2] = std::max(best.extrapolatory[2], row.extrapolatory->m3_score);
        }
    }
    return best;
}

} // namespace

std::string render_table_csv(const LeaderboardTable& table) {
    std::string out = "model,representation,train_size,split,M1,M2,M3\n";
    for (const auto& row : table.rows) {
        const auto line = [&](const char* split, const MetricReport& m) {
            out += row.model + "," + row.representation + "," +
                   std::to_string(row.train_size) + "," + split + "," +
                   fmt1(m.m1_score) + "," + fmt1(m.m2_score) + "," + fmt1(m.m3_score) +
                   "\n";
        };
        if (row.random) line("random", *row.random);
        if (row.extrapolatory) line("extrapolatory", *row.extrapolatory);
    }
    return out;
}

std::string render_table_markdown(const LeaderboardTable& table) {
    const ColumnBest best = column_best(table);
    std::string out;
    out += "| Model | Repr | Train | Random M1 | Random M2 | Random M3 | "
           "Extrap M1 | Extrap M2 | Extrap M3 |\n";
    out += "|---|---|---|---|---|---|---|---|---|\n";
    const auto cell = [](const std::optional<MetricReport>& m, int idx, const double* best3) {
        if (!m) return std::string("-");
        const double v = idx == 0 ? m->m1_score : idx == 1 ? m->m2_score : m->m3_score;
        std::string s = fmt1(v);
        if (fmt1(best3[idx]) == s) s = "**" + s + "**";
        return s;
    };
    for (const auto& row : table.rows) {
        out += "| " + row.model + " | " + row.representation + " | " +
               std::to_string(row.train_size) + " | ";
        for (int k = 0; k < 3; ++k) out += cell(row.random, k, best.random) + " | ";
        for (int k = 0; k < 3; ++k)
            out += cell(row.extrapolatory, k, best.extrapolatory) + (k < 2 ? " | " : " |\n");
    }
    return out;
}

} // namespace floweval
