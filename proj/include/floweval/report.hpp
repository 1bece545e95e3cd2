#pragma once

#include "floweval/dataset.hpp"
#include "floweval/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace floweval {

struct TimingRecord {
    double wall_seconds = 0.0;
    double samples_per_second = 0.0;
    std::optional<double> peak_rss_mb;
};

struct SplitSummary {
    std::string protocol;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
};

/// Everything cmd_evaluate writes: metric values plus the metadata the
/// leaderboard needs to group and sanity-check rows.
struct EvalReport {
    std::string model = "model";
    std::string representation = "sdf"; ///< geometry representation evaluated
    std::string dataset;                ///< source archive tag
    EvalConfig config;
    std::string config_hash;
    std::optional<SplitSummary> split;
    MetricReport metrics;
    std::optional<TimingRecord> timing;
};

nlohmann::json config_to_json(const EvalConfig& config);
EvalConfig config_from_json(const nlohmann::json& j);

/// FNV-1a 64 over the canonical (sorted-key) config JSON; stable across runs
/// and platforms.
std::string config_hash(const EvalConfig& config);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

/// One leaderboard line: model scores per split difficulty.
struct LeaderboardRow {
    std::string model;
    std::string representation;
    std::size_t train_size = 0;
    std::optional<MetricReport> random;
    std::optional<MetricReport> extrapolatory;
};

struct LeaderboardTable {
    std::vector<LeaderboardRow> rows; ///< sorted by model name
    std::string dataset;
    std::string config_hash;
};

/// Merges reports; throws ConflictingMetadata when dataset tags or config
/// hashes disagree.
LeaderboardTable build_table(const std::vector<EvalReport>& reports);

/// CSV columns: model,representation,train_size,split,M1,M2,M3 — one line per
/// (row, split); scores rendered to 1 decimal place.
std::string render_table_csv(const LeaderboardTable& table);

/// Markdown with Random/Extrapolatory column groups; the best score per
/// column is bold.
std::string render_table_markdown(const LeaderboardTable& table);

/// Serialize-to-string then single atomic write; no partial files on error.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace floweval
