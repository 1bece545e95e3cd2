#include "floweval/dataset.hpp"
#include "floweval/report.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

using namespace floweval;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path log = dir / "cli.log";
    const std::string cmd =
        std::string(FLOWEVAL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(log);
    r.output.assign(std::istreambuf_iterator<char>(f), {});
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "floweval_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// small manufactured archive plus a self-prediction archive
void write_fixture(const fs::path& dir, int n_samples, int grid_n) {
    const Grid g = Grid::make(grid_n, grid_n, 0, 1, 0, 1);
    std::vector<Sample> samples;
    PredictionSet preds;
    for (int k = 0; k < n_samples; ++k) {
        auto made = manufactured_sample(ManufacturedKind::RadialDisc, g, 50.0 + 7.0 * k,
                                        EvalConfig{});
        made.sample.id = "fx" + std::to_string(k);
        preds.ids.push_back(made.sample.id);
        preds.fields.push_back(made.sample.truth);
        samples.push_back(std::move(made.sample));
    }
    write_archive(dir / "data.zip", Dataset::make(samples, {"fixture", "memory"}));
    write_predictions(dir / "self.zip", preds, g);
}

} // namespace

TEST_CASE("evaluate with self-predictions scores 100 on accuracy") {
    const auto dir = fresh_dir("self");
    write_fixture(dir, 3, 33);
    const auto r = run_cli("evaluate --data " + (dir / "data.zip").string() + " --pred " +
                               (dir / "self.zip").string() + " --out " +
                               (dir / "report.json").string(),
                           dir);
    CHECK(r.exit_code == 0);
    const EvalReport rep = load_report(dir / "report.json");
    CHECK(rep.metrics.m1_score == 100.0);
    CHECK(rep.metrics.m2_score == 100.0);
    CHECK(rep.metrics.n_samples == 3);
}

TEST_CASE("missing prediction archive names the path and exits nonzero") {
    const auto dir = fresh_dir("missing");
    write_fixture(dir, 1, 17);
    const auto r = run_cli("evaluate --data " + (dir / "data.zip").string() +
                               " --pred " + (dir / "nope.zip").string() + " --out " +
                               (dir / "report.json").string(),
                           dir);
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("nope.zip") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "report.json")); // no partial report
}

TEST_CASE("split files are byte-identical across reruns") {
    const auto dir = fresh_dir("split");
    write_fixture(dir, 10, 9);
    const std::string base = "split --data " + (dir / "data.zip").string() +
                             " --protocol random --fraction 0.2 --seed 9";
    CHECK(run_cli(base + " --out " + (dir / "a.json").string(), dir).exit_code == 0);
    CHECK(run_cli(base + " --out " + (dir / "b.json").string(), dir).exit_code == 0);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    const SplitResult split = load_split(dir / "a.json");
    CHECK(split.test_ids.size() == 2);
    CHECK(split.train_ids.size() == 8);
}

TEST_CASE("evaluate restricted to a split with subset and csv output") {
    const auto dir = fresh_dir("splitres");
    write_fixture(dir, 6, 17);
    REQUIRE(run_cli("split --data " + (dir / "data.zip").string() +
                        " --protocol extrapolatory --fraction 0.2 --out " +
                        (dir / "split.json").string(),
                    dir)
                .exit_code == 0);
    const auto r = run_cli("evaluate --data " + (dir / "data.zip").string() + " --pred " +
                               (dir / "self.zip").string() + " --split " +
                               (dir / "split.json").string() + " --model demo" +
                               " --format csv --out " + (dir / "report.json").string(),
                           dir);
    CHECK(r.exit_code == 0);
    const EvalReport rep = load_report(dir / "report.json");
    const SplitResult split = load_split(dir / "split.json");
    CHECK(rep.metrics.n_samples == std::int64_t(split.test_ids.size()));
    CHECK(rep.split->protocol == "extrapolatory");
    const std::string csv = slurp(dir / "report.csv");
    CHECK(csv.find("model,representation,train_size,split,M1,M2,M3") == 0);
    CHECK(csv.find("demo,sdf") != std::string::npos);
}

TEST_CASE("mask geometry flavor recomputes the sdf") {
    const auto dir = fresh_dir("maskgeo");
    write_fixture(dir, 2, 33);
    const auto r = run_cli("evaluate --geometry mask --data " +
                               (dir / "data.zip").string() + " --pred " +
                               (dir / "self.zip").string() + " --out " +
                               (dir / "report.json").string(),
                           dir);
    CHECK(r.exit_code == 0);
    const EvalReport rep = load_report(dir / "report.json");
    CHECK(rep.representation == "mask");
    CHECK(rep.metrics.m1_score == 100.0);
}

TEST_CASE("table subcommand merges reports") {
    const auto dir = fresh_dir("table");
    write_fixture(dir, 2, 17);
    const std::string common = " --data " + (dir / "data.zip").string() + " --pred " +
                               (dir / "self.zip").string();
    REQUIRE(run_cli("evaluate" + common + " --model alpha --out " +
                        (dir / "alpha.json").string(),
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("evaluate" + common + " --model beta --out " +
                        (dir / "beta.json").string(),
                    dir)
                .exit_code == 0);
    const auto r = run_cli("table " + (dir / "alpha.json").string() + " " +
                               (dir / "beta.json").string() + " --format md --out " +
                               (dir / "board.md").string(),
                           dir);
    CHECK(r.exit_code == 0);
    const std::string md = slurp(dir / "board.md");
    CHECK(md.find("alpha") != std::string::npos);
    CHECK(md.find("beta") != std::string::npos);
    CHECK(md.find("**100.0**") != std::string::npos);
}

TEST_CASE("verify passes on a fresh build and honors --filter") {
    const auto dir = fresh_dir("verify");
    const auto all = run_cli("verify", dir);
    CHECK(all.exit_code == 0);
    CHECK(all.output.find("PASS score.anchors") != std::string::npos);
    CHECK(all.output.find("PASS residual.integral") != std::string::npos);

    const auto filtered = run_cli("verify --filter score", dir);
    CHECK(filtered.exit_code == 0);
    CHECK(filtered.output.find("score.anchors") != std::string::npos);
    CHECK(filtered.output.find("residual.integral") == std::string::npos);
}

TEST_CASE("timing flag records wall time without breaking the report") {
    const auto dir = fresh_dir("timing");
    write_fixture(dir, 2, 17);
    const auto r = run_cli("evaluate --timing --data " + (dir / "data.zip").string() +
                               " --pred " + (dir / "self.zip").string() + " --out " +
                               (dir / "report.json").string(),
                           dir);
    CHECK(r.exit_code == 0);
    const EvalReport rep = load_report(dir / "report.json");
    REQUIRE(rep.timing.has_value());
    CHECK(rep.timing->wall_seconds >= 0.0);
    CHECK(rep.timing->samples_per_second > 0.0);
}

TEST_CASE("FLOW_EVAL_THREADS is honored as the jobs fallback") {
    const auto dir = fresh_dir("envjobs");
    write_fixture(dir, 4, 17);
    const fs::path log = dir / "cli.log";
    const std::string cmd = "FLOW_EVAL_THREADS=4 " + std::string(FLOWEVAL_CLI_PATH) +
                            " evaluate --data " + (dir / "data.zip").string() +
                            " --pred " + (dir / "self.zip").string() + " --out " +
                            (dir / "env.json").string() + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    // identical to the explicit --jobs run
    REQUIRE(run_cli("evaluate --data " + (dir / "data.zip").string() + " --pred " +
                        (dir / "self.zip").string() + " --jobs 1 --out " +
                        (dir / "j1.json").string(),
                    dir)
                .exit_code == 0);
    CHECK(slurp(dir / "env.json") == slurp(dir / "j1.json"));
}

TEST_CASE("reports are byte-identical across job counts") {
    const auto dir = fresh_dir("jobs");
    write_fixture(dir, 8, 17);
    const std::string common = "evaluate --data " + (dir / "data.zip").string() +
                               " --pred " + (dir / "self.zip").string();
    REQUIRE(run_cli(common + " --jobs 1 --out " + (dir / "j1.json").string(), dir)
                .exit_code == 0);
    REQUIRE(run_cli(common + " --jobs 8 --out " + (dir / "j8.json").string(), dir)
                .exit_code == 0);
    CHECK(slurp(dir / "j1.json") == slurp(dir / "j8.json"));
}
