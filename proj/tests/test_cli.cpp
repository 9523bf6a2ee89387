// End-to-end exercises of the sfe binary: spawns the real executable (path in
// argv[1]) and checks files and exit codes.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sfe/telemetry.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_binary;
fs::path g_dir;

int run(const std::string& args) {
    const std::string cmd = g_binary + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

std::vector<std::string> split_cells(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    out.push_back("");
    out.pop_back();
    return out;
}

fs::path find_run_dir(const fs::path& root) {
    REQUIRE(fs::exists(root));
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) return entry.path();
    FAIL("no run directory under " << root.string());
    return {};
}

const char* kSmallScenario =
    " --set scenario.n_trips=14 --set scenario.seed=99 --set scenario.missing_rate=0"
    " --set pipeline.folds=5 --set pipeline.seed=7";

const char* kTinyModels =
    " --set models.random_forest.n_estimators=10 --set models.gradient_boosting.n_estimators=10"
    " --set models.xgb.n_estimators=10 --set models.adaboost.n_estimators=5"
    " --set models.xgb.max_depth=6 --set models.gradient_boosting.max_depth=6"
    " --set models.adaboost.max_depth=8 --set models.random_forest.max_depth=8"
    " --set models.mlp.epochs=5";

} // namespace

TEST_CASE("generate writes the canonical header and a manifest") {
    const fs::path out = g_dir / "gen" / "tele.csv"; // parent dir must be created
    const int code = run("generate --output " + out.string() + kSmallScenario);
    REQUIRE(code == 0);
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(out.string() + ".manifest.json"));

    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    std::ostringstream expected;
    for (std::size_t i = 0; i < sfe::telemetry_schema().size(); ++i) {
        if (i) expected << ',';
        expected << sfe::telemetry_schema()[i].name;
    }
    CHECK(header == expected.str());
}

TEST_CASE("generate replays byte-identically from its manifest") {
    const fs::path a = g_dir / "replay_a.csv";
    const fs::path b = g_dir / "replay_b.csv";
    REQUIRE(run("generate --output " + a.string() + kSmallScenario) == 0);
    REQUIRE(run("generate --output " + b.string() + " --from-manifest " + a.string() +
                ".manifest.json") == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("compare runs the full pipeline and reports every kind") {
    const fs::path tele = g_dir / "pipe.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);

    const fs::path runs = g_dir / "runs_all";
    const int code = run("compare --input " + tele.string() + " --output-dir " + runs.string() +
                         kSmallScenario + kTinyModels + " --jobs 2");
    REQUIRE(code == 0);

    const fs::path run_dir = find_run_dir(runs);
    const auto lines = split_lines(slurp(run_dir / "report.csv"));
    REQUIRE(lines.size() == 11); // header + ten model kinds
    CHECK(split_cells(lines[0])[0] == "method");
    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "pca.json"));
    CHECK(fs::exists(run_dir / "kmeans.json"));
    CHECK(fs::exists(run_dir / "features.csv"));
    CHECK(fs::exists(run_dir / "importance.csv"));
}

TEST_CASE("compare with a kind filter and a zero horizon") {
    const fs::path tele = g_dir / "pipe0.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);

    const fs::path runs = g_dir / "runs_filtered";
    const int code = run("compare --input " + tele.string() + " --output-dir " + runs.string() +
                         kSmallScenario + kTinyModels + " --kinds linear,xgb --horizon 0");
    REQUIRE(code == 0);

    const auto lines = split_lines(slurp(find_run_dir(runs) / "report.csv"));
    REQUIRE(lines.size() == 3);
    const auto header = split_cells(lines[0]);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_cells(lines[i]);
        const double rmse_test = std::stod(cells[col["rmse_test"]]);
        const double future = std::stod(cells[col["future_rmse_test"]]);
        CHECK(std::abs(future - rmse_test) < 1e-10);
    }
}

TEST_CASE("predict replays stored training predictions") {
    const fs::path tele = g_dir / "replayfit.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);
    const fs::path runs = g_dir / "runs_predict";
    REQUIRE(run("compare --input " + tele.string() + " --output-dir " + runs.string() +
                kSmallScenario + kTinyModels + " --kinds linear") == 0);
    const fs::path run_dir = find_run_dir(runs);

    const fs::path out = g_dir / "pred.csv";
    REQUIRE(run("predict --model " + (run_dir / "model_linear.json").string() + " --input " +
                tele.string() + " --output " + out.string()) == 0);

    // Stored training predictions are keyed by frame row; map them back to
    // source rows via features.csv (no rows were removed: missing_rate = 0).
    std::map<long, double> frame_to_source;
    {
        const auto lines = split_lines(slurp(run_dir / "features.csv"));
        for (std::size_t i = 1; i < lines.size(); ++i)
            frame_to_source[static_cast<long>(i - 1)] = std::stod(split_cells(lines[i])[0]);
    }
    std::map<long, double> stored; // source row -> y_hat
    {
        const auto lines = split_lines(slurp(run_dir / "predictions_train_linear.csv"));
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cells = split_cells(lines[i]);
            stored[static_cast<long>(frame_to_source[std::stol(cells[0])])] = std::stod(cells[2]);
        }
    }
    REQUIRE(!stored.empty());

    std::size_t matched = 0;
    double worst = 0.0;
    const auto lines = split_lines(slurp(out));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_cells(lines[i]);
        if (cells.size() < 2 || cells[1].empty()) continue;
        const auto it = stored.find(std::stol(cells[0]));
        if (it == stored.end()) continue;
        ++matched;
        worst = std::max(worst, std::abs(std::stod(cells[1]) - it->second));
    }
    CHECK(matched == stored.size());
    CHECK(worst < 1e-9);
}

TEST_CASE("predict rejects a schema-mismatched input with exit 3") {
    const fs::path tele = g_dir / "schema.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);
    const fs::path runs = g_dir / "runs_schema";
    REQUIRE(run("compare --input " + tele.string() + " --output-dir " + runs.string() +
                kSmallScenario + kTinyModels + " --kinds linear") == 0);
    const fs::path model = find_run_dir(runs) / "model_linear.json";

    // Strip a required channel from the header.
    const std::string full = slurp(tele);
    const fs::path broken = g_dir / "schema_broken.csv";
    {
        std::ofstream out(broken);
        std::stringstream ss(full);
        std::string line;
        bool first = true;
        while (std::getline(ss, line)) {
            if (first) {
                const auto pos = line.find(",TORQUE_2");
                REQUIRE(pos != std::string::npos);
                line.erase(pos, 9);
                first = false;
            }
            out << line << '\n';
        }
    }
    CHECK(run("predict --model " + model.string() + " --input " + broken.string() + " --output " +
              (g_dir / "pred_broken.csv").string()) == 3);

    SUBCASE("empty input produces an empty prediction file with exit 0") {
        const fs::path empty = g_dir / "empty.csv";
        {
            std::ofstream out(empty);
            std::stringstream ss(full);
            std::string header;
            std::getline(ss, header);
            out << header << '\n';
        }
        const fs::path pred = g_dir / "pred_empty.csv";
        CHECK(run("predict --model " + model.string() + " --input " + empty.string() +
                  " --output " + pred.string()) == 0);
        CHECK(split_lines(slurp(pred)).size() == 1); // header only
    }
}

TEST_CASE("inspect prints statistics and writes the table") {
    const fs::path tele = g_dir / "inspect.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);
    const fs::path stats = g_dir / "stats.csv";
    REQUIRE(run("inspect --input " + tele.string() + " --stats-csv " + stats.string()) == 0);
    const auto lines = split_lines(slurp(stats));
    CHECK(lines.size() == sfe::telemetry_schema().size() + 1);
}

TEST_CASE("config file keys are honored and flags win") {
    const fs::path conf = g_dir / "run.conf";
    {
        std::ofstream out(conf);
        out << "# tiny scenario\n"
            << "scenario.n_trips = 3\n"
            << "scenario.seed = 5\n"
            << "scenario.missing_rate = 0\n";
    }
    const fs::path a = g_dir / "conf_a.csv";
    REQUIRE(run("generate --config " + conf.string() + " --output " + a.string()) == 0);
    const auto rows_a = split_lines(slurp(a)).size() - 1;
    CHECK(rows_a > 240);
    CHECK(rows_a < 330); // three trips of ~90 minutes

    const fs::path b = g_dir / "conf_b.csv";
    REQUIRE(run("generate --config " + conf.string() + " --set scenario.n_trips=1 --output " +
                b.string()) == 0);
    CHECK(split_lines(slurp(b)).size() - 1 < rows_a / 2);
}

TEST_CASE("config errors exit with code 2") {
    CHECK(run("compare --input nowhere.csv --set bogus.key=1") == 2);
    CHECK(run("generate --set models.kinds=warp_drive --output " +
              (g_dir / "nope.csv").string()) == 2);
}

TEST_CASE("missing input fails in the load stage with code 10") {
    CHECK(run("compare --input " + (g_dir / "missing.csv").string()) == 10);
}

TEST_CASE("preprocess and train produce artifacts evaluate can consume") {
    const fs::path tele = g_dir / "chain.csv";
    REQUIRE(run("generate --output " + tele.string() + kSmallScenario) == 0);

    const fs::path pre_runs = g_dir / "runs_pre";
    REQUIRE(run("preprocess --input " + tele.string() + " --output-dir " + pre_runs.string() +
                kSmallScenario) == 0);
    CHECK(fs::exists(find_run_dir(pre_runs) / "feature_spec.json"));

    const fs::path train_runs = g_dir / "runs_train";
    REQUIRE(run("train --input " + tele.string() + " --output-dir " + train_runs.string() +
                kSmallScenario + kTinyModels + " --kinds linear,decision_tree") == 0);
    const fs::path run_dir = find_run_dir(train_runs);
    CHECK(fs::exists(run_dir / "model_linear.json"));
    CHECK(fs::exists(run_dir / "model_decision_tree.json"));

    REQUIRE(run("evaluate --run-dir " + run_dir.string()) == 0);
    const auto lines = split_lines(slurp(run_dir / "evaluate.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(fs::exists(run_dir / "histogram_linear.csv"));
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <sfe binary>\n");
        return 2;
    }
    g_binary = argv[1];
    g_dir = fs::temp_directory_path() / "sfe_cli_test";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);

    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    return context.run();
}
