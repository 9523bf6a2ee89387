// sfe: ship-fuel-efficiency modeling pipeline CLI.
// Subcommands: generate, inspect, preprocess, train, evaluate, compare, predict.
// Exit codes: 0 ok, 2 config error, 3 schema mismatch, 10-17 pipeline stage
// failures (load, cluster, impute, mode-select, features, outliers, train,
// report).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "sfe/evaluate.hpp"
#include "sfe/rng.hpp"
#include "sfe/pipeline.hpp"
#include "sfe/synthgen.hpp"

namespace fs = std::filesystem;
using namespace sfe;

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides; // key=value, applied after the file
};

PipelineConfig load_config(const CommonFlags& flags) {
    PipelineConfig cfg;
    if (!flags.config_path.empty()) cfg = PipelineConfig::from_file(flags.config_path);
    for (const auto& kv : flags.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "override must be key=value: " + kv);
        cfg.apply_key(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "key = value config file");
    cmd->add_option("--set", flags.overrides,
                    "config override key=value (repeatable, wins over --config)");
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    ensure_parent_dir(path);
    std::ofstream out(path);
    if (!out.good()) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
}

nlohmann::json scenario_manifest(const PipelineConfig& cfg) {
    nlohmann::json m;
    m["version"] = 1;
    m["scenario"] = cfg.to_json()["scenario"];
    m["physics"] = cfg.to_json()["physics"];
    m["route"] = cfg.to_json()["route"];
    return m;
}

void apply_scenario_manifest(PipelineConfig& cfg, const nlohmann::json& m) {
    const auto& s = m.at("scenario");
    cfg.scenario.rng_seed = s.at("seed").get<std::uint64_t>();
    cfg.scenario.n_trips = s.at("n_trips").get<int>();
    cfg.scenario.captain_count = s.at("captain_count").get<int>();
    cfg.scenario.wind_mean = s.at("wind_mean").get<double>();
    cfg.scenario.wind_std = s.at("wind_std").get<double>();
    cfg.scenario.current_std = s.at("current_std").get<double>();
    cfg.scenario.wind_dir_mean = s.at("wind_dir_mean").get<double>();
    cfg.scenario.wind_penalty = s.at("wind_penalty").get<double>();
    cfg.scenario.speed_wobble = s.at("speed_wobble").get<double>();
    cfg.scenario.dwell_minutes = s.at("dwell_minutes").get<double>();
    cfg.missing_rate = s.at("missing_rate").get<double>();
    const auto& p = m.at("physics");
    cfg.physics.k_fuel = p.at("k_fuel").get<double>();
    cfg.physics.ghp = p.at("ghp").get<double>();
    cfg.physics.load_factor = p.at("load_factor").get<double>();
    cfg.physics.fuel_density = p.at("fuel_density").get<double>();
    cfg.physics.displacement = p.at("displacement").get<double>();
    cfg.physics.fuel_coefficient = p.at("fuel_coefficient").get<double>();
    cfg.physics.max_engine_power = p.at("max_engine_power").get<double>();
    cfg.physics.n_engines = p.at("n_engines").get<int>();
    cfg.physics.base_idle = p.at("base_idle").get<double>();
    const auto& r = m.at("route");
    cfg.route.dock_a_lat = r.at("dock_a_lat").get<double>();
    cfg.route.dock_a_lon = r.at("dock_a_lon").get<double>();
    cfg.route.dock_b_lat = r.at("dock_b_lat").get<double>();
    cfg.route.dock_b_lon = r.at("dock_b_lon").get<double>();
    cfg.route.nominal_speed = r.at("nominal_speed").get<double>();
    cfg.route.mode2_radius = r.at("mode2_radius").get<double>();
    cfg.route.trip_minutes = r.at("trip_minutes").get<double>();
}

int cmd_generate(const CommonFlags& flags, const std::string& output,
                 const std::string& from_manifest) {
    PipelineConfig cfg = load_config(flags);
    if (!from_manifest.empty())
        apply_scenario_manifest(cfg, nlohmann::json::parse(read_file(from_manifest)));

    Dataset data = simulate_voyages(cfg.physics, cfg.route, cfg.scenario);
    if (cfg.missing_rate > 0.0)
        data = inject_missing(data, cfg.missing_rate, cfg.scenario.rng_seed);

    ensure_parent_dir(output);
    write_csv(data, output);
    write_file(output + ".manifest.json", scenario_manifest(cfg).dump(2));
    std::cout << "wrote " << data.n_rows() << " rows x " << data.n_columns() << " columns to "
              << output << "\n";
    return 0;
}

int cmd_inspect(const CommonFlags& flags, std::string input, const std::string& target,
                const std::string& stats_csv) {
    const PipelineConfig cfg = load_config(flags);
    if (input.empty()) input = cfg.input_csv;
    if (input.empty()) throw Error(ErrorCode::ConfigError, "inspect needs --input");

    const Dataset data = load_csv(input, telemetry_schema());
    const auto stats = column_stats(data, target);
    const auto violations = validate(data);

    std::cout << std::left << std::setw(22) << "column" << std::right << std::setw(12) << "mean"
              << std::setw(12) << "std" << std::setw(12) << "min" << std::setw(12) << "max"
              << std::setw(12) << "median" << std::setw(10) << "corr" << std::setw(10) << "mae_cc"
              << "\n";
    std::ostringstream csv;
    csv << "column,n,mean,std_dev,min,max,median,target_correlation,mae_cross_correlation\n";
    for (const auto& s : stats) {
        std::cout << std::left << std::setw(22) << s.name << std::right << std::fixed
                  << std::setprecision(3) << std::setw(12) << s.mean << std::setw(12) << s.std_dev
                  << std::setw(12) << s.min << std::setw(12) << s.max << std::setw(12) << s.median
                  << std::setw(10) << s.target_correlation << std::setw(10)
                  << s.mae_cross_correlation << "\n";
        csv << s.name << ',' << s.n << ',' << format_double(s.mean) << ','
            << format_double(s.std_dev) << ',' << format_double(s.min) << ','
            << format_double(s.max) << ',' << format_double(s.median) << ','
            << format_double(s.target_correlation) << ',' << format_double(s.mae_cross_correlation)
            << '\n';
    }
    std::size_t warns = 0, rejects = 0;
    for (const auto& v : violations) (v.severity == Severity::warn ? warns : rejects)++;
    std::cout << data.n_rows() << " rows, " << warns << " warnings, " << rejects
              << " rule violations\n";
    if (!stats_csv.empty()) write_file(stats_csv, csv.str());
    return 0;
}

Dataset load_input(const PipelineConfig& cfg, const std::string& input_flag) {
    const std::string path = input_flag.empty() ? cfg.input_csv : input_flag;
    if (path.empty()) throw Error(ErrorCode::ConfigError, "no input CSV configured");
    try {
        return load_csv(path, telemetry_schema());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw StageFailure(10, "load", e.what());
    }
}

int cmd_preprocess(const CommonFlags& flags, const std::string& input,
                   const std::string& output_dir) {
    PipelineConfig cfg = load_config(flags);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    const Dataset data = load_input(cfg, input);
    const PreprocessResult pre = run_preprocess(data, cfg);

    const fs::path dir = fs::path(cfg.output_dir) / cfg.config_hash().substr(0, 12);
    fs::create_directories(dir);
    write_file((dir / "pca.json").string(), pre.pca.to_json());
    write_file((dir / "kmeans.json").string(), pre.kmeans.to_json());
    write_file((dir / "feature_spec.json").string(), pre.spec.to_json());
    write_feature_csv(pre.frame, (dir / "features.csv").string());

    nlohmann::json manifest;
    manifest["config"] = cfg.to_json();
    manifest["rows_after_outliers"] = pre.frame.n_rows();
    manifest["selected_features"] = pre.spec.selected;
    manifest["mode_agreement"] = {{"variance_manual", pre.mode_agreement.variance_a},
                                  {"mae", pre.mode_agreement.mae},
                                  {"variance_diff", pre.mode_agreement.variance_diff}};
    write_file((dir / "preprocess_manifest.json").string(), manifest.dump(2));

    std::cout << "preprocessed " << data.n_rows() << " -> " << pre.frame.n_rows()
              << " rows; features: ";
    for (std::size_t i = 0; i < pre.spec.selected.size(); ++i)
        std::cout << (i ? "," : "") << pre.spec.selected[i];
    std::cout << "\nartifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags, const std::string& input, const std::string& output_dir,
              const std::string& kinds_csv, int jobs) {
    PipelineConfig cfg = load_config(flags);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (jobs > 0) cfg.jobs = jobs;
    if (!kinds_csv.empty()) cfg.apply_key("models.kinds", kinds_csv);

    const Dataset data = load_input(cfg, input);
    const PreprocessResult pre = run_preprocess(data, cfg);

    const fs::path dir = fs::path(cfg.output_dir) / cfg.config_hash().substr(0, 12);
    fs::create_directories(dir);

    const ModelMatrix matrix = extract_matrix(pre.frame, pre.spec.selected);
    const SplitIndices sp = split(static_cast<std::size_t>(matrix.x.rows()), cfg.split_ratio,
                                  cfg.folds, cfg.pipeline_seed);
    Eigen::MatrixXd x_train(static_cast<Eigen::Index>(sp.train.size()), matrix.x.cols());
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(sp.train.size()));
    for (std::size_t i = 0; i < sp.train.size(); ++i) {
        x_train.row(static_cast<Eigen::Index>(i)) =
            matrix.x.row(static_cast<Eigen::Index>(sp.train[i]));
        y_train(static_cast<Eigen::Index>(i)) = matrix.y(static_cast<Eigen::Index>(sp.train[i]));
    }
    const Normalizer norm = fit_normalizer(x_train, pre.spec.selected);
    const Eigen::MatrixXd x_train_n = norm.apply(x_train);

    write_file((dir / "normalizer.json").string(), norm.to_json());
    write_file((dir / "split.json").string(), sp.to_json());
    write_file((dir / "feature_spec.json").string(), pre.spec.to_json());
    write_feature_csv(pre.frame, (dir / "features.csv").string());

    for (ModelKind kind : cfg.kinds) {
        Hyperparams hp = Hyperparams::defaults(kind);
        const std::string prefix = std::string(model_kind_name(kind)) + ".";
        for (const auto& [key, value] : cfg.hyperparam_overrides)
            if (key.rfind(prefix, 0) == 0) hp.set(key.substr(prefix.size()), value);

        TrainedModel model =
            train_model(kind, x_train_n, y_train, hp,
                        derive_seed(cfg.pipeline_seed, 0x6d6f64656c000000ULL,
                                    static_cast<std::uint64_t>(kind)),
                        cfg.jobs);
        ModelArtifact artifact{model, pre.spec, norm, pre.spec.fingerprint()};
        write_file((dir / ("model_" + std::string(model_kind_name(kind)) + ".json")).string(),
                   artifact.to_json_text());

        std::ostringstream pred_csv;
        pred_csv << "frame_row,y,y_hat\n";
        for (std::size_t i = 0; i < sp.train.size(); ++i) {
            const double y_hat =
                model.predictor->predict_one(x_train_n.row(static_cast<Eigen::Index>(i)));
            pred_csv << sp.train[i] << ',' << format_double(y_train(static_cast<Eigen::Index>(i)))
                     << ',' << format_double(y_hat) << '\n';
        }
        write_file(
            (dir / ("predictions_train_" + std::string(model_kind_name(kind)) + ".csv")).string(),
            pred_csv.str());
        std::cout << "trained " << model_kind_name(kind) << " in " << std::fixed
                  << std::setprecision(5) << model.fit_seconds << " s\n";
    }
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& run_dir, const std::string& kinds_csv) {
    const fs::path dir(run_dir);
    const FeatureFrame frame = load_feature_csv((dir / "features.csv").string());
    const SplitIndices sp = SplitIndices::from_json(read_file((dir / "split.json").string()));

    std::vector<std::string> kind_names;
    if (!kinds_csv.empty()) {
        std::stringstream ss(kinds_csv);
        std::string item;
        while (std::getline(ss, item, ',')) kind_names.push_back(item);
    } else {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("model_", 0) == 0 && entry.path().extension() == ".json")
                kind_names.push_back(name.substr(6, name.size() - 6 - 5));
        }
        std::sort(kind_names.begin(), kind_names.end());
    }
    if (kind_names.empty()) throw Error(ErrorCode::ConfigError, "no model artifacts in " + run_dir);

    std::ostringstream csv;
    csv << "method,r2_test,rmse_test\n";
    std::cout << std::left << std::setw(20) << "method" << std::right << std::setw(12) << "r2_test"
              << std::setw(14) << "rmse_test" << "\n";
    for (const auto& name : kind_names) {
        const ModelArtifact artifact =
            ModelArtifact::from_json_text(read_file((dir / ("model_" + name + ".json")).string()));
        const ModelMatrix matrix = extract_matrix(frame, artifact.spec.selected);
        const Eigen::MatrixXd x_all = artifact.normalizer.apply(matrix.x);

        Eigen::VectorXd y_test(static_cast<Eigen::Index>(sp.test.size()));
        Eigen::VectorXd y_hat(y_test.size());
        for (std::size_t i = 0; i < sp.test.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(sp.test[i]);
            y_test(static_cast<Eigen::Index>(i)) = matrix.y(row);
            y_hat(static_cast<Eigen::Index>(i)) = artifact.model.predictor->predict_one(x_all.row(row));
        }
        const double r2_value = r2(y_test, y_hat);
        const double rmse_value = rmse(y_test, y_hat);
        csv << name << ',' << format_double(r2_value) << ',' << format_double(rmse_value) << '\n';
        write_file((dir / ("histogram_" + name + ".csv")).string(),
                   prediction_histogram_csv(y_test, y_hat));
        std::cout << std::left << std::setw(20) << name << std::right << std::fixed
                  << std::setprecision(5) << std::setw(12) << r2_value << std::setw(14)
                  << rmse_value << "\n";
    }
    write_file((dir / "evaluate.csv").string(), csv.str());
    return 0;
}

int cmd_compare(const CommonFlags& flags, const std::string& input, const std::string& output_dir,
                const std::string& kinds_csv, int horizon, int jobs) {
    PipelineConfig cfg = load_config(flags);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    if (!kinds_csv.empty()) cfg.apply_key("models.kinds", kinds_csv);
    if (horizon >= 0) cfg.horizon = static_cast<std::size_t>(horizon);
    if (jobs > 0) cfg.jobs = jobs;

    const Dataset data = load_input(cfg, input);
    const PipelineResult result = run_pipeline(data, cfg);

    std::cout << std::left << std::setw(20) << "method" << std::right << std::setw(11) << "fit_s"
              << std::setw(11) << "pred_s" << std::setw(8) << "params" << std::setw(10) << "r2_val"
              << std::setw(10) << "r2_test" << std::setw(12) << "rmse_test" << std::setw(13)
              << "future_rmse" << "  status\n";
    for (const auto& row : result.comparison.report.rows) {
        std::cout << std::left << std::setw(20) << model_kind_name(row.kind) << std::right
                  << std::fixed << std::setprecision(5) << std::setw(11) << row.fit_seconds
                  << std::setw(11) << row.predict_seconds << std::setw(8)
                  << (row.param_count ? std::to_string(*row.param_count) : std::string("NA"))
                  << std::setprecision(4) << std::setw(10) << row.r2_validation << std::setw(10)
                  << row.r2_test << std::setprecision(2) << std::setw(12) << row.rmse_test
                  << std::setw(13) << row.future_rmse_test << "  " << row.status << "\n";
    }
    std::cout << "artifacts in " << result.run_dir << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& output) {
    const ModelArtifact artifact = ModelArtifact::from_json_text(read_file(model_path));
    Dataset data;
    try {
        data = load_csv(input, telemetry_schema());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MissingColumn)
            throw Error(ErrorCode::SchemaMismatch, e.what());
        throw;
    }
    const auto rows = predict_rows(artifact, data);

    std::ostringstream out;
    out << "source_row,prediction,reason\n";
    for (const auto& row : rows) {
        out << row.source_row << ',';
        if (row.reason.empty())
            out << format_double(row.prediction) << ',';
        else
            out << ',' << row.reason;
        out << '\n';
    }
    write_file(output, out.str());
    std::cout << "predicted " << rows.size() << " rows -> " << output << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ship fuel efficiency pipeline"};
    app.require_subcommand(1);

    CommonFlags generate_flags, inspect_flags, preprocess_flags, train_flags, compare_flags;
    std::string gen_output = "data/telemetry.csv";
    std::string gen_manifest;
    auto* generate = app.add_subcommand("generate", "write synthetic voyage telemetry CSV");
    add_common(generate, generate_flags);
    generate->add_option("--output", gen_output, "output CSV path");
    generate->add_option("--from-manifest", gen_manifest, "regenerate from a scenario manifest");

    std::string inspect_input, inspect_target = "ENGINE_1_SFC", inspect_stats;
    auto* inspect = app.add_subcommand("inspect", "column statistics and validation report");
    add_common(inspect, inspect_flags);
    inspect->add_option("--input", inspect_input, "telemetry CSV");
    inspect->add_option("--target", inspect_target, "correlation target column");
    inspect->add_option("--stats-csv", inspect_stats, "also write the stats table as CSV");

    std::string pre_input, pre_outdir;
    auto* preprocess = app.add_subcommand("preprocess", "cluster, impute, engineer, filter");
    add_common(preprocess, preprocess_flags);
    preprocess->add_option("--input", pre_input, "telemetry CSV");
    preprocess->add_option("--output-dir", pre_outdir, "artifact root (default runs/)");

    std::string train_input, train_outdir, train_kinds;
    int train_jobs = 0;
    auto* train = app.add_subcommand("train", "preprocess and fit models on the train split");
    add_common(train, train_flags);
    train->add_option("--input", train_input, "telemetry CSV");
    train->add_option("--output-dir", train_outdir, "artifact root");
    train->add_option("--kinds", train_kinds, "comma-separated model kinds");
    train->add_option("--jobs", train_jobs, "worker threads");

    std::string eval_run_dir, eval_kinds;
    auto* evaluate = app.add_subcommand("evaluate", "test metrics for saved model artifacts");
    evaluate->add_option("--run-dir", eval_run_dir, "run directory from train/compare")->required();
    evaluate->add_option("--kinds", eval_kinds, "comma-separated model kinds");

    std::string cmp_input, cmp_outdir, cmp_kinds;
    int cmp_horizon = -1, cmp_jobs = 0;
    auto* compare_cmd =
        app.add_subcommand("compare", "full pipeline: preprocess, train, k-fold, n-step-ahead");
    add_common(compare_cmd, compare_flags);
    compare_cmd->add_option("--input", cmp_input, "telemetry CSV");
    compare_cmd->add_option("--output-dir", cmp_outdir, "artifact root");
    compare_cmd->add_option("--kinds", cmp_kinds, "comma-separated model kinds");
    compare_cmd->add_option("--horizon", cmp_horizon, "n-step-ahead horizon (minutes)");
    compare_cmd->add_option("--jobs", cmp_jobs, "worker threads");

    std::string predict_model, predict_input, predict_output = "predictions.csv";
    auto* predict_cmd = app.add_subcommand("predict", "apply a saved model to a telemetry CSV");
    predict_cmd->add_option("--model", predict_model, "model artifact JSON")->required();
    predict_cmd->add_option("--input", predict_input, "telemetry CSV")->required();
    predict_cmd->add_option("--output", predict_output, "predictions CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(generate_flags, gen_output, gen_manifest);
        if (inspect->parsed())
            return cmd_inspect(inspect_flags, inspect_input, inspect_target, inspect_stats);
        if (preprocess->parsed()) return cmd_preprocess(preprocess_flags, pre_input, pre_outdir);
        if (train->parsed())
            return cmd_train(train_flags, train_input, train_outdir, train_kinds, train_jobs);
        if (evaluate->parsed()) return cmd_evaluate(eval_run_dir, eval_kinds);
        if (compare_cmd->parsed())
            return cmd_compare(compare_flags, cmp_input, cmp_outdir, cmp_kinds, cmp_horizon,
                               cmp_jobs);
        if (predict_cmd->parsed()) return cmd_predict(predict_model, predict_input, predict_output);
    } catch (const StageFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.code() == ErrorCode::ConfigError) return 2;
        if (e.code() == ErrorCode::SchemaMismatch || e.code() == ErrorCode::MissingSourceColumn)
            return 3;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
