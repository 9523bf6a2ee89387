#include "sfe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sfe/rng.hpp"

namespace sfe {

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

double to_num(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (...) {
        throw Error(ErrorCode::ConfigError, "bad numeric value for " + key + ": '" + value + "'");
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out.good()) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << content;
}

// Channels entering PCA/K-means: every post-drop numeric channel except the
// time index and the mode label itself (the label is what the manual-partition
// diagnostic compares against, so it must not leak into the clustering).
std::vector<std::string> clustering_columns(const Dataset& d) {
    std::vector<std::string> cols;
    for (const auto& c : d.columns)
        if (c.name != kTimestampColumn && c.name != "OPERATIONAL_MODE") cols.push_back(c.name);
    return cols;
}

Eigen::MatrixXd matrix_from(const Dataset& d, const std::vector<std::string>& cols,
                            const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const Column& c = d.column(cols[j]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.values[rows[i]];
    }
    return x;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return rows;
}

double row_pitch(const Dataset& d, std::size_t row) {
    const Column& p1 = d.column("PITCH_1");
    const Column& p2 = d.column("PITCH_2");
    double v = -1.0;
    if (!p1.missing[row]) v = std::max(v, p1.values[row]);
    if (!p2.missing[row]) v = std::max(v, p2.values[row]);
    return v;
}

} // namespace

void PipelineConfig::apply_key(const std::string& key, const std::string& value) {
    if (key == "input") input_csv = value;
    else if (key == "output_dir") output_dir = value;
    else if (key == "scenario.seed") scenario.rng_seed = static_cast<std::uint64_t>(to_num(key, value));
    else if (key == "scenario.n_trips") scenario.n_trips = static_cast<int>(to_num(key, value));
    else if (key == "scenario.captain_count") scenario.captain_count = static_cast<int>(to_num(key, value));
    else if (key == "scenario.wind_mean") scenario.wind_mean = to_num(key, value);
    else if (key == "scenario.wind_std") scenario.wind_std = to_num(key, value);
    else if (key == "scenario.current_std") scenario.current_std = to_num(key, value);
    else if (key == "scenario.wind_dir_mean") scenario.wind_dir_mean = to_num(key, value);
    else if (key == "scenario.wind_penalty") scenario.wind_penalty = to_num(key, value);
    else if (key == "scenario.speed_wobble") scenario.speed_wobble = to_num(key, value);
    else if (key == "scenario.dwell_minutes") scenario.dwell_minutes = to_num(key, value);
    else if (key == "scenario.missing_rate") missing_rate = to_num(key, value);
    else if (key == "physics.k_fuel") physics.k_fuel = to_num(key, value);
    else if (key == "physics.ghp") physics.ghp = to_num(key, value);
    else if (key == "physics.load_factor") physics.load_factor = to_num(key, value);
    else if (key == "physics.fuel_density") physics.fuel_density = to_num(key, value);
    else if (key == "physics.displacement") physics.displacement = to_num(key, value);
    else if (key == "physics.fuel_coefficient") physics.fuel_coefficient = to_num(key, value);
    else if (key == "physics.max_engine_power") physics.max_engine_power = to_num(key, value);
    else if (key == "physics.n_engines") physics.n_engines = static_cast<int>(to_num(key, value));
    else if (key == "physics.base_idle") physics.base_idle = to_num(key, value);
    else if (key == "route.dock_a_lat") route.dock_a_lat = to_num(key, value);
    else if (key == "route.dock_a_lon") route.dock_a_lon = to_num(key, value);
    else if (key == "route.dock_b_lat") route.dock_b_lat = to_num(key, value);
    else if (key == "route.dock_b_lon") route.dock_b_lon = to_num(key, value);
    else if (key == "route.nominal_speed") route.nominal_speed = to_num(key, value);
    else if (key == "route.mode2_radius") route.mode2_radius = to_num(key, value);
    else if (key == "route.trip_minutes") route.trip_minutes = to_num(key, value);
    else if (key == "preprocess.drop") dropped_columns = split_list(value);
    else if (key == "preprocess.n_pcs") n_pcs = static_cast<std::size_t>(to_num(key, value));
    else if (key == "preprocess.kmeans_k") kmeans_k = static_cast<std::size_t>(to_num(key, value));
    else if (key == "preprocess.kmeans_restarts") kmeans_restarts = static_cast<std::size_t>(to_num(key, value));
    else if (key == "preprocess.correlation_threshold") correlation_threshold = to_num(key, value);
    else if (key == "preprocess.collinearity_threshold") collinearity_threshold = to_num(key, value);
    else if (key == "preprocess.iqr_factor") iqr_factor = to_num(key, value);
    else if (key == "preprocess.impute_bins") impute_bins = static_cast<std::size_t>(to_num(key, value));
    else if (key == "pipeline.seed") pipeline_seed = static_cast<std::uint64_t>(to_num(key, value));
    else if (key == "pipeline.split_ratio") split_ratio = to_num(key, value);
    else if (key == "pipeline.folds") folds = static_cast<std::size_t>(to_num(key, value));
    else if (key == "pipeline.horizon") horizon = static_cast<std::size_t>(to_num(key, value));
    else if (key == "pipeline.jobs") jobs = static_cast<int>(to_num(key, value));
    else if (key == "models.kinds") {
        kinds.clear();
        for (const auto& name : split_list(value)) kinds.push_back(model_kind_from_name(name));
    } else if (key.rfind("models.", 0) == 0) {
        // models.<kind>.<param> = value  (numeric or string hyperparameter)
        const std::string rest = key.substr(7);
        const auto dot = rest.find('.');
        if (dot == std::string::npos)
            throw Error(ErrorCode::ConfigError, "expected models.<kind>.<param>: " + key);
        model_kind_from_name(rest.substr(0, dot)); // validates the kind
        try {
            hyperparam_overrides[rest] = to_num(key, value);
        } catch (const Error&) {
            hyperparam_overrides[rest] = value;
        }
    } else {
        throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    }
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorCode::ConfigError, "cannot open config " + path);
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError,
                        path + ":" + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            if (begin == std::string::npos) return std::string();
            const auto end = s.find_last_not_of(" \t\r");
            return s.substr(begin, end - begin + 1);
        };
        cfg.apply_key(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j;
    j["input"] = input_csv;
    j["output_dir"] = output_dir;
    j["scenario"] = {{"seed", scenario.rng_seed},
                     {"n_trips", scenario.n_trips},
                     {"captain_count", scenario.captain_count},
                     {"wind_mean", scenario.wind_mean},
                     {"wind_std", scenario.wind_std},
                     {"current_std", scenario.current_std},
                     {"wind_dir_mean", scenario.wind_dir_mean},
                     {"wind_penalty", scenario.wind_penalty},
                     {"speed_wobble", scenario.speed_wobble},
                     {"dwell_minutes", scenario.dwell_minutes},
                     {"missing_rate", missing_rate}};
    j["physics"] = {{"k_fuel", physics.k_fuel},
                    {"ghp", physics.ghp},
                    {"load_factor", physics.load_factor},
                    {"fuel_density", physics.fuel_density},
                    {"displacement", physics.displacement},
                    {"fuel_coefficient", physics.fuel_coefficient},
                    {"max_engine_power", physics.max_engine_power},
                    {"n_engines", physics.n_engines},
                    {"base_idle", physics.base_idle}};
    j["route"] = {{"dock_a_lat", route.dock_a_lat},       {"dock_a_lon", route.dock_a_lon},
                  {"dock_b_lat", route.dock_b_lat},       {"dock_b_lon", route.dock_b_lon},
                  {"nominal_speed", route.nominal_speed}, {"mode2_radius", route.mode2_radius},
                  {"trip_minutes", route.trip_minutes}};
    j["preprocess"] = {{"drop", dropped_columns},
                       {"n_pcs", n_pcs},
                       {"kmeans_k", kmeans_k},
                       {"kmeans_restarts", kmeans_restarts},
                       {"correlation_threshold", correlation_threshold},
                       {"collinearity_threshold", collinearity_threshold},
                       {"iqr_factor", iqr_factor},
                       {"impute_bins", impute_bins}};
    j["pipeline"] = {{"seed", pipeline_seed},
                     {"split_ratio", split_ratio},
                     {"folds", folds},
                     {"horizon", horizon}};
    std::vector<std::string> kind_names;
    for (ModelKind k : kinds) kind_names.push_back(model_kind_name(k));
    j["models"] = {{"kinds", kind_names}, {"overrides", hyperparam_overrides}};
    return j;
}

std::string PipelineConfig::config_hash() const {
    // jobs intentionally excluded: worker count must not change results.
    const std::string text = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PreprocessResult run_preprocess(const Dataset& input, const PipelineConfig& cfg) {
    PreprocessResult out;

    Dataset working;
    try {
        working = drop_columns(input, cfg.dropped_columns);
    } catch (const std::exception& e) {
        throw StageFailure(10, "load", e.what());
    }

    // Stage 11: standardize -> PCA -> K-means on the leading PCs.
    std::vector<std::string> cluster_cols;
    Standardizer standardizer;
    std::vector<std::size_t> complete_rows;
    try {
        cluster_cols = clustering_columns(working);
        for (std::size_t r = 0; r < working.n_rows(); ++r) {
            bool complete = true;
            for (const auto& name : cluster_cols)
                if (working.column(name).missing[r]) complete = false;
            if (complete) complete_rows.push_back(r);
        }
        if (complete_rows.size() < std::max<std::size_t>(2, cfg.kmeans_k))
            throw Error(ErrorCode::TooFewRows, "only " + std::to_string(complete_rows.size()) +
                                                   " complete rows for clustering");
        const Eigen::MatrixXd raw = matrix_from(working, cluster_cols, complete_rows);
        standardizer = fit_standardizer(raw);
        const Eigen::MatrixXd standardized = standardizer.apply(raw);
        out.pca = fit_pca(standardized);
        const std::size_t n_pcs = std::min<std::size_t>(cfg.n_pcs, cluster_cols.size());
        const Eigen::MatrixXd scores = pca_transform(out.pca, standardized, n_pcs);
        out.kmeans = fit_kmeans(scores, cfg.kmeans_k, derive_seed(cfg.pipeline_seed, 0x636c75ULL),
                                100, cfg.kmeans_restarts);
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(11, "cluster", e.what());
    }

    // Stage 12: within-cluster mode imputation. Rows that are not complete get
    // a provisional assignment by projecting with mean-filled (zero after
    // standardization) cells.
    try {
        const std::size_t n_pcs = std::min<std::size_t>(cfg.n_pcs, cluster_cols.size());
        Eigen::MatrixXd all(static_cast<Eigen::Index>(working.n_rows()),
                            static_cast<Eigen::Index>(cluster_cols.size()));
        for (std::size_t j = 0; j < cluster_cols.size(); ++j) {
            const Column& c = working.column(cluster_cols[j]);
            for (std::size_t r = 0; r < working.n_rows(); ++r) {
                const double std_dev = standardizer.std_dev(static_cast<Eigen::Index>(j));
                all(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
                    (c.missing[r] || std_dev <= 0.0)
                        ? 0.0
                        : (c.values[r] - standardizer.mean(static_cast<Eigen::Index>(j))) / std_dev;
            }
        }
        const Eigen::MatrixXd scores =
            (all.rowwise() - out.pca.mean.transpose()) *
            out.pca.components.topRows(static_cast<Eigen::Index>(n_pcs)).transpose();
        const std::vector<int> provisional = kmeans_assign(out.kmeans, scores);
        out.dataset = impute(working, provisional, &out.impute_log, cfg.impute_bins);
    } catch (const std::exception& e) {
        throw StageFailure(12, "impute", e.what());
    }

    // Stage 13: final assignments on the now-complete rows, agreement
    // diagnostic against the recorded mode, cruise-cluster selection.
    std::vector<std::size_t> cruise_rows;
    try {
        const Eigen::MatrixXd raw =
            matrix_from(out.dataset, cluster_cols, all_rows(out.dataset.n_rows()));
        const std::size_t n_pcs = std::min<std::size_t>(cfg.n_pcs, cluster_cols.size());
        const Eigen::MatrixXd scores =
            pca_transform(out.pca, standardizer.apply(raw), n_pcs);
        out.assignments = kmeans_assign(out.kmeans, scores);

        // Cruise cluster = larger share of rows with pitch above 50% of max.
        double max_pitch = 0.0;
        for (std::size_t r = 0; r < out.dataset.n_rows(); ++r)
            max_pitch = std::max(max_pitch, row_pitch(out.dataset, r));
        std::vector<std::size_t> high(cfg.kmeans_k, 0), total(cfg.kmeans_k, 0);
        for (std::size_t r = 0; r < out.dataset.n_rows(); ++r) {
            const int a = out.assignments[r];
            ++total[static_cast<std::size_t>(a)];
            if (row_pitch(out.dataset, r) > 0.5 * max_pitch) ++high[static_cast<std::size_t>(a)];
        }
        double best_share = -1.0;
        for (std::size_t c = 0; c < cfg.kmeans_k; ++c) {
            const double share =
                total[c] ? static_cast<double>(high[c]) / static_cast<double>(total[c]) : 0.0;
            if (share > best_share) {
                best_share = share;
                out.cruise_cluster = static_cast<int>(c);
            }
        }

        if (out.dataset.has_column("OPERATIONAL_MODE")) {
            std::vector<int> manual, learned;
            const Column& mode = out.dataset.column("OPERATIONAL_MODE");
            for (std::size_t r = 0; r < out.dataset.n_rows(); ++r) {
                if (mode.missing[r]) continue;
                manual.push_back(mode.values[r] != 0.0 ? 1 : 0);
                learned.push_back(out.assignments[r] == out.cruise_cluster ? 1 : 0);
            }
            if (!manual.empty()) out.mode_agreement = compare_partitions(manual, learned);
        }

        for (std::size_t r = 0; r < out.dataset.n_rows(); ++r)
            if (out.assignments[r] == out.cruise_cluster) cruise_rows.push_back(r);
        if (cruise_rows.empty()) throw Error(ErrorCode::EmptyInput, "cruise cluster is empty");
    } catch (const std::exception& e) {
        throw StageFailure(13, "mode-select", e.what());
    }

    // Stage 14: feature engineering + correlation-based selection.
    try {
        const Dataset cruise = out.dataset.select_rows(cruise_rows);
        out.frame = engineer(cruise, &out.engineer_log);
        // Re-map provenance to rows of the imputed dataset.
        for (auto& r : out.frame.source_rows) r = cruise_rows[r];
        out.spec = select_features(out.frame, cfg.correlation_threshold, cfg.collinearity_threshold);
    } catch (const std::exception& e) {
        throw StageFailure(14, "features", e.what());
    }

    // Stage 15: 1.5-IQR filter over each selected feature and the target.
    try {
        std::vector<bool> keep(out.frame.n_rows(), true);
        std::vector<std::string> filtered = out.spec.selected;
        filtered.push_back(kTargetColumn);
        for (const auto& name : filtered) {
            const OutlierMask mask = iqr_mask(out.frame.table.column(name), cfg.iqr_factor);
            for (std::size_t r = 0; r < keep.size(); ++r)
                keep[r] = keep[r] && mask.keep[r];
        }
        std::vector<std::size_t> kept_rows;
        for (std::size_t r = 0; r < keep.size(); ++r)
            if (keep[r]) kept_rows.push_back(r);
        out.outlier_dropped = out.frame.n_rows() - kept_rows.size();

        FeatureFrame filtered_frame;
        filtered_frame.table = out.frame.table.select_rows(kept_rows);
        for (std::size_t r : kept_rows) {
            filtered_frame.source_rows.push_back(out.frame.source_rows[r]);
            filtered_frame.trip_ids.push_back(out.frame.trip_ids[r]);
        }
        out.frame = std::move(filtered_frame);
    } catch (const std::exception& e) {
        throw StageFailure(15, "outliers", e.what());
    }

    return out;
}

PipelineResult run_pipeline(const Dataset& input, const PipelineConfig& cfg,
                            bool write_artifacts) {
    PipelineResult result;
    result.pre = run_preprocess(input, cfg);
    result.run_id = cfg.config_hash().substr(0, 12);

    CompareOptions options;
    options.kinds = cfg.kinds;
    options.split_ratio = cfg.split_ratio;
    options.folds = cfg.folds;
    options.horizon = cfg.horizon;
    options.seed = cfg.pipeline_seed;
    options.jobs = cfg.jobs;
    for (ModelKind kind : cfg.kinds) {
        Hyperparams hp = Hyperparams::defaults(kind);
        const std::string prefix = std::string(model_kind_name(kind)) + ".";
        for (const auto& [key, value] : cfg.hyperparam_overrides)
            if (key.rfind(prefix, 0) == 0) hp.set(key.substr(prefix.size()), value);
        options.hyperparams.emplace(kind, std::move(hp));
    }

    try {
        result.comparison = compare(result.pre.frame, result.pre.spec.selected, options);
    } catch (const std::exception& e) {
        throw StageFailure(16, "train", e.what());
    }

    if (!write_artifacts) return result;

    try {
        namespace fs = std::filesystem;
        const fs::path run_dir = fs::path(cfg.output_dir) / result.run_id;
        fs::create_directories(run_dir);
        result.run_dir = run_dir.string();

        nlohmann::json manifest;
        manifest["run_id"] = result.run_id;
        manifest["config"] = cfg.to_json();
        manifest["config_hash"] = cfg.config_hash();
        manifest["rows"] = {{"input", input.n_rows()},
                            {"imputed", result.pre.dataset.n_rows()},
                            {"engineered", result.pre.frame.n_rows() + result.pre.outlier_dropped},
                            {"after_outliers", result.pre.frame.n_rows()}};
        manifest["impute"] = {{"imputed_cells", result.pre.impute_log.imputed_cells},
                              {"removed_rows", result.pre.impute_log.removed_rows},
                              {"removed_empty_cluster", result.pre.impute_log.removed_empty_cluster}};
        manifest["mode_agreement"] = {{"variance_manual", result.pre.mode_agreement.variance_a},
                                      {"mae", result.pre.mode_agreement.mae},
                                      {"variance_diff", result.pre.mode_agreement.variance_diff}};
        manifest["cruise_cluster"] = result.pre.cruise_cluster;
        manifest["selected_features"] = result.pre.spec.selected;
        manifest["artifacts"] = nlohmann::json::array();

        auto add_artifact = [&](const std::string& name, const std::string& content) {
            write_text((run_dir / name).string(), content);
            manifest["artifacts"].push_back(name);
        };

        add_artifact("pca.json", result.pre.pca.to_json());
        add_artifact("kmeans.json", result.pre.kmeans.to_json());
        add_artifact("feature_spec.json", result.pre.spec.to_json());
        write_feature_csv(result.pre.frame, (run_dir / "features.csv").string());
        manifest["artifacts"].push_back("features.csv");
        add_artifact("normalizer.json", result.comparison.normalizer.to_json());
        add_artifact("split.json", result.comparison.split.to_json());
        add_artifact("report.csv", result.comparison.report.to_csv());
        add_artifact("report.json", result.comparison.report.to_json_text());

        const ImportanceTable importances =
            importance_table(result.comparison.models, result.pre.spec.selected);
        add_artifact("importance.csv", importances.to_csv());

        const ModelMatrix matrix = extract_matrix(result.pre.frame, result.pre.spec.selected);
        const Eigen::MatrixXd x_all = result.comparison.normalizer.apply(matrix.x);
        for (std::size_t k = 0; k < result.comparison.models.size(); ++k) {
            const TrainedModel& model = result.comparison.models[k];
            if (!model.predictor) continue; // failed kind, annotated in the report
            ModelArtifact artifact;
            artifact.model = model;
            artifact.spec = result.pre.spec;
            artifact.normalizer = result.comparison.normalizer;
            artifact.fingerprint = result.pre.spec.fingerprint();
            const std::string kind_name = model_kind_name(model.kind);
            add_artifact("model_" + kind_name + ".json", artifact.to_json_text());

            std::ostringstream train_pred;
            train_pred << "frame_row,y,y_hat\n";
            for (std::size_t row : result.comparison.split.train) {
                const double y_hat =
                    model.predictor->predict_one(x_all.row(static_cast<Eigen::Index>(row)));
                train_pred << row << ',' << format_double(matrix.y(static_cast<Eigen::Index>(row)))
                           << ',' << format_double(y_hat) << '\n';
            }
            add_artifact("predictions_train_" + kind_name + ".csv", train_pred.str());

            Eigen::VectorXd y_test(static_cast<Eigen::Index>(result.comparison.split.test.size()));
            Eigen::VectorXd y_hat(y_test.size());
            for (std::size_t i = 0; i < result.comparison.split.test.size(); ++i) {
                const std::size_t row = result.comparison.split.test[i];
                y_test(static_cast<Eigen::Index>(i)) = matrix.y(static_cast<Eigen::Index>(row));
                y_hat(static_cast<Eigen::Index>(i)) =
                    model.predictor->predict_one(x_all.row(static_cast<Eigen::Index>(row)));
            }
            add_artifact("histogram_" + kind_name + ".csv",
                         prediction_histogram_csv(y_test, y_hat));
        }

        write_text((run_dir / "manifest.json").string(), manifest.dump(2));
    } catch (const StageFailure&) {
        throw;
    } catch (const std::exception& e) {
        throw StageFailure(17, "report", e.what());
    }
    return result;
}

std::string ModelArtifact::to_json_text() const {
    nlohmann::json j;
    j["version"] = 1;
    j["model"] = model_to_json(model);
    j["feature_spec"] = nlohmann::json::parse(spec.to_json());
    j["normalizer"] = nlohmann::json::parse(normalizer.to_json());
    j["fingerprint"] = fingerprint;
    return j.dump(2);
}

ModelArtifact ModelArtifact::from_json_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ModelArtifact a;
    a.model = model_from_json(j.at("model"));
    a.spec = FeatureSpec::from_json(j.at("feature_spec").dump());
    a.normalizer = Normalizer::from_json(j.at("normalizer").dump());
    a.fingerprint = j.at("fingerprint").get<std::string>();
    if (a.fingerprint != a.spec.fingerprint())
        throw Error(ErrorCode::SchemaMismatch, "artifact fingerprint does not match its feature spec");
    return a;
}

std::vector<PredictionRow> predict_rows(const ModelArtifact& artifact, const Dataset& input) {
    // The artifact must ask only for features this schema can produce.
    for (const auto& name : artifact.spec.selected) {
        if (std::find(feature_names().begin(), feature_names().end(), name) ==
            feature_names().end())
            throw Error(ErrorCode::SchemaMismatch, "unknown feature '" + name + "' in artifact");
    }

    const FeatureFrame frame = engineer(input, nullptr, /*require_target=*/false);
    std::vector<const Column*> cols;
    for (const auto& name : artifact.spec.selected) cols.push_back(&frame.table.column(name));

    std::vector<PredictionRow> out;
    out.reserve(frame.n_rows());
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < frame.n_rows(); ++r) {
        PredictionRow p;
        p.source_row = frame.source_rows[r];
        std::string reason;
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j]->missing[r]) {
                reason = "missing " + artifact.spec.selected[j];
                break;
            }
            row(0, static_cast<Eigen::Index>(j)) = cols[j]->values[r];
        }
        if (reason.empty()) {
            const Eigen::MatrixXd normalized = artifact.normalizer.apply(row);
            p.prediction = artifact.model.predictor->predict_one(normalized.row(0));
        } else {
            p.reason = reason;
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace sfe
