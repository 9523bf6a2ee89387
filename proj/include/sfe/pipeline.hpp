#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfe/cluster.hpp"
#include "sfe/evaluate.hpp"
#include "sfe/features.hpp"
#include "sfe/preprocess.hpp"
#include "sfe/synthgen.hpp"
#include "sfe/telemetry.hpp"

namespace sfe {

/// Everything a batch run needs, loadable from a key-value config file with
/// CLI flag overrides. Every random decision traces back to one of the two
/// seeds below.
struct PipelineConfig {
    // paths
    std::string input_csv;
    std::string output_dir = "runs";

    // scenario (generate)
    VesselPhysics physics;
    RouteSpec route;
    ScenarioSeed scenario;
    double missing_rate = 0.001;

    // preprocessing
    std::vector<std::string> dropped_columns = default_dropped_columns();
    std::size_t n_pcs = 6;
    std::size_t kmeans_k = 2;
    std::size_t kmeans_restarts = 10;
    // The strict exclusion rule lives in select_features (default 0.5); the
    // pipeline default keeps the full engineered breadth the way the final
    // feature table does, pruning only near-zero-signal columns.
    double correlation_threshold = 0.01;
    double collinearity_threshold = 0.9;
    double iqr_factor = 1.5;
    std::size_t impute_bins = 100;

    // split / evaluation
    double split_ratio = 0.7;
    std::size_t folds = 10;
    std::size_t horizon = 5;
    std::uint64_t pipeline_seed = 42;

    // models
    std::vector<ModelKind> kinds = {
        ModelKind::linear,        ModelKind::lasso,   ModelKind::ridge,
        ModelKind::poly2,         ModelKind::decision_tree, ModelKind::random_forest,
        ModelKind::adaboost,      ModelKind::gradient_boosting, ModelKind::xgb,
        ModelKind::mlp,
    };
    std::map<std::string, nlohmann::json> hyperparam_overrides; // "kind.key" -> value
    int jobs = 1;

    static PipelineConfig from_file(const std::string& path);
    void apply_key(const std::string& key, const std::string& value);
    nlohmann::json to_json() const;
    std::string config_hash() const;
};

/// Stage-tagged failure; the CLI maps `exit_code` straight to the process
/// exit status (10..17).
struct StageFailure : std::runtime_error {
    int exit_code;
    std::string stage;
    StageFailure(int code, const std::string& stage_name, const std::string& message)
        : std::runtime_error(stage_name + ": " + message), exit_code(code), stage(stage_name) {}
};

struct PreprocessResult {
    Dataset dataset;          // post-drop, imputed, mode-1 rows only
    PcaModel pca;
    KMeansModel kmeans;
    std::vector<int> assignments; // over the imputed dataset rows
    int cruise_cluster = 0;
    PartitionComparison mode_agreement; // K-means vs OPERATIONAL_MODE
    FeatureFrame frame;       // engineered + outlier-filtered
    FeatureSpec spec;
    ImputeLog impute_log;
    EngineerLog engineer_log;
    std::size_t outlier_dropped = 0;
};

/// Stages 10-15: load -> drop -> cluster -> impute -> mode-1 -> engineer ->
/// select -> IQR filter. Throws StageFailure with the failing stage's code.
PreprocessResult run_preprocess(const Dataset& input, const PipelineConfig& cfg);

struct PipelineResult {
    PreprocessResult pre;
    CompareResult comparison;
    std::string run_dir;
    std::string run_id;
};

/// The full chain behind the `compare` subcommand; persists every intermediate
/// artifact under <output_dir>/<run-id>/ and returns the comparison.
PipelineResult run_pipeline(const Dataset& input, const PipelineConfig& cfg,
                            bool write_artifacts = true);

/// Bundled model artifact: predictor + the feature list and normalization it
/// was trained with, plus a fingerprint to reject mismatched inputs.
struct ModelArtifact {
    TrainedModel model;
    FeatureSpec spec;
    Normalizer normalizer;
    std::string fingerprint;

    std::string to_json_text() const;
    static ModelArtifact from_json_text(const std::string& text);
};

struct PredictionRow {
    std::size_t source_row = 0;
    double prediction = 0.0;
    std::string reason; // empty when valid
};

/// Feature-engineers the raw telemetry and predicts each row that has every
/// feature the artifact requires; others carry a reason instead.
std::vector<PredictionRow> predict_rows(const ModelArtifact& artifact, const Dataset& input);

} // namespace sfe
