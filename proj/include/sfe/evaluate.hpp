#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfe/features.hpp"
#include "sfe/models/model.hpp"
#include "sfe/preprocess.hpp"

namespace sfe {

/// Root mean square error. Throws LengthMismatch / EmptyInput.
double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

/// Coefficient of determination 1 - SSE/SST (may be negative).
/// Throws ConstantTarget when Var(y) = 0.
double r2(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);

struct ShiftLog {
    std::size_t dropped_rows = 0;
    std::size_t dropped_trips = 0; // trips no longer than the horizon
};

/// n-step-ahead target slide: row i gets row (i+n)'s target within the same
/// trip; the last n rows of each trip are dropped, and trips of length <= n
/// disappear entirely. n = 0 is the identity.
FeatureFrame shift_target(const FeatureFrame& f, std::size_t n, ShiftLog* log = nullptr);

struct EvalRow {
    ModelKind kind = ModelKind::linear;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    std::optional<std::size_t> param_count;
    double r2_validation = 0.0;
    double r2_test = 0.0;
    double rmse_test = 0.0;
    double future_rmse_test = 0.0;
    std::string status = "ok"; // per-model failures are annotations, not aborts
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::size_t horizon = 5;

    /// Table-layout CSV. Timing columns can be suppressed for byte-stable
    /// comparisons between runs.
    std::string to_csv(bool include_timings = true) const;
    std::string to_json_text() const;
};

struct CompareOptions {
    std::vector<ModelKind> kinds;
    std::map<ModelKind, Hyperparams> hyperparams; // defaults used when absent
    double split_ratio = 0.7;
    std::size_t folds = 10;
    std::size_t horizon = 5;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct CompareResult {
    EvalReport report;
    std::vector<TrainedModel> models; // full-train fit per kind, in report order
    Normalizer normalizer;
    SplitIndices split;
};

/// The comparison table: for each kind, k-fold validation R^2 (refit per
/// fold), a timed full fit with test R^2/RMSE, and the n-step-ahead RMSE via
/// a retrain on the slid target. Deterministic per (frame, options.seed) at
/// any jobs count.
CompareResult compare(const FeatureFrame& frame, const std::vector<std::string>& selected,
                      const CompareOptions& options);

struct SearchSpace {
    std::map<std::string, std::vector<nlohmann::json>> candidates;
    std::size_t n_samples = 20;
    std::uint64_t seed = 0;
};

struct SearchEntry {
    Hyperparams hyperparams;
    double mean_validation_r2 = 0.0;
    std::vector<double> fold_r2;
};

struct SearchResult {
    Hyperparams best;
    std::vector<SearchEntry> table; // in draw order
};

/// Randomized hyperparameter search: n_samples seeded uniform draws from the
/// per-parameter candidate lists, scored by mean validation R^2 over the
/// folds; ties keep the earlier draw.
SearchResult random_search(ModelKind kind, const SearchSpace& space, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, const SplitIndices& split);

struct ImportanceTable {
    std::vector<std::string> features;
    std::vector<std::string> models;
    Eigen::MatrixXd values; // features x models, each column sums to 1
    std::vector<std::string> skipped; // kinds without importances

    std::string to_csv() const;
};

/// Per-feature importance matrix across models; models without importances
/// are omitted and listed in `skipped`.
ImportanceTable importance_table(const std::vector<TrainedModel>& models,
                                 const std::vector<std::string>& feature_names);

/// Shared-bin histogram of observed vs. predicted values, as CSV
/// (bin_lo, bin_hi, count_actual, count_predicted).
std::string prediction_histogram_csv(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                                     std::size_t bins = 50);

} // namespace sfe
