#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sfe/telemetry.hpp"

namespace sfe {

/// Engineered per-minute features plus the fuel-per-distance target, row-aligned
/// to the source dataset through `source_rows`. `trip_ids` label maximal runs of
/// contiguous 1-minute timestamps, which is what distance differencing and
/// target shifting operate within.
struct FeatureFrame {
    Dataset table; // feature columns in canonical order, then "sfe"
    std::vector<std::size_t> source_rows;
    std::vector<int> trip_ids;

    std::size_t n_rows() const { return table.n_rows(); }
};

struct FeatureSpec {
    std::vector<std::string> selected; // descending |target correlation|
    double correlation_threshold = 0.5;
    double collinearity_threshold = 0.9;

    std::string to_json() const;
    static FeatureSpec from_json(const std::string& text);
    /// Stable fingerprint of the selected-feature list, used to match model
    /// artifacts to inputs.
    std::string fingerprint() const;
};

/// Canonical feature column order; also the tie-break order for selection.
const std::vector<std::string>& feature_names();
inline constexpr const char* kTargetColumn = "sfe";

/// Distances below this are treated as degenerate (idle rows) and dropped
/// rather than divided by.
inline constexpr double kMinTraveledDistance = 1e-6;

/// Wind component along the vessel heading: cos(alpha_w - theta) * v_w.
/// Negative means the wind opposes the heading.
double headwind(double alpha_w_deg, double theta_deg, double v_w_knots);

/// Euclidean step length in raw degrees between consecutive positions.
double traveled_distance(double dlat_deg, double dlon_deg);

/// Fuel per traveled distance, (sfc1 + sfc2) / (2 d). Throws DegenerateDistance
/// when d <= kMinTraveledDistance.
double sfe_target(double sfc1_kg_h, double sfc2_kg_h, double d_deg);

struct EngineerLog {
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;
    std::size_t dropped_degenerate_distance = 0;
    std::size_t dropped_unavailable_target = 0; // missing SFC/positions or sfe <= 0
};

/// Computes every feature column from the telemetry dataset. Rows whose target
/// cannot be computed, is degenerate (d <= kMinTraveledDistance), or is not
/// positive are dropped; provenance of surviving rows is retained.
/// With require_target = false (prediction inputs) every row is kept and the
/// target cell is simply missing where it cannot be computed.
/// Throws MissingSourceColumn if a required channel is absent.
FeatureFrame engineer(const Dataset& d, EngineerLog* log = nullptr, bool require_target = true);

/// Greedy correlation-based selection: within each highly correlated pair keep
/// the feature closer to the target, then drop features below the target
/// correlation threshold, then order by descending |target correlation|.
/// Throws EmptySelection when nothing survives.
FeatureSpec select_features(const FeatureFrame& f, double correlation_threshold = 0.5,
                            double collinearity_threshold = 0.9);

/// Dense matrix of the chosen feature columns (rows with any missing cell in
/// the chosen columns or the target are skipped; their indices are reported).
struct ModelMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::size_t> frame_rows;
};
ModelMatrix extract_matrix(const FeatureFrame& f, const std::vector<std::string>& columns);

void write_feature_csv(const FeatureFrame& f, const std::string& path);
FeatureFrame load_feature_csv(const std::string& path);

} // namespace sfe
