#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sfe/features.hpp"
#include "sfe/telemetry.hpp"

namespace sfe {

struct OutlierMask {
    std::vector<bool> keep;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
};

/// Type-7 quantile (linear interpolation between order statistics) of the
/// non-missing values; p in [0, 1].
double quantile_type7(std::vector<double> values, double p);

/// 1.5-IQR rule (configurable factor): keep iff value lies inside
/// [q1 - factor*iqr, q3 + factor*iqr]. Missing cells are kept (no evidence).
/// Throws TooFewValues below 4 observed values.
OutlierMask iqr_mask(const Column& column, double factor = 1.5);

struct ImputeLog {
    std::size_t imputed_cells = 0;
    std::size_t removed_rows = 0;       // >= 2 missing cells
    std::size_t removed_empty_cluster = 0; // no observed values to impute from
};

/// Within-cluster mode imputation: rows with exactly one missing cell get that
/// cell filled with the modal value of its column inside the row's cluster
/// (continuous columns use a 100-bin histogram and take the bin midpoint);
/// rows with two or more missing cells are removed. Rows whose cluster holds
/// no observed value for the needed column are removed and counted in the log.
Dataset impute(const Dataset& d, const std::vector<int>& assignments, ImputeLog* log = nullptr,
               std::size_t histogram_bins = 100);

/// Per-column training statistics for z-score normalization. Zero-variance
/// columns pass through unchanged and are flagged.
struct Normalizer {
    std::vector<std::string> columns;
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev;
    std::vector<bool> passthrough;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd inverse(const Eigen::MatrixXd& x) const;

    std::string to_json() const;
    static Normalizer from_json(const std::string& text);
};

Normalizer fit_normalizer(const Eigen::MatrixXd& x, const std::vector<std::string>& columns = {});

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::vector<std::size_t>> folds; // disjoint partition of train

    std::string to_json() const;
    static SplitIndices from_json(const std::string& text);
};

/// Seeded uniform permutation split; |train| = round(ratio * n), and k folds of
/// near-equal size partition the training rows. Throws TooFewRows if n < k.
SplitIndices split(std::size_t n_rows, double ratio = 0.7, std::size_t k = 10,
                   std::uint64_t seed = 0);

} // namespace sfe
