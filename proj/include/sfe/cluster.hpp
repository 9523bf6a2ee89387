#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace sfe {

/// Principal components of a (standardized) matrix. `components` holds one
/// orthonormal row per PC, ordered by descending explained variance; the sign
/// convention makes each component's largest-magnitude loading positive.
struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;        // rows are PCs
    Eigen::VectorXd explained_variance; // descending, >= 0

    std::string to_json() const;
    static PcaModel from_json(const std::string& text);
};

struct KMeansModel {
    Eigen::MatrixXd centroids; // one row per cluster
    std::vector<int> assignments;
    double inertia = 0.0;
    std::uint64_t seed = 0;
    /// Inertia after each Lloyd iteration of the winning restart (after the
    /// update step); non-increasing by construction.
    std::vector<double> lloyd_inertia_trace;

    std::string to_json() const;
    static KMeansModel from_json(const std::string& text);
};

/// Eigendecomposition of the sample covariance. Zero variances are allowed
/// (rank deficiency is not an error).
PcaModel fit_pca(const Eigen::MatrixXd& x);

/// Scores = (X - mean) * components^T truncated to n_components columns.
/// Throws TooManyComponents when more columns are requested than exist.
Eigen::MatrixXd pca_transform(const PcaModel& p, const Eigen::MatrixXd& x,
                              std::size_t n_components);

/// Reconstruction from scores (inverse of pca_transform with all components).
Eigen::MatrixXd pca_inverse_transform(const PcaModel& p, const Eigen::MatrixXd& scores);

/// Lloyd's algorithm with k-means++ seeding, best of n_restarts by
/// (inertia, restart index). Deterministic per seed and independent of worker
/// count. Throws KTooLarge when k exceeds the number of rows.
KMeansModel fit_kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter = 100, std::size_t n_restarts = 10);

/// (k, inertia) for k = 1..k_max. Each k seeds one extra restart from the
/// previous solution's centroids plus the worst-fit point, which keeps the
/// curve non-increasing.
std::vector<std::pair<std::size_t, double>> elbow_curve(const Eigen::MatrixXd& x,
                                                        std::size_t k_max, std::uint64_t seed);

/// Assign rows of x to the nearest centroid (ties to the lowest index).
std::vector<int> kmeans_assign(const KMeansModel& m, const Eigen::MatrixXd& x);

struct PartitionComparison {
    double variance_a = 0.0;    // Var(a)
    double mae = 0.0;           // mean |a - b| after majority alignment
    double variance_diff = 0.0; // Var(a - b)
};

/// Agreement diagnostics between two binary partitions; b's labels are flipped
/// first if that reduces disagreement. variance_a > variance_diff supports
/// agreement. Throws LengthMismatch.
PartitionComparison compare_partitions(const std::vector<int>& a, const std::vector<int>& b);

/// Per-column z-scoring used before PCA. Zero-variance columns map to zero.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev; // sample std; 0 marks a constant column

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};
Standardizer fit_standardizer(const Eigen::MatrixXd& x);

} // namespace sfe
