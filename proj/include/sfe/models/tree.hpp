#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "sfe/rng.hpp"

namespace sfe {

/// Flat binary regression tree. feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::uint32_t n_samples = 0;
    double gain = 0.0; // split score achieved at this node (0 for leaves)
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict_one(const double* x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
            idx = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(idx)].value;
    }

    /// Adds each split's gain to `acc[feature]`, scaled by `weight`.
    void accumulate_gain(std::vector<double>& acc, double weight = 1.0) const;

    std::size_t max_depth() const;
    std::size_t n_leaves() const;

    nlohmann::json to_json() const;
    static Tree from_json(const nlohmann::json& j);
};

enum class SplitObjective {
    variance,   // CART: maximize SSE reduction of the (weighted) targets
    boosted,    // second-order: maximize regularized gain on residuals
};

struct TreeGrowth {
    SplitObjective objective = SplitObjective::variance;
    std::size_t max_depth = 30;
    std::size_t min_samples_leaf = 1;
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0; // 0 = consider every feature at each split
    // boosted-objective knobs
    double lambda_reg = 0.0;
    double gamma = 0.0;
    double min_child_weight = 0.0;
};

/// CART-style greedy growth. `rows` selects (possibly repeated) training rows;
/// `sample_weight` is optional and aligned with the full matrix; `allowed`
/// optionally restricts the candidate feature set (per-tree column sampling).
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values; ties break toward the lowest feature index, then lowest threshold.
Tree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeGrowth& params,
              const std::vector<std::uint32_t>& rows, const Eigen::VectorXd* sample_weight = nullptr,
              const std::vector<int>* allowed = nullptr, Rng* rng = nullptr);

/// Convenience overload over every row with unit weights.
Tree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeGrowth& params);

} // namespace sfe
