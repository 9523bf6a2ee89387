#pragma once

#include <vector>

#include "sfe/models/model.hpp"
#include "sfe/models/tree.hpp"

namespace sfe {

class TreePredictor : public Predictor {
public:
    TreePredictor(Tree tree, std::size_t input_dim)
        : tree_(std::move(tree)), input_dim_(input_dim) {}

    std::size_t input_dim() const override { return input_dim_; }
    double predict_one(const Eigen::RowVectorXd& x) const override {
        return tree_.predict_one(x.data());
    }
    std::optional<Eigen::VectorXd> importances() const override;
    nlohmann::json to_json() const override;
    static std::shared_ptr<TreePredictor> from_json(const nlohmann::json& j);

    const Tree& tree() const { return tree_; }

private:
    Tree tree_;
    std::size_t input_dim_;
};

enum class EnsembleCombine {
    mean,            // bagging
    weighted_median, // AdaBoost.R2
    additive,        // boosting: base + sum of shrunken trees
};

class EnsemblePredictor : public Predictor {
public:
    EnsemblePredictor(EnsembleCombine combine, std::vector<Tree> trees,
                      std::vector<double> weights, double base, double shrinkage,
                      std::size_t input_dim)
        : combine_(combine),
          trees_(std::move(trees)),
          weights_(std::move(weights)),
          base_(base),
          shrinkage_(shrinkage),
          input_dim_(input_dim) {}

    std::size_t input_dim() const override { return input_dim_; }
    double predict_one(const Eigen::RowVectorXd& x) const override;
    std::optional<Eigen::VectorXd> importances() const override;
    nlohmann::json to_json() const override;
    static std::shared_ptr<EnsemblePredictor> from_json(const nlohmann::json& j);

    const std::vector<Tree>& trees() const { return trees_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    EnsembleCombine combine_;
    std::vector<Tree> trees_;
    std::vector<double> weights_; // per-estimator (median weights; unused for mean)
    double base_ = 0.0;
    double shrinkage_ = 1.0;
    std::size_t input_dim_;
};

/// Bagged trees: per-tree bootstrap resampling (optional) plus per-split
/// feature subsampling; prediction is the plain mean. Trees may be built in
/// parallel; per-tree RNG substreams keep the result independent of `jobs`.
TrainedModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                        std::uint64_t seed, int jobs = 1);

struct BoostTrace {
    std::vector<double> train_rmse; // after each accepted round
};

/// AdaBoost.R2 with the exponential round loss: reweighted weighted-tree fits,
/// estimator weight log((1 - Lbar)/Lbar) * learning_rate, weighted-median
/// prediction. A round with Lbar >= 0.5 stops the fit, keeping prior rounds.
TrainedModel fit_adaboost(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Hyperparams& hp, std::uint64_t seed, BoostTrace* trace = nullptr);

/// Gradient boosting on squared error: F0 = mean(y), each round fits a tree to
/// the residuals on a `subsample` fraction drawn without replacement.
TrainedModel fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed, BoostTrace* trace = nullptr);

/// Second-order boosting for squared loss with g = -(residual) and h = 1 per
/// sample: leaf value -G/(H + lambda_reg), split gain
/// 0.5 [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma, splits
/// accepted only when the gain is positive, children rejected below
/// min_child_weight, and a per-tree 70% column subsample.
TrainedModel fit_xgb(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed, BoostTrace* trace = nullptr);

TrainedModel fit_decision_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Hyperparams& hp);

} // namespace sfe
