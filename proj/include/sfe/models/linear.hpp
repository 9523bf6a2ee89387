#pragma once

#include <Eigen/Dense>

#include "sfe/models/model.hpp"

namespace sfe {

struct LinearWeights {
    double w0 = 0.0;
    Eigen::VectorXd w;
};

/// Least squares / ridge / lasso in one entry point. The intercept is never
/// penalized (fit goes through centered data).
///   lambda1 = lambda2 = 0: exact normal equations (1e-10 ridge jitter is
///     added only if the system is singular);
///   lambda1 > 0: closed-form ridge, objective ||y - Xw||^2 + lambda1 ||w||^2;
///   lambda2 > 0: coordinate descent with soft thresholding on the objective
///     (1/2N) ||y - Xw||^2 + lambda2 ||w||_1 (the mean-squared scaling is what
///     makes alpha = 0.1 zero out uninformative standardized features),
///     stopping when the largest weight change is below 1e-8.
LinearWeights fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda1 = 0.0,
                         double lambda2 = 0.0);

/// Degree-2 polynomial basis: D linear columns, then squares and pairwise
/// products in row-major upper-triangular order ([a, b] -> [a, b, a2, ab, b2]).
Eigen::MatrixXd expand_poly2(const Eigen::MatrixXd& x);
Eigen::RowVectorXd expand_poly2_row(const Eigen::RowVectorXd& x);

/// Number of parameters of the degree-2 model including the intercept:
/// 1 + D + D (D + 1) / 2.
std::size_t poly2_param_count(std::size_t input_dim);

class LinearPredictor : public Predictor {
public:
    LinearPredictor(ModelKind kind, LinearWeights weights, bool expand);

    std::size_t input_dim() const override { return input_dim_; }
    double predict_one(const Eigen::RowVectorXd& x) const override;
    std::optional<std::size_t> param_count() const override;
    std::optional<Eigen::VectorXd> importances() const override;
    nlohmann::json to_json() const override;
    static std::shared_ptr<LinearPredictor> from_json(const nlohmann::json& j);

    const LinearWeights& weights() const { return weights_; }

private:
    ModelKind kind_;
    LinearWeights weights_;
    bool expand_ = false;
    std::size_t input_dim_ = 0;
};

} // namespace sfe
