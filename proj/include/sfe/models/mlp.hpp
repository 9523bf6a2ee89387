#pragma once

#include <Eigen/Dense>

#include "sfe/models/model.hpp"
#include "sfe/rng.hpp"

namespace sfe {

enum class Activation { sigmoid, identity };

/// Fully connected net: input -> hidden1 -> hidden2 -> 1, nonlinear hidden
/// activations, linear output, trained with mini-batch gradient descent on MSE.
class MlpNet {
public:
    MlpNet(std::size_t in, std::size_t h1, std::size_t h2, Activation activation);

    void init_weights(Rng& rng);

    Eigen::VectorXd forward(const Eigen::MatrixXd& x) const;

    /// Mean squared error over the batch and its gradient with respect to the
    /// flattened parameter vector (layout matches params()/set_params()).
    double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             Eigen::VectorXd& grad) const;

    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& p);
    std::size_t param_count() const;

    std::size_t input_dim() const { return static_cast<std::size_t>(w1_.cols()); }
    Activation activation() const { return activation_; }
    std::size_t hidden1() const { return static_cast<std::size_t>(w1_.rows()); }
    std::size_t hidden2() const { return static_cast<std::size_t>(w2_.rows()); }

private:
    Eigen::MatrixXd w1_, w2_;
    Eigen::RowVectorXd b1_, b2_;
    Eigen::VectorXd w3_;
    double b3_ = 0.0;
    Activation activation_;

    friend class MlpPredictor;
};

class MlpPredictor : public Predictor {
public:
    MlpPredictor(MlpNet net, double y_mean, double y_std)
        : net_(std::move(net)), y_mean_(y_mean), y_std_(y_std) {}

    std::size_t input_dim() const override { return net_.input_dim(); }
    double predict_one(const Eigen::RowVectorXd& x) const override;
    std::optional<std::size_t> param_count() const override { return net_.param_count(); }
    nlohmann::json to_json() const override;
    static std::shared_ptr<MlpPredictor> from_json(const nlohmann::json& j);

    const MlpNet& net() const { return net_; }

private:
    MlpNet net_;
    double y_mean_, y_std_;
};

/// Trains the net on an internally standardized target (predictions are mapped
/// back to the original scale). Throws NonFiniteLoss if training diverges.
TrainedModel fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed);

} // namespace sfe
