#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sfe/models/hyperparams.hpp"

namespace sfe {

/// Uniform trained-predictor surface over all ten model kinds.
class Predictor {
public:
    virtual ~Predictor() = default;

    /// Expected length of the raw feature vector handed to predict.
    virtual std::size_t input_dim() const = 0;
    virtual double predict_one(const Eigen::RowVectorXd& x) const = 0;

    virtual std::optional<std::size_t> param_count() const { return std::nullopt; }
    /// Normalized (sums to 1) per-input-feature attribution, when defined.
    virtual std::optional<Eigen::VectorXd> importances() const { return std::nullopt; }

    virtual nlohmann::json to_json() const = 0;
};

struct TrainedModel {
    ModelKind kind = ModelKind::linear;
    std::shared_ptr<const Predictor> predictor;
    Hyperparams hyperparams;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;

    std::optional<std::size_t> param_count() const { return predictor->param_count(); }
    std::optional<Eigen::VectorXd> feature_importances() const { return predictor->importances(); }
};

/// Scalar prediction with a dimension check (DimensionMismatch on failure).
double predict(const TrainedModel& m, const Eigen::RowVectorXd& x);
Eigen::VectorXd predict(const TrainedModel& m, const Eigen::MatrixXd& x);

/// Fits the given kind on (x, y) with the supplied hyperparameters.
/// Deterministic per (data, hyperparams, seed) regardless of worker count.
TrainedModel train_model(ModelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Hyperparams& hp, std::uint64_t seed, int jobs = 1);

TrainedModel train_model(ModelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::uint64_t seed);

/// Versioned model artifact (kind, hyperparameters, fitted state).
nlohmann::json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& j);

} // namespace sfe
