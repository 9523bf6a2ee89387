#include "sfe/models/model.hpp"

#include <chrono>

#include "sfe/error.hpp"
#include "sfe/models/ensemble.hpp"
#include "sfe/models/linear.hpp"
#include "sfe/models/mlp.hpp"

namespace sfe {

double predict(const TrainedModel& m, const Eigen::RowVectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != m.predictor->input_dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "got " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(m.predictor->input_dim()));
    return m.predictor->predict_one(x);
}

Eigen::VectorXd predict(const TrainedModel& m, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.cols()) != m.predictor->input_dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "got " + std::to_string(x.cols()) + " features, model expects " +
                        std::to_string(m.predictor->input_dim()));
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) = m.predictor->predict_one(x.row(r));
    return out;
}

TrainedModel train_model(ModelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Hyperparams& hp, std::uint64_t seed, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainedModel m;
    switch (kind) {
        case ModelKind::linear: {
            m.kind = kind;
            m.hyperparams = hp;
            m.predictor =
                std::make_shared<LinearPredictor>(kind, fit_linear(x, y), /*expand=*/false);
            break;
        }
        case ModelKind::ridge: {
            m.kind = kind;
            m.hyperparams = hp;
            m.predictor = std::make_shared<LinearPredictor>(
                kind, fit_linear(x, y, hp.num_or("lambda1", 10.0), 0.0), false);
            break;
        }
        case ModelKind::lasso: {
            m.kind = kind;
            m.hyperparams = hp;
            m.predictor = std::make_shared<LinearPredictor>(
                kind, fit_linear(x, y, 0.0, hp.num_or("alpha", 0.1)), false);
            break;
        }
        case ModelKind::poly2: {
            m.kind = kind;
            m.hyperparams = hp;
            m.predictor = std::make_shared<LinearPredictor>(
                kind, fit_linear(expand_poly2(x), y), /*expand=*/true);
            break;
        }
        case ModelKind::decision_tree: return fit_decision_tree(x, y, hp);
        case ModelKind::random_forest: return fit_forest(x, y, hp, seed, jobs);
        case ModelKind::adaboost: return fit_adaboost(x, y, hp, seed);
        case ModelKind::gradient_boosting: return fit_gbm(x, y, hp, seed);
        case ModelKind::xgb: return fit_xgb(x, y, hp, seed);
        case ModelKind::mlp: return fit_mlp(x, y, hp, seed);
    }
    m.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

TrainedModel train_model(ModelKind kind, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::uint64_t seed) {
    return train_model(kind, x, y, Hyperparams::defaults(kind), seed);
}

nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = model_kind_name(m.kind);
    j["hyperparams"] = m.hyperparams.json();
    j["predictor"] = m.predictor->to_json();
    j["fit_seconds"] = m.fit_seconds;
    return j;
}

TrainedModel model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    m.kind = model_kind_from_name(j.at("kind").get<std::string>());
    m.hyperparams = Hyperparams::from_json(m.kind, j.at("hyperparams"));
    m.fit_seconds = j.value("fit_seconds", 0.0);
    const auto& p = j.at("predictor");
    const std::string type = p.at("type").get<std::string>();
    if (type == "linear")
        m.predictor = LinearPredictor::from_json(p);
    else if (type == "tree")
        m.predictor = TreePredictor::from_json(p);
    else if (type == "ensemble")
        m.predictor = EnsemblePredictor::from_json(p);
    else if (type == "mlp")
        m.predictor = MlpPredictor::from_json(p);
    else
        throw Error(ErrorCode::UnsupportedModel, "predictor type '" + type + "'");
    return m;
}

} // namespace sfe
