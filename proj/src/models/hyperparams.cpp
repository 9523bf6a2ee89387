#include "sfe/models/hyperparams.hpp"

#include "sfe/error.hpp"

namespace sfe {

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::linear: return "linear";
        case ModelKind::ridge: return "ridge";
        case ModelKind::lasso: return "lasso";
        case ModelKind::poly2: return "poly2";
        case ModelKind::decision_tree: return "decision_tree";
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::adaboost: return "adaboost";
        case ModelKind::gradient_boosting: return "gradient_boosting";
        case ModelKind::xgb: return "xgb";
        case ModelKind::mlp: return "mlp";
    }
    return "unknown";
}

ModelKind model_kind_from_name(const std::string& name) {
    for (int k = 0; k <= static_cast<int>(ModelKind::mlp); ++k) {
        const auto kind = static_cast<ModelKind>(k);
        if (name == model_kind_name(kind)) return kind;
    }
    throw Error(ErrorCode::ConfigError, "unknown model kind '" + name + "'");
}

Hyperparams Hyperparams::defaults(ModelKind kind) {
    Hyperparams hp;
    hp.kind_ = kind;
    nlohmann::json& j = hp.values_;
    switch (kind) {
        case ModelKind::linear:
        case ModelKind::poly2:
            break;
        case ModelKind::ridge:
            j["lambda1"] = 10.0;
            break;
        case ModelKind::lasso:
            j["alpha"] = 0.1;
            break;
        case ModelKind::decision_tree:
            j["max_depth"] = 30;
            j["min_samples_leaf"] = 12;
            j["min_samples_split"] = 40;
            j["max_features"] = "all";
            break;
        case ModelKind::random_forest:
            j["max_depth"] = 25;
            j["min_samples_leaf"] = 6;
            j["min_samples_split"] = 40;
            j["max_features"] = "all";
            j["n_estimators"] = 200;
            j["bootstrap"] = true;
            break;
        case ModelKind::adaboost:
            j["max_depth"] = 40;
            j["min_samples_leaf"] = 2;
            j["min_samples_split"] = 40;
            j["max_features"] = "all";
            j["learning_rate"] = 0.3;
            j["loss"] = "exponential";
            j["n_estimators"] = 100;
            break;
        case ModelKind::gradient_boosting:
            j["max_depth"] = 35;
            j["min_samples_leaf"] = 12;
            j["min_samples_split"] = 10;
            j["max_features"] = "sqrt";
            j["learning_rate"] = 0.1;
            j["subsample"] = 0.5;
            j["n_estimators"] = 200;
            break;
        case ModelKind::xgb:
            j["max_depth"] = 35;
            j["learning_rate"] = 0.1;
            j["min_child_weight"] = 1.0;
            j["gamma"] = 0.2;
            j["colsample_bytree"] = 0.7;
            j["lambda_reg"] = 1.0;
            j["n_estimators"] = 200;
            break;
        case ModelKind::mlp:
            j["epochs"] = 1000;
            j["hidden1"] = 30;
            j["hidden2"] = 20;
            j["learning_rate"] = 1e-3;
            j["batch_size"] = 128;
            j["activation"] = "sigmoid";
            break;
    }
    return hp;
}

double Hyperparams::num(const std::string& key) const {
    if (!values_.contains(key)) throw Error(ErrorCode::ConfigError, "missing hyperparam " + key);
    return values_.at(key).get<double>();
}

double Hyperparams::num_or(const std::string& key, double fallback) const {
    if (!values_.contains(key)) return fallback;
    return values_.at(key).get<double>();
}

std::string Hyperparams::str(const std::string& key) const {
    if (!values_.contains(key)) throw Error(ErrorCode::ConfigError, "missing hyperparam " + key);
    return values_.at(key).get<std::string>();
}

void Hyperparams::set(const std::string& key, const nlohmann::json& value) {
    if (!defaults(kind_).values_.contains(key))
        throw Error(ErrorCode::ConfigError, std::string(model_kind_name(kind_)) +
                                                " has no hyperparameter '" + key + "'");
    if (value.is_number()) {
        const double v = value.get<double>();
        const bool count_like = key == "n_estimators" || key == "max_depth" ||
                                key == "min_samples_leaf" || key == "min_samples_split" ||
                                key == "epochs" || key == "batch_size" || key == "hidden1" ||
                                key == "hidden2";
        if (count_like && v < 1)
            throw Error(ErrorCode::ConfigError, key + " must be >= 1");
        const bool rate_like = key == "learning_rate" || key == "subsample" ||
                               key == "colsample_bytree" || key == "alpha";
        if (rate_like && v <= 0)
            throw Error(ErrorCode::ConfigError, key + " must be > 0");
    }
    values_[key] = value;
}

Hyperparams Hyperparams::from_json(ModelKind kind, const nlohmann::json& overrides) {
    Hyperparams hp = defaults(kind);
    for (auto it = overrides.begin(); it != overrides.end(); ++it) hp.set(it.key(), it.value());
    return hp;
}

} // namespace sfe
