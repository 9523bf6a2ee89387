#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace sfe {

enum class ModelKind {
    linear,
    ridge,
    lasso,
    poly2,
    decision_tree,
    random_forest,
    adaboost,
    gradient_boosting,
    xgb,
    mlp,
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

/// Per-kind hyperparameter dictionary with tuned defaults baked in
/// (tree depths/leaf sizes per family, boosting rates, regularization
/// strengths, MLP schedule). Keys not present in the kind's defaults are
/// rejected on set, as are out-of-range counts and rates.
class Hyperparams {
public:
    static Hyperparams defaults(ModelKind kind);

    double num(const std::string& key) const;
    double num_or(const std::string& key, double fallback) const;
    std::string str(const std::string& key) const;
    bool has(const std::string& key) const { return values_.contains(key); }

    void set(const std::string& key, const nlohmann::json& value);

    const nlohmann::json& json() const { return values_; }
    static Hyperparams from_json(ModelKind kind, const nlohmann::json& overrides);

private:
    nlohmann::json values_ = nlohmann::json::object();
    ModelKind kind_ = ModelKind::linear;
};

} // namespace sfe
