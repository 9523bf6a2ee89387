#include "sfe/models/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "sfe/error.hpp"

namespace sfe {

namespace {

constexpr std::uint64_t kTagTree = 0x7472656500000000ULL;
constexpr std::uint64_t kTagRound = 0x726f756e64000000ULL;

std::vector<std::uint32_t> all_rows(Eigen::Index n) {
    std::vector<std::uint32_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0u);
    return rows;
}

// MatrixXd is column-major, so rows must be copied into a contiguous buffer
// before handing a raw pointer to the tree walker.
Eigen::VectorXd tree_predict_all(const Tree& tree, const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    Eigen::RowVectorXd row(x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        row = x.row(r);
        out(r) = tree.predict_one(row.data());
    }
    return out;
}

TreeGrowth growth_from(const Hyperparams& hp, Eigen::Index n_features) {
    TreeGrowth g;
    g.max_depth = static_cast<std::size_t>(hp.num_or("max_depth", 30));
    g.min_samples_leaf = static_cast<std::size_t>(hp.num_or("min_samples_leaf", 1));
    g.min_samples_split = static_cast<std::size_t>(hp.num_or("min_samples_split", 2));
    std::string max_features = "all";
    if (hp.has("max_features")) max_features = hp.str("max_features");
    if (max_features == "sqrt")
        g.max_features = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
    else
        g.max_features = 0;
    return g;
}

double lerp_timing(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double weighted_rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
    return std::sqrt((y - pred).squaredNorm() / static_cast<double>(y.size()));
}

} // namespace

std::optional<Eigen::VectorXd> TreePredictor::importances() const {
    std::vector<double> acc(input_dim_, 0.0);
    tree_.accumulate_gain(acc);
    double total = 0.0;
    for (double v : acc) total += v;
    if (total <= 0.0) return std::nullopt;
    Eigen::VectorXd out(static_cast<Eigen::Index>(input_dim_));
    for (std::size_t i = 0; i < acc.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = acc[i] / total;
    return out;
}

nlohmann::json TreePredictor::to_json() const {
    nlohmann::json j;
    j["type"] = "tree";
    j["input_dim"] = input_dim_;
    j["tree"] = tree_.to_json();
    return j;
}

std::shared_ptr<TreePredictor> TreePredictor::from_json(const nlohmann::json& j) {
    return std::make_shared<TreePredictor>(Tree::from_json(j.at("tree")),
                                           j.at("input_dim").get<std::size_t>());
}

double EnsemblePredictor::predict_one(const Eigen::RowVectorXd& x) const {
    switch (combine_) {
        case EnsembleCombine::mean: {
            double sum = 0.0;
            for (const Tree& t : trees_) sum += t.predict_one(x.data());
            return sum / static_cast<double>(trees_.size());
        }
        case EnsembleCombine::weighted_median: {
            std::vector<std::pair<double, double>> scored; // (prediction, weight)
            scored.reserve(trees_.size());
            double total = 0.0;
            for (std::size_t i = 0; i < trees_.size(); ++i) {
                scored.emplace_back(trees_[i].predict_one(x.data()), weights_[i]);
                total += weights_[i];
            }
            std::sort(scored.begin(), scored.end());
            double acc = 0.0;
            for (const auto& [pred, weight] : scored) {
                acc += weight;
                if (acc >= 0.5 * total) return pred;
            }
            return scored.back().first;
        }
        case EnsembleCombine::additive: {
            double sum = base_;
            for (const Tree& t : trees_) sum += shrinkage_ * t.predict_one(x.data());
            return sum;
        }
    }
    return base_;
}

std::optional<Eigen::VectorXd> EnsemblePredictor::importances() const {
    std::vector<double> acc(input_dim_, 0.0);
    for (std::size_t i = 0; i < trees_.size(); ++i) {
        const double w =
            combine_ == EnsembleCombine::weighted_median && i < weights_.size() ? weights_[i] : 1.0;
        trees_[i].accumulate_gain(acc, w);
    }
    double total = 0.0;
    for (double v : acc) total += v;
    if (total <= 0.0) return std::nullopt;
    Eigen::VectorXd out(static_cast<Eigen::Index>(input_dim_));
    for (std::size_t i = 0; i < acc.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = acc[i] / total;
    return out;
}

nlohmann::json EnsemblePredictor::to_json() const {
    nlohmann::json j;
    j["type"] = "ensemble";
    j["combine"] = combine_ == EnsembleCombine::mean             ? "mean"
                   : combine_ == EnsembleCombine::weighted_median ? "weighted_median"
                                                                  : "additive";
    j["input_dim"] = input_dim_;
    j["base"] = base_;
    j["shrinkage"] = shrinkage_;
    j["weights"] = weights_;
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& t : trees_) trees.push_back(t.to_json());
    j["trees"] = std::move(trees);
    return j;
}

std::shared_ptr<EnsemblePredictor> EnsemblePredictor::from_json(const nlohmann::json& j) {
    const std::string combine_name = j.at("combine").get<std::string>();
    EnsembleCombine combine = combine_name == "mean"             ? EnsembleCombine::mean
                              : combine_name == "weighted_median" ? EnsembleCombine::weighted_median
                                                                  : EnsembleCombine::additive;
    std::vector<Tree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(Tree::from_json(t));
    return std::make_shared<EnsemblePredictor>(
        combine, std::move(trees), j.at("weights").get<std::vector<double>>(),
        j.at("base").get<double>(), j.at("shrinkage").get<double>(),
        j.at("input_dim").get<std::size_t>());
}

TrainedModel fit_decision_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Hyperparams& hp) {
    const auto t0 = std::chrono::steady_clock::now();
    Tree tree = fit_tree(x, y, growth_from(hp, x.cols()));
    TrainedModel m;
    m.kind = ModelKind::decision_tree;
    m.hyperparams = hp;
    m.predictor =
        std::make_shared<TreePredictor>(std::move(tree), static_cast<std::size_t>(x.cols()));
    m.fit_seconds = lerp_timing(t0);
    return m;
}

TrainedModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                        std::uint64_t seed, int jobs) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_trees = static_cast<std::size_t>(hp.num_or("n_estimators", 200));
    const bool bootstrap = hp.json().value("bootstrap", true);
    const TreeGrowth growth = growth_from(hp, x.cols());
    const std::size_t n = static_cast<std::size_t>(x.rows());

    std::vector<Tree> trees(n_trees);
    auto build_one = [&](std::size_t i) {
        Rng rng(derive_seed(seed, kTagTree, i));
        std::vector<std::uint32_t> rows;
        if (bootstrap) {
            rows.resize(n);
            for (std::size_t r = 0; r < n; ++r)
                rows[r] = static_cast<std::uint32_t>(rng.uniform_index(n));
        } else {
            rows = all_rows(x.rows());
        }
        trees[i] = fit_tree(x, y, growth, rows, nullptr, nullptr, &rng);
    };

    if (jobs > 1 && n_trees > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const int n_workers = std::min<int>(jobs, static_cast<int>(n_trees));
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n_trees) return;
                    build_one(i);
                }
            });
        }
        for (auto& t : workers) t.join();
    } else {
        for (std::size_t i = 0; i < n_trees; ++i) build_one(i);
    }

    TrainedModel m;
    m.kind = ModelKind::random_forest;
    m.hyperparams = hp;
    m.predictor = std::make_shared<EnsemblePredictor>(EnsembleCombine::mean, std::move(trees),
                                                      std::vector<double>{}, 0.0, 1.0,
                                                      static_cast<std::size_t>(x.cols()));
    m.fit_seconds = lerp_timing(t0);
    return m;
}

TrainedModel fit_adaboost(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Hyperparams& hp, std::uint64_t seed, BoostTrace* trace) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_estimators = static_cast<std::size_t>(hp.num_or("n_estimators", 100));
    const double learning_rate = hp.num_or("learning_rate", 0.3);
    const std::string loss = hp.has("loss") ? hp.str("loss") : "exponential";
    const TreeGrowth growth = growth_from(hp, x.cols());
    const std::size_t n = static_cast<std::size_t>(x.rows());
    (void)seed; // reweighting is deterministic; no resampling draw is used

    Eigen::VectorXd sample_weight = Eigen::VectorXd::Constant(x.rows(), 1.0 / static_cast<double>(n));
    const std::vector<std::uint32_t> rows = all_rows(x.rows());

    std::vector<Tree> trees;
    std::vector<double> estimator_weights;
    for (std::size_t round = 0; round < n_estimators; ++round) {
        Tree tree = fit_tree(x, y, growth, rows, &sample_weight);

        const Eigen::VectorXd err = (tree_predict_all(tree, x) - y).cwiseAbs();
        const double max_err = err.maxCoeff();
        if (max_err <= 0.0) {
            // Perfect fit: keep this round with a dominant weight and stop.
            trees.push_back(std::move(tree));
            estimator_weights.push_back(1.0);
            break;
        }

        Eigen::VectorXd round_loss(x.rows());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double e = err(r) / max_err;
            if (loss == "linear")
                round_loss(r) = e;
            else if (loss == "square")
                round_loss(r) = e * e;
            else
                round_loss(r) = 1.0 - std::exp(-e);
        }
        const double avg_loss = sample_weight.dot(round_loss);
        if (avg_loss >= 0.5) {
            // Degenerate round: discard it and stop, unless nothing was kept yet.
            if (trees.empty()) {
                trees.push_back(std::move(tree));
                estimator_weights.push_back(1.0);
            }
            break;
        }

        const double beta = avg_loss / (1.0 - avg_loss);
        const double estimator_weight = learning_rate * std::log(1.0 / beta);
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            sample_weight(r) *= std::pow(beta, (1.0 - round_loss(r)) * learning_rate);
        sample_weight /= sample_weight.sum();

        trees.push_back(std::move(tree));
        estimator_weights.push_back(estimator_weight);

        if (trace) {
            EnsemblePredictor partial(EnsembleCombine::weighted_median, trees, estimator_weights,
                                      0.0, 1.0, static_cast<std::size_t>(x.cols()));
            Eigen::VectorXd pred(x.rows());
            for (Eigen::Index r = 0; r < x.rows(); ++r) pred(r) = partial.predict_one(x.row(r));
            trace->train_rmse.push_back(weighted_rmse(y, pred));
        }
    }

    TrainedModel m;
    m.kind = ModelKind::adaboost;
    m.hyperparams = hp;
    m.predictor = std::make_shared<EnsemblePredictor>(
        EnsembleCombine::weighted_median, std::move(trees), std::move(estimator_weights), 0.0, 1.0,
        static_cast<std::size_t>(x.cols()));
    m.fit_seconds = lerp_timing(t0);
    return m;
}

TrainedModel fit_gbm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed, BoostTrace* trace) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_estimators = static_cast<std::size_t>(hp.num_or("n_estimators", 200));
    const double learning_rate = hp.num_or("learning_rate", 0.1);
    const double subsample = hp.num_or("subsample", 0.5);
    const TreeGrowth growth = growth_from(hp, x.cols());
    const std::size_t n = static_cast<std::size_t>(x.rows());

    const double base = y.mean();
    Eigen::VectorXd current = Eigen::VectorXd::Constant(x.rows(), base);
    std::vector<Tree> trees;
    trees.reserve(n_estimators);

    for (std::size_t round = 0; round < n_estimators; ++round) {
        Rng rng(derive_seed(seed, kTagRound, round));
        const Eigen::VectorXd residual = y - current;

        std::vector<std::uint32_t> rows;
        if (subsample < 1.0) {
            const std::size_t m = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::floor(subsample * static_cast<double>(n))));
            for (std::size_t pick : rng.sample_without_replacement(n, m))
                rows.push_back(static_cast<std::uint32_t>(pick));
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows(x.rows());
        }

        Tree tree = fit_tree(x, residual, growth, rows, nullptr, nullptr, &rng);
        current += learning_rate * tree_predict_all(tree, x);
        trees.push_back(std::move(tree));
        if (trace) trace->train_rmse.push_back(weighted_rmse(y, current));
    }

    TrainedModel m;
    m.kind = ModelKind::gradient_boosting;
    m.hyperparams = hp;
    m.predictor = std::make_shared<EnsemblePredictor>(EnsembleCombine::additive, std::move(trees),
                                                      std::vector<double>{}, base, learning_rate,
                                                      static_cast<std::size_t>(x.cols()));
    m.fit_seconds = lerp_timing(t0);
    return m;
}

TrainedModel fit_xgb(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed, BoostTrace* trace) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n_estimators = static_cast<std::size_t>(hp.num_or("n_estimators", 200));
    const double learning_rate = hp.num_or("learning_rate", 0.1);
    const double colsample = hp.num_or("colsample_bytree", 0.7);
    const std::size_t n_features = static_cast<std::size_t>(x.cols());

    TreeGrowth growth;
    growth.objective = SplitObjective::boosted;
    growth.max_depth = static_cast<std::size_t>(hp.num_or("max_depth", 35));
    growth.lambda_reg = hp.num_or("lambda_reg", 1.0);
    growth.gamma = hp.num_or("gamma", 0.2);
    growth.min_child_weight = hp.num_or("min_child_weight", 1.0);
    growth.min_samples_leaf = 1;
    growth.min_samples_split = 2;

    const double base = y.mean();
    Eigen::VectorXd current = Eigen::VectorXd::Constant(x.rows(), base);
    std::vector<Tree> trees;
    trees.reserve(n_estimators);
    const std::vector<std::uint32_t> rows = all_rows(x.rows());

    for (std::size_t round = 0; round < n_estimators; ++round) {
        Rng rng(derive_seed(seed, kTagRound, round));
        const Eigen::VectorXd residual = y - current;

        std::vector<int> allowed;
        if (colsample < 1.0 && n_features > 1) {
            const std::size_t k = std::min(
                n_features,
                std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                             colsample * static_cast<double>(n_features)))));
            for (std::size_t pick : rng.sample_without_replacement(n_features, k))
                allowed.push_back(static_cast<int>(pick));
            std::sort(allowed.begin(), allowed.end());
        } else {
            allowed.resize(n_features);
            std::iota(allowed.begin(), allowed.end(), 0);
        }

        Tree tree = fit_tree(x, residual, growth, rows, nullptr, &allowed, &rng);
        current += learning_rate * tree_predict_all(tree, x);
        trees.push_back(std::move(tree));
        if (trace) trace->train_rmse.push_back(weighted_rmse(y, current));
    }

    TrainedModel m;
    m.kind = ModelKind::xgb;
    m.hyperparams = hp;
    m.predictor = std::make_shared<EnsemblePredictor>(EnsembleCombine::additive, std::move(trees),
                                                      std::vector<double>{}, base, learning_rate,
                                                      static_cast<std::size_t>(x.cols()));
    m.fit_seconds = lerp_timing(t0);
    return m;
}

} // namespace sfe
