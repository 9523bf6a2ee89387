#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sfe/error.hpp"
#include "sfe/models/ensemble.hpp"
#include "sfe/rng.hpp"

using namespace sfe;

namespace {

Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(-1, 1);
    return x;
}

void walk_leaf_sizes(const Tree& t, int idx, std::size_t min_samples_leaf) {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
    if (n.feature < 0) {
        CHECK(n.n_samples >= min_samples_leaf);
        return;
    }
    walk_leaf_sizes(t, n.left, min_samples_leaf);
    walk_leaf_sizes(t, n.right, min_samples_leaf);
}

} // namespace

TEST_CASE("fit_tree constant target is a single leaf") {
    Eigen::MatrixXd x(10, 2);
    x.setRandom();
    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 4.25);
    TreeGrowth params;
    const Tree t = fit_tree(x, y, params);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == doctest::Approx(4.25));
}

TEST_CASE("fit_tree splits a step function in the gap") {
    Eigen::MatrixXd x(8, 1);
    x << 0.1, 0.2, 0.3, 0.45, 0.62, 0.7, 0.8, 0.9;
    Eigen::VectorXd y(8);
    y << 0, 0, 0, 0, 1, 1, 1, 1;
    TreeGrowth params;
    const Tree t = fit_tree(x, y, params);
    REQUIRE(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold > 0.45);
    CHECK(t.nodes[0].threshold < 0.62);
    Eigen::RowVectorXd probe(1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        probe = x.row(r);
        CHECK(t.predict_one(probe.data()) == y(r));
    }
}

TEST_CASE("fit_tree min_samples_leaf forces a single leaf at n") {
    Rng rng(1);
    const Eigen::MatrixXd x = random_matrix(20, 2, rng);
    Eigen::VectorXd y(20);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = rng.normal();
    TreeGrowth params;
    params.min_samples_leaf = 20;
    const Tree t = fit_tree(x, y, params);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == doctest::Approx(y.mean()));
}

TEST_CASE("fit_tree root split matches the exhaustive oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t rows = 8 + rng.uniform_index(56);
        const std::size_t cols = 1 + rng.uniform_index(4);
        const Eigen::MatrixXd x = random_matrix(rows, cols, rng);
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
        for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = rng.normal();

        TreeGrowth params;
        params.max_depth = 1;
        const Tree t = fit_tree(x, y, params);
        const auto oracle_split = oracle::exhaustive_cart_split(x, y);
        if (oracle_split.feature < 0) {
            CHECK(t.nodes[0].feature < 0);
        } else {
            REQUIRE(t.nodes[0].feature == oracle_split.feature);
            CHECK(t.nodes[0].threshold == oracle_split.threshold);
        }
    }
}

TEST_CASE("fit_tree respects min_samples_leaf everywhere") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd x = random_matrix(200, 3, rng);
        Eigen::VectorXd y(200);
        for (Eigen::Index r = 0; r < y.size(); ++r)
            y(r) = x(r, 0) * 3 + std::abs(x(r, 1)) + 0.1 * rng.normal();
        TreeGrowth params;
        params.min_samples_leaf = 7;
        params.min_samples_split = 14;
        const Tree t = fit_tree(x, y, params);
        walk_leaf_sizes(t, 0, 7);
    }
}

TEST_CASE("fit_tree honors max_depth") {
    Rng rng(4);
    const Eigen::MatrixXd x = random_matrix(300, 2, rng);
    Eigen::VectorXd y(300);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = rng.normal();
    TreeGrowth params;
    params.max_depth = 3;
    const Tree t = fit_tree(x, y, params);
    CHECK(t.max_depth() <= 3);
}

TEST_CASE("decision tree model predicts its leaf") {
    Rng rng(5);
    const Eigen::MatrixXd x = random_matrix(100, 2, rng);
    Eigen::VectorXd y(100);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = x(r, 0) > 0 ? 5.0 : -5.0;
    const TrainedModel m = fit_decision_tree(x, y, Hyperparams::defaults(ModelKind::decision_tree));
    Eigen::RowVectorXd probe(2);
    probe << 0.5, 0.0;
    CHECK(predict(m, probe) == doctest::Approx(5.0));
    probe << -0.5, 0.0;
    CHECK(predict(m, probe) == doctest::Approx(-5.0));
}

TEST_CASE("forest with one unbootstrapped tree equals the plain tree") {
    Rng rng(6);
    const Eigen::MatrixXd x = random_matrix(120, 3, rng);
    Eigen::VectorXd y(120);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = x(r, 0) - 2 * x(r, 2) + 0.1 * rng.normal();

    Hyperparams hp = Hyperparams::defaults(ModelKind::random_forest);
    hp.set("n_estimators", 1);
    hp.set("bootstrap", false);
    const TrainedModel forest = fit_forest(x, y, hp, 9);

    Hyperparams tree_hp = Hyperparams::defaults(ModelKind::decision_tree);
    tree_hp.set("max_depth", hp.num("max_depth"));
    tree_hp.set("min_samples_leaf", hp.num("min_samples_leaf"));
    tree_hp.set("min_samples_split", hp.num("min_samples_split"));
    const TrainedModel tree = fit_decision_tree(x, y, tree_hp);

    const Eigen::MatrixXd probes = random_matrix(50, 3, rng);
    CHECK((predict(forest, probes) - predict(tree, probes)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest prediction is the mean of its members") {
    Rng rng(7);
    const Eigen::MatrixXd x = random_matrix(150, 3, rng);
    Eigen::VectorXd y(150);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = std::sin(3 * x(r, 0)) + 0.2 * rng.normal();
    Hyperparams hp = Hyperparams::defaults(ModelKind::random_forest);
    hp.set("n_estimators", 15);
    const TrainedModel m = fit_forest(x, y, hp, 4);

    const auto* ensemble = dynamic_cast<const EnsemblePredictor*>(m.predictor.get());
    REQUIRE(ensemble != nullptr);
    Eigen::RowVectorXd probe(3);
    probe << 0.2, -0.4, 0.9;
    double sum = 0.0;
    for (const Tree& t : ensemble->trees()) sum += t.predict_one(probe.data());
    CHECK(predict(m, probe) ==
          doctest::Approx(sum / static_cast<double>(ensemble->trees().size())).epsilon(1e-12));
}

TEST_CASE("forest is deterministic per seed and worker count") {
    Rng rng(8);
    const Eigen::MatrixXd x = random_matrix(200, 4, rng);
    Eigen::VectorXd y(200);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = x(r, 1) * x(r, 2) + 0.1 * rng.normal();
    Hyperparams hp = Hyperparams::defaults(ModelKind::random_forest);
    hp.set("n_estimators", 12);

    const TrainedModel a = fit_forest(x, y, hp, 42, /*jobs=*/1);
    const TrainedModel b = fit_forest(x, y, hp, 42, /*jobs=*/2);
    const TrainedModel c = fit_forest(x, y, hp, 43, /*jobs=*/1);
    const Eigen::MatrixXd probes = random_matrix(60, 4, rng);
    CHECK((predict(a, probes) - predict(b, probes)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((predict(a, probes) - predict(c, probes)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bagging lowers seed-to-seed prediction variance") {
    Rng rng(9);
    const Eigen::MatrixXd x = random_matrix(150, 2, rng);
    Eigen::VectorXd y(150);
    for (Eigen::Index r = 0; r < y.size(); ++r)
        y(r) = 2 * x(r, 0) + std::sin(4 * x(r, 1)) + 0.8 * rng.normal();

    Eigen::RowVectorXd probe(2);
    probe << 0.1, 0.2;

    Hyperparams forest_hp = Hyperparams::defaults(ModelKind::random_forest);
    forest_hp.set("n_estimators", 25);
    forest_hp.set("min_samples_leaf", 2);
    forest_hp.set("min_samples_split", 4);

    Hyperparams stump_hp = forest_hp;
    stump_hp.set("n_estimators", 1);

    oracle::Streaming forest_stats, single_stats;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        forest_stats.add(predict(fit_forest(x, y, forest_hp, seed), probe));
        single_stats.add(predict(fit_forest(x, y, stump_hp, seed), probe));
    }
    CHECK(forest_stats.sample_std() < single_stats.sample_std());
}

TEST_CASE("tree importances concentrate on the informative feature") {
    Rng rng(10);
    const Eigen::MatrixXd x = random_matrix(300, 3, rng);
    Eigen::VectorXd y(300);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = 4.0 * x(r, 1);
    const TrainedModel m = fit_decision_tree(x, y, Hyperparams::defaults(ModelKind::decision_tree));
    const auto imp = m.feature_importances();
    REQUIRE(imp.has_value());
    CHECK((*imp)(1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tree json round trip preserves structure and predictions") {
    Rng rng(11);
    const Eigen::MatrixXd x = random_matrix(80, 2, rng);
    Eigen::VectorXd y(80);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = std::abs(x(r, 0)) + 0.05 * rng.normal();
    const TrainedModel m = fit_decision_tree(x, y, Hyperparams::defaults(ModelKind::decision_tree));
    const TrainedModel back = model_from_json(model_to_json(m));
    const Eigen::MatrixXd probes = random_matrix(40, 2, rng);
    CHECK((predict(m, probes) - predict(back, probes)).cwiseAbs().maxCoeff() == 0.0);
}
