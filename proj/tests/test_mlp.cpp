#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sfe/error.hpp"
#include "sfe/models/linear.hpp"
#include "sfe/models/mlp.hpp"
#include "sfe/rng.hpp"

using namespace sfe;

namespace {

Eigen::MatrixXd standardized_random(std::size_t rows, std::size_t cols, Rng& rng) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rng.normal();
    return x;
}

} // namespace

TEST_CASE("mlp parameter count matches the 10-30-20-1 architecture") {
    MlpNet net(10, 30, 20, Activation::sigmoid);
    CHECK(net.param_count() == 971); // 330 + 620 + 21
}

TEST_CASE("mlp analytic gradient matches central differences") {
    Rng rng(1);
    MlpNet net(3, 5, 4, Activation::sigmoid);
    net.init_weights(rng);

    const Eigen::MatrixXd x = standardized_random(16, 3, rng);
    Eigen::VectorXd y(16);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = rng.normal();

    Eigen::VectorXd analytic;
    net.loss_and_gradient(x, y, analytic);

    MlpNet probe = net;
    const Eigen::VectorXd numeric = oracle::finite_difference_gradient(
        [&](const Eigen::VectorXd& params) {
            probe.set_params(params);
            Eigen::VectorXd unused;
            return probe.loss_and_gradient(x, y, unused);
        },
        net.params(), 1e-5);

    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({std::abs(analytic(i)), std::abs(numeric(i)), 1e-8});
        worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("identity-activation mlp approaches the least-squares fit") {
    Rng rng(2);
    const Eigen::MatrixXd x = standardized_random(300, 3, rng);
    Eigen::VectorXd y(300);
    for (Eigen::Index r = 0; r < y.size(); ++r)
        y(r) = 0.8 * x(r, 0) - 0.5 * x(r, 1) + 0.2 * x(r, 2);

    Hyperparams hp = Hyperparams::defaults(ModelKind::mlp);
    hp.set("activation", "identity");
    hp.set("epochs", 400);
    hp.set("hidden1", 8);
    hp.set("hidden2", 6);
    hp.set("learning_rate", 0.02);
    const TrainedModel net = fit_mlp(x, y, hp, 3);

    const LinearWeights ols = fit_linear(x, y);
    const Eigen::MatrixXd probes = standardized_random(50, 3, rng);
    for (Eigen::Index r = 0; r < probes.rows(); ++r) {
        const double want = ols.w0 + probes.row(r) * ols.w;
        const double got = predict(net, Eigen::RowVectorXd(probes.row(r)));
        CHECK(std::abs(got - want) < 1e-3);
    }
}

TEST_CASE("mlp learns a nonlinear surface on raw-scale targets") {
    Rng rng(3);
    const Eigen::MatrixXd x = standardized_random(500, 2, rng);
    Eigen::VectorXd y(500);
    // Large offset and scale: the internal target standardization has to cope.
    for (Eigen::Index r = 0; r < y.size(); ++r)
        y(r) = 5.0e4 + 1.0e4 * std::tanh(x(r, 0)) + 4.0e3 * x(r, 1) * x(r, 1);

    Hyperparams hp = Hyperparams::defaults(ModelKind::mlp);
    hp.set("epochs", 1500);
    hp.set("batch_size", 32);
    hp.set("learning_rate", 1e-2);
    const TrainedModel m = fit_mlp(x, y, hp, 4);
    const Eigen::VectorXd pred = predict(m, x);
    const double sse = (y - pred).squaredNorm();
    const double sst = (y.array() - y.mean()).square().sum();
    CHECK(1.0 - sse / sst > 0.9);
}

TEST_CASE("mlp diverges loudly when the learning rate is absurd") {
    Rng rng(4);
    const Eigen::MatrixXd x = standardized_random(64, 2, rng);
    Eigen::VectorXd y(64);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = rng.normal();
    Hyperparams hp = Hyperparams::defaults(ModelKind::mlp);
    hp.set("learning_rate", 1e12);
    hp.set("epochs", 50);
    hp.set("activation", "identity"); // sigmoid saturates instead of overflowing
    try {
        fit_mlp(x, y, hp, 5);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFiniteLoss);
    }
}

TEST_CASE("mlp training is deterministic per seed") {
    Rng rng(6);
    const Eigen::MatrixXd x = standardized_random(128, 3, rng);
    Eigen::VectorXd y(128);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = std::sin(x(r, 0)) + 0.1 * rng.normal();
    Hyperparams hp = Hyperparams::defaults(ModelKind::mlp);
    hp.set("epochs", 20);
    const TrainedModel a = fit_mlp(x, y, hp, 11);
    const TrainedModel b = fit_mlp(x, y, hp, 11);
    const TrainedModel c = fit_mlp(x, y, hp, 12);
    const Eigen::MatrixXd probes = standardized_random(20, 3, rng);
    CHECK((predict(a, probes) - predict(b, probes)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((predict(a, probes) - predict(c, probes)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("mlp json round trip") {
    Rng rng(7);
    const Eigen::MatrixXd x = standardized_random(100, 2, rng);
    Eigen::VectorXd y(100);
    for (Eigen::Index r = 0; r < y.size(); ++r) y(r) = x(r, 0) - x(r, 1);
    Hyperparams hp = Hyperparams::defaults(ModelKind::mlp);
    hp.set("epochs", 10);
    const TrainedModel m = fit_mlp(x, y, hp, 8);
    const TrainedModel back = model_from_json(model_to_json(m));
    const Eigen::MatrixXd probes = standardized_random(25, 2, rng);
    CHECK((predict(m, probes) - predict(back, probes)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.param_count() == m.param_count());
}
