#include "sfe/models/mlp.hpp"

#include <chrono>
#include <cmath>

#include "sfe/error.hpp"

namespace sfe {

namespace {

constexpr std::uint64_t kTagMlp = 0x6d6c700000000000ULL;

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
    if (a == Activation::identity) return z;
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// Derivative expressed through the activation output.
Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& out, Activation a) {
    if (a == Activation::identity) return Eigen::MatrixXd::Ones(out.rows(), out.cols());
    return (out.array() * (1.0 - out.array())).matrix();
}

} // namespace

MlpNet::MlpNet(std::size_t in, std::size_t h1, std::size_t h2, Activation activation)
    : w1_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h1), static_cast<Eigen::Index>(in))),
      w2_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(h2), static_cast<Eigen::Index>(h1))),
      b1_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(h1))),
      b2_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(h2))),
      w3_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h2))),
      activation_(activation) {}

void MlpNet::init_weights(Rng& rng) {
    auto xavier = [&](Eigen::MatrixXd& w) {
        const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    };
    xavier(w1_);
    xavier(w2_);
    const double limit = std::sqrt(6.0 / static_cast<double>(w3_.size() + 1));
    for (Eigen::Index i = 0; i < w3_.size(); ++i) w3_(i) = rng.uniform(-limit, limit);
    b1_.setZero();
    b2_.setZero();
    b3_ = 0.0;
}

Eigen::VectorXd MlpNet::forward(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd a1 = activate((x * w1_.transpose()).rowwise() + b1_, activation_);
    const Eigen::MatrixXd a2 = activate((a1 * w2_.transpose()).rowwise() + b2_, activation_);
    return (a2 * w3_).array() + b3_;
}

double MlpNet::loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 Eigen::VectorXd& grad) const {
    const double batch = static_cast<double>(x.rows());
    const Eigen::MatrixXd a1 = activate((x * w1_.transpose()).rowwise() + b1_, activation_);
    const Eigen::MatrixXd a2 = activate((a1 * w2_.transpose()).rowwise() + b2_, activation_);
    const Eigen::VectorXd out = (a2 * w3_).array() + b3_;

    const Eigen::VectorXd diff = out - y;
    const double loss = diff.squaredNorm() / batch;

    const Eigen::VectorXd dout = 2.0 * diff / batch;
    const Eigen::VectorXd g_w3 = a2.transpose() * dout;
    const double g_b3 = dout.sum();

    const Eigen::MatrixXd da2 = dout * w3_.transpose();
    const Eigen::MatrixXd dz2 = da2.cwiseProduct(activate_grad(a2, activation_));
    const Eigen::MatrixXd g_w2 = dz2.transpose() * a1;
    const Eigen::RowVectorXd g_b2 = dz2.colwise().sum();

    const Eigen::MatrixXd da1 = dz2 * w2_;
    const Eigen::MatrixXd dz1 = da1.cwiseProduct(activate_grad(a1, activation_));
    const Eigen::MatrixXd g_w1 = dz1.transpose() * x;
    const Eigen::RowVectorXd g_b1 = dz1.colwise().sum();

    grad.resize(static_cast<Eigen::Index>(param_count()));
    Eigen::Index pos = 0;
    auto put_matrix = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) grad(pos++) = m(r, c);
    };
    put_matrix(g_w1);
    for (Eigen::Index i = 0; i < g_b1.size(); ++i) grad(pos++) = g_b1(i);
    put_matrix(g_w2);
    for (Eigen::Index i = 0; i < g_b2.size(); ++i) grad(pos++) = g_b2(i);
    for (Eigen::Index i = 0; i < g_w3.size(); ++i) grad(pos++) = g_w3(i);
    grad(pos++) = g_b3;
    return loss;
}

Eigen::VectorXd MlpNet::params() const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(param_count()));
    Eigen::Index pos = 0;
    auto put_matrix = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) p(pos++) = m(r, c);
    };
    put_matrix(w1_);
    for (Eigen::Index i = 0; i < b1_.size(); ++i) p(pos++) = b1_(i);
    put_matrix(w2_);
    for (Eigen::Index i = 0; i < b2_.size(); ++i) p(pos++) = b2_(i);
    for (Eigen::Index i = 0; i < w3_.size(); ++i) p(pos++) = w3_(i);
    p(pos++) = b3_;
    return p;
}

void MlpNet::set_params(const Eigen::VectorXd& p) {
    if (p.size() != static_cast<Eigen::Index>(param_count()))
        throw Error(ErrorCode::DimensionMismatch, "MLP parameter vector size");
    Eigen::Index pos = 0;
    auto take_matrix = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = p(pos++);
    };
    take_matrix(w1_);
    for (Eigen::Index i = 0; i < b1_.size(); ++i) b1_(i) = p(pos++);
    take_matrix(w2_);
    for (Eigen::Index i = 0; i < b2_.size(); ++i) b2_(i) = p(pos++);
    for (Eigen::Index i = 0; i < w3_.size(); ++i) w3_(i) = p(pos++);
    b3_ = p(pos++);
}

std::size_t MlpNet::param_count() const {
    return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size() +
                                    w3_.size() + 1);
}

double MlpPredictor::predict_one(const Eigen::RowVectorXd& x) const {
    const Eigen::VectorXd out = net_.forward(x);
    return y_mean_ + y_std_ * out(0);
}

nlohmann::json MlpPredictor::to_json() const {
    nlohmann::json j;
    j["type"] = "mlp";
    j["input_dim"] = net_.input_dim();
    j["hidden1"] = net_.hidden1();
    j["hidden2"] = net_.hidden2();
    j["activation"] = net_.activation() == Activation::sigmoid ? "sigmoid" : "identity";
    const Eigen::VectorXd p = net_.params();
    j["params"] = std::vector<double>(p.data(), p.data() + p.size());
    j["y_mean"] = y_mean_;
    j["y_std"] = y_std_;
    return j;
}

std::shared_ptr<MlpPredictor> MlpPredictor::from_json(const nlohmann::json& j) {
    MlpNet net(j.at("input_dim").get<std::size_t>(), j.at("hidden1").get<std::size_t>(),
               j.at("hidden2").get<std::size_t>(),
               j.at("activation").get<std::string>() == "identity" ? Activation::identity
                                                                   : Activation::sigmoid);
    const auto params = j.at("params").get<std::vector<double>>();
    net.set_params(
        Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
    return std::make_shared<MlpPredictor>(std::move(net), j.at("y_mean").get<double>(),
                                          j.at("y_std").get<double>());
}

TrainedModel fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Hyperparams& hp,
                     std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t epochs = static_cast<std::size_t>(hp.num_or("epochs", 1000));
    const std::size_t batch_size = static_cast<std::size_t>(hp.num_or("batch_size", 128));
    const double lr = hp.num_or("learning_rate", 1e-3);
    const Activation activation =
        (hp.has("activation") && hp.str("activation") == "identity") ? Activation::identity
                                                                     : Activation::sigmoid;

    const double y_mean = y.mean();
    double y_std = std::sqrt((y.array() - y_mean).square().sum() /
                             std::max<double>(1.0, static_cast<double>(y.size() - 1)));
    if (!(y_std > 0.0)) y_std = 1.0;
    const Eigen::VectorXd y_scaled = (y.array() - y_mean) / y_std;

    MlpNet net(static_cast<std::size_t>(x.cols()),
               static_cast<std::size_t>(hp.num_or("hidden1", 30)),
               static_cast<std::size_t>(hp.num_or("hidden2", 20)), activation);
    Rng rng(derive_seed(seed, kTagMlp));
    net.init_weights(rng);

    const std::size_t n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    Eigen::VectorXd grad;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t size = std::min(batch_size, n - begin);
            Eigen::MatrixXd bx(static_cast<Eigen::Index>(size), x.cols());
            Eigen::VectorXd by(static_cast<Eigen::Index>(size));
            for (std::size_t i = 0; i < size; ++i) {
                bx.row(static_cast<Eigen::Index>(i)) =
                    x.row(static_cast<Eigen::Index>(order[begin + i]));
                by(static_cast<Eigen::Index>(i)) =
                    y_scaled(static_cast<Eigen::Index>(order[begin + i]));
            }
            const double loss = net.loss_and_gradient(bx, by, grad);
            if (!std::isfinite(loss))
                throw Error(ErrorCode::NonFiniteLoss,
                            "epoch " + std::to_string(epoch) + "; lower the learning rate");
            net.set_params(net.params() - lr * grad);
        }
    }

    TrainedModel m;
    m.kind = ModelKind::mlp;
    m.hyperparams = hp;
    m.predictor = std::make_shared<MlpPredictor>(std::move(net), y_mean, y_std);
    m.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return m;
}

} // namespace sfe
