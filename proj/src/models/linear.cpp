#include "sfe/models/linear.hpp"

#include <cmath>

#include "sfe/error.hpp"

namespace sfe {

namespace {

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& xtx, const Eigen::VectorXd& xty) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Eigen::VectorXd w = ldlt.solve(xty);
        if (w.allFinite()) {
            // Accept only a genuine solution; a rank-deficient system can
            // still "solve" with a large residual.
            const double resid = (xtx * w - xty).norm();
            const double scale = xty.norm() + 1.0;
            if (resid <= 1e-8 * scale) return w;
        }
    }
    Eigen::MatrixXd jittered = xtx;
    jittered.diagonal().array() += 1e-10;
    return jittered.ldlt().solve(xty);
}

} // namespace

LinearWeights fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda1,
                         double lambda2) {
    if (x.rows() != y.size() || x.rows() == 0)
        throw Error(ErrorCode::DimensionMismatch,
                    "X rows " + std::to_string(x.rows()) + " vs y " + std::to_string(y.size()));
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw Error(ErrorCode::ConfigError, "negative regularization strength");

    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    LinearWeights out;
    if (lambda2 > 0.0) {
        // Coordinate descent with soft thresholding.
        const Eigen::Index d = x.cols();
        const double n = static_cast<double>(x.rows());
        Eigen::VectorXd col_ssq(d);
        for (Eigen::Index j = 0; j < d; ++j) col_ssq(j) = xc.col(j).squaredNorm();

        Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
        Eigen::VectorXd residual = yc;
        constexpr double tol = 1e-8;
        constexpr int max_sweeps = 10000;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double max_change = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                if (col_ssq(j) <= 0.0) continue;
                const double rho = xc.col(j).dot(residual) / n + w(j) * col_ssq(j) / n;
                const double z = col_ssq(j) / n;
                double wj = 0.0;
                if (rho > lambda2)
                    wj = (rho - lambda2) / z;
                else if (rho < -lambda2)
                    wj = (rho + lambda2) / z;
                const double change = wj - w(j);
                if (change != 0.0) {
                    residual -= xc.col(j) * change;
                    w(j) = wj;
                }
                max_change = std::max(max_change, std::abs(change));
            }
            if (max_change < tol) break;
        }
        out.w = std::move(w);
    } else if (lambda1 > 0.0) {
        Eigen::MatrixXd xtx = xc.transpose() * xc;
        xtx.diagonal().array() += lambda1;
        out.w = xtx.ldlt().solve(xc.transpose() * yc);
    } else {
        out.w = solve_normal_equations(xc.transpose() * xc, xc.transpose() * yc);
    }
    out.w0 = y_mean - x_mean * out.w;
    return out;
}

Eigen::MatrixXd expand_poly2(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd out(n, d + d * (d + 1) / 2);
    out.leftCols(d) = x;
    Eigen::Index col = d;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) out.col(col++) = x.col(i).cwiseProduct(x.col(j));
    return out;
}

Eigen::RowVectorXd expand_poly2_row(const Eigen::RowVectorXd& x) {
    const Eigen::Index d = x.size();
    Eigen::RowVectorXd out(d + d * (d + 1) / 2);
    out.head(d) = x;
    Eigen::Index col = d;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) out(col++) = x(i) * x(j);
    return out;
}

std::size_t poly2_param_count(std::size_t d) { return 1 + d + d * (d + 1) / 2; }

LinearPredictor::LinearPredictor(ModelKind kind, LinearWeights weights, bool expand)
    : kind_(kind), weights_(std::move(weights)), expand_(expand) {
    if (expand_) {
        // Recover D from the expanded width D + D(D+1)/2.
        std::size_t d = 0;
        while (static_cast<Eigen::Index>(d + d * (d + 1) / 2) < weights_.w.size()) ++d;
        input_dim_ = d;
    } else {
        input_dim_ = static_cast<std::size_t>(weights_.w.size());
    }
}

double LinearPredictor::predict_one(const Eigen::RowVectorXd& x) const {
    if (expand_) return weights_.w0 + expand_poly2_row(x) * weights_.w;
    return weights_.w0 + x * weights_.w;
}

std::optional<std::size_t> LinearPredictor::param_count() const {
    if (kind_ == ModelKind::poly2) return poly2_param_count(input_dim_);
    if (kind_ == ModelKind::lasso) {
        // Count surviving coefficients, mirroring how a sparse fit is sized.
        std::size_t nonzero = 0;
        for (Eigen::Index j = 0; j < weights_.w.size(); ++j)
            if (weights_.w(j) != 0.0) ++nonzero;
        return nonzero;
    }
    return static_cast<std::size_t>(weights_.w.size());
}

std::optional<Eigen::VectorXd> LinearPredictor::importances() const {
    // |coefficient| on normalized inputs; expanded terms are attributed back to
    // their base features (cross terms split evenly).
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim_));
    if (!expand_) {
        acc = weights_.w.cwiseAbs();
    } else {
        const Eigen::Index d = static_cast<Eigen::Index>(input_dim_);
        for (Eigen::Index j = 0; j < d; ++j) acc(j) += std::abs(weights_.w(j));
        Eigen::Index col = d;
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = i; j < d; ++j, ++col) {
                const double a = std::abs(weights_.w(col));
                if (i == j) {
                    acc(i) += a;
                } else {
                    acc(i) += 0.5 * a;
                    acc(j) += 0.5 * a;
                }
            }
        }
    }
    const double total = acc.sum();
    if (total <= 0.0) return std::nullopt;
    return Eigen::VectorXd(acc / total);
}

nlohmann::json LinearPredictor::to_json() const {
    nlohmann::json j;
    j["type"] = "linear";
    j["kind"] = model_kind_name(kind_);
    j["expand"] = expand_;
    j["w0"] = weights_.w0;
    j["w"] = std::vector<double>(weights_.w.data(), weights_.w.data() + weights_.w.size());
    return j;
}

std::shared_ptr<LinearPredictor> LinearPredictor::from_json(const nlohmann::json& j) {
    LinearWeights w;
    w.w0 = j.at("w0").get<double>();
    const auto coeffs = j.at("w").get<std::vector<double>>();
    w.w = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    return std::make_shared<LinearPredictor>(model_kind_from_name(j.at("kind").get<std::string>()),
                                             std::move(w), j.at("expand").get<bool>());
}

} // namespace sfe
