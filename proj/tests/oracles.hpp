// Test-only reference implementations, kept independent of the library's
// computation paths so they can serve as oracles.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// Streaming (Welford) mean/variance, one pass.
struct Streaming {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double sample_std() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    Streaming sa, sb;
    for (double x : a) sa.add(x);
    for (double x : b) sb.add(x);
    double cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - sa.mean) * (b[i] - sb.mean);
    cov /= static_cast<double>(a.size() - 1);
    return cov / (sa.sample_std() * sb.sample_std());
}

// Exhaustive CART split search: every feature, every midpoint between
// consecutive distinct sorted values, SSE reduction recomputed directly.
struct BestSplit {
    int feature = -1;
    double threshold = 0.0;
    double reduction = 0.0;
};

inline double sse_around_mean(const std::vector<double>& y) {
    if (y.empty()) return 0.0;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double sse = 0.0;
    for (double v : y) sse += (v - mean) * (v - mean);
    return sse;
}

inline BestSplit exhaustive_cart_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       std::size_t min_samples_leaf = 1) {
    BestSplit best;
    std::vector<double> all(y.data(), y.data() + y.size());
    const double parent_sse = sse_around_mean(all);
    for (int f = 0; f < x.cols(); ++f) {
        std::vector<double> values(x.rows());
        for (Eigen::Index r = 0; r < x.rows(); ++r) values[static_cast<std::size_t>(r)] = x(r, f);
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            if (sorted[i] == sorted[i + 1]) continue;
            const double thr = 0.5 * (sorted[i] + sorted[i + 1]);
            std::vector<double> left, right;
            for (Eigen::Index r = 0; r < x.rows(); ++r)
                (x(r, f) <= thr ? left : right).push_back(y(r));
            if (left.size() < min_samples_leaf || right.size() < min_samples_leaf) continue;
            const double reduction = parent_sse - sse_around_mean(left) - sse_around_mean(right);
            if (reduction > best.reduction) {
                best.reduction = reduction;
                best.feature = f;
                best.threshold = thr;
            }
        }
    }
    return best;
}

// Central finite differences of a scalar function of a parameter vector.
template <typename F>
Eigen::VectorXd finite_difference_gradient(F&& f, Eigen::VectorXd params, double eps = 1e-5) {
    Eigen::VectorXd grad(params.size());
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double saved = params(i);
        params(i) = saved + eps;
        const double hi = f(params);
        params(i) = saved - eps;
        const double lo = f(params);
        params(i) = saved;
        grad(i) = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

} // namespace oracle
