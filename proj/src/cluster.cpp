#include "sfe/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "sfe/error.hpp"
#include "sfe/rng.hpp"
#include "sfe/telemetry.hpp"

namespace sfe {

namespace {

constexpr std::uint64_t kTagRestart = 0x6b6d65616e730000ULL;

Eigen::VectorXd json_to_vector(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json j = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(std::move(row));
    }
    return j;
}

Eigen::MatrixXd json_to_matrix(const nlohmann::json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    return m;
}

double squared_distance(const Eigen::MatrixXd& x, Eigen::Index row, const Eigen::MatrixXd& c,
                        Eigen::Index centroid) {
    return (x.row(row) - c.row(centroid)).squaredNorm();
}

struct LloydResult {
    Eigen::MatrixXd centroids;
    std::vector<int> assignments;
    double inertia = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

double compute_inertia(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids,
                       const std::vector<int>& assignments) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
        total += squared_distance(x, r, centroids, assignments[static_cast<std::size_t>(r)]);
    return total;
}

std::vector<int> assign_nearest(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids) {
    std::vector<int> assign(static_cast<std::size_t>(x.rows()), 0);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        int best_k = 0;
        for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
            const double d = squared_distance(x, r, centroids, k);
            if (d < best) {
                best = d;
                best_k = static_cast<int>(k);
            }
        }
        assign[static_cast<std::size_t>(r)] = best_k;
    }
    return assign;
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, std::size_t k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), x.cols());
    const Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(n));
    centroids.row(0) = x.row(first);

    std::vector<double> dist2(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r)
        dist2[static_cast<std::size_t>(r)] = squared_distance(x, r, centroids, 0);

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : dist2) total += d;
        Eigen::Index chosen;
        if (total <= 0.0) {
            chosen = static_cast<Eigen::Index>(rng.uniform_index(n));
        } else {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Eigen::Index r = 0; r < n; ++r) {
                acc += dist2[static_cast<std::size_t>(r)];
                if (acc >= target) {
                    chosen = r;
                    break;
                }
            }
        }
        centroids.row(static_cast<Eigen::Index>(c)) = x.row(chosen);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double d = squared_distance(x, r, centroids, static_cast<Eigen::Index>(c));
            auto& slot = dist2[static_cast<std::size_t>(r)];
            if (d < slot) slot = d;
        }
    }
    return centroids;
}

LloydResult run_lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd centroids, std::size_t max_iter) {
    const std::size_t k = static_cast<std::size_t>(centroids.rows());
    LloydResult res;
    std::vector<int> assign = assign_nearest(x, centroids);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Update step.
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
        std::vector<std::size_t> counts(k, 0);
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const int a = assign[static_cast<std::size_t>(r)];
            sums.row(a) += x.row(r);
            ++counts[static_cast<std::size_t>(a)];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Reseed an emptied cluster at the point worst served by its
                // current centroid (deterministic: lowest index on ties).
                double worst = -1.0;
                Eigen::Index worst_row = 0;
                for (Eigen::Index r = 0; r < x.rows(); ++r) {
                    const double d =
                        squared_distance(x, r, centroids, assign[static_cast<std::size_t>(r)]);
                    if (d > worst) {
                        worst = d;
                        worst_row = r;
                    }
                }
                centroids.row(static_cast<Eigen::Index>(c)) = x.row(worst_row);
            } else {
                centroids.row(static_cast<Eigen::Index>(c)) =
                    sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
            }
        }

        std::vector<int> next = assign_nearest(x, centroids);
        res.trace.push_back(compute_inertia(x, centroids, next));
        const bool converged = next == assign;
        assign = std::move(next);
        if (converged) break;
    }
    res.centroids = std::move(centroids);
    res.inertia = compute_inertia(x, res.centroids, assign);
    res.assignments = std::move(assign);
    return res;
}

} // namespace

Standardizer fit_standardizer(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.std_dev.resize(x.cols());
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double ss = (x.col(c).array() - s.mean(c)).square().sum();
        s.std_dev(c) = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (std_dev(c) > 0.0)
            out.col(c) = (x.col(c).array() - mean(c)) / std_dev(c);
        else
            out.col(c).setZero();
    }
    return out;
}

PcaModel fit_pca(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw Error(ErrorCode::TooFewRows, "fit_pca needs >= 2 rows");
    PcaModel model;
    model.mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(x.rows() - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd values = solver.eigenvalues();   // ascending
    const Eigen::MatrixXd vectors = solver.eigenvectors(); // columns

    const Eigen::Index d = cov.rows();
    model.components.resize(d, d);
    model.explained_variance.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index src = d - 1 - i; // descending variance
        Eigen::VectorXd comp = vectors.col(src);
        // Sign convention: largest-magnitude loading positive.
        Eigen::Index max_idx = 0;
        comp.cwiseAbs().maxCoeff(&max_idx);
        if (comp(max_idx) < 0.0) comp = -comp;
        model.components.row(i) = comp.transpose();
        model.explained_variance(i) = std::max(0.0, values(src));
    }
    return model;
}

Eigen::MatrixXd pca_transform(const PcaModel& p, const Eigen::MatrixXd& x,
                              std::size_t n_components) {
    if (n_components > static_cast<std::size_t>(p.components.rows()))
        throw Error(ErrorCode::TooManyComponents,
                    format_double(static_cast<double>(n_components)) + " of " +
                        format_double(static_cast<double>(p.components.rows())));
    const Eigen::MatrixXd centered = x.rowwise() - p.mean.transpose();
    return centered * p.components.topRows(static_cast<Eigen::Index>(n_components)).transpose();
}

Eigen::MatrixXd pca_inverse_transform(const PcaModel& p, const Eigen::MatrixXd& scores) {
    return (scores * p.components.topRows(scores.cols())).rowwise() + p.mean.transpose();
}

KMeansModel fit_kmeans(const Eigen::MatrixXd& x, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter, std::size_t n_restarts) {
    if (k < 1 || k > static_cast<std::size_t>(x.rows()))
        throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(k) + ", rows = " +
                                              std::to_string(x.rows()));
    LloydResult best;
    for (std::size_t restart = 0; restart < std::max<std::size_t>(1, n_restarts); ++restart) {
        Rng rng(derive_seed(seed, kTagRestart, restart));
        LloydResult res = run_lloyd(x, kmeanspp_init(x, k, rng), max_iter);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    KMeansModel model;
    model.centroids = std::move(best.centroids);
    model.assignments = std::move(best.assignments);
    model.inertia = best.inertia;
    model.lloyd_inertia_trace = std::move(best.trace);
    model.seed = seed;
    return model;
}

std::vector<int> kmeans_assign(const KMeansModel& m, const Eigen::MatrixXd& x) {
    return assign_nearest(x, m.centroids);
}

std::vector<std::pair<std::size_t, double>> elbow_curve(const Eigen::MatrixXd& x,
                                                        std::size_t k_max, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, double>> curve;
    Eigen::MatrixXd prev_centroids;
    for (std::size_t k = 1; k <= k_max; ++k) {
        KMeansModel m = fit_kmeans(x, k, derive_seed(seed, kTagRestart, 1000 + k));
        if (prev_centroids.rows() > 0) {
            // Warm-start candidate: previous centroids plus the worst-served point.
            Eigen::MatrixXd warm(static_cast<Eigen::Index>(k), x.cols());
            warm.topRows(prev_centroids.rows()) = prev_centroids;
            const std::vector<int> assign = assign_nearest(x, prev_centroids);
            double worst = -1.0;
            Eigen::Index worst_row = 0;
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                const double d =
                    squared_distance(x, r, prev_centroids, assign[static_cast<std::size_t>(r)]);
                if (d > worst) {
                    worst = d;
                    worst_row = r;
                }
            }
            warm.row(warm.rows() - 1) = x.row(worst_row);
            LloydResult warm_res = run_lloyd(x, std::move(warm), 100);
            if (warm_res.inertia < m.inertia) {
                m.centroids = std::move(warm_res.centroids);
                m.assignments = std::move(warm_res.assignments);
                m.inertia = warm_res.inertia;
                m.lloyd_inertia_trace = std::move(warm_res.trace);
            }
        }
        curve.emplace_back(k, m.inertia);
        prev_centroids = std::move(m.centroids);
    }
    return curve;
}

PartitionComparison compare_partitions(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    if (a.empty()) throw Error(ErrorCode::EmptyInput, "compare_partitions");

    const double n = static_cast<double>(a.size());
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++disagree;
    const bool flip = disagree * 2 > a.size();

    double sum_a = 0.0, sum_d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum_a += a[i];
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int bi = flip ? 1 - b[i] : b[i];
        diff[i] = static_cast<double>(a[i] - bi);
        sum_d += diff[i];
    }
    const double mean_a = sum_a / n;
    const double mean_d = sum_d / n;

    PartitionComparison out;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.variance_a += (a[i] - mean_a) * (a[i] - mean_a);
        out.variance_diff += (diff[i] - mean_d) * (diff[i] - mean_d);
        abs_sum += std::abs(diff[i]);
    }
    out.variance_a /= n;
    out.variance_diff /= n;
    out.mae = abs_sum / n;
    return out;
}

std::string PcaModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["mean"] = vector_to_json(mean);
    j["components"] = matrix_to_json(components);
    j["explained_variance"] = vector_to_json(explained_variance);
    return j.dump(2);
}

PcaModel PcaModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PcaModel m;
    m.mean = json_to_vector(j.at("mean"));
    m.components = json_to_matrix(j.at("components"));
    m.explained_variance = json_to_vector(j.at("explained_variance"));
    return m;
}

std::string KMeansModel::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["k"] = centroids.rows();
    j["centroids"] = matrix_to_json(centroids);
    j["inertia"] = inertia;
    j["seed"] = seed;
    return j.dump(2);
}

KMeansModel KMeansModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    KMeansModel m;
    m.centroids = json_to_matrix(j.at("centroids"));
    m.inertia = j.at("inertia").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

} // namespace sfe
