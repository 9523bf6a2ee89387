#include "sfe/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sfe {

namespace {

struct Sample {
    double x;
    double y;
    double w;
};

struct Builder {
    const Eigen::MatrixXd& x;
    const Eigen::VectorXd& y;
    const TreeGrowth& params;
    const Eigen::VectorXd* weight;
    const std::vector<int>* allowed;
    Rng* rng;
    std::vector<TreeNode> nodes;
    std::vector<std::uint32_t> rows;
    std::vector<Sample> scratch;

    struct Best {
        double score = 0.0;
        int feature = -1;
        double threshold = 0.0;
    };

    double leaf_value(double sum_wy, double sum_w) const {
        if (params.objective == SplitObjective::boosted)
            return sum_wy / (sum_w + params.lambda_reg);
        return sum_w > 0.0 ? sum_wy / sum_w : 0.0;
    }

    // Score of putting {sum, weight} into one node under the chosen objective.
    double node_score(double sum_wy, double sum_w) const {
        if (params.objective == SplitObjective::boosted)
            return sum_wy * sum_wy / (sum_w + params.lambda_reg);
        return sum_w > 0.0 ? sum_wy * sum_wy / sum_w : 0.0;
    }

    // Candidates are scored twice. The scan uses running prefix sums, whose
    // rounding depends on each feature's sort order, so near-tied candidates
    // from different features are rescored with a canonical summation (node
    // row order) before the documented tie-break (lowest feature index, then
    // lowest threshold) is applied. Two features that induce the same
    // partition then produce bit-identical scores.
    double canonical_score(std::size_t begin, std::size_t end, int feature, double threshold,
                           double sum_wy, double sum_w) const {
        // Both sides are accumulated independently in node row order, so the
        // score of a partition does not depend on which side the feature put
        // left (mirrored candidates come out bit-identical).
        double left_wy = 0.0, left_w = 0.0, right_wy = 0.0, right_w = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = rows[i];
            const double w = weight ? (*weight)(r) : 1.0;
            if (x(r, feature) <= threshold) {
                left_wy += y(r) * w;
                left_w += w;
            } else {
                right_wy += y(r) * w;
                right_w += w;
            }
        }
        double score =
            node_score(left_wy, left_w) + node_score(right_wy, right_w) - node_score(sum_wy, sum_w);
        if (params.objective == SplitObjective::boosted) score = 0.5 * score - params.gamma;
        return score;
    }

    Best find_split(std::size_t begin, std::size_t end, double sum_wy, double sum_w) {
        const std::size_t count = end - begin;

        std::vector<int> feature_order;
        const std::size_t n_features = static_cast<std::size_t>(x.cols());
        if (allowed)
            feature_order = *allowed;
        else {
            feature_order.resize(n_features);
            std::iota(feature_order.begin(), feature_order.end(), 0);
        }
        if (params.max_features > 0 && params.max_features < feature_order.size() && rng) {
            const auto picks = rng->sample_without_replacement(feature_order.size(),
                                                               params.max_features);
            std::vector<int> subset;
            subset.reserve(picks.size());
            for (std::size_t p : picks) subset.push_back(feature_order[p]);
            std::sort(subset.begin(), subset.end());
            feature_order = std::move(subset);
        }

        constexpr double kTieBand = 1e-9; // relative width for rescoring ties
        const double parent_score = node_score(sum_wy, sum_w);
        double best_scan = 0.0;

        struct Contender {
            int feature;
            double threshold;
            double scan_score;
        };
        std::vector<Contender> contenders;

        for (int f : feature_order) {
            for (std::size_t i = 0; i < count; ++i) {
                const std::uint32_t r = rows[begin + i];
                scratch[i] = {x(r, f), y(r), weight ? (*weight)(r) : 1.0};
            }
            std::sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(count),
                      [](const Sample& a, const Sample& b) { return a.x < b.x; });

            double left_wy = 0.0, left_w = 0.0;
            for (std::size_t i = 0; i + 1 < count; ++i) {
                left_wy += scratch[i].y * scratch[i].w;
                left_w += scratch[i].w;
                if (scratch[i].x == scratch[i + 1].x) continue;

                const std::size_t left_n = i + 1;
                const std::size_t right_n = count - left_n;
                if (left_n < params.min_samples_leaf || right_n < params.min_samples_leaf)
                    continue;
                const double right_wy = sum_wy - left_wy;
                const double right_w = sum_w - left_w;
                if (params.objective == SplitObjective::boosted &&
                    (left_w < params.min_child_weight || right_w < params.min_child_weight))
                    continue;

                double score =
                    node_score(left_wy, left_w) + node_score(right_wy, right_w) - parent_score;
                if (params.objective == SplitObjective::boosted)
                    score = 0.5 * score - params.gamma;
                if (!(score > 0.0)) continue;
                if (score < best_scan - kTieBand * std::abs(best_scan)) continue;

                if (score > best_scan) {
                    best_scan = score;
                    const double floor = best_scan - kTieBand * std::abs(best_scan);
                    std::erase_if(contenders,
                                  [floor](const Contender& c) { return c.scan_score < floor; });
                }
                contenders.push_back({f, 0.5 * (scratch[i].x + scratch[i + 1].x), score});
            }
        }

        Best best;
        for (const Contender& c : contenders) {
            const double score = canonical_score(begin, end, c.feature, c.threshold, sum_wy, sum_w);
            if (!(score > 0.0)) continue;
            const bool better =
                best.feature < 0 || score > best.score ||
                (score == best.score &&
                 (c.feature < best.feature ||
                  (c.feature == best.feature && c.threshold < best.threshold)));
            if (better) {
                best.score = score;
                best.feature = c.feature;
                best.threshold = c.threshold;
            }
        }
        return best;
    }

    int build(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t count = end - begin;
        double sum_wy = 0.0, sum_w = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = rows[i];
            const double w = weight ? (*weight)(r) : 1.0;
            sum_wy += y(r) * w;
            sum_w += w;
        }

        const int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.back().n_samples = static_cast<std::uint32_t>(count);
        nodes.back().value = leaf_value(sum_wy, sum_w);

        const bool splittable = depth < params.max_depth && count >= params.min_samples_split &&
                                count >= 2 * params.min_samples_leaf;
        if (!splittable) return node_id;

        const Best best = find_split(begin, end, sum_wy, sum_w);
        if (best.feature < 0 || !(best.score > 0.0)) return node_id;

        const auto mid_it = std::partition(
            rows.begin() + static_cast<std::ptrdiff_t>(begin),
            rows.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::uint32_t r) { return x(r, best.feature) <= best.threshold; });
        const std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());

        const int left = build(begin, mid, depth + 1);
        const int right = build(mid, end, depth + 1);
        TreeNode& node = nodes[static_cast<std::size_t>(node_id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.gain = best.score;
        node.left = left;
        node.right = right;
        return node_id;
    }
};

} // namespace

Tree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeGrowth& params,
              const std::vector<std::uint32_t>& rows, const Eigen::VectorXd* sample_weight,
              const std::vector<int>* allowed, Rng* rng) {
    Builder b{x, y, params, sample_weight, allowed, rng, {}, rows, {}};
    b.scratch.resize(rows.size());
    b.nodes.reserve(64);
    b.build(0, rows.size(), 0);
    Tree t;
    t.nodes = std::move(b.nodes);
    return t;
}

Tree fit_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TreeGrowth& params) {
    std::vector<std::uint32_t> rows(static_cast<std::size_t>(x.rows()));
    std::iota(rows.begin(), rows.end(), 0u);
    return fit_tree(x, y, params, rows);
}

void Tree::accumulate_gain(std::vector<double>& acc, double weight) const {
    for (const TreeNode& n : nodes)
        if (n.feature >= 0 && static_cast<std::size_t>(n.feature) < acc.size())
            acc[static_cast<std::size_t>(n.feature)] += weight * n.gain;
}

std::size_t Tree::max_depth() const {
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const TreeNode& n = nodes[static_cast<std::size_t>(idx)];
        if (n.feature < 0) {
            deepest = std::max(deepest, depth);
            continue;
        }
        stack.push_back({n.left, depth + 1});
        stack.push_back({n.right, depth + 1});
    }
    return deepest;
}

std::size_t Tree::n_leaves() const {
    std::size_t count = 0;
    for (const TreeNode& n : nodes)
        if (n.feature < 0) ++count;
    return count;
}

nlohmann::json Tree::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const TreeNode& n : nodes) {
        arr.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"v", n.value},
                       {"n", n.n_samples},
                       {"g", n.gain}});
    }
    return arr;
}

Tree Tree::from_json(const nlohmann::json& j) {
    Tree t;
    t.nodes.reserve(j.size());
    for (const auto& e : j) {
        TreeNode n;
        n.feature = e.at("f").get<int>();
        n.threshold = e.at("t").get<double>();
        n.left = e.at("l").get<int>();
        n.right = e.at("r").get<int>();
        n.value = e.at("v").get<double>();
        n.n_samples = e.at("n").get<std::uint32_t>();
        n.gain = e.at("g").get<double>();
        t.nodes.push_back(n);
    }
    return t;
}

} // namespace sfe
