#include "sfe/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sfe/rng.hpp"

namespace sfe {

namespace {
constexpr std::uint64_t kTagSplit = 0x73706c6974000000ULL;
}

double quantile_type7(std::vector<double> values, double p) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty set");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

OutlierMask iqr_mask(const Column& column, double factor) {
    std::vector<double> observed;
    observed.reserve(column.values.size());
    for (std::size_t r = 0; r < column.values.size(); ++r)
        if (!column.missing[r]) observed.push_back(column.values[r]);
    if (observed.size() < 4)
        throw Error(ErrorCode::TooFewValues,
                    column.name + " has " + std::to_string(observed.size()) + " observed values");

    OutlierMask mask;
    mask.q1 = quantile_type7(observed, 0.25);
    mask.q3 = quantile_type7(observed, 0.75);
    mask.iqr = mask.q3 - mask.q1;
    const double lo = mask.q1 - factor * mask.iqr;
    const double hi = mask.q3 + factor * mask.iqr;

    mask.keep.resize(column.values.size(), true);
    for (std::size_t r = 0; r < column.values.size(); ++r) {
        if (column.missing[r]) continue;
        const double v = column.values[r];
        mask.keep[r] = v >= lo && v <= hi;
    }
    return mask;
}

namespace {

// Modal value of the observed entries. Columns whose observed values are all
// whole numbers with few distinct levels (e.g. the binary mode channel) take
// the exact mode; everything else uses a histogram and returns the midpoint
// of the fullest bin (ties to the lower bin).
double cluster_mode(const std::vector<double>& observed, std::size_t bins) {
    bool discrete = observed.size() <= 1;
    if (!discrete) {
        std::map<double, std::size_t> levels;
        discrete = true;
        for (double v : observed) {
            if (v != std::floor(v) || levels.size() > 10) {
                discrete = false;
                break;
            }
            ++levels[v];
        }
        if (discrete && levels.size() <= 10) {
            std::size_t best_count = 0;
            double best_value = observed.front();
            for (const auto& [value, count] : levels) {
                if (count > best_count) {
                    best_count = count;
                    best_value = value;
                }
            }
            return best_value;
        }
        discrete = false;
    }
    if (observed.size() == 1) return observed.front();

    const auto [mn_it, mx_it] = std::minmax_element(observed.begin(), observed.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mn == mx) return mn;
    const double width = (mx - mn) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : observed) {
        std::size_t b = static_cast<std::size_t>((v - mn) / width);
        if (b >= bins) b = bins - 1;
        ++counts[b];
    }
    std::size_t best = 0;
    for (std::size_t b = 1; b < bins; ++b)
        if (counts[b] > counts[best]) best = b;
    return mn + (static_cast<double>(best) + 0.5) * width;
}

} // namespace

Dataset impute(const Dataset& d, const std::vector<int>& assignments, ImputeLog* log,
               std::size_t histogram_bins) {
    if (assignments.size() != d.n_rows())
        throw Error(ErrorCode::LengthMismatch, "assignments vs rows");

    ImputeLog local;
    std::vector<std::size_t> keep_rows;
    std::vector<std::pair<std::size_t, std::size_t>> to_fill; // (row, column)
    keep_rows.reserve(d.n_rows());
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        std::size_t missing_count = 0;
        std::size_t missing_col = 0;
        for (std::size_t c = 0; c < d.columns.size(); ++c) {
            if (d.columns[c].missing[r]) {
                ++missing_count;
                missing_col = c;
            }
        }
        if (missing_count >= 2) {
            ++local.removed_rows;
            continue;
        }
        if (missing_count == 1) to_fill.emplace_back(r, missing_col);
        keep_rows.push_back(r);
    }

    // Per (cluster, column) modes, computed lazily over the full input.
    std::unordered_map<std::uint64_t, double> mode_cache;
    auto mode_for = [&](int cluster, std::size_t col, bool& ok) {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cluster)) << 32) | col;
        auto it = mode_cache.find(key);
        if (it != mode_cache.end()) {
            ok = !std::isnan(it->second);
            return it->second;
        }
        std::vector<double> observed;
        const Column& c = d.columns[col];
        for (std::size_t r = 0; r < d.n_rows(); ++r)
            if (assignments[r] == cluster && !c.missing[r]) observed.push_back(c.values[r]);
        double value = std::numeric_limits<double>::quiet_NaN();
        if (!observed.empty()) value = cluster_mode(observed, histogram_bins);
        mode_cache.emplace(key, value);
        ok = !observed.empty();
        return value;
    };

    std::vector<bool> drop(d.n_rows(), false);
    std::unordered_map<std::size_t, double> fills;
    for (const auto& [row, col] : to_fill) {
        bool ok = false;
        const double value = mode_for(assignments[row], col, ok);
        if (!ok) {
            drop[row] = true;
            ++local.removed_empty_cluster;
            continue;
        }
        fills[row * d.columns.size() + col] = value;
        ++local.imputed_cells;
    }

    std::vector<std::size_t> final_rows;
    final_rows.reserve(keep_rows.size());
    for (std::size_t r : keep_rows)
        if (!drop[r]) final_rows.push_back(r);

    Dataset out = d.select_rows(final_rows);
    for (std::size_t i = 0; i < final_rows.size(); ++i) {
        const std::size_t src = final_rows[i];
        for (std::size_t c = 0; c < d.columns.size(); ++c) {
            auto it = fills.find(src * d.columns.size() + c);
            if (it != fills.end()) {
                out.columns[c].values[i] = it->second;
                out.columns[c].missing[i] = false;
            }
        }
    }
    if (log) *log = local;
    return out;
}

Normalizer fit_normalizer(const Eigen::MatrixXd& x, const std::vector<std::string>& columns) {
    Normalizer n;
    n.columns = columns;
    n.mean = x.colwise().mean();
    n.std_dev.resize(x.cols());
    n.passthrough.resize(static_cast<std::size_t>(x.cols()), false);
    const double rows = static_cast<double>(x.rows());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double ss = (x.col(c).array() - n.mean(c)).square().sum();
        const double sd = rows > 1 ? std::sqrt(ss / (rows - 1.0)) : 0.0;
        n.std_dev(c) = sd;
        if (sd <= 0.0) n.passthrough[static_cast<std::size_t>(c)] = true;
    }
    return n;
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "normalizer apply");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (passthrough[static_cast<std::size_t>(c)])
            out.col(c) = x.col(c);
        else
            out.col(c) = (x.col(c).array() - mean(c)) / std_dev(c);
    }
    return out;
}

Eigen::MatrixXd Normalizer::inverse(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "normalizer inverse");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (passthrough[static_cast<std::size_t>(c)])
            out.col(c) = x.col(c);
        else
            out.col(c) = x.col(c).array() * std_dev(c) + mean(c);
    }
    return out;
}

std::string Normalizer::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["columns"] = columns;
    j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
    j["std_dev"] = std::vector<double>(std_dev.data(), std_dev.data() + std_dev.size());
    j["passthrough"] = passthrough;
    return j.dump(2);
}

Normalizer Normalizer::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Normalizer n;
    n.columns = j.at("columns").get<std::vector<std::string>>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto sd = j.at("std_dev").get<std::vector<double>>();
    n.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    n.std_dev = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    n.passthrough = j.at("passthrough").get<std::vector<bool>>();
    return n;
}

SplitIndices split(std::size_t n_rows, double ratio, std::size_t k, std::uint64_t seed) {
    if (n_rows < k || k == 0)
        throw Error(ErrorCode::TooFewRows,
                    std::to_string(n_rows) + " rows for " + std::to_string(k) + " folds");
    std::vector<std::size_t> perm(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, kTagSplit));
    rng.shuffle(perm);

    const std::size_t n_train =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n_rows)));

    SplitIndices out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());

    out.folds.resize(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t begin = f * n_train / k;
        const std::size_t end = (f + 1) * n_train / k;
        out.folds[f].assign(out.train.begin() + static_cast<std::ptrdiff_t>(begin),
                            out.train.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

std::string SplitIndices::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["train"] = train;
    j["test"] = test;
    j["folds"] = folds;
    return j.dump();
}

SplitIndices SplitIndices::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SplitIndices s;
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    s.folds = j.at("folds").get<std::vector<std::vector<std::size_t>>>();
    return s;
}

} // namespace sfe
