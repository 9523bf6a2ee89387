#include "sfe/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "sfe/error.hpp"
#include "sfe/rng.hpp"

namespace sfe {

namespace {

constexpr std::uint64_t kTagModel = 0x6d6f64656c000000ULL;
constexpr std::uint64_t kTagSearch = 0x7365617263680000ULL;

std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.5f", s);
    return buf;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& y, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
    return out;
}

void run_tasks(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    workers.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                task(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

} // namespace

double rmse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
    if (y.size() != y_hat.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(y.size()) + " vs " + std::to_string(y_hat.size()));
    if (y.size() == 0) throw Error(ErrorCode::EmptyInput, "rmse");
    return std::sqrt((y - y_hat).squaredNorm() / static_cast<double>(y.size()));
}

double r2(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
    if (y.size() != y_hat.size())
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(y.size()) + " vs " + std::to_string(y_hat.size()));
    if (y.size() == 0) throw Error(ErrorCode::EmptyInput, "r2");
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    if (sst <= 0.0) throw Error(ErrorCode::ConstantTarget, "Var(y) = 0");
    const double sse = (y - y_hat).squaredNorm();
    return 1.0 - sse / sst;
}

FeatureFrame shift_target(const FeatureFrame& f, std::size_t n, ShiftLog* log) {
    ShiftLog local;
    FeatureFrame out;
    out.table.columns = f.table.columns;
    for (auto& c : out.table.columns) {
        c.values.clear();
        c.missing.clear();
    }

    const auto target_idx = f.table.column_index(kTargetColumn);
    const std::size_t rows = f.n_rows();

    std::size_t trip_begin = 0;
    while (trip_begin < rows) {
        std::size_t trip_end = trip_begin + 1;
        while (trip_end < rows && f.trip_ids[trip_end] == f.trip_ids[trip_begin]) ++trip_end;
        const std::size_t len = trip_end - trip_begin;
        if (len <= n) {
            ++local.dropped_trips;
            local.dropped_rows += len;
        } else {
            for (std::size_t r = trip_begin; r + n < trip_end; ++r) {
                for (std::size_t c = 0; c < f.table.columns.size(); ++c) {
                    const std::size_t src = (c == *target_idx) ? r + n : r;
                    out.table.columns[c].values.push_back(f.table.columns[c].values[src]);
                    out.table.columns[c].missing.push_back(f.table.columns[c].missing[src]);
                }
                out.source_rows.push_back(f.source_rows[r]);
                out.trip_ids.push_back(f.trip_ids[r]);
            }
            local.dropped_rows += n;
        }
        trip_begin = trip_end;
    }
    if (log) *log = local;
    return out;
}

std::string EvalReport::to_csv(bool include_timings) const {
    std::ostringstream out;
    out << "method";
    if (include_timings) out << ",fit_seconds,predict_seconds";
    out << ",param_count,r2_validation,r2_test,rmse_test,future_rmse_test,status\n";
    for (const EvalRow& r : rows) {
        out << model_kind_name(r.kind);
        if (include_timings)
            out << ',' << format_seconds(r.fit_seconds) << ',' << format_seconds(r.predict_seconds);
        out << ',' << (r.param_count ? std::to_string(*r.param_count) : std::string("NA"));
        out << ',' << format_double(r.r2_validation) << ',' << format_double(r.r2_test) << ','
            << format_double(r.rmse_test) << ',' << format_double(r.future_rmse_test) << ','
            << r.status << '\n';
    }
    return out.str();
}

std::string EvalReport::to_json_text() const {
    nlohmann::json j;
    j["horizon"] = horizon;
    j["rows"] = nlohmann::json::array();
    for (const EvalRow& r : rows) {
        nlohmann::json row;
        row["method"] = model_kind_name(r.kind);
        row["fit_seconds"] = r.fit_seconds;
        row["predict_seconds"] = r.predict_seconds;
        if (r.param_count)
            row["param_count"] = *r.param_count;
        else
            row["param_count"] = nullptr;
        row["r2_validation"] = r.r2_validation;
        row["r2_test"] = r.r2_test;
        row["rmse_test"] = r.rmse_test;
        row["future_rmse_test"] = r.future_rmse_test;
        row["status"] = r.status;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2);
}

CompareResult compare(const FeatureFrame& frame, const std::vector<std::string>& selected,
                      const CompareOptions& options) {
    const ModelMatrix base = extract_matrix(frame, selected);
    if (base.x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no complete rows to compare");

    CompareResult result;
    result.report.horizon = options.horizon;
    result.split = split(static_cast<std::size_t>(base.x.rows()), options.split_ratio,
                         options.folds, options.seed);
    const SplitIndices& sp = result.split;

    const Eigen::MatrixXd x_train_raw = take_rows(base.x, sp.train);
    result.normalizer = fit_normalizer(x_train_raw, selected);
    const Eigen::MatrixXd x_all = result.normalizer.apply(base.x);
    const Eigen::VectorXd& y_all = base.y;

    const Eigen::MatrixXd x_train = take_rows(x_all, sp.train);
    const Eigen::VectorXd y_train = take_rows(y_all, sp.train);
    const Eigen::MatrixXd x_test = take_rows(x_all, sp.test);
    const Eigen::VectorXd y_test = take_rows(y_all, sp.test);

    // The n-step-ahead evaluation retrains on the slid target; with horizon 0
    // the slide is the identity and reproduces the base fit exactly.
    const FeatureFrame shifted = shift_target(frame, options.horizon);
    const ModelMatrix future = extract_matrix(shifted, selected);
    SplitIndices future_split;
    Eigen::MatrixXd fx_train, fx_test;
    Eigen::VectorXd fy_train, fy_test;
    const bool future_ok = future.x.rows() >= static_cast<Eigen::Index>(options.folds);
    if (future_ok) {
        future_split = split(static_cast<std::size_t>(future.x.rows()), options.split_ratio,
                             options.folds, options.seed);
        const Normalizer future_norm =
            fit_normalizer(take_rows(future.x, future_split.train), selected);
        const Eigen::MatrixXd fx_all = future_norm.apply(future.x);
        fx_train = take_rows(fx_all, future_split.train);
        fy_train = take_rows(future.y, future_split.train);
        fx_test = take_rows(fx_all, future_split.test);
        fy_test = take_rows(future.y, future_split.test);
    }

    // Fold views (train-minus-fold / fold), shared by every kind.
    std::vector<std::vector<std::size_t>> fold_train_rows(options.folds);
    std::vector<std::vector<std::size_t>> fold_eval_rows(options.folds);
    {
        std::vector<char> in_fold(sp.train.size());
        std::vector<std::size_t> pos_of(static_cast<std::size_t>(base.x.rows()), 0);
        for (std::size_t i = 0; i < sp.train.size(); ++i) pos_of[sp.train[i]] = i;
        for (std::size_t f = 0; f < options.folds; ++f) {
            std::fill(in_fold.begin(), in_fold.end(), 0);
            for (std::size_t row : sp.folds[f]) in_fold[pos_of[row]] = 1;
            for (std::size_t i = 0; i < sp.train.size(); ++i)
                (in_fold[i] ? fold_eval_rows[f] : fold_train_rows[f]).push_back(i);
        }
    }

    result.report.rows.resize(options.kinds.size());
    result.models.resize(options.kinds.size());
    std::vector<std::vector<double>> fold_scores(options.kinds.size(),
                                                 std::vector<double>(options.folds, 0.0));

    struct Task {
        std::size_t kind_index;
        int unit; // -1 full fit, -2 future fit, >= 0 fold index
    };
    std::vector<Task> tasks;
    for (std::size_t k = 0; k < options.kinds.size(); ++k) {
        tasks.push_back({k, -1});
        tasks.push_back({k, -2});
        for (std::size_t f = 0; f < options.folds; ++f)
            tasks.push_back({k, static_cast<int>(f)});
    }

    auto hyper_for = [&](ModelKind kind) {
        auto it = options.hyperparams.find(kind);
        return it != options.hyperparams.end() ? it->second : Hyperparams::defaults(kind);
    };

    std::vector<std::string> errors(options.kinds.size());
    std::mutex error_mutex;
    auto note_error = [&](std::size_t k, const std::string& what) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (errors[k].empty()) errors[k] = what;
    };

    run_tasks(tasks.size(), options.jobs, [&](std::size_t t) {
        const Task& task = tasks[t];
        const ModelKind kind = options.kinds[task.kind_index];
        const Hyperparams hp = hyper_for(kind);
        const std::uint64_t kind_seed =
            derive_seed(options.seed, kTagModel, static_cast<std::uint64_t>(kind));
        try {
            if (task.unit == -1) {
                TrainedModel model = train_model(kind, x_train, y_train, hp, kind_seed);
                const auto t0 = std::chrono::steady_clock::now();
                const Eigen::VectorXd pred = predict(model, x_test);
                model.predict_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                EvalRow& row = result.report.rows[task.kind_index];
                row.kind = kind;
                row.fit_seconds = model.fit_seconds;
                row.predict_seconds = model.predict_seconds;
                row.param_count = model.param_count();
                row.r2_test = r2(y_test, pred);
                row.rmse_test = rmse(y_test, pred);
                result.models[task.kind_index] = std::move(model);
            } else if (task.unit == -2) {
                if (!future_ok) {
                    note_error(task.kind_index, "horizon left too few rows");
                    return;
                }
                TrainedModel model = train_model(kind, fx_train, fy_train, hp, kind_seed);
                result.report.rows[task.kind_index].future_rmse_test =
                    rmse(fy_test, predict(model, fx_test));
            } else {
                const std::size_t f = static_cast<std::size_t>(task.unit);
                const Eigen::MatrixXd fx = take_rows(x_train, fold_train_rows[f]);
                const Eigen::VectorXd fy = take_rows(y_train, fold_train_rows[f]);
                const Eigen::MatrixXd vx = take_rows(x_train, fold_eval_rows[f]);
                const Eigen::VectorXd vy = take_rows(y_train, fold_eval_rows[f]);
                TrainedModel model =
                    train_model(kind, fx, fy, hp, derive_seed(kind_seed, kTagModel, f + 1));
                fold_scores[task.kind_index][f] = r2(vy, predict(model, vx));
            }
        } catch (const std::exception& e) {
            note_error(task.kind_index, e.what());
        }
    });

    for (std::size_t k = 0; k < options.kinds.size(); ++k) {
        EvalRow& row = result.report.rows[k];
        row.kind = options.kinds[k];
        double sum = 0.0;
        for (double s : fold_scores[k]) sum += s;
        row.r2_validation = options.folds ? sum / static_cast<double>(options.folds) : 0.0;
        if (!errors[k].empty()) row.status = errors[k];
    }
    return result;
}

SearchResult random_search(ModelKind kind, const SearchSpace& space, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y, const SplitIndices& split_indices) {
    if (space.n_samples < 1) throw Error(ErrorCode::ConfigError, "n_samples must be >= 1");

    // Fold row views over the training rows.
    const std::size_t folds = split_indices.folds.size();
    std::vector<std::vector<std::size_t>> fold_train_rows(folds);
    std::vector<std::vector<std::size_t>> fold_eval_rows(folds);
    std::vector<std::size_t> pos_of(static_cast<std::size_t>(x.rows()), 0);
    for (std::size_t i = 0; i < split_indices.train.size(); ++i)
        pos_of[split_indices.train[i]] = i;
    std::vector<char> in_fold(split_indices.train.size());
    for (std::size_t f = 0; f < folds; ++f) {
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (std::size_t row : split_indices.folds[f]) in_fold[pos_of[row]] = 1;
        for (std::size_t i = 0; i < split_indices.train.size(); ++i)
            (in_fold[i] ? fold_eval_rows[f] : fold_train_rows[f]).push_back(split_indices.train[i]);
    }

    SearchResult result;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t draw = 0; draw < space.n_samples; ++draw) {
        Rng rng(derive_seed(space.seed, kTagSearch, draw));
        Hyperparams hp = Hyperparams::defaults(kind);
        for (const auto& [key, candidates] : space.candidates) {
            if (candidates.empty())
                throw Error(ErrorCode::ConfigError, "empty candidate list for " + key);
            hp.set(key, candidates[rng.uniform_index(candidates.size())]);
        }

        SearchEntry entry;
        entry.hyperparams = hp;
        for (std::size_t f = 0; f < folds; ++f) {
            const Eigen::MatrixXd fx = take_rows(x, fold_train_rows[f]);
            const Eigen::VectorXd fy = take_rows(y, fold_train_rows[f]);
            const Eigen::MatrixXd vx = take_rows(x, fold_eval_rows[f]);
            const Eigen::VectorXd vy = take_rows(y, fold_eval_rows[f]);
            TrainedModel model =
                train_model(kind, fx, fy, hp, derive_seed(space.seed, kTagSearch, 7919 + f));
            entry.fold_r2.push_back(r2(vy, predict(model, vx)));
        }
        double sum = 0.0;
        for (double s : entry.fold_r2) sum += s;
        entry.mean_validation_r2 = folds ? sum / static_cast<double>(folds) : 0.0;

        if (entry.mean_validation_r2 > best_score) {
            best_score = entry.mean_validation_r2;
            result.best = hp;
        }
        result.table.push_back(std::move(entry));
    }
    return result;
}

ImportanceTable importance_table(const std::vector<TrainedModel>& models,
                                 const std::vector<std::string>& feature_names) {
    ImportanceTable table;
    table.features = feature_names;
    std::vector<Eigen::VectorXd> columns;
    for (const TrainedModel& m : models) {
        const auto imp = m.feature_importances();
        if (!imp || imp->size() != static_cast<Eigen::Index>(feature_names.size())) {
            table.skipped.push_back(model_kind_name(m.kind));
            continue;
        }
        table.models.push_back(model_kind_name(m.kind));
        columns.push_back(*imp);
    }
    table.values.resize(static_cast<Eigen::Index>(feature_names.size()),
                        static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
        table.values.col(static_cast<Eigen::Index>(c)) = columns[c];
    return table;
}

std::string ImportanceTable::to_csv() const {
    std::ostringstream out;
    out << "feature";
    for (const auto& m : models) out << ',' << m;
    out << '\n';
    for (std::size_t r = 0; r < features.size(); ++r) {
        out << features[r];
        for (Eigen::Index c = 0; c < values.cols(); ++c)
            out << ',' << format_double(values(static_cast<Eigen::Index>(r), c));
        out << '\n';
    }
    return out.str();
}

std::string prediction_histogram_csv(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                                     std::size_t bins) {
    if (y.size() != y_hat.size())
        throw Error(ErrorCode::LengthMismatch, "histogram inputs");
    if (y.size() == 0 || bins == 0) throw Error(ErrorCode::EmptyInput, "histogram");
    const double lo = std::min(y.minCoeff(), y_hat.minCoeff());
    const double hi = std::max(y.maxCoeff(), y_hat.maxCoeff());
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;

    std::vector<std::size_t> actual(bins, 0), predicted(bins, 0);
    auto bin_of = [&](double v) {
        std::size_t b = static_cast<std::size_t>((v - lo) / width);
        return std::min(b, bins - 1);
    };
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        ++actual[bin_of(y(i))];
        ++predicted[bin_of(y_hat(i))];
    }

    std::ostringstream out;
    out << "bin_lo,bin_hi,count_actual,count_predicted\n";
    for (std::size_t b = 0; b < bins; ++b) {
        out << format_double(lo + width * static_cast<double>(b)) << ','
            << format_double(lo + width * static_cast<double>(b + 1)) << ',' << actual[b] << ','
            << predicted[b] << '\n';
    }
    return out.str();
}

} // namespace sfe
