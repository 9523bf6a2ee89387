#include "sfe/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace sfe {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

const std::vector<std::string>& source_requirements() {
    static const std::vector<std::string> required = {
        "TIMESTAMP", "PITCH_1",  "PITCH_2",  "SPEED_1",      "SPEED_2",      "STW",
        "TORQUE_1",  "TORQUE_2", "WIND_ANGLE", "WIND_SPEED", "HEADING",      "SOG",
        "LATITUDE",  "LONGITUDE", "ENGINE_1_SFC", "ENGINE_2_SFC",
    };
    return required;
}

std::vector<int> trip_ids_from_timestamps(const Column& ts) {
    std::vector<int> ids(ts.values.size(), 0);
    int trip = 0;
    for (std::size_t r = 0; r < ts.values.size(); ++r) {
        if (r > 0) {
            const bool contiguous = !ts.missing[r] && !ts.missing[r - 1] &&
                                    std::abs(ts.values[r] - ts.values[r - 1] - 1.0) < 0.5;
            if (!contiguous) ++trip;
        }
        ids[r] = trip;
    }
    return ids;
}

double pearson(const Column& a, const Column& b) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < a.values.size(); ++r) {
        if (a.missing[r] || b.missing[r]) continue;
        const double x = a.values[r], y = b.values[r];
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double nd = static_cast<double>(n);
    const double cov = sxy - sx * sy / nd;
    const double vx = sxx - sx * sx / nd;
    const double vy = syy - sy * sy / nd;
    if (vx <= 0.0 || vy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

} // namespace

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "mean_pitch", "engine_mean_speed", "stw",  "mean_torque",    "wind_angle",
        "headwind",   "heading",           "sog",  "sog_minus_stw",  "traveled_distance",
    };
    return names;
}

double headwind(double alpha_w_deg, double theta_deg, double v_w_knots) {
    return std::cos((alpha_w_deg - theta_deg) * kDegToRad) * v_w_knots;
}

double traveled_distance(double dlat_deg, double dlon_deg) {
    return std::sqrt(dlat_deg * dlat_deg + dlon_deg * dlon_deg);
}

double sfe_target(double sfc1_kg_h, double sfc2_kg_h, double d_deg) {
    if (!(d_deg > kMinTraveledDistance))
        throw Error(ErrorCode::DegenerateDistance, "d = " + format_double(d_deg));
    return (sfc1_kg_h + sfc2_kg_h) / (2.0 * d_deg);
}

FeatureFrame engineer(const Dataset& d, EngineerLog* log, bool require_target) {
    for (const auto& name : source_requirements())
        if (!d.has_column(name)) throw Error(ErrorCode::MissingSourceColumn, name);

    const Column& ts = d.column("TIMESTAMP");
    const Column& pitch1 = d.column("PITCH_1");
    const Column& pitch2 = d.column("PITCH_2");
    const Column& speed1 = d.column("SPEED_1");
    const Column& speed2 = d.column("SPEED_2");
    const Column& stw = d.column("STW");
    const Column& torque1 = d.column("TORQUE_1");
    const Column& torque2 = d.column("TORQUE_2");
    const Column& wind_angle = d.column("WIND_ANGLE");
    const Column& wind_speed = d.column("WIND_SPEED");
    const Column& heading = d.column("HEADING");
    const Column& sog = d.column("SOG");
    const Column& lat = d.column("LATITUDE");
    const Column& lon = d.column("LONGITUDE");
    const Column& sfc1 = d.column("ENGINE_1_SFC");
    const Column& sfc2 = d.column("ENGINE_2_SFC");

    const std::vector<int> trips = trip_ids_from_timestamps(ts);

    FeatureFrame f;
    for (const auto& name : feature_names()) {
        Column c;
        c.name = name;
        c.kind = ColumnKind::calculated;
        f.table.columns.push_back(std::move(c));
    }
    {
        Column t;
        t.name = kTargetColumn;
        t.unit = "kg/deg";
        t.kind = ColumnKind::target;
        f.table.columns.push_back(std::move(t));
    }

    EngineerLog local;
    local.rows_in = d.n_rows();

    auto mean2 = [](const Column& a, const Column& b, std::size_t r, Column& out) {
        if (a.missing[r] || b.missing[r])
            out.push_missing();
        else
            out.push(0.5 * (a.values[r] + b.values[r]));
    };

    for (std::size_t r = 0; r < d.n_rows(); ++r) {
        const bool first_of_trip = r == 0 || trips[r] != trips[r - 1];

        bool have_d = false;
        double dist = 0.0;
        if (!first_of_trip && !lat.missing[r] && !lon.missing[r] && !lat.missing[r - 1] &&
            !lon.missing[r - 1]) {
            dist = traveled_distance(lat.values[r] - lat.values[r - 1],
                                     lon.values[r] - lon.values[r - 1]);
            have_d = true;
        }

        bool have_target = false;
        double target = 0.0;
        if (have_d && !sfc1.missing[r] && !sfc2.missing[r]) {
            if (dist <= kMinTraveledDistance) {
                if (require_target) {
                    ++local.dropped_degenerate_distance;
                    continue;
                }
            } else {
                target = (sfc1.values[r] + sfc2.values[r]) / (2.0 * dist);
                have_target = target > 0.0;
            }
        }
        if (require_target && !have_target) {
            ++local.dropped_unavailable_target;
            continue;
        }

        mean2(pitch1, pitch2, r, f.table.columns[0]);
        mean2(speed1, speed2, r, f.table.columns[1]);
        if (stw.missing[r])
            f.table.columns[2].push_missing();
        else
            f.table.columns[2].push(stw.values[r]);
        mean2(torque1, torque2, r, f.table.columns[3]);
        if (wind_angle.missing[r])
            f.table.columns[4].push_missing();
        else
            f.table.columns[4].push(wind_angle.values[r]);
        if (wind_angle.missing[r] || heading.missing[r] || wind_speed.missing[r])
            f.table.columns[5].push_missing();
        else
            f.table.columns[5].push(
                headwind(wind_angle.values[r], heading.values[r], wind_speed.values[r]));
        if (heading.missing[r])
            f.table.columns[6].push_missing();
        else
            f.table.columns[6].push(heading.values[r]);
        if (sog.missing[r])
            f.table.columns[7].push_missing();
        else
            f.table.columns[7].push(sog.values[r]);
        if (sog.missing[r] || stw.missing[r])
            f.table.columns[8].push_missing();
        else
            f.table.columns[8].push(sog.values[r] - stw.values[r]);
        if (have_d)
            f.table.columns[9].push(dist);
        else
            f.table.columns[9].push_missing();
        if (have_target)
            f.table.columns[10].push(target);
        else
            f.table.columns[10].push_missing();

        f.source_rows.push_back(r);
        f.trip_ids.push_back(trips[r]);
    }

    local.rows_out = f.n_rows();
    if (log) *log = local;
    return f;
}

FeatureSpec select_features(const FeatureFrame& f, double correlation_threshold,
                            double collinearity_threshold) {
    const auto& names = feature_names();
    std::size_t complete = 0;
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        bool ok = true;
        for (const auto& c : f.table.columns)
            if (c.missing[r]) ok = false;
        if (ok) ++complete;
    }
    if (complete < 2)
        throw Error(ErrorCode::TooFewValues, "select_features needs >= 2 complete rows");

    const Column& target = f.table.column(kTargetColumn);
    const std::size_t n = names.size();

    std::vector<double> target_corr(n);
    for (std::size_t i = 0; i < n; ++i)
        target_corr[i] = pearson(f.table.column(names[i]), target);

    std::vector<std::vector<double>> rho(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            rho[i][j] = rho[j][i] = pearson(f.table.column(names[i]), f.table.column(names[j]));

    auto abs_or_zero = [](double v) { return std::isnan(v) ? 0.0 : std::abs(v); };

    // Collinear pruning: repeatedly resolve the strongest surviving pair,
    // keeping the member closer to the target (earlier column order on ties).
    std::vector<bool> alive(n, true);
    for (;;) {
        double best = collinearity_threshold;
        std::ptrdiff_t bi = -1, bj = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                const double a = abs_or_zero(rho[i][j]);
                if (a > best || (a == best && bi < 0)) {
                    best = a;
                    bi = static_cast<std::ptrdiff_t>(i);
                    bj = static_cast<std::ptrdiff_t>(j);
                }
            }
        }
        if (bi < 0) break;
        const double ti = abs_or_zero(target_corr[bi]);
        const double tj = abs_or_zero(target_corr[bj]);
        alive[tj > ti ? bi : bj] = false;
    }

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < n; ++i)
        if (alive[i] && abs_or_zero(target_corr[i]) >= correlation_threshold) kept.push_back(i);
    if (kept.empty())
        throw Error(ErrorCode::EmptySelection, "no feature reaches |target correlation| >= " +
                                                   format_double(correlation_threshold));

    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
        return abs_or_zero(target_corr[a]) > abs_or_zero(target_corr[b]);
    });

    FeatureSpec spec;
    spec.correlation_threshold = correlation_threshold;
    spec.collinearity_threshold = collinearity_threshold;
    for (std::size_t i : kept) spec.selected.push_back(names[i]);
    return spec;
}

ModelMatrix extract_matrix(const FeatureFrame& f, const std::vector<std::string>& columns) {
    std::vector<const Column*> cols;
    cols.reserve(columns.size());
    for (const auto& name : columns) cols.push_back(&f.table.column(name));
    const Column& target = f.table.column(kTargetColumn);

    std::vector<std::size_t> rows;
    rows.reserve(f.n_rows());
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        bool ok = !target.missing[r];
        for (const Column* c : cols)
            if (c->missing[r]) ok = false;
        if (ok) rows.push_back(r);
    }

    ModelMatrix m;
    m.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    m.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j)
            m.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cols[j]->values[rows[i]];
        m.y(static_cast<Eigen::Index>(i)) = target.values[rows[i]];
    }
    m.frame_rows = std::move(rows);
    return m;
}

std::string FeatureSpec::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["selected"] = selected;
    j["correlation_threshold"] = correlation_threshold;
    j["collinearity_threshold"] = collinearity_threshold;
    return j.dump(2);
}

FeatureSpec FeatureSpec::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    FeatureSpec s;
    s.selected = j.at("selected").get<std::vector<std::string>>();
    s.correlation_threshold = j.at("correlation_threshold").get<double>();
    s.collinearity_threshold = j.at("collinearity_threshold").get<double>();
    return s;
}

std::string FeatureSpec::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const std::string& s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x7c;
        h *= 0x100000001b3ULL;
    };
    for (const auto& s : selected) mix(s);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_feature_csv(const FeatureFrame& f, const std::string& path) {
    std::ofstream out(path);
    if (!out.good()) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << "source_row,trip_id";
    for (const auto& c : f.table.columns) out << ',' << c.name;
    out << '\n';
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        out << f.source_rows[r] << ',' << f.trip_ids[r];
        for (const auto& c : f.table.columns) {
            out << ',';
            if (!c.missing[r]) out << format_double(c.values[r]);
        }
        out << '\n';
    }
}

FeatureFrame load_feature_csv(const std::string& path) {
    std::vector<ColumnDescriptor> schema;
    schema.push_back({"source_row", "", ColumnKind::measured});
    schema.push_back({"trip_id", "", ColumnKind::measured});
    for (const auto& name : feature_names()) schema.push_back({name, "", ColumnKind::calculated});
    schema.push_back({kTargetColumn, "kg/deg", ColumnKind::target});

    Dataset raw = load_csv(path, schema);
    FeatureFrame f;
    const Column& src = raw.column("source_row");
    const Column& trip = raw.column("trip_id");
    for (std::size_t r = 0; r < raw.n_rows(); ++r) {
        f.source_rows.push_back(src.missing[r] ? r : static_cast<std::size_t>(src.values[r]));
        f.trip_ids.push_back(trip.missing[r] ? 0 : static_cast<int>(trip.values[r]));
    }
    f.table.columns.assign(raw.columns.begin() + 2, raw.columns.end());
    return f;
}

} // namespace sfe
