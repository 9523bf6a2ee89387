#include "sfe/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace sfe {

const Column& Dataset::column(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return c;
    throw Error(ErrorCode::UnknownColumn, name);
}

Column& Dataset::column(const std::string& name) {
    for (auto& c : columns)
        if (c.name == name) return c;
    throw Error(ErrorCode::UnknownColumn, name);
}

std::optional<std::size_t> Dataset::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return i;
    return std::nullopt;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.columns.reserve(columns.size());
    for (const auto& c : columns) {
        Column nc;
        nc.name = c.name;
        nc.unit = c.unit;
        nc.kind = c.kind;
        nc.values.reserve(rows.size());
        nc.missing.reserve(rows.size());
        for (std::size_t r : rows) {
            nc.values.push_back(c.values[r]);
            nc.missing.push_back(c.missing[r]);
        }
        out.columns.push_back(std::move(nc));
    }
    return out;
}

const std::vector<ColumnDescriptor>& telemetry_schema() {
    static const std::vector<ColumnDescriptor> schema = {
        {"TIMESTAMP", "min", ColumnKind::measured},
        {"DEPTH", "m", ColumnKind::measured},
        {"ENGINE_1_FLOWRATE", "l/min", ColumnKind::measured},
        {"ENGINE_2_FLOWRATE", "l/min", ColumnKind::measured},
        {"ENGINE_1_RATE_A", "l/min", ColumnKind::measured},
        {"ENGINE_2_RATE_A", "l/min", ColumnKind::measured},
        {"ENGINE_1_TEMP_A", "degC", ColumnKind::measured},
        {"ENGINE_2_TEMP_A", "degC", ColumnKind::measured},
        {"ENGINE_1_SFC", "kg/h", ColumnKind::measured},
        {"ENGINE_2_SFC", "kg/h", ColumnKind::measured},
        {"HEADING", "deg", ColumnKind::measured},
        {"LATITUDE", "deg", ColumnKind::measured},
        {"LONGITUDE", "deg", ColumnKind::measured},
        {"PITCH_1", "%", ColumnKind::measured},
        {"PITCH_2", "%", ColumnKind::measured},
        {"POWER_1", "kW", ColumnKind::measured},
        {"POWER_2", "kW", ColumnKind::measured},
        {"RATE_OF_TURN", "deg/s", ColumnKind::measured},
        {"SOG", "knots", ColumnKind::measured},
        {"SOG_LONG", "knots", ColumnKind::measured},
        {"SOG_TRANS", "knots", ColumnKind::measured},
        {"SPEED_1", "rpm", ColumnKind::measured},
        {"SPEED_2", "rpm", ColumnKind::measured},
        {"STW", "knots", ColumnKind::measured},
        {"THRUST_1", "kN", ColumnKind::measured},
        {"THRUST_2", "kN", ColumnKind::measured},
        {"TORQUE_1", "kNm", ColumnKind::measured},
        {"TORQUE_2", "kNm", ColumnKind::measured},
        {"TRACK_MADE_GOOD", "deg", ColumnKind::measured},
        {"WIND_ANGLE", "deg", ColumnKind::measured},
        {"WIND_SPEED", "knots", ColumnKind::measured},
        {"WIND_ANGLE_TRUE", "deg", ColumnKind::measured},
        {"WIND_SPEED_TRUE", "knots", ColumnKind::measured},
        {"OPERATIONAL_MODE", "", ColumnKind::measured},
        {"TRIP_DURATION", "min", ColumnKind::measured},
        {"CARGO", "kg", ColumnKind::measured},
    };
    return schema;
}

const std::vector<std::string>& default_dropped_columns() {
    static const std::vector<std::string> dropped = {
        "ENGINE_1_RATE_A",  "ENGINE_2_RATE_A", "ENGINE_1_TEMP_A", "ENGINE_2_TEMP_A",
        "WIND_ANGLE_TRUE", "WIND_SPEED_TRUE", "TRACK_MADE_GOOD",
    };
    return dropped;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

// Civil-calendar conversions (proleptic Gregorian), valid for the full
// double-representable range we care about.
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += (m <= 2);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    return out;
}

std::optional<double> parse_cell(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    std::size_t begin = cell.find_first_not_of(" \t");
    std::size_t end = cell.find_last_not_of(" \t");
    if (begin == std::string::npos) return std::nullopt;
    const std::string body = cell.substr(begin, end - begin + 1);
    if (body == "NaN" || body == "nan" || body == "NA") return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(body.data(), body.data() + body.size(), value);
    if (res.ec != std::errc() || res.ptr != body.data() + body.size()) return std::nullopt;
    if (std::isnan(value)) return std::nullopt;
    return value;
}

bool is_angle_column(const std::string& name) {
    return name == "HEADING" || name == "TRACK_MADE_GOOD" || name == "WIND_ANGLE" ||
           name == "WIND_ANGLE_TRUE";
}

bool is_nonnegative_column(const std::string& name) {
    static const std::unordered_set<std::string> cols = {
        "ENGINE_1_FLOWRATE", "ENGINE_2_FLOWRATE", "ENGINE_1_RATE_A", "ENGINE_2_RATE_A",
        "ENGINE_1_SFC",      "ENGINE_2_SFC",      "SOG",             "STW",
        "SPEED_1",           "SPEED_2",           "WIND_SPEED",      "WIND_SPEED_TRUE",
    };
    return cols.count(name) > 0;
}

} // namespace

std::string minutes_to_iso8601(double minutes_since_epoch) {
    const double seconds = minutes_since_epoch * 60.0;
    const std::int64_t s = static_cast<std::int64_t>(std::llround(seconds));
    std::int64_t days = s / 86400;
    std::int64_t rem = s % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    std::int64_t y;
    int m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02d-%02dT%02d:%02d:%02dZ", static_cast<long long>(y),
                  m, d, static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::optional<double> iso8601_to_minutes(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    // Accept YYYY-MM-DDTHH:MM:SS with optional trailing Z; also a bare date.
    int matched = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (matched < 3) return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 60)
        return std::nullopt;
    const std::int64_t days = days_from_civil(y, mo, d);
    const std::int64_t secs = days * 86400 + h * 3600 + mi * 60 + s;
    return static_cast<double>(secs) / 60.0;
}

Dataset load_csv(const std::string& path, const std::vector<ColumnDescriptor>& schema) {
    std::ifstream in(path);
    if (!in.good()) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string header_line;
    if (!std::getline(in, header_line)) throw Error(ErrorCode::EmptyFile, path);
    const std::vector<std::string> header = split_csv_line(header_line);

    std::unordered_map<std::string, std::size_t> header_pos;
    for (std::size_t i = 0; i < header.size(); ++i) header_pos.emplace(header[i], i);

    Dataset out;
    std::vector<std::size_t> source_index;
    out.columns.reserve(schema.size());
    source_index.reserve(schema.size());
    for (const auto& desc : schema) {
        auto it = header_pos.find(desc.name);
        if (it == header_pos.end())
            throw Error(ErrorCode::MissingColumn, desc.name + " absent from " + path);
        source_index.push_back(it->second);
        Column c;
        c.name = desc.name;
        c.unit = desc.unit;
        c.kind = desc.kind;
        out.columns.push_back(std::move(c));
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_csv_line(line);
        for (std::size_t i = 0; i < out.columns.size(); ++i) {
            Column& c = out.columns[i];
            const std::size_t pos = source_index[i];
            if (pos >= cells.size()) {
                c.push_missing();
                continue;
            }
            if (c.name == kTimestampColumn) {
                auto mins = iso8601_to_minutes(cells[pos]);
                if (!mins) mins = parse_cell(cells[pos]); // tolerate raw minute counts
                if (mins)
                    c.push(*mins);
                else
                    c.push_missing();
            } else {
                auto v = parse_cell(cells[pos]);
                if (v)
                    c.push(*v);
                else
                    c.push_missing();
            }
        }
    }
    return out;
}

void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out.good()) throw Error(ErrorCode::IoError, "cannot write " + path);
    for (std::size_t i = 0; i < d.columns.size(); ++i) {
        if (i) out << ',';
        out << d.columns[i].name;
    }
    out << '\n';
    const std::size_t rows = d.n_rows();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < d.columns.size(); ++i) {
            if (i) out << ',';
            const Column& c = d.columns[i];
            if (c.missing[r]) continue;
            if (c.name == kTimestampColumn)
                out << minutes_to_iso8601(c.values[r]);
            else
                out << format_double(c.values[r]);
        }
        out << '\n';
    }
}

Dataset drop_columns(const Dataset& d, const std::vector<std::string>& names) {
    for (const auto& n : names)
        if (!d.has_column(n)) throw Error(ErrorCode::UnknownColumn, n);
    std::unordered_set<std::string> dropped(names.begin(), names.end());
    Dataset out;
    out.columns.reserve(d.columns.size() - dropped.size());
    for (const auto& c : d.columns)
        if (!dropped.count(c.name)) out.columns.push_back(c);
    return out;
}

namespace {

double pairwise_pearson(const Column& a, const Column& b) {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < a.values.size(); ++r) {
        if (a.missing[r] || b.missing[r]) continue;
        const double x = a.values[r];
        const double y = b.values[r];
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

std::vector<ColumnStats> column_stats(const Dataset& d, const std::string& target) {
    const Column& target_col = d.column(target);

    std::vector<ColumnStats> out;
    out.reserve(d.columns.size());
    for (const auto& c : d.columns) {
        ColumnStats s;
        s.name = c.name;
        std::vector<double> observed;
        observed.reserve(c.values.size());
        for (std::size_t r = 0; r < c.values.size(); ++r)
            if (!c.missing[r]) observed.push_back(c.values[r]);
        if (observed.empty()) throw Error(ErrorCode::AllMissingColumn, c.name);

        s.n = observed.size();
        double sum = 0;
        for (double v : observed) sum += v;
        s.mean = sum / static_cast<double>(s.n);
        double ss = 0;
        for (double v : observed) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;

        std::sort(observed.begin(), observed.end());
        s.min = observed.front();
        s.max = observed.back();
        s.median = (s.n % 2 == 1) ? observed[s.n / 2]
                                  : 0.5 * (observed[s.n / 2 - 1] + observed[s.n / 2]);

        s.target_correlation = (c.name == target) ? 1.0 : pairwise_pearson(c, target_col);

        double abs_sum = 0;
        std::size_t pairs = 0;
        for (const auto& other : d.columns) {
            if (other.name == c.name) continue;
            const double rho = pairwise_pearson(c, other);
            if (std::isnan(rho)) continue;
            abs_sum += std::abs(rho);
            ++pairs;
        }
        s.mae_cross_correlation =
            pairs ? abs_sum / static_cast<double>(pairs) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Violation> validate(const Dataset& d) {
    std::vector<Violation> out;
    for (const auto& c : d.columns) {
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            if (c.missing[r]) continue;
            const double v = c.values[r];
            if (is_angle_column(c.name)) {
                if (v < 0.0 || v > 366.0)
                    out.push_back({r, c.name, "angle outside [0, 366]", Severity::reject});
                else if (v > 360.0)
                    out.push_back({r, c.name, "angle above 360", Severity::warn});
            }
            if (c.name == "OPERATIONAL_MODE" && v != 0.0 && v != 1.0)
                out.push_back({r, c.name, "operational mode not in {0, 1}", Severity::reject});
            if (is_nonnegative_column(c.name) && v < 0.0)
                out.push_back({r, c.name, "negative value", Severity::reject});
        }
    }
    return out;
}

} // namespace sfe
