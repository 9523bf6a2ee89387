#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfe/error.hpp"

namespace sfe {

enum class ColumnKind { measured, calculated, target };

/// One column of a dataset. Missingness is a per-cell marker, never a sentinel
/// value: imputation has to distinguish "0" from "absent".
struct Column {
    std::string name;
    std::string unit;
    ColumnKind kind = ColumnKind::measured;
    std::vector<double> values;
    std::vector<bool> missing;

    double at(std::size_t row) const { return values[row]; }
    bool is_missing(std::size_t row) const { return missing[row]; }
    void push(double v) {
        values.push_back(v);
        missing.push_back(false);
    }
    void push_missing() {
        values.push_back(0.0);
        missing.push_back(true);
    }
};

/// Immutable-by-convention column-major table. All columns have equal length
/// and unique names; safe to share across concurrent readers once built.
struct Dataset {
    std::vector<Column> columns;

    std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
    std::size_t n_columns() const { return columns.size(); }

    const Column& column(const std::string& name) const;
    Column& column(const std::string& name);
    std::optional<std::size_t> column_index(const std::string& name) const;
    bool has_column(const std::string& name) const { return column_index(name).has_value(); }

    /// Row subset in the given order; shares nothing with the source.
    Dataset select_rows(const std::vector<std::size_t>& rows) const;
};

struct ColumnDescriptor {
    std::string name;
    std::string unit;
    ColumnKind kind = ColumnKind::measured;
};

/// Canonical vessel telemetry schema: a leading TIMESTAMP column followed by
/// one column per sensor channel (two-engine layout, weather, navigation).
const std::vector<ColumnDescriptor>& telemetry_schema();

/// Channel names of the 7 columns dropped by default before modeling
/// (redundant secondary flow/temperature sensors and derived wind/track channels).
const std::vector<std::string>& default_dropped_columns();

inline constexpr const char* kTimestampColumn = "TIMESTAMP";

struct ColumnStats {
    std::string name;
    std::size_t n = 0; // non-missing cells
    double mean = 0.0;
    double std_dev = 0.0; // sample (n-1)
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    double target_correlation = 0.0;   // Pearson, pairwise-complete
    double mae_cross_correlation = 0.0; // mean |rho| against every other column
};

enum class Severity { warn, reject };

struct Violation {
    std::size_t row = 0;
    std::string column;
    std::string rule;
    Severity severity = Severity::reject;
};

/// Loads a CSV with a header row into the given schema order. Cells that fail
/// to parse (including empty and "NaN") become missing markers.
/// Throws MissingColumn if a schema column is absent, EmptyFile on no header.
Dataset load_csv(const std::string& path, const std::vector<ColumnDescriptor>& schema);

/// Writes the dataset back out; load_csv(write_csv(d)) is a fixed point
/// (doubles are printed with shortest round-trip formatting, missing cells as
/// empty strings, timestamps as ISO-8601).
void write_csv(const Dataset& d, const std::string& path);

/// Removes the named columns; surviving columns are bit-identical.
Dataset drop_columns(const Dataset& d, const std::vector<std::string>& names);

/// Per-column summary statistics plus Pearson correlation against `target`.
/// Throws AllMissingColumn if any column has no observed cells.
std::vector<ColumnStats> column_stats(const Dataset& d, const std::string& target);

/// Schema sanity rules: angles in [0, 366] (warn above 360, reject above),
/// OPERATIONAL_MODE binary, speeds/flow rates/SFC non-negative.
/// Violations are data, not errors: empty result iff the dataset is clean.
std::vector<Violation> validate(const Dataset& d);

// ISO-8601 helpers for the TIMESTAMP column (stored internally as minutes
// since the Unix epoch).
std::string minutes_to_iso8601(double minutes_since_epoch);
std::optional<double> iso8601_to_minutes(const std::string& text);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

} // namespace sfe
