#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sfe/features.hpp"
#include "sfe/rng.hpp"

using namespace sfe;

namespace {

// Minimal telemetry table carrying every channel engineer() reads.
struct SourceBuilder {
    Dataset d;

    SourceBuilder() {
        for (const char* name :
             {"TIMESTAMP", "PITCH_1", "PITCH_2", "SPEED_1", "SPEED_2", "STW", "TORQUE_1",
              "TORQUE_2", "WIND_ANGLE", "WIND_SPEED", "HEADING", "SOG", "LATITUDE", "LONGITUDE",
              "ENGINE_1_SFC", "ENGINE_2_SFC"}) {
            Column c;
            c.name = name;
            d.columns.push_back(std::move(c));
        }
    }

    void add_row(double ts, double lat, double lon, double sfc1 = 700, double sfc2 = 700,
                 double stw = 19.26, double sog = 19.1) {
        auto push = [&](const char* name, double v) { d.column(name).push(v); };
        push("TIMESTAMP", ts);
        push("PITCH_1", 80);
        push("PITCH_2", 6);
        push("SPEED_1", 540);
        push("SPEED_2", 530);
        push("STW", stw);
        push("TORQUE_1", 150);
        push("TORQUE_2", 140);
        push("WIND_ANGLE", 90);
        push("WIND_SPEED", 8);
        push("HEADING", 250);
        push("SOG", sog);
        push("LATITUDE", lat);
        push("LONGITUDE", lon);
        push("ENGINE_1_SFC", sfc1);
        push("ENGINE_2_SFC", sfc2);
    }
};

FeatureFrame make_noise_frame(std::size_t rows, Rng& rng) {
    FeatureFrame f;
    for (const auto& name : feature_names()) {
        Column c;
        c.name = name;
        for (std::size_t r = 0; r < rows; ++r) c.push(rng.normal());
        f.table.columns.push_back(std::move(c));
    }
    Column target;
    target.name = kTargetColumn;
    for (std::size_t r = 0; r < rows; ++r) target.push(rng.normal());
    f.table.columns.push_back(std::move(target));
    for (std::size_t r = 0; r < rows; ++r) {
        f.source_rows.push_back(r);
        f.trip_ids.push_back(0);
    }
    return f;
}

} // namespace

TEST_CASE("headwind") {
    CHECK(headwind(250, 250, 10) == doctest::Approx(10.0));
    CHECK(std::abs(headwind(340, 250, 7)) < 1e-12); // crosswind
    CHECK(headwind(130.1, 246.37, 8) == doctest::Approx(-3.5408138473047908).epsilon(1e-12));

    SUBCASE("periodic in the wind angle") {
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            const double a = rng.uniform(0, 360), t = rng.uniform(0, 360), v = rng.uniform(0, 30);
            CHECK(headwind(a + 360, t, v) == doctest::Approx(headwind(a, t, v)).epsilon(1e-9));
        }
    }

    SUBCASE("odd around the crosswind direction") {
        Rng rng(2);
        for (int i = 0; i < 100; ++i) {
            const double t = rng.uniform(0, 360), d = rng.uniform(0, 90), v = rng.uniform(0, 30);
            CHECK(headwind(t + 90 + d, t, v) ==
                  doctest::Approx(-headwind(t + 90 - d, t, v)).epsilon(1e-9));
        }
    }

    SUBCASE("bounded by the wind speed") {
        Rng rng(3);
        for (int i = 0; i < 200; ++i) {
            const double v = rng.uniform(0, 40);
            const double h = headwind(rng.uniform(-720, 720), rng.uniform(-720, 720), v);
            CHECK(h >= -v - 1e-12);
            CHECK(h <= v + 1e-12);
        }
    }
}

TEST_CASE("traveled_distance") {
    CHECK(traveled_distance(0, 0) == 0.0);
    CHECK(traveled_distance(3e-3, 4e-3) == doctest::Approx(5e-3).epsilon(1e-15));
}

TEST_CASE("sfe_target") {
    CHECK(sfe_target(700, 700, 0.01) == doctest::Approx(70000.0));
    CHECK(sfe_target(0, 0, 0.01) == 0.0);
    try {
        sfe_target(700, 700, 0.0);
        FAIL("expected DegenerateDistance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateDistance);
    }
}

TEST_CASE("engineer computes the calculated columns") {
    SourceBuilder b;
    b.add_row(1000, 49.30, -123.50);
    b.add_row(1001, 49.301, -123.502);
    b.add_row(1002, 49.302, -123.504);
    b.d.column("PITCH_1").values[1] = 300;
    b.d.column("PITCH_2").values[1] = 400;

    const FeatureFrame f = engineer(b.d);
    REQUIRE(f.n_rows() == 2); // first row has no previous position
    CHECK(f.table.column("mean_pitch").values[0] == doctest::Approx(350.0));
    CHECK(f.table.column("sog_minus_stw").values[0] == doctest::Approx(19.1 - 19.26).epsilon(1e-9));
    const double d_expected = std::hypot(0.001, 0.002);
    CHECK(f.table.column("traveled_distance").values[0] == doctest::Approx(d_expected));
    CHECK(f.table.column(kTargetColumn).values[0] == doctest::Approx(1400.0 / (2 * d_expected)));
    CHECK(f.source_rows[0] == 1);

    SUBCASE("sog minus stw uses the table-5 magnitudes") {
        // 19.1 - 19.26 = -0.16
        CHECK(f.table.column("sog_minus_stw").values[0] == doctest::Approx(-0.16).epsilon(1e-9));
    }
}

TEST_CASE("engineer drops degenerate-distance rows") {
    SourceBuilder b;
    b.add_row(1000, 49.30, -123.50);
    b.add_row(1001, 49.30, -123.50); // stationary: d = 0
    b.add_row(1002, 49.31, -123.51);
    EngineerLog log;
    const FeatureFrame f = engineer(b.d, &log);
    CHECK(f.n_rows() == 1);
    CHECK(log.dropped_degenerate_distance == 1);
}

TEST_CASE("engineer requires source columns") {
    SourceBuilder b;
    b.add_row(1000, 49.30, -123.50);
    Dataset stripped = drop_columns(b.d, {"TORQUE_2"});
    try {
        engineer(stripped);
        FAIL("expected MissingSourceColumn");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingSourceColumn);
    }
}

TEST_CASE("engineer keeps rows without a target when not required") {
    SourceBuilder b;
    b.add_row(1000, 49.30, -123.50);
    b.add_row(1001, 49.301, -123.502);
    b.d.column("ENGINE_1_SFC").missing[1] = true;
    const FeatureFrame f = engineer(b.d, nullptr, /*require_target=*/false);
    CHECK(f.n_rows() == 2);
    CHECK(f.table.column(kTargetColumn).missing[0]); // no previous position
    CHECK(f.table.column(kTargetColumn).missing[1]); // no fuel reading
    CHECK_FALSE(f.table.column("mean_pitch").missing[1]);
}

TEST_CASE("engineer straight-line trip gives near-constant distance") {
    SourceBuilder b;
    for (int i = 0; i < 60; ++i)
        b.add_row(2000 + i, 49.30 + 1e-3 * i, -123.50 + 2e-3 * i);
    const FeatureFrame f = engineer(b.d);
    const Column& dist = f.table.column("traveled_distance");
    double mean = 0;
    for (double v : dist.values) mean += v;
    mean /= static_cast<double>(dist.values.size());
    double var = 0;
    for (double v : dist.values) var += (v - mean) * (v - mean);
    const double cv = std::sqrt(var / static_cast<double>(dist.values.size())) / mean;
    CHECK(cv < 0.05);
}

TEST_CASE("engineer means and headwind are row-local") {
    SourceBuilder a;
    a.add_row(1000, 49.30, -123.50);
    a.add_row(1001, 49.301, -123.502);
    a.add_row(1500, 49.31, -123.51); // separate trip
    a.add_row(1501, 49.311, -123.512);
    a.d.column("PITCH_1").values = {10, 20, 30, 40};

    SourceBuilder b;
    b.add_row(1500, 49.31, -123.51);
    b.add_row(1501, 49.311, -123.512);
    b.add_row(1000, 49.30, -123.50);
    b.add_row(1001, 49.301, -123.502);
    b.d.column("PITCH_1").values = {30, 40, 10, 20};

    const FeatureFrame fa = engineer(a.d);
    const FeatureFrame fb = engineer(b.d);
    REQUIRE(fa.n_rows() == 2);
    REQUIRE(fb.n_rows() == 2);
    // Same rows survive (the second of each trip); outputs travel with them.
    CHECK(fa.table.column("mean_pitch").values[0] == fb.table.column("mean_pitch").values[1]);
    CHECK(fa.table.column("mean_pitch").values[1] == fb.table.column("mean_pitch").values[0]);
}

TEST_CASE("select_features keeps one of a duplicated pair") {
    Rng rng(11);
    FeatureFrame f = make_noise_frame(400, rng);
    Column& target = f.table.column(kTargetColumn);
    Column& stw = f.table.column("stw");
    Column& sog = f.table.column("sog");
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        sog.values[r] = stw.values[r]; // exact duplicate
        target.values[r] = 2.0 * stw.values[r] + 0.1 * rng.normal();
    }
    const FeatureSpec spec = select_features(f, 0.5, 0.9);
    const bool has_stw = std::count(spec.selected.begin(), spec.selected.end(), "stw") > 0;
    const bool has_sog = std::count(spec.selected.begin(), spec.selected.end(), "sog") > 0;
    CHECK(has_stw != has_sog);
}

TEST_CASE("select_features drops sub-threshold noise") {
    Rng rng(12);
    FeatureFrame f = make_noise_frame(500, rng);
    Column& target = f.table.column(kTargetColumn);
    Column& driver = f.table.column("mean_torque");
    for (std::size_t r = 0; r < f.n_rows(); ++r)
        target.values[r] = driver.values[r] + 0.2 * rng.normal();
    const FeatureSpec spec = select_features(f, 0.5, 0.9);
    REQUIRE(spec.selected.size() == 1);
    CHECK(spec.selected[0] == "mean_torque");
}

TEST_CASE("select_features collinearity resolves toward the target") {
    Rng rng(13);
    FeatureFrame f = make_noise_frame(600, rng);
    Column& x1 = f.table.column("stw");
    Column& x2 = f.table.column("sog");       // x1 plus tiny noise
    Column& x3 = f.table.column("wind_angle"); // independent
    Column& target = f.table.column(kTargetColumn);
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
        x2.values[r] = x1.values[r] + 0.01 * rng.normal();
        target.values[r] = 3.0 * x1.values[r] + 0.05 * rng.normal();
        (void)x3;
    }
    const FeatureSpec spec = select_features(f, 0.5, 0.9);
    REQUIRE(spec.selected.size() == 1);
    CHECK(spec.selected[0] == "stw");
}

TEST_CASE("select_features empty selection") {
    Rng rng(14);
    FeatureFrame f = make_noise_frame(300, rng);
    try {
        select_features(f, 0.99, 0.9);
        FAIL("expected EmptySelection");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySelection);
    }
}

TEST_CASE("select_features is stable under swapping column contents") {
    Rng rng(15);
    FeatureFrame f = make_noise_frame(500, rng);
    Column& a = f.table.column("stw");
    Column& b = f.table.column("heading");
    Column& target = f.table.column(kTargetColumn);
    for (std::size_t r = 0; r < f.n_rows(); ++r)
        target.values[r] = a.values[r] + 0.5 * b.values[r] + 0.05 * rng.normal();

    const FeatureSpec first = select_features(f, 0.3, 0.9);
    std::swap(a.values, b.values);
    const FeatureSpec second = select_features(f, 0.3, 0.9);

    auto relabel = [](std::string name) {
        if (name == "stw") return std::string("heading");
        if (name == "heading") return std::string("stw");
        return name;
    };
    REQUIRE(first.selected.size() == second.selected.size());
    for (std::size_t i = 0; i < first.selected.size(); ++i)
        CHECK(relabel(first.selected[i]) == second.selected[i]);
}

TEST_CASE("feature csv round trip") {
    SourceBuilder b;
    b.add_row(1000, 49.30, -123.50);
    b.add_row(1001, 49.301, -123.502);
    b.add_row(1002, 49.302, -123.504);
    const FeatureFrame f = engineer(b.d);
    const std::string path = "/tmp/sfe_features_test.csv";
    write_feature_csv(f, path);
    const FeatureFrame back = load_feature_csv(path);
    REQUIRE(back.n_rows() == f.n_rows());
    CHECK(back.source_rows == f.source_rows);
    CHECK(back.trip_ids == f.trip_ids);
    for (std::size_t c = 0; c < f.table.columns.size(); ++c)
        CHECK(back.table.columns[c].values == f.table.columns[c].values);
}

TEST_CASE("feature spec json and fingerprint") {
    FeatureSpec spec;
    spec.selected = {"mean_torque", "stw"};
    const FeatureSpec back = FeatureSpec::from_json(spec.to_json());
    CHECK(back.selected == spec.selected);
    CHECK(back.fingerprint() == spec.fingerprint());
    FeatureSpec other;
    other.selected = {"stw", "mean_torque"};
    CHECK(other.fingerprint() != spec.fingerprint());
}
