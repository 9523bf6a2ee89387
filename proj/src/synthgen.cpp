#include "sfe/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "sfe/rng.hpp"

namespace sfe {

namespace {

constexpr double kKwPerHp = 0.7456998715822702;
constexpr double kDegToRad = M_PI / 180.0;

constexpr std::uint64_t kTagTrip = 0x7472697000000000ULL;
constexpr std::uint64_t kTagMask = 0x6d61736b00000000ULL;

double wrap360(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0) r += 360.0;
    return r;
}

struct Ar1 {
    double mean;
    double coeff;
    double stationary_std;
    double state;

    Ar1(double mean_, double coeff_, double std_, Rng& rng)
        : mean(mean_), coeff(coeff_), stationary_std(std_), state(mean_ + std_ * rng.normal()) {}

    double step(Rng& rng) {
        const double innovation_std = stationary_std * std::sqrt(1.0 - coeff * coeff);
        state = mean + coeff * (state - mean) + innovation_std * rng.normal();
        return state;
    }
};

} // namespace

double lmph(const VesselPhysics& p) {
    return p.k_fuel * p.ghp * p.load_factor / p.fuel_density;
}

double cruise_fuel_rate(const VesselPhysics& p, double v_knots) {
    const double speed_term =
        std::pow(p.displacement, 2.0 / 3.0) * v_knots * v_knots * v_knots / p.fuel_coefficient;
    const double cap = p.k_fuel * (p.n_engines * p.max_engine_power / kKwPerHp);
    return std::min(p.base_idle + speed_term, cap);
}

Dataset simulate_voyages(const VesselPhysics& p, const RouteSpec& r, const ScenarioSeed& s) {
    if (p.k_fuel <= 0 || p.ghp <= 0 || p.load_factor <= 0 || p.load_factor > 1 ||
        p.fuel_density <= 0 || p.displacement <= 0 || p.fuel_coefficient <= 0 ||
        p.max_engine_power <= 0 || p.n_engines < 1 || p.base_idle < 0)
        throw Error(ErrorCode::ConfigError, "vessel physics out of range");
    if (r.nominal_speed <= 0 || r.mode2_radius <= 0 || r.trip_minutes <= 0 ||
        (r.dock_a_lat == r.dock_b_lat && r.dock_a_lon == r.dock_b_lon))
        throw Error(ErrorCode::ConfigError, "route needs distinct docks and positive speed");
    if (s.n_trips < 1 || s.captain_count < 1 || s.wind_std < 0 || s.current_std < 0)
        throw Error(ErrorCode::ConfigError, "scenario counts must be >= 1");

    Dataset out;
    for (const auto& desc : telemetry_schema()) {
        Column c;
        c.name = desc.name;
        c.unit = desc.unit;
        c.kind = desc.kind;
        out.columns.push_back(std::move(c));
    }
    auto col = [&](const char* name) -> Column& { return out.column(name); };

    // Degrees of lat/lon are unequal in nautical miles; the per-minute progress
    // along the dock-to-dock line is converted so that knots mean what they say.
    const double dlat = r.dock_b_lat - r.dock_a_lat;
    const double dlon = r.dock_b_lon - r.dock_a_lon;
    const double line_deg = std::sqrt(dlat * dlat + dlon * dlon);
    const double mean_lat_rad = 0.5 * (r.dock_a_lat + r.dock_b_lat) * kDegToRad;
    const double nmi_per_deg = std::sqrt(std::pow(dlat / line_deg * 60.0, 2) +
                                         std::pow(dlon / line_deg * 60.0 * std::cos(mean_lat_rad), 2));

    const double start_minutes = *iso8601_to_minutes("2019-09-01T06:00:00Z");
    double clock = start_minutes;

    for (int trip = 0; trip < s.n_trips; ++trip) {
        Rng rng(derive_seed(s.rng_seed, kTagTrip, static_cast<std::uint64_t>(trip)));

        const bool forward = trip % 2 == 0;
        const double from_lat = forward ? r.dock_a_lat : r.dock_b_lat;
        const double from_lon = forward ? r.dock_a_lon : r.dock_b_lon;
        const double to_lat = forward ? r.dock_b_lat : r.dock_a_lat;
        const double to_lon = forward ? r.dock_b_lon : r.dock_a_lon;
        const double ulat = (to_lat - from_lat) / line_deg;
        const double ulon = (to_lon - from_lon) / line_deg;
        const double bearing = wrap360(std::atan2(ulon, ulat) / kDegToRad);

        // Captains rotate every shift (~3 trips) and carry a speed bias of up to
        // ±3%, alternating around neutral so short scenarios stay balanced.
        static constexpr double kCaptainBias[] = {0.0, 0.03, -0.03, 0.015, -0.015};
        const int captain = (trip / 3) % std::max(1, s.captain_count);
        const double captain_bias = 1.0 + kCaptainBias[captain % 5];

        Ar1 wind_speed(s.wind_mean, 0.95, s.wind_std, rng);
        Ar1 wind_dir(s.wind_dir_mean, 0.95, 12.0, rng);
        Ar1 current(0.0, 0.95, s.current_std, rng);
        Ar1 wobble(0.0, 0.9, s.speed_wobble, rng);
        Ar1 heading_noise(0.0, 0.8, 1.5, rng);
        Ar1 cross_track(0.0, 0.9, 0.002, rng);
        // Independent slow drifts for the burn-rate and shaft-load sensors, so
        // torque tracks resistance rather than echoing the fuel channel.
        Ar1 fuel_drift(1.0, 0.9, 0.02, rng);
        Ar1 load_drift(1.0, 0.9, 0.02, rng);

        const double cargo = rng.uniform(1.0e5, 5.0e5);
        // Hard stop well past any plausible crossing time.
        const int max_minutes = static_cast<int>(3.0 * r.trip_minutes) + 120;

        double progress = 0.0;
        double prev_heading = bearing;
        int minute = 0;
        const std::size_t first_row = out.n_rows();

        while (progress < line_deg && minute < max_minutes) {
            // The emitted position defines the operational mode: mode 2 within
            // mode2_radius of either dock, mode 1 (cruise) elsewhere.
            const double lat = from_lat + ulat * progress - ulon * cross_track.state;
            const double lon = from_lon + ulon * progress + ulat * cross_track.state;
            cross_track.step(rng);
            const double dist_nearest =
                std::min(std::hypot(lat - r.dock_a_lat, lon - r.dock_a_lon),
                         std::hypot(lat - r.dock_b_lat, lon - r.dock_b_lon));
            const bool docking = dist_nearest < r.mode2_radius;

            const double ramp =
                std::sqrt(std::clamp(dist_nearest / r.mode2_radius, 0.0, 1.0));
            const double target = 6.0 + (r.nominal_speed * captain_bias - 6.0) * ramp;
            double stw = std::max(0.5, target + wobble.step(rng));
            const double sog = std::max(0.3, stw + current.step(rng));

            const double w_speed = std::max(0.0, wind_speed.step(rng));
            const double w_dir = wrap360(wind_dir.step(rng));
            const double heading = wrap360(bearing + heading_noise.step(rng));

            const double headwind_eff =
                std::cos((w_dir - heading) * kDegToRad) * w_speed;
            // Opposing wind (negative headwind component) raises both the
            // resistive load on the shafts and the burn rate. The penalty is
            // asymmetric: a tailwind recovers less than a headwind costs.
            const double wind_gain = headwind_eff < 0.0 ? 1.3 : 0.55;
            const double resistance_mult = std::clamp(
                1.0 - s.wind_penalty * wind_gain * headwind_eff / r.nominal_speed, 0.5, 1.8);
            // Enrichment past the governor knee: burn efficiency falls off when
            // the helm pushes above nominal speed.
            const double knee =
                1.0 + 0.15 / (1.0 + std::exp(-(stw - 1.03 * r.nominal_speed) / 0.25));
            const double fuel_total =
                cruise_fuel_rate(p, stw) * resistance_mult * knee * fuel_drift.step(rng) *
                (1.0 + 0.008 * rng.normal());

            const double split1 = (docking ? 0.50 : 0.55) + 0.01 * rng.normal();
            const double sfc1 = std::max(0.0, fuel_total * split1);
            const double sfc2 = std::max(0.0, fuel_total - sfc1);

            // Shaft load from hull resistance (~stw^2), not from the fuel
            // channel; the two sensors drift independently.
            const double shaft_load = load_drift.step(rng) * resistance_mult *
                                      std::pow(p.displacement, 2.0 / 3.0) *
                                      (stw * stw + 9.0) / 1450.0; // ~150 kNm at 19 kn
            const double torque1 =
                std::max(0.0, shaft_load * split1 * 2.0 * (1.0 + 0.015 * rng.normal()));
            const double torque2 =
                std::max(0.0, shaft_load * (1.0 - split1) * 2.0 * (1.0 + 0.015 * rng.normal()));

            const double rpm_base = docking ? 320.0 + 20.0 * stw : 250.0 + 15.5 * stw;
            const double rpm1 = std::max(0.0, rpm_base + 8.0 * rng.normal());
            const double rpm2 = std::max(0.0, 0.97 * rpm_base + 8.0 * rng.normal());

            // P = tau * omega, behind the 2:1 gearbox.
            auto power_from = [](double torque_knm, double rpm) {
                return torque_knm * (rpm / 2.0) * 2.0 * M_PI / 60.0;
            };
            const double power1 = std::min(power_from(torque1, rpm1), p.max_engine_power);
            const double power2 = std::min(power_from(torque2, rpm2), p.max_engine_power);
            auto thrust = [&](double kw) {
                return 0.6 * kw / (std::max(stw, 2.0) * 0.5144);
            };

            const double pitch1 = docking ? std::clamp(35.0 + 4.0 * rng.normal(), 0.0, 100.0)
                                          : std::clamp(82.0 + 3.0 * rng.normal(), 0.0, 100.0);
            const double pitch2 = docking ? std::clamp(35.0 + 4.0 * rng.normal(), 0.0, 100.0)
                                          : std::clamp(4.0 + 1.5 * std::abs(rng.normal()), 0.0, 100.0);

            const double drift_deg = std::atan2(0.2 * current.state, std::max(sog, 0.5)) / kDegToRad;

            col("TIMESTAMP").push(clock + minute);
            col("DEPTH").push(std::max(15.0, 40.0 + 350.0 * std::sin(M_PI * progress / line_deg) +
                                                 12.0 * rng.normal()));
            col("ENGINE_1_FLOWRATE").push(sfc1 / p.fuel_density / 60.0);
            col("ENGINE_2_FLOWRATE").push(sfc2 / p.fuel_density / 60.0);
            col("ENGINE_1_RATE_A").push(sfc1 / p.fuel_density / 60.0 * (1.0 + 0.01 * rng.normal()));
            col("ENGINE_2_RATE_A").push(sfc2 / p.fuel_density / 60.0 * (1.0 + 0.01 * rng.normal()));
            col("ENGINE_1_TEMP_A").push(45.0 + 40.0 * power1 / p.max_engine_power + rng.normal());
            col("ENGINE_2_TEMP_A").push(45.0 + 40.0 * power2 / p.max_engine_power + rng.normal());
            col("ENGINE_1_SFC").push(sfc1);
            col("ENGINE_2_SFC").push(sfc2);
            col("HEADING").push(heading);
            col("LATITUDE").push(lat);
            col("LONGITUDE").push(lon);
            col("PITCH_1").push(pitch1);
            col("PITCH_2").push(pitch2);
            col("POWER_1").push(power1);
            col("POWER_2").push(power2);
            col("RATE_OF_TURN").push((heading - prev_heading) / 60.0 + 0.01 * rng.normal());
            col("SOG").push(sog);
            col("SOG_LONG").push(sog * std::cos(drift_deg * kDegToRad));
            col("SOG_TRANS").push(sog * std::sin(drift_deg * kDegToRad));
            col("SPEED_1").push(rpm1);
            col("SPEED_2").push(rpm2);
            col("STW").push(stw);
            col("THRUST_1").push(thrust(power1));
            col("THRUST_2").push(thrust(power2));
            col("TORQUE_1").push(torque1);
            col("TORQUE_2").push(torque2);
            col("TRACK_MADE_GOOD").push(wrap360(heading + drift_deg + 0.5 * rng.normal()));
            col("WIND_ANGLE").push(w_dir);
            col("WIND_SPEED").push(w_speed);
            col("WIND_ANGLE_TRUE").push(wrap360(w_dir + 2.0 * rng.normal()));
            col("WIND_SPEED_TRUE").push(std::max(0.0, w_speed * (1.0 + 0.05 * rng.normal())));
            col("OPERATIONAL_MODE").push(docking ? 0.0 : 1.0);
            col("TRIP_DURATION").push(0.0); // rewritten once the trip completes
            col("CARGO").push(cargo);

            prev_heading = heading;
            progress += sog / nmi_per_deg / 60.0;
            ++minute;
        }

        Column& duration = col("TRIP_DURATION");
        for (std::size_t row = first_row; row < out.n_rows(); ++row)
            duration.values[row] = static_cast<double>(minute);

        clock += minute + s.dwell_minutes;
    }
    return out;
}

Dataset inject_missing(const Dataset& d, double rate, std::uint64_t seed) {
    Dataset out = d;
    Rng rng(derive_seed(seed, kTagMask));
    for (auto& c : out.columns) {
        if (c.name == kTimestampColumn) continue;
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            if (rng.uniform() < rate) {
                c.missing[r] = true;
                c.values[r] = 0.0;
            }
        }
    }
    return out;
}

} // namespace sfe
