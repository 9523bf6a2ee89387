#pragma once

#include <cstdint>

#include "sfe/telemetry.hpp"

namespace sfe {

/// Fuel-model constants for the simulated vessel. Defaults approximate a
/// 140 m double-ended ferry with two 8850 kW engines.
struct VesselPhysics {
    double k_fuel = 0.20;           // kg fuel per brake-hp-hour
    double ghp = 23700.0;           // gross horsepower at governed rpm
    double load_factor = 0.6;       // fraction of gross power in use, (0, 1]
    double fuel_density = 0.85;     // kg per liter
    double displacement = 10000.0;  // tonnes
    double fuel_coefficient = 4200.0; // dimensionless speed-cubed divisor
    double max_engine_power = 8850.0; // kW per engine
    int n_engines = 2;
    double base_idle = 100.0;       // kg/h burned at zero speed
};

struct RouteSpec {
    double dock_a_lat = 49.3771; // Horseshoe Bay
    double dock_a_lon = -123.2715;
    double dock_b_lat = 49.1936; // Nanaimo
    double dock_b_lon = -123.9554;
    double nominal_speed = 19.0; // knots
    double mode2_radius = 0.03;  // deg, manual-docking zone around each dock
    double trip_minutes = 90.0;  // nominal duration
};

struct ScenarioSeed {
    std::uint64_t rng_seed = 42;
    int n_trips = 8;
    int captain_count = 5;
    double wind_mean = 8.0;    // knots
    double wind_std = 3.0;     // knots
    double current_std = 1.1;  // knots
    // Secondary knobs, all documented in the config reference.
    double wind_dir_mean = 90.0; // deg; wind vector pointing east = westerly wind
    double wind_penalty = 0.3;   // fuel multiplier sensitivity to headwind
    double speed_wobble = 0.6;   // knots, helm speed variation during cruise
    double dwell_minutes = 25.0; // dock time between trips (no rows emitted)
};

/// Liters of fuel used per machine hour: K * GHP * LF / KPL.
double lmph(const VesselPhysics& p);

/// Fuel burn (kg/h, both engines combined) at speed v through water:
/// base_idle + displacement^(2/3) * v^3 / fuel_coefficient, capped at the burn
/// implied by total installed power. Strictly increasing in v below the cap.
double cruise_fuel_rate(const VesselPhysics& p, double v_knots);

/// Generates seeded voyage telemetry in the canonical schema at 1-minute
/// cadence: alternating A->B / B->A trips, AR(1) weather, per-captain speed
/// bias, manual-docking zones near both docks. Deterministic per seed.
Dataset simulate_voyages(const VesselPhysics& p, const RouteSpec& r, const ScenarioSeed& s);

/// Masks each non-timestamp cell independently with probability `rate`.
Dataset inject_missing(const Dataset& d, double rate, std::uint64_t seed);

} // namespace sfe
