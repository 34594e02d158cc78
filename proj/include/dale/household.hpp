#pragma once

#include "dale/simulation.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dale {

/// One state of an appliance's behaviour model.
struct ApplianceState {
    std::string name;
    double active_watts = 0.0;
    double apparent_va = 0.0;
    double mean_dwell_s = 0.0; ///< exponential dwell time mean
};

struct ApplianceModel {
    std::string name;
    std::string room;
    std::vector<ApplianceState> states;
    /// Row-stochastic transition matrix between states. Empty means cycle to
    /// the next state in declaration order.
    std::vector<std::vector<double>> transitions;
    double on_power_threshold = 5.0; ///< watts
    bool metered = true;             ///< has an IAM channel of its own
    bool unplugged_when_off = false; ///< meter is unpowered outside of use
    double idle_presses_per_day = 0.0; ///< front-panel toggles while idle
};

void validate(const ApplianceModel& model);

struct House {
    std::vector<ApplianceModel> appliances;
    int iam_count = 0;          ///< installed monitor plugs, each drawing a small standing load
    double vampire_power = 0.0; ///< constant always-on floor, watts
};

void validate(const House& house);

/// Standing draw of one monitor plug (unmetered by its own channel).
inline constexpr double kIamSelfDrawActiveW = 0.9;
inline constexpr double kIamSelfDrawApparentVa = 2.4;

/// Per-appliance runtime position in its state machine.
struct ApplianceRuntime {
    std::size_t state = 0;
    double remaining_dwell = 0.0;
};

struct HouseState {
    std::vector<ApplianceRuntime> appliances;
};

HouseState initial_state(const House& house, std::mt19937_64& rng);

/// Steps every appliance independently by dt seconds, sampling dwell times
/// and transitions from rng. Deterministic for a fixed seed.
void advance(const House& house, HouseState& state, double dt, std::mt19937_64& rng);

struct Demand {
    std::vector<double> appliance_active; ///< watts per appliance
    double mains_active = 0.0;            ///< watts
    double mains_apparent = 0.0;          ///< volt-amperes
};

/// Additive aggregation: mains active power is the appliance sum plus
/// iam_count * 0.9 W plus the vampire floor; apparent analogously with
/// 2.4 VA per monitor.
Demand sample_demand(const House& house, const HouseState& state);

/// Piecewise-constant power trace for one appliance.
struct PowerSegment {
    double t_begin = 0.0;
    double active_watts = 0.0;
    double apparent_va = 0.0;
};

struct ApplianceTrajectory {
    std::vector<PowerSegment> segments; ///< sorted, first at t = 0
    double active_at(double t) const;
    double apparent_at(double t) const;
};

struct HouseTrajectory {
    House house;
    double duration = 0.0;
    std::vector<ApplianceTrajectory> appliances;

    double mains_active_at(double t) const;
    double mains_apparent_at(double t) const;
};

/// Ground-truth demand over [0, duration): every appliance walked through
/// its state machine event by event.
HouseTrajectory simulate_trajectory(const House& house, double duration, std::mt19937_64& rng);

/// IAM timeline for one appliance: unplug/replug around uses for
/// unplugged_when_off models, plus idle front-panel presses.
std::vector<IamTimelineEvent> presence_timeline(const ApplianceTrajectory& trajectory,
                                                const ApplianceModel& model, double duration,
                                                std::mt19937_64& rng);

/// Named scenario presets: "demo" (5 appliances) and "house1" (52 monitors
/// plus unmetered loads sized for an 80% submetered share).
House make_preset(std::string_view name);

House load_house(const std::filesystem::path& path);
void save_house(const House& house, const std::filesystem::path& path);

} // namespace dale
