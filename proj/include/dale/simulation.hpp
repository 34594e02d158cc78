#pragma once

#include "dale/packet.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <vector>

namespace dale {

/// Plug-through appliance monitor, polled by the base station.
struct IamNode {
    std::uint32_t id = 0;   ///< picked at random when paired; fixed afterwards
    int latest_power = 0;   ///< watts, last value handed to the radio
    double data_age = 0.0;  ///< seconds between measurement and reply
    bool switch_on = true;  ///< front-panel relay state
    bool powered = true;    ///< false while unplugged from the wall
};

/// Blind-broadcast current-transformer transmitter.
struct CcTxNode {
    std::uint32_t id = 0;
    double period = 6.0; ///< drawn once from 6 +/- 0.3 s, then fixed
    double next_tx_time = 0.0;
    int reading = 0; ///< volt-amperes
};

struct SimConfig {
    double bit_flip_probability = 2.5e-6; ///< per transmitted bit
    double iam_reply_deadline = 0.020;    ///< s between poll end and reply end
    double guard_window = 0.150;          ///< s of radio silence before a predicted CC-TX arrival
    double guard_after = 0.050;           ///< s of radio silence after a predicted arrival
    bool guard_enabled = true;
    double packet_air_time = 0.005;  ///< s on air per packet
    double poll_cycle_period = 6.0;  ///< s between polling rounds
    double max_reading_staleness = 4.0; ///< IAM replies carry data up to this old
    double duration = 0.0;           ///< s of simulated time
    std::uint64_t rng_seed = 0;
};

void validate(const SimConfig& cfg);

/// Per-node power supplied by the scenario at any queried time.
struct DemandSource {
    std::function<double(std::size_t iam_index, double t)> iam_watts;
    std::function<double(std::size_t cctx_index, double t)> cctx_va;
};

enum class ReadingKind { iam, whole_house };
enum class LossReason { collision, checksum, manchester };

/// Logger-side spurious-reading gate: IAM readings above 4 kW and
/// whole-house readings above 20 kW are rejected.
bool filter_reading(ReadingKind kind, double watts);

struct SimReading {
    double t = 0.0;
    ReadingKind kind = ReadingKind::iam;
    std::uint32_t node_index = 0;
    std::uint32_t node_id = 0;
    std::int32_t value = 0;
    bool filtered = false; ///< true when the spurious-reading gate rejected it
};

struct SimLoss {
    double t = 0.0;
    ReadingKind kind = ReadingKind::iam;
    std::uint32_t node_index = 0;
    LossReason reason = LossReason::collision;
};

struct SimResult {
    std::vector<SimReading> readings;
    std::vector<SimLoss> losses;
    std::uint64_t iam_polls = 0;
    std::uint64_t iam_accepted = 0;
    std::uint64_t cctx_sent = 0;
    std::uint64_t cctx_accepted = 0;
    std::uint64_t collision_losses = 0;
    std::uint64_t checksum_losses = 0;
    std::uint64_t manchester_losses = 0;
    std::uint64_t filtered_readings = 0;
    std::uint64_t unknown_id = 0;

    double iam_dropout() const;
    double cctx_dropout() const;
};

/// Timeline of externally driven IAM events: front-panel presses and mains
/// presence changes.
enum class TimelineEventKind { user_on, user_off, power_lost, power_restored };
struct IamTimelineEvent {
    double t = 0.0;
    TimelineEventKind kind = TimelineEventKind::user_on;
};

struct ButtonPress {
    double t = 0.0;
    int value = 0; ///< 1 = toggled on, 0 = toggled off
};

/// Button-press log derived from an IAM timeline. User presses are recorded
/// directly; a power loss shorter than 12 s is logged as an off press when
/// power returns, and a longer loss restores the previous switch state with
/// no event.
std::vector<ButtonPress> derive_button_events(const std::vector<IamTimelineEvent>& timeline);

/// Window after which a power loss is treated as a deliberate unplug.
inline constexpr double kUnplugThreshold = 12.0;

/// Deterministic event-driven run of the base station, IAMs and CC-TX
/// transmitters over cfg.duration seconds. Identical inputs (including the
/// seed) produce identical results.
SimResult run_simulation(const SimConfig& cfg, std::vector<IamNode> iams,
                         std::vector<CcTxNode> cctxs, const DemandSource& demand,
                         const std::vector<std::vector<IamTimelineEvent>>& iam_timelines = {});

/// Line-delimited structured export of readings and losses for debugging.
void write_event_log(const SimResult& result, std::ostream& out);

std::uint32_t random_pairing_id(std::mt19937_64& rng);
std::vector<IamNode> make_iam_nodes(std::size_t count, std::mt19937_64& rng);
std::vector<CcTxNode> make_cctx_nodes(std::size_t count, std::mt19937_64& rng);

} // namespace dale
