#include "dale/simulation.hpp"

#include "dale/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace dale {

namespace {

constexpr std::uint8_t kPollTag = 0x50;
constexpr std::uint8_t kReplyTag = 0x52;
constexpr std::uint8_t kCctxTag = 0x43;

std::vector<std::uint8_t> pack_frame(std::uint8_t tag, std::uint32_t id, std::uint16_t value) {
    return {tag,
            static_cast<std::uint8_t>(id >> 24), static_cast<std::uint8_t>(id >> 16),
            static_cast<std::uint8_t>(id >> 8), static_cast<std::uint8_t>(id),
            static_cast<std::uint8_t>(value >> 8), static_cast<std::uint8_t>(value)};
}

std::uint32_t frame_id(const std::vector<std::uint8_t>& frame) {
    return (static_cast<std::uint32_t>(frame[1]) << 24) |
           (static_cast<std::uint32_t>(frame[2]) << 16) |
           (static_cast<std::uint32_t>(frame[3]) << 8) | frame[4];
}

std::uint16_t frame_value(const std::vector<std::uint8_t>& frame) {
    return static_cast<std::uint16_t>((frame[5] << 8) | frame[6]);
}

std::uint16_t clamp_reading(double value) {
    if (!(value > 0)) return 0;
    if (value > 65535.0) return 65535;
    return static_cast<std::uint16_t>(std::llround(value));
}

// Number of flipped bits in a frame of nbits, one uniform draw per packet.
int sample_flips(int nbits, double p, std::mt19937_64& rng) {
    if (p <= 0.0) return 0;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double u = uniform(rng);
    double prob = std::pow(1.0 - p, nbits);
    double cum = prob;
    int k = 0;
    while (u > cum && k < nbits) {
        ++k;
        prob *= static_cast<double>(nbits - k + 1) / k * p / (1.0 - p);
        cum += prob;
    }
    return k;
}

void flip_byte_bits(std::vector<std::uint8_t>& bytes, int flips, std::mt19937_64& rng) {
    const int nbits = static_cast<int>(bytes.size()) * 8;
    std::uniform_int_distribution<int> pick(0, nbits - 1);
    std::unordered_set<int> used;
    while (static_cast<int>(used.size()) < flips) {
        int bit = pick(rng);
        if (!used.insert(bit).second) continue;
        bytes[static_cast<std::size_t>(bit / 8)] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
    }
}

void flip_symbols(std::vector<std::uint8_t>& symbols, int flips, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(symbols.size()) - 1);
    std::unordered_set<int> used;
    while (static_cast<int>(used.size()) < flips) {
        int s = pick(rng);
        if (!used.insert(s).second) continue;
        symbols[static_cast<std::size_t>(s)] ^= 1u;
    }
}

enum class EvType { base_wake, cctx_tx, reply_start, tx_end };

struct Event {
    double t;
    std::uint64_t seq;
    EvType type;
    std::uint32_t arg;
    bool operator>(const Event& other) const {
        if (t != other.t) return t > other.t;
        return seq > other.seq;
    }
};

struct Tx {
    double start = 0.0;
    double end = 0.0;
    PacketKind kind = PacketKind::poll;
    std::uint32_t node = 0;
    bool collided = false;
    std::vector<std::uint8_t> frame; // checksum bytes or Manchester symbols
};

struct Prediction {
    double last_arrival = -1.0;
    double period_est = -1.0;
};

struct Sim {
    const SimConfig& cfg;
    std::vector<IamNode>& iams;
    std::vector<CcTxNode>& cctxs;
    const DemandSource& demand;
    const std::vector<std::vector<IamTimelineEvent>>& timelines;

    Sim(const SimConfig& cfg_, std::vector<IamNode>& iams_, std::vector<CcTxNode>& cctxs_,
        const DemandSource& demand_, const std::vector<std::vector<IamTimelineEvent>>& timelines_)
        : cfg(cfg_), iams(iams_), cctxs(cctxs_), demand(demand_), timelines(timelines_) {}

    std::mt19937_64 rng;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue;
    std::uint64_t next_seq = 0;

    std::vector<Tx> slots;
    std::vector<std::uint32_t> free_slots;
    std::vector<std::uint32_t> active;

    std::vector<Prediction> predictions;
    std::vector<std::size_t> timeline_pos;
    std::unordered_map<std::uint32_t, std::uint32_t> cctx_by_id;
    std::unordered_map<std::uint32_t, std::uint32_t> iam_by_id;

    std::size_t next_poll = 0;
    double cycle_start = 0.0;

    SimResult result;

    void schedule(double t, EvType type, std::uint32_t arg) {
        queue.push(Event{t, next_seq++, type, arg});
    }

    std::uint32_t alloc_slot() {
        if (!free_slots.empty()) {
            std::uint32_t slot = free_slots.back();
            free_slots.pop_back();
            return slot;
        }
        slots.emplace_back();
        return static_cast<std::uint32_t>(slots.size() - 1);
    }

    void start_tx(double t, PacketKind kind, std::uint32_t node, std::vector<std::uint8_t> frame) {
        std::uint32_t slot = alloc_slot();
        Tx& tx = slots[slot];
        tx.start = t;
        tx.end = t + cfg.packet_air_time;
        tx.kind = kind;
        tx.node = node;
        tx.collided = false;
        tx.frame = std::move(frame);
        for (std::uint32_t other : active) {
            if (slots[other].end > t) {
                slots[other].collided = true;
                tx.collided = true;
            }
        }
        active.push_back(slot);
        schedule(tx.end, EvType::tx_end, slot);
    }

    void apply_timeline(std::uint32_t iam_index, double now) {
        if (iam_index >= timelines.size()) return;
        const auto& events = timelines[iam_index];
        auto& pos = timeline_pos[iam_index];
        while (pos < events.size() && events[pos].t <= now) {
            IamNode& node = iams[iam_index];
            switch (events[pos].kind) {
            case TimelineEventKind::user_on: node.switch_on = true; break;
            case TimelineEventKind::user_off: node.switch_on = false; break;
            case TimelineEventKind::power_lost: node.powered = false; break;
            case TimelineEventKind::power_restored: node.powered = true; break;
            }
            ++pos;
        }
    }

    // Earliest start >= t0 such that [start, start + hold] stays clear of
    // every guarded window around a predicted CC-TX arrival.
    double guard_clear(double t0, double hold) const {
        if (!cfg.guard_enabled) return t0;
        for (int pass = 0; pass < 16; ++pass) {
            bool shifted = false;
            for (const auto& p : predictions) {
                if (p.period_est <= 0 || p.last_arrival < 0) continue;
                double k = std::ceil((t0 - cfg.guard_after - p.last_arrival) / p.period_est);
                if (k < 1) k = 1;
                for (int step = 0; step < 2; ++step) {
                    double arrival = p.last_arrival + (k + step) * p.period_est;
                    if (arrival - cfg.guard_window < t0 + hold && arrival + cfg.guard_after > t0) {
                        t0 = arrival + cfg.guard_after + 1e-4;
                        shifted = true;
                    }
                }
            }
            if (!shifted) return t0;
        }
        return t0;
    }

    void record_loss(double t, ReadingKind kind, std::uint32_t node, LossReason reason) {
        result.losses.push_back(SimLoss{t, kind, node, reason});
        switch (reason) {
        case LossReason::collision: ++result.collision_losses; break;
        case LossReason::checksum: ++result.checksum_losses; break;
        case LossReason::manchester: ++result.manchester_losses; break;
        }
    }

    void record_reading(double t, ReadingKind kind, std::uint32_t node, std::uint32_t id, int value) {
        bool accepted = filter_reading(kind, value);
        if (!accepted) ++result.filtered_readings;
        result.readings.push_back(SimReading{t, kind, node, id, value, !accepted});
        if (kind == ReadingKind::iam) ++result.iam_accepted; else ++result.cctx_accepted;
    }

    void on_base_wake(double now) {
        if (iams.empty()) return;
        if (next_poll >= iams.size()) {
            next_poll = 0;
            cycle_start += cfg.poll_cycle_period;
            schedule(std::max(cycle_start, now), EvType::base_wake, 0);
            return;
        }
        const double hold = cfg.packet_air_time + cfg.iam_reply_deadline;
        double clear = guard_clear(now, hold);
        if (clear > now) {
            schedule(clear, EvType::base_wake, 0);
            return;
        }
        const std::uint32_t target = static_cast<std::uint32_t>(next_poll);
        ++result.iam_polls;
        Packet poll = encode_iam(pack_frame(kPollTag, iams[target].id, 0), PacketKind::poll);
        start_tx(now, PacketKind::poll, target, std::move(poll.payload));
        ++next_poll;
        schedule(now + cfg.packet_air_time + cfg.iam_reply_deadline + 0.005, EvType::base_wake, 0);
    }

    void on_cctx_tx(double now, std::uint32_t index) {
        CcTxNode& node = cctxs[index];
        ++result.cctx_sent;
        node.reading = clamp_reading(demand.cctx_va ? demand.cctx_va(index, now) : 0.0);
        Packet packet = encode_cctx(
            bytes_to_bits(pack_frame(kCctxTag, node.id, static_cast<std::uint16_t>(node.reading))));
        start_tx(now, PacketKind::cctx_broadcast, index, std::move(packet.payload));
        node.next_tx_time += node.period;
        if (node.next_tx_time < cfg.duration) schedule(node.next_tx_time, EvType::cctx_tx, index);
    }

    void on_reply_start(double now, std::uint32_t index) {
        IamNode& node = iams[index];
        std::uniform_real_distribution<double> age_dist(0.0, cfg.max_reading_staleness);
        double age = age_dist(rng);
        double measured_at = std::max(0.0, now - age);
        double watts = node.switch_on && demand.iam_watts ? demand.iam_watts(index, measured_at) : 0.0;
        node.latest_power = clamp_reading(watts);
        node.data_age = age;
        Packet reply = encode_iam(
            pack_frame(kReplyTag, node.id, static_cast<std::uint16_t>(node.latest_power)));
        start_tx(now, PacketKind::iam_reply, index, std::move(reply.payload));
    }

    void on_tx_end(double now, std::uint32_t slot_index) {
        Tx& tx = slots[slot_index];
        active.erase(std::find(active.begin(), active.end(), slot_index));
        switch (tx.kind) {
        case PacketKind::poll: finish_poll(now, tx); break;
        case PacketKind::iam_reply: finish_reply(now, tx); break;
        case PacketKind::cctx_broadcast: finish_cctx(now, tx); break;
        }
        tx.frame.clear();
        free_slots.push_back(slot_index);
    }

    void finish_poll(double now, Tx& tx) {
        apply_timeline(tx.node, now);
        if (tx.collided) {
            record_loss(now, ReadingKind::iam, tx.node, LossReason::collision);
            return;
        }
        int flips = sample_flips(static_cast<int>(tx.frame.size()) * 8, cfg.bit_flip_probability, rng);
        if (flips > 0) {
            // The IAM rejects a garbled poll; the base just sees silence.
            record_loss(now, ReadingKind::iam, tx.node, LossReason::checksum);
            return;
        }
        if (!iams[tx.node].powered) return; // deliberate unplug, not a dropout
        std::uniform_real_distribution<double> delay(0.002, cfg.iam_reply_deadline -
                                                               cfg.packet_air_time - 0.002);
        schedule(now + delay(rng), EvType::reply_start, tx.node);
    }

    void finish_reply(double now, Tx& tx) {
        if (tx.collided) {
            record_loss(now, ReadingKind::iam, tx.node, LossReason::collision);
            return;
        }
        std::vector<std::uint8_t> frame = tx.frame;
        int flips = sample_flips(static_cast<int>(frame.size()) * 8, cfg.bit_flip_probability, rng);
        if (flips > 0) flip_byte_bits(frame, flips, rng);
        Packet packet;
        packet.kind = PacketKind::iam_reply;
        packet.encoding = PacketEncoding::checksum;
        packet.payload = std::move(frame);
        try {
            auto payload = decode_iam(packet);
            std::uint32_t id = frame_id(payload);
            auto it = iam_by_id.find(id);
            if (it == iam_by_id.end() || it->second != tx.node) {
                ++result.unknown_id;
                return;
            }
            record_reading(now, ReadingKind::iam, tx.node, id, frame_value(payload));
        } catch (const integrity_error&) {
            record_loss(now, ReadingKind::iam, tx.node, LossReason::checksum);
        }
    }

    void finish_cctx(double now, Tx& tx) {
        if (tx.collided) {
            record_loss(now, ReadingKind::whole_house, tx.node, LossReason::collision);
            return;
        }
        std::vector<std::uint8_t> symbols = tx.frame;
        int flips = sample_flips(static_cast<int>(symbols.size()), cfg.bit_flip_probability, rng);
        if (flips > 0) flip_symbols(symbols, flips, rng);
        Packet packet;
        packet.kind = PacketKind::cctx_broadcast;
        packet.encoding = PacketEncoding::manchester;
        packet.payload = std::move(symbols);
        try {
            auto payload = bits_to_bytes(decode_cctx(packet));
            std::uint32_t id = frame_id(payload);
            auto it = cctx_by_id.find(id);
            if (it == cctx_by_id.end() || it->second != tx.node) {
                ++result.unknown_id;
                return;
            }
            learn_period(tx.node, tx.start);
            record_reading(now, ReadingKind::whole_house, tx.node, id, frame_value(payload));
        } catch (const manchester_error&) {
            record_loss(now, ReadingKind::whole_house, tx.node, LossReason::manchester);
        }
    }

    void learn_period(std::uint32_t index, double arrival) {
        Prediction& p = predictions[index];
        if (p.last_arrival < 0) {
            p.last_arrival = arrival;
            return;
        }
        double gap = arrival - p.last_arrival;
        p.last_arrival = arrival;
        if (gap <= 0) return;
        if (p.period_est <= 0) {
            p.period_est = gap;
            return;
        }
        // A lost packet doubles the observed gap; divide by the nearest
        // multiple of the current estimate before averaging.
        double k = std::max(1.0, std::round(gap / p.period_est));
        p.period_est += 0.2 * (gap / k - p.period_est);
    }

    SimResult run() {
        rng.seed(cfg.rng_seed);
        predictions.assign(cctxs.size(), Prediction{});
        timeline_pos.assign(std::max(timelines.size(), iams.size()), 0);
        for (std::uint32_t i = 0; i < iams.size(); ++i) iam_by_id.emplace(iams[i].id, i);
        for (std::uint32_t i = 0; i < cctxs.size(); ++i) cctx_by_id.emplace(cctxs[i].id, i);

        if (!iams.empty()) schedule(0.0, EvType::base_wake, 0);
        for (std::uint32_t i = 0; i < cctxs.size(); ++i) {
            if (cctxs[i].next_tx_time < cfg.duration)
                schedule(cctxs[i].next_tx_time, EvType::cctx_tx, i);
        }

        while (!queue.empty()) {
            Event ev = queue.top();
            queue.pop();
            if (ev.type != EvType::tx_end && ev.t >= cfg.duration) continue;
            switch (ev.type) {
            case EvType::base_wake: on_base_wake(ev.t); break;
            case EvType::cctx_tx: on_cctx_tx(ev.t, ev.arg); break;
            case EvType::reply_start: on_reply_start(ev.t, ev.arg); break;
            case EvType::tx_end: on_tx_end(ev.t, ev.arg); break;
            }
        }
        return std::move(result);
    }
};

} // namespace

void validate(const SimConfig& cfg) {
    if (cfg.bit_flip_probability < 0 || cfg.bit_flip_probability > 1)
        throw std::invalid_argument("sim config: bit_flip_probability outside [0, 1]");
    if (cfg.guard_window < 0 || cfg.guard_after < 0)
        throw std::invalid_argument("sim config: guard windows must be >= 0");
    if (!(cfg.packet_air_time > 0))
        throw std::invalid_argument("sim config: packet_air_time must be positive");
    if (!(cfg.iam_reply_deadline > cfg.packet_air_time + 0.004))
        throw std::invalid_argument("sim config: reply deadline too short for the air time");
    if (!(cfg.poll_cycle_period > 0))
        throw std::invalid_argument("sim config: poll_cycle_period must be positive");
    if (cfg.max_reading_staleness < 0)
        throw std::invalid_argument("sim config: max_reading_staleness must be >= 0");
    if (!(cfg.duration > 0)) throw std::invalid_argument("sim config: duration must be positive");
}

bool filter_reading(ReadingKind kind, double watts) {
    if (kind == ReadingKind::iam) return watts <= 4000.0;
    return watts <= 20000.0;
}

double SimResult::iam_dropout() const {
    std::uint64_t losses = 0;
    for (const auto& loss : this->losses)
        if (loss.kind == ReadingKind::iam) ++losses;
    std::uint64_t total = losses + iam_accepted;
    return total == 0 ? 0.0 : static_cast<double>(losses) / static_cast<double>(total);
}

double SimResult::cctx_dropout() const {
    if (cctx_sent == 0) return 0.0;
    return 1.0 - static_cast<double>(cctx_accepted) / static_cast<double>(cctx_sent);
}

std::vector<ButtonPress> derive_button_events(const std::vector<IamTimelineEvent>& timeline) {
    for (std::size_t i = 1; i < timeline.size(); ++i)
        if (timeline[i].t < timeline[i - 1].t)
            throw std::invalid_argument("derive_button_events: timeline not chronologically ordered");

    std::vector<ButtonPress> presses;
    bool switch_on = true;
    bool powered = true;
    bool switch_before_loss = true;
    double loss_time = 0.0;
    for (const auto& ev : timeline) {
        switch (ev.kind) {
        case TimelineEventKind::user_on:
            switch_on = true;
            if (powered) presses.push_back(ButtonPress{ev.t, 1});
            break;
        case TimelineEventKind::user_off:
            switch_on = false;
            if (powered) presses.push_back(ButtonPress{ev.t, 0});
            break;
        case TimelineEventKind::power_lost:
            if (!powered) break;
            powered = false;
            switch_before_loss = switch_on;
            loss_time = ev.t;
            break;
        case TimelineEventKind::power_restored:
            if (powered) break;
            powered = true;
            if (ev.t - loss_time <= kUnplugThreshold) {
                // Short loss: the monitor reboots with its relay open and the
                // logger records a (false positive) off press.
                switch_on = false;
                presses.push_back(ButtonPress{ev.t, 0});
            } else {
                switch_on = switch_before_loss; // restored silently
            }
            break;
        }
    }
    return presses;
}

SimResult run_simulation(const SimConfig& cfg, std::vector<IamNode> iams,
                         std::vector<CcTxNode> cctxs, const DemandSource& demand,
                         const std::vector<std::vector<IamTimelineEvent>>& iam_timelines) {
    validate(cfg);
    if (iams.empty() && cctxs.empty())
        throw std::invalid_argument("run_simulation: at least one node required");
    for (const auto& node : cctxs)
        if (node.period < 5.7 || node.period > 6.3)
            throw std::invalid_argument("run_simulation: cctx period outside 6 +/- 0.3 s");
    for (const auto& timeline : iam_timelines)
        for (std::size_t i = 1; i < timeline.size(); ++i)
            if (timeline[i].t < timeline[i - 1].t)
                throw std::invalid_argument("run_simulation: iam timeline not sorted");

    Sim sim{cfg, iams, cctxs, demand, iam_timelines};
    return sim.run();
}

void write_event_log(const SimResult& result, std::ostream& out) {
    auto kind_name = [](ReadingKind kind) {
        return kind == ReadingKind::iam ? "iam" : "whole_house";
    };
    std::size_t ri = 0, li = 0;
    while (ri < result.readings.size() || li < result.losses.size()) {
        bool take_reading = li >= result.losses.size() ||
                            (ri < result.readings.size() &&
                             result.readings[ri].t <= result.losses[li].t);
        nlohmann::json line;
        if (take_reading) {
            const auto& r = result.readings[ri++];
            line = {{"type", "reading"}, {"t", r.t},        {"kind", kind_name(r.kind)},
                    {"node", r.node_index}, {"id", r.node_id}, {"value", r.value},
                    {"filtered", r.filtered}};
        } else {
            const auto& l = result.losses[li++];
            const char* reason = l.reason == LossReason::collision ? "collision"
                                 : l.reason == LossReason::checksum ? "checksum"
                                                                    : "manchester";
            line = {{"type", "loss"}, {"t", l.t}, {"kind", kind_name(l.kind)},
                    {"node", l.node_index}, {"reason", reason}};
        }
        out << line.dump() << '\n';
    }
    nlohmann::json summary = {{"type", "summary"},
                              {"iam_polls", result.iam_polls},
                              {"iam_accepted", result.iam_accepted},
                              {"cctx_sent", result.cctx_sent},
                              {"cctx_accepted", result.cctx_accepted},
                              {"collision_losses", result.collision_losses},
                              {"checksum_losses", result.checksum_losses},
                              {"manchester_losses", result.manchester_losses},
                              {"filtered_readings", result.filtered_readings},
                              {"unknown_id", result.unknown_id}};
    out << summary.dump() << '\n';
}

std::uint32_t random_pairing_id(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint32_t> dist;
    return dist(rng);
}

std::vector<IamNode> make_iam_nodes(std::size_t count, std::mt19937_64& rng) {
    std::vector<IamNode> nodes(count);
    std::unordered_set<std::uint32_t> used;
    for (auto& node : nodes) {
        do {
            node.id = random_pairing_id(rng);
        } while (!used.insert(node.id).second);
    }
    return nodes;
}

std::vector<CcTxNode> make_cctx_nodes(std::size_t count, std::mt19937_64& rng) {
    std::vector<CcTxNode> nodes(count);
    std::uniform_real_distribution<double> period_dist(5.7, 6.3);
    std::unordered_set<std::uint32_t> used;
    for (auto& node : nodes) {
        do {
            node.id = random_pairing_id(rng);
        } while (!used.insert(node.id).second);
        node.period = period_dist(rng);
        std::uniform_real_distribution<double> phase(0.0, node.period);
        node.next_tx_time = phase(rng);
    }
    return nodes;
}

} // namespace dale
