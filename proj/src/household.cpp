#include "dale/household.hpp"

#include "dale/errors.hpp"
#include "dale/textdoc.hpp"
#include "dale/util.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dale {

namespace {

std::size_t next_state(const ApplianceModel& model, std::size_t current, std::mt19937_64& rng) {
    if (model.states.size() == 1) return 0;
    if (model.transitions.empty()) return (current + 1) % model.states.size();
    const auto& row = model.transitions[current];
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    double u = uniform(rng);
    double cum = 0.0;
    for (std::size_t s = 0; s < row.size(); ++s) {
        cum += row[s];
        if (u <= cum) return s;
    }
    return row.size() - 1;
}

double sample_dwell(const ApplianceModel& model, std::size_t state, std::mt19937_64& rng) {
    std::exponential_distribution<double> dwell(1.0 / model.states[state].mean_dwell_s);
    return dwell(rng);
}

struct Interval {
    double begin, end;
};

std::vector<Interval> on_intervals(const ApplianceTrajectory& trajectory,
                                   const ApplianceModel& model, double duration, double pad) {
    std::vector<Interval> intervals;
    const auto& segs = trajectory.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (segs[i].active_watts < model.on_power_threshold) continue;
        double begin = std::max(0.0, segs[i].t_begin - pad);
        double end = (i + 1 < segs.size() ? segs[i + 1].t_begin : duration) + pad;
        end = std::min(end, duration);
        if (!intervals.empty() && begin <= intervals.back().end)
            intervals.back().end = std::max(intervals.back().end, end);
        else
            intervals.push_back(Interval{begin, end});
    }
    return intervals;
}

} // namespace

void validate(const ApplianceModel& model) {
    if (model.name.empty()) throw std::invalid_argument("appliance: empty name");
    if (model.states.empty()) throw std::invalid_argument("appliance: no states");
    for (const auto& state : model.states) {
        if (state.active_watts < 0 || state.apparent_va < 0)
            throw std::invalid_argument("appliance '" + model.name + "': negative state power");
        if (state.apparent_va + 1e-9 < state.active_watts)
            throw std::invalid_argument("appliance '" + model.name + "': apparent below active");
        if (!(state.mean_dwell_s > 0))
            throw std::invalid_argument("appliance '" + model.name + "': dwell times must be > 0");
    }
    if (!(model.on_power_threshold > 0))
        throw std::invalid_argument("appliance '" + model.name + "': threshold must be > 0");
    if (!model.transitions.empty()) {
        if (model.transitions.size() != model.states.size())
            throw std::invalid_argument("appliance '" + model.name + "': transition rows != states");
        for (const auto& row : model.transitions) {
            if (row.size() != model.states.size())
                throw std::invalid_argument("appliance '" + model.name + "': ragged transition row");
            double sum = 0.0;
            for (double p : row) {
                if (p < 0) throw std::invalid_argument("appliance: negative transition probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6)
                throw std::invalid_argument("appliance '" + model.name + "': transition row sum != 1");
        }
    }
    if (model.idle_presses_per_day < 0)
        throw std::invalid_argument("appliance: idle_presses_per_day must be >= 0");
}

void validate(const House& house) {
    if (house.iam_count < 0) throw std::invalid_argument("house: iam_count must be >= 0");
    if (house.vampire_power < 0) throw std::invalid_argument("house: vampire_power must be >= 0");
    for (const auto& appliance : house.appliances) validate(appliance);
}

HouseState initial_state(const House& house, std::mt19937_64& rng) {
    HouseState state;
    state.appliances.reserve(house.appliances.size());
    for (const auto& model : house.appliances)
        state.appliances.push_back(ApplianceRuntime{0, sample_dwell(model, 0, rng)});
    return state;
}

void advance(const House& house, HouseState& state, double dt, std::mt19937_64& rng) {
    if (!(dt > 0)) throw std::invalid_argument("advance: dt must be > 0");
    if (state.appliances.size() != house.appliances.size())
        throw std::invalid_argument("advance: state does not match house");
    for (std::size_t a = 0; a < house.appliances.size(); ++a) {
        const auto& model = house.appliances[a];
        auto& rt = state.appliances[a];
        double left = dt;
        while (rt.remaining_dwell <= left) {
            left -= rt.remaining_dwell;
            rt.state = next_state(model, rt.state, rng);
            rt.remaining_dwell = sample_dwell(model, rt.state, rng);
        }
        rt.remaining_dwell -= left;
    }
}

Demand sample_demand(const House& house, const HouseState& state) {
    if (state.appliances.size() != house.appliances.size())
        throw std::invalid_argument("sample_demand: state does not match house");
    Demand demand;
    demand.appliance_active.reserve(house.appliances.size());
    for (std::size_t a = 0; a < house.appliances.size(); ++a) {
        const auto& s = house.appliances[a].states[state.appliances[a].state];
        demand.appliance_active.push_back(s.active_watts);
        demand.mains_active += s.active_watts;
        demand.mains_apparent += s.apparent_va;
    }
    demand.mains_active += house.iam_count * kIamSelfDrawActiveW + house.vampire_power;
    demand.mains_apparent += house.iam_count * kIamSelfDrawApparentVa + house.vampire_power;
    return demand;
}

namespace {

const PowerSegment& segment_at(const std::vector<PowerSegment>& segments, double t) {
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double value, const PowerSegment& seg) { return value < seg.t_begin; });
    if (it == segments.begin()) return segments.front();
    return *(it - 1);
}

} // namespace

double ApplianceTrajectory::active_at(double t) const {
    if (segments.empty()) return 0.0;
    return segment_at(segments, t).active_watts;
}

double ApplianceTrajectory::apparent_at(double t) const {
    if (segments.empty()) return 0.0;
    return segment_at(segments, t).apparent_va;
}

double HouseTrajectory::mains_active_at(double t) const {
    double total = house.iam_count * kIamSelfDrawActiveW + house.vampire_power;
    for (const auto& appliance : appliances) total += appliance.active_at(t);
    return total;
}

double HouseTrajectory::mains_apparent_at(double t) const {
    double total = house.iam_count * kIamSelfDrawApparentVa + house.vampire_power;
    for (const auto& appliance : appliances) total += appliance.apparent_at(t);
    return total;
}

HouseTrajectory simulate_trajectory(const House& house, double duration, std::mt19937_64& rng) {
    validate(house);
    if (!(duration > 0)) throw std::invalid_argument("simulate_trajectory: duration must be > 0");
    HouseTrajectory trajectory;
    trajectory.house = house;
    trajectory.duration = duration;
    trajectory.appliances.resize(house.appliances.size());
    for (std::size_t a = 0; a < house.appliances.size(); ++a) {
        const auto& model = house.appliances[a];
        auto& segments = trajectory.appliances[a].segments;
        std::size_t state = 0;
        double t = 0.0;
        while (t < duration) {
            const auto& s = model.states[state];
            segments.push_back(PowerSegment{t, s.active_watts, s.apparent_va});
            t += sample_dwell(model, state, rng);
            state = next_state(model, state, rng);
        }
    }
    return trajectory;
}

std::vector<IamTimelineEvent> presence_timeline(const ApplianceTrajectory& trajectory,
                                                const ApplianceModel& model, double duration,
                                                std::mt19937_64& rng) {
    std::vector<IamTimelineEvent> events;

    if (model.unplugged_when_off) {
        const double pad = 30.0;
        auto intervals = on_intervals(trajectory, model, duration, pad);
        double t = 0.0;
        for (const auto& interval : intervals) {
            if (interval.begin > t)
                events.push_back(IamTimelineEvent{t, TimelineEventKind::power_lost});
            events.push_back(IamTimelineEvent{interval.begin, TimelineEventKind::power_restored});
            t = interval.end;
        }
        if (t < duration) events.push_back(IamTimelineEvent{t, TimelineEventKind::power_lost});
        // Collapse the lost/restored pair at t = 0 when the first use starts
        // immediately.
        std::sort(events.begin(), events.end(),
                  [](const IamTimelineEvent& a, const IamTimelineEvent& b) { return a.t < b.t; });
        return events;
    }

    if (model.idle_presses_per_day > 0) {
        std::poisson_distribution<int> count_dist(model.idle_presses_per_day * duration / 86400.0);
        int count = count_dist(rng);
        std::uniform_real_distribution<double> time_dist(0.0, duration);
        std::uniform_real_distribution<double> pause_dist(900.0, 5400.0);
        std::vector<std::pair<double, double>> windows;
        for (int i = 0; i < count; ++i) {
            double t = time_dist(rng);
            double pause = pause_dist(rng);
            windows.emplace_back(t, std::min(t + pause, duration - 1.0));
        }
        std::sort(windows.begin(), windows.end());
        double clear_until = 0.0;
        for (const auto& [begin, end] : windows) {
            if (begin < clear_until || end <= begin) continue;
            // Only toggle idle appliances: the readings stay 0 W either way,
            // so the ground-truth aggregation is unaffected.
            bool idle = true;
            for (double probe = begin; probe <= end; probe += 60.0)
                if (trajectory.active_at(probe) >= model.on_power_threshold) { idle = false; break; }
            if (!idle) continue;
            events.push_back(IamTimelineEvent{begin, TimelineEventKind::user_off});
            events.push_back(IamTimelineEvent{end, TimelineEventKind::user_on});
            clear_until = end + 60.0;
        }
    }
    return events;
}

namespace {

ApplianceModel constant_load(const std::string& name, double watts, double va) {
    ApplianceModel model;
    model.name = name;
    model.states = {{"on", watts, va, 86400.0}};
    return model;
}

ApplianceModel two_state(const std::string& name, double off_dwell, double on_watts,
                         double on_va, double on_dwell) {
    ApplianceModel model;
    model.name = name;
    model.states = {{"off", 0.0, 0.0, off_dwell}, {"on", on_watts, on_va, on_dwell}};
    return model;
}

ApplianceModel fridge_model() {
    ApplianceModel model;
    model.name = "fridge";
    model.room = "kitchen";
    model.states = {{"off", 0.0, 0.0, 1400.0},
                    {"compressor", 90.0, 150.0, 1300.0},
                    {"lamp", 17.0, 17.0, 120.0},
                    {"defrost", 250.0, 260.0, 900.0}};
    model.transitions = {{0.0, 0.88, 0.09, 0.03},
                         {1.0, 0.0, 0.0, 0.0},
                         {1.0, 0.0, 0.0, 0.0},
                         {1.0, 0.0, 0.0, 0.0}};
    return model;
}

ApplianceModel vacuum_model() {
    ApplianceModel model;
    model.name = "vacuum_cleaner";
    model.states.push_back({"off", 0.0, 0.0, 80000.0});
    for (int setting = 1; setting <= 6; ++setting) {
        double watts = 200.0 + 200.0 * setting;
        model.states.push_back({"setting" + std::to_string(setting), watts, watts / 0.9, 240.0});
    }
    // From off: any setting. From a setting: mostly off, otherwise hop to
    // another setting.
    std::vector<double> from_off(7, 1.0 / 6.0);
    from_off[0] = 0.0;
    model.transitions.push_back(from_off);
    for (int s = 1; s <= 6; ++s) {
        std::vector<double> row(7, 0.1);
        row[0] = 0.5;
        row[static_cast<std::size_t>(s)] = 0.0;
        model.transitions.push_back(row);
    }
    model.unplugged_when_off = true;
    return model;
}

ApplianceModel washing_machine_model() {
    ApplianceModel model;
    model.name = "washing_machine";
    model.states = {{"off", 0.0, 0.0, 30000.0},
                    {"wash", 600.0, 900.0, 1500.0},
                    {"spin", 350.0, 550.0, 500.0}};
    return model; // cycles off -> wash -> spin -> off
}

ApplianceModel dishwasher_model() {
    ApplianceModel model;
    model.name = "dishwasher";
    model.states = {{"off", 0.0, 0.0, 35000.0},
                    {"heat", 1900.0, 1900.0, 900.0},
                    {"pump", 120.0, 200.0, 1200.0}};
    return model;
}

House demo_house() {
    House house;
    house.appliances.push_back(fridge_model());
    auto kettle = two_state("kettle", 10600.0, 2400.0, 2400.0, 150.0);
    kettle.idle_presses_per_day = 0.5;
    house.appliances.push_back(kettle);
    house.appliances.push_back(washing_machine_model());
    house.appliances.push_back(two_state("lights", 14000.0, 120.0, 120.0, 5000.0));
    house.appliances.push_back(vacuum_model());
    house.iam_count = 5;
    house.vampire_power = 20.0;
    return house;
}

House house1() {
    House house;
    auto& a = house.appliances;
    a.push_back(fridge_model());
    a.push_back(two_state("freezer", 1200.0, 90.0, 140.0, 1000.0));
    auto kettle = two_state("kettle", 13000.0, 2400.0, 2400.0, 150.0);
    kettle.idle_presses_per_day = 0.4;
    a.push_back(kettle);
    auto toaster = two_state("toaster", 21600.0, 1100.0, 1100.0, 120.0);
    toaster.idle_presses_per_day = 0.2;
    a.push_back(toaster);
    a.push_back(two_state("microwave", 14000.0, 1300.0, 1800.0, 90.0));
    a.push_back(two_state("oven", 24000.0, 1800.0, 1800.0, 350.0));
    auto washing = washing_machine_model();
    washing.states[0].mean_dwell_s = 40000.0;
    a.push_back(washing);
    auto dishwasher = dishwasher_model();
    dishwasher.states[0].mean_dwell_s = 28000.0;
    dishwasher.states[1].mean_dwell_s = 500.0;
    a.push_back(dishwasher);
    a.push_back(two_state("television", 22000.0, 110.0, 140.0, 6000.0));
    a.push_back(two_state("computer", 25000.0, 140.0, 170.0, 5000.0));
    a.push_back(two_state("computer_monitor", 25000.0, 35.0, 45.0, 5000.0));
    a.push_back(two_state("kitchen_lights", 14000.0, 60.0, 60.0, 4000.0));
    a.push_back(two_state("lounge_lights", 14000.0, 60.0, 60.0, 4000.0));
    a.push_back(two_state("bedroom_lights", 14000.0, 60.0, 60.0, 4000.0));
    a.push_back(two_state("bedroom_lamp", 20000.0, 40.0, 40.0, 4000.0));
    a.push_back(vacuum_model());
    a.push_back(two_state("hifi", 30000.0, 25.0, 35.0, 6000.0));

    // Always-on small loads: routers, chargers, clocks, standby electronics.
    const double standby_watts[] = {3.0, 2.5, 2.0, 1.5, 1.0, 0.5, 2.2, 1.8, 1.2, 0.8, 2.8, 0.6};
    for (int i = 0; i < 35; ++i) {
        double watts = standby_watts[i % 12];
        a.push_back(constant_load("standby_device_" + std::to_string(i + 1), watts, watts * 1.6));
    }

    // Loads with no monitor of their own; duty cycles sized so the
    // submetered share of energy lands near 0.80 with enough residual
    // variance to pull the mains/submeter correlation off 1.0.
    auto heater = two_state("portable_heater", 8600.0, 420.0, 430.0, 500.0);
    heater.metered = false;
    a.push_back(heater);
    auto towel_rail = two_state("towel_rail", 7100.0, 260.0, 260.0, 700.0);
    towel_rail.metered = false;
    a.push_back(towel_rail);

    for (auto& m : a) {
        if (m.name == "kettle" || m.name == "toaster" || m.name == "microwave" ||
            m.name == "oven" || m.name == "dishwasher" || m.name == "kitchen_lights" ||
            m.name == "freezer" || m.name == "washing_machine")
            m.room = "kitchen";
        else if (m.name == "television" || m.name == "hifi" || m.name == "lounge_lights")
            m.room = "lounge";
        else if (m.name.rfind("bedroom", 0) == 0)
            m.room = "bedroom";
    }

    int metered = 0;
    for (const auto& m : a)
        if (m.metered) ++metered;
    house.iam_count = metered;
    house.vampire_power = 5.0;
    return house;
}

std::vector<double> parse_row(const TextNode& node) {
    std::istringstream in(node.as_string());
    std::vector<double> row;
    double value;
    while (in >> value) row.push_back(value);
    if (!in.eof())
        throw parse_error(node.source_file, node.source_line, "bad transition row");
    return row;
}

} // namespace

House make_preset(std::string_view name) {
    if (name == "demo") return demo_house();
    if (name == "house1") return house1();
    throw std::invalid_argument("unknown house preset '" + std::string(name) + "'");
}

House load_house(const std::filesystem::path& path) {
    TextNode root = parse_textdoc_file(path);
    House house;
    const TextNode& top = root.at("house");
    house.iam_count = static_cast<int>(top.at("iam_count").as_int());
    house.vampire_power = top.at("vampire_power").as_double();
    if (const TextNode* appliances = root.find("appliances")) {
        for (const TextNode& item : appliances->items()) {
            ApplianceModel model;
            model.name = item.at("name").as_string();
            if (const TextNode* v = item.find("room")) model.room = v->as_string();
            if (const TextNode* v = item.find("metered")) model.metered = v->as_bool();
            if (const TextNode* v = item.find("unplugged_when_off")) model.unplugged_when_off = v->as_bool();
            if (const TextNode* v = item.find("on_power_threshold")) model.on_power_threshold = v->as_double();
            if (const TextNode* v = item.find("idle_presses_per_day")) model.idle_presses_per_day = v->as_double();
            for (const TextNode& state : item.at("states").items()) {
                ApplianceState s;
                s.name = state.at("name").as_string();
                s.active_watts = state.at("active_watts").as_double();
                s.apparent_va = state.at("apparent_va").as_double();
                s.mean_dwell_s = state.at("mean_dwell_s").as_double();
                model.states.push_back(std::move(s));
            }
            if (const TextNode* rows = item.find("transitions"))
                for (const TextNode& row : rows->items()) model.transitions.push_back(parse_row(row));
            house.appliances.push_back(std::move(model));
        }
    }
    validate(house);
    return house;
}

void save_house(const House& house, const std::filesystem::path& path) {
    validate(house);
    TextNode root = TextNode::map();
    TextNode top = TextNode::map();
    top["iam_count"] = TextNode::scalar(std::to_string(house.iam_count));
    top["vampire_power"] = TextNode::scalar(format_shortest(house.vampire_power));
    root["house"] = top;
    if (!house.appliances.empty()) {
        TextNode list = TextNode::list();
        for (const auto& model : house.appliances) {
            TextNode item = TextNode::map();
            item["name"] = TextNode::scalar(model.name);
            if (!model.room.empty()) item["room"] = TextNode::scalar(model.room);
            item["metered"] = TextNode::scalar(model.metered ? "true" : "false");
            item["unplugged_when_off"] = TextNode::scalar(model.unplugged_when_off ? "true" : "false");
            item["on_power_threshold"] = TextNode::scalar(format_shortest(model.on_power_threshold));
            item["idle_presses_per_day"] = TextNode::scalar(format_shortest(model.idle_presses_per_day));
            TextNode states = TextNode::list();
            for (const auto& s : model.states) {
                TextNode state = TextNode::map();
                state["name"] = TextNode::scalar(s.name);
                state["active_watts"] = TextNode::scalar(format_shortest(s.active_watts));
                state["apparent_va"] = TextNode::scalar(format_shortest(s.apparent_va));
                state["mean_dwell_s"] = TextNode::scalar(format_shortest(s.mean_dwell_s));
                states.push_back(state);
            }
            item["states"] = states;
            if (!model.transitions.empty()) {
                TextNode rows = TextNode::list();
                for (const auto& row : model.transitions) {
                    std::string joined;
                    for (std::size_t i = 0; i < row.size(); ++i) {
                        if (i) joined += ' ';
                        joined += format_shortest(row[i]);
                    }
                    rows.push_back(TextNode::scalar(joined));
                }
                item["transitions"] = rows;
            }
            list.push_back(item);
        }
        root["appliances"] = list;
    }
    write_textdoc_file(root, path);
}

} // namespace dale
