#include "dale/pipeline.hpp"

#include "dale/calibration.hpp"
#include "dale/errors.hpp"
#include "dale/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace dale {

namespace fs = std::filesystem;

double mains_voltage_at(double t) {
    return 230.0 + 2.5 * std::sin(2.0 * std::numbers::pi * t / 7200.0) +
           1.2 * std::sin(2.0 * std::numbers::pi * t / 86400.0 + 0.7);
}

WaveformChunk synth_mains_waveform(const HouseTrajectory& trajectory, double t_begin,
                                   double seconds, int sample_rate, double start_time) {
    auto whole_seconds = static_cast<int>(std::llround(seconds));
    if (whole_seconds < 1 || std::abs(seconds - whole_seconds) > 1e-9)
        throw std::invalid_argument("synth_mains_waveform: seconds must be a positive integer");

    const auto n = static_cast<Eigen::Index>(whole_seconds) * sample_rate;
    WaveformChunk chunk;
    chunk.start_time = start_time;
    chunk.sample_rate = sample_rate;
    chunk.voltage.resize(n);
    chunk.current.resize(n);

    constexpr double kOmega = 2.0 * std::numbers::pi * 50.0;
    for (int s = 0; s < whole_seconds; ++s) {
        const double t_abs = t_begin + s;
        const double v_rms = mains_voltage_at(t_abs);
        const double p = trajectory.mains_active_at(t_abs);
        const double s_va = std::max(trajectory.mains_apparent_at(t_abs), p);
        const double q = std::sqrt(std::max(0.0, s_va * s_va - p * p));
        const Eigen::Index offset = static_cast<Eigen::Index>(s) * sample_rate;
        for (int k = 0; k < sample_rate; ++k) {
            const double t = static_cast<double>(s) + static_cast<double>(k) / sample_rate;
            const double in_phase = std::sin(kOmega * t);
            const double quadrature = std::cos(kOmega * t);
            chunk.voltage[offset + k] = std::numbers::sqrt2 * v_rms * in_phase;
            chunk.current[offset + k] =
                std::numbers::sqrt2 / v_rms * (p * in_phase + q * quadrature);
        }
    }
    return chunk;
}

HouseDataset build_dataset(const RunSpec& spec, SimResult* sim_result) {
    validate(spec.house);
    if (!(spec.duration > 0)) throw std::invalid_argument("run spec: duration must be positive");

    std::mt19937_64 rng(spec.seed);
    HouseTrajectory trajectory = simulate_trajectory(spec.house, spec.duration, rng);

    std::vector<std::size_t> metered;
    for (std::size_t a = 0; a < spec.house.appliances.size(); ++a)
        if (spec.house.appliances[a].metered) metered.push_back(a);

    // Channel 1 is the whole-house CC-TX; IAM channels follow in appliance
    // order.
    HouseDataset dataset;
    dataset.house_number = spec.house_number;
    HouseMetadata& metadata = dataset.metadata;
    metadata.building_type = "end_of_terrace";
    metadata.construction_year = 1905;
    metadata.heat_source = "natural_gas";
    metadata.occupants = 4;
    metadata.meters.push_back(MeterInfo{1, "current_cost_tx", true, PowerUnit::volt_amperes});
    for (std::size_t i = 0; i < metered.size(); ++i) {
        const auto& model = spec.house.appliances[metered[i]];
        const int channel = static_cast<int>(i) + 2;
        metadata.meters.push_back(MeterInfo{channel, "edf_iam", false, PowerUnit::watts});
        ApplianceInfo info;
        info.name = model.name;
        info.meter_channel = channel;
        info.room = model.room;
        info.on_power_threshold = model.on_power_threshold;
        metadata.appliances.push_back(std::move(info));
    }

    std::vector<std::vector<IamTimelineEvent>> timelines;
    timelines.reserve(metered.size());
    for (std::size_t i = 0; i < metered.size(); ++i)
        timelines.push_back(presence_timeline(trajectory.appliances[metered[i]],
                                              spec.house.appliances[metered[i]], spec.duration,
                                              rng));

    auto iams = make_iam_nodes(metered.size(), rng);
    auto cctxs = make_cctx_nodes(1, rng);

    DemandSource demand;
    demand.iam_watts = [&trajectory, &metered](std::size_t iam_index, double t) {
        return trajectory.appliances[metered[iam_index]].active_at(t);
    };
    demand.cctx_va = [&trajectory](std::size_t, double t) {
        return trajectory.mains_apparent_at(t);
    };

    SimConfig sim_cfg = spec.sim;
    sim_cfg.duration = spec.duration;
    sim_cfg.rng_seed = rng();
    SimResult sim = run_simulation(sim_cfg, iams, cctxs, demand, timelines);

    std::vector<ChannelSeries> channels(metered.size() + 1);
    channels[0].channel_index = 1;
    channels[0].unit = PowerUnit::volt_amperes;
    for (std::size_t i = 0; i < metered.size(); ++i) {
        channels[i + 1].channel_index = static_cast<int>(i) + 2;
        channels[i + 1].unit = PowerUnit::watts;
    }
    for (const auto& reading : sim.readings) {
        if (reading.filtered) continue;
        std::size_t slot = reading.kind == ReadingKind::whole_house ? 0 : reading.node_index + 1;
        channels[slot].readings.push_back(ChannelReading{
            static_cast<std::int64_t>(std::llround(spec.start_time + reading.t)), reading.value});
    }
    dataset.channels = std::move(channels);

    for (std::size_t i = 0; i < timelines.size(); ++i) {
        auto presses = derive_button_events(timelines[i]);
        if (presses.empty()) continue;
        auto& events = dataset.button_events[static_cast<int>(i) + 2];
        for (const auto& press : presses)
            events.push_back(ButtonEvent{
                static_cast<std::int64_t>(std::llround(spec.start_time + press.t)), press.value});
    }

    MainsSeries mains;
    const auto mains_rows = static_cast<std::int64_t>(spec.duration);
    mains.reserve(static_cast<std::size_t>(mains_rows));
    for (std::int64_t t = 0; t < mains_rows; ++t) {
        const auto tt = static_cast<double>(t);
        MainsRow row;
        row.timestamp = spec.start_time + tt;
        row.active_power = trajectory.mains_active_at(tt);
        row.apparent_power = std::max(trajectory.mains_apparent_at(tt), row.active_power);
        row.rms_voltage = mains_voltage_at(tt);
        mains.push_back(row);
    }
    dataset.mains = std::move(mains);
    dataset.calibration = constants_for(spec.adc);

    if (spec.waveform_seconds > 0) {
        // Mirror the capture chain: sample at the ADC rate, quantize, then
        // run the anti-alias downsample to the storage rate. Blocks are kept
        // short so the capture-rate buffer stays small.
        double remaining = std::min(spec.waveform_seconds, spec.duration);
        double offset = 0.0;
        while (remaining >= 1.0) {
            double block = std::min(remaining, 120.0);
            auto whole = std::floor(block);
            WaveformChunk raw = synth_mains_waveform(trajectory, offset, whole, spec.capture_rate,
                                                     spec.start_time + offset);
            WaveformChunk quantized = quantize(raw, spec.adc).chunk;
            dataset.waveform_chunks.push_back(downsample(quantized, spec.waveform_rate));
            offset += whole;
            remaining -= whole;
        }
    }

    if (sim_result != nullptr) *sim_result = std::move(sim);
    return dataset;
}

fs::path simulate_dataset(const RunSpec& spec) {
    SimResult sim;
    HouseDataset dataset = build_dataset(spec, &sim);
    fs::path dir = write_house(dataset, spec.out_root);
    if (spec.event_log) {
        std::ofstream out(*spec.event_log);
        if (!out) throw std::runtime_error("cannot open " + spec.event_log->string());
        write_event_log(sim, out);
    }
    log_line("simulated " + std::to_string(dataset.channels.size()) + " channels into " +
             dir.string());
    return dir;
}

void meter_waveforms(const fs::path& dir, const CalibrationConstants& calibration,
                     const fs::path& out_file, double chunk_period) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("vi-", 0) == 0 && name.size() > 4 && name.substr(name.size() - 4) == ".wav")
            files.push_back(entry.path());
    }
    if (files.empty())
        throw std::runtime_error("no vi-*.wav waveform chunks under " + dir.string());
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return parse_waveform_filename(a.filename().string()) <
               parse_waveform_filename(b.filename().string());
    });

    MainsSeries rows;
    for (const auto& file : files) {
        WaveformChunk chunk = read_waveform_chunk(file, calibration);
        for (const auto& m : compute_metrics(chunk, chunk_period))
            rows.push_back(MainsRow{m.timestamp, m.active_power, m.apparent_power, m.rms_voltage});
    }
    std::sort(rows.begin(), rows.end(),
              [](const MainsRow& a, const MainsRow& b) { return a.timestamp < b.timestamp; });
    write_mains(rows, out_file);
}

} // namespace dale
