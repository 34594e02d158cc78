#include "dale/errors.hpp"
#include "dale/pipeline.hpp"
#include "dale/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;       // bad flags or configuration
constexpr int kExitConsistency = 2; // the data contradicts itself
constexpr int kExitIo = 3;          // missing or unwritable files

std::uint64_t fresh_seed() {
    std::random_device device;
    return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

fs::path resolve_house_dir(const fs::path& root) {
    if (root.filename().string().rfind("house_", 0) == 0) return root;
    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && entry.path().filename().string().rfind("house_", 0) == 0)
            candidates.push_back(entry.path());
    if (candidates.size() != 1)
        throw std::invalid_argument(root.string() + " does not contain exactly one house_<x> directory");
    return candidates.front();
}

int run_simulate(const std::string& preset, const std::string& config, const std::string& out,
                 std::uint64_t seed, double duration, int house_number, double start_time,
                 double waveform_seconds, double chunk_period, const std::string& event_log,
                 bool no_guard, double bit_flip) {
    dale::RunSpec spec;
    spec.house = config.empty() ? dale::make_preset(preset) : dale::load_house(config);
    spec.house_number = house_number;
    spec.duration = duration;
    spec.seed = seed;
    spec.start_time = start_time;
    spec.waveform_seconds = waveform_seconds;
    spec.chunk_period = chunk_period;
    spec.out_root = out;
    spec.sim.guard_enabled = !no_guard;
    if (bit_flip >= 0) spec.sim.bit_flip_probability = bit_flip;
    if (!event_log.empty()) spec.event_log = fs::path(event_log);

    std::cout << "seed: " << seed << "\n";
    fs::path dir = dale::simulate_dataset(spec);
    std::cout << "dataset: " << dir.string() << "\n";
    return kExitOk;
}

int run_meter(const std::string& in_dir, const std::string& calibration_file,
              const std::string& out_file, double chunk_period) {
    fs::path dir = in_dir;
    fs::path calib = calibration_file.empty() ? dir / "calibration.cfg" : fs::path(calibration_file);
    if (!fs::exists(calib) && calibration_file.empty() && fs::exists(dir / "calibration.dat"))
        calib = dir / "calibration.dat";
    dale::CalibrationConstants constants = dale::read_calibration(calib);
    fs::path out = out_file.empty() ? dir / "mains.dat" : fs::path(out_file);
    dale::meter_waveforms(dir, constants, out, chunk_period);
    std::cout << "mains: " << out.string() << "\n";
    return kExitOk;
}

int run_validate(const std::string& dataset_dir, const std::string& out_dir,
                 double large_gap_threshold, double resample_period) {
    fs::path house_dir = resolve_house_dir(dataset_dir);
    dale::ReadResult read = dale::read_house(house_dir, {});
    for (const auto& warning : read.warnings) std::cerr << "warning: " << warning << "\n";

    dale::ReportOptions options;
    options.large_gap_threshold = large_gap_threshold;
    options.resample_period = resample_period;
    dale::DatasetReport report = dale::report(read.dataset, options);
    std::cout << dale::format_report_summary(report.summary);
    if (!out_dir.empty()) {
        dale::write_report_files(report, out_dir);
        std::cout << "report files: " << out_dir << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dale_forge: appliance-metering network simulator and power-meter pipeline"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "synthesize a house and write its dataset");
    std::string preset = "demo", config, out = ".", event_log;
    std::uint64_t seed = fresh_seed();
    double duration = 86400.0, start_time = 1422000000.0, waveform_seconds = 0.0;
    double chunk_period = 1.0, bit_flip = -1.0;
    int house_number = 1;
    bool no_guard = false;
    simulate->add_option("--house-preset", preset, "scenario preset: demo or house1");
    simulate->add_option("--config", config, "house configuration file (overrides the preset)");
    simulate->add_option("--out", out, "output root directory")->required();
    simulate->add_option("--seed", seed, "rng seed (random when omitted)");
    simulate->add_option("--duration", duration, "simulated seconds");
    simulate->add_option("--days", [&duration](const std::vector<std::string>& values) {
        duration = std::stod(values.front()) * 86400.0;
        return true;
    }, "simulated days (alternative to --duration)");
    simulate->add_option("--house-number", house_number, "house_<x> directory number");
    simulate->add_option("--start-time", start_time, "unix time of the first sample");
    simulate->add_option("--waveform-seconds", waveform_seconds,
                         "emit this many seconds of 16 kHz waveform chunks");
    simulate->add_option("--chunk-period", chunk_period, "metrics window length in seconds");
    simulate->add_option("--event-log", event_log, "write the radio event log to this file");
    simulate->add_flag("--no-guard", no_guard, "disable the CC-TX guard window");
    simulate->add_option("--bit-flip-prob", bit_flip, "per-bit corruption probability");

    auto* meter = app.add_subcommand("meter", "reduce waveform chunks to a 1 Hz mains file");
    std::string meter_in, meter_calibration, meter_out;
    double meter_chunk_period = 1.0;
    meter->add_option("--in", meter_in, "directory holding vi-*.wav chunks")->required();
    meter->add_option("--calibration", meter_calibration,
                      "calibration file (default: <in>/calibration.cfg)");
    meter->add_option("--out", meter_out, "output file (default: <in>/mains.dat)");
    meter->add_option("--chunk-period", meter_chunk_period, "metrics window length in seconds");

    auto* validate = app.add_subcommand("validate", "check a dataset and print its statistics");
    std::string validate_dir, validate_out;
    double large_gap_threshold = 120.0, resample_period = 60.0;
    validate->add_option("dataset", validate_dir, "dataset root or house_<x> directory")->required();
    validate->add_option("--out", validate_out, "write report files to this directory");
    validate->add_option("--large-gap-threshold", large_gap_threshold,
                         "gap length treated as a deliberate unplug (seconds)");
    validate->add_option("--resample-period", resample_period,
                         "correlation resampling period (seconds)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate->parsed())
            return run_simulate(preset, config, out, seed, duration, house_number, start_time,
                                waveform_seconds, chunk_period, event_log, no_guard, bit_flip);
        if (meter->parsed())
            return run_meter(meter_in, meter_calibration, meter_out, meter_chunk_period);
        if (validate->parsed())
            return run_validate(validate_dir, validate_out, large_gap_threshold, resample_period);
    } catch (const dale::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsistency;
    } catch (const dale::consistency_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsistency;
    } catch (const dale::insufficient_data& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsistency;
    } catch (const dale::degenerate_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsistency;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
