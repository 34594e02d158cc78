#pragma once

#include "dale/dataset_io.hpp"
#include "dale/household.hpp"
#include "dale/simulation.hpp"
#include "dale/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace dale {

/// Everything one end-to-end run needs: the scenario, the radio model, the
/// meter front end and where to put the output.
struct RunSpec {
    House house;
    int house_number = 1;
    double duration = 86400.0;          ///< simulated seconds
    std::uint64_t seed = 1;
    double start_time = 1422000000.0;   ///< unix epoch of the first sample
    SimConfig sim;                      ///< duration and seed are overwritten
    AdcConfig adc;
    double chunk_period = 1.0;
    double waveform_seconds = 0.0; ///< emit this much waveform data
    int capture_rate = 44100;      ///< ADC sampling rate
    int waveform_rate = 16000;     ///< storage rate after the anti-alias stage
    std::filesystem::path out_root;
    std::optional<std::filesystem::path> event_log;
};

/// Simulates the house, runs the radio network, and writes the full
/// house_<x> tree. Deterministic for a fixed seed. Returns the house dir.
std::filesystem::path simulate_dataset(const RunSpec& spec);

/// Builds an in-memory dataset without touching the filesystem (the
/// simulate command plus tests share this).
HouseDataset build_dataset(const RunSpec& spec, SimResult* sim_result = nullptr);

/// Reads every vi-*.wav chunk under dir, reduces it to chunk_period metrics
/// rows, and writes them as a mains.dat-format file.
void meter_waveforms(const std::filesystem::path& dir,
                     const CalibrationConstants& calibration,
                     const std::filesystem::path& out_file, double chunk_period = 1.0);

/// Synthesizes a mains voltage/current waveform whose per-second P and S
/// track the house trajectory.
WaveformChunk synth_mains_waveform(const HouseTrajectory& trajectory, double t_begin,
                                   double seconds, int sample_rate, double start_time);

/// Nominal mains rms voltage with a slow deterministic wobble.
double mains_voltage_at(double t);

} // namespace dale
