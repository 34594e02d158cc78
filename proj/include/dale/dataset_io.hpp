#pragma once

#include "dale/calibration.hpp"
#include "dale/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dale {

enum class PowerUnit { watts, volt_amperes };

struct ChannelReading {
    std::int64_t timestamp = 0; ///< unix seconds
    int power = 0;              ///< non-negative integer

    bool operator==(const ChannelReading&) const = default;
};

/// One submeter's 6-second data: timestamps non-decreasing, integer power.
struct ChannelSeries {
    int channel_index = 0;
    PowerUnit unit = PowerUnit::watts;
    std::vector<ChannelReading> readings;

    bool operator==(const ChannelSeries&) const = default;
};

/// One row of the 1-second whole-house file: timestamp (1 decimal place),
/// active power, apparent power and rms voltage (2 decimal places each).
struct MainsRow {
    double timestamp = 0.0;
    double active_power = 0.0;
    double apparent_power = 0.0;
    double rms_voltage = 0.0;

    bool operator==(const MainsRow&) const = default;
};

using MainsSeries = std::vector<MainsRow>;

struct ButtonEvent {
    std::int64_t timestamp = 0;
    int value = 0; ///< 1 = toggled on, 0 = toggled off

    bool operator==(const ButtonEvent&) const = default;
};

struct MeterInfo {
    int channel = 0;
    std::string device;     ///< e.g. "soundcard_power_meter", "edf_iam", "current_cost_tx"
    bool site_meter = false;
    PowerUnit unit = PowerUnit::watts;

    bool operator==(const MeterInfo&) const = default;
};

struct ApplianceInfo {
    std::string name;
    int meter_channel = 0;
    std::string room;
    double on_power_threshold = 5.0; ///< serialized only when != 5

    bool operator==(const ApplianceInfo&) const = default;
};

struct HouseMetadata {
    std::string building_type;
    int construction_year = 0;
    std::string heat_source;
    int occupants = 0;
    std::vector<MeterInfo> meters;
    std::vector<ApplianceInfo> appliances;

    bool operator==(const HouseMetadata&) const = default;
};

/// Throws consistency_error on duplicate channels, appliances wired to
/// missing meters, or non-positive thresholds.
void validate(const HouseMetadata& metadata);

/// channel -> label rows regenerated from the metadata; site meters label as
/// "aggregate", other channels as their appliance's name.
std::vector<std::pair<int, std::string>> make_labels(const HouseMetadata& metadata);

/// Directory-shaped bundle mirroring one house_<x> tree.
struct HouseDataset {
    int house_number = 1;
    HouseMetadata metadata;
    std::vector<ChannelSeries> channels;            ///< sorted by channel_index
    std::map<int, std::vector<ButtonEvent>> button_events;
    std::optional<MainsSeries> mains;
    std::optional<CalibrationConstants> calibration;
    std::vector<std::string> waveform_files;        ///< file names inside the house dir
    std::vector<WaveformChunk> waveform_chunks;     ///< loaded chunks, if requested
};

bool dataset_equal(const HouseDataset& a, const HouseDataset& b);

// Per-file readers and writers. Readers throw parse_error with file and
// line on malformed content. Readers keep no shared state and are safe to
// call concurrently; writers need exclusive access to the house directory.
void write_channel(const ChannelSeries& series, const std::filesystem::path& file);
ChannelSeries read_channel(const std::filesystem::path& file, int channel_index, PowerUnit unit);

void write_button_events(const std::vector<ButtonEvent>& events, const std::filesystem::path& file);
std::vector<ButtonEvent> read_button_events(const std::filesystem::path& file);

void write_mains(const MainsSeries& series, const std::filesystem::path& file);
MainsSeries read_mains(const std::filesystem::path& file);

void write_calibration(const CalibrationConstants& constants, const std::filesystem::path& file);
CalibrationConstants read_calibration(const std::filesystem::path& file);

void write_metadata(const HouseMetadata& metadata, const std::filesystem::path& file);
HouseMetadata read_metadata(const std::filesystem::path& file);

void write_labels(const HouseMetadata& metadata, const std::filesystem::path& file);
std::vector<std::pair<int, std::string>> read_labels(const std::filesystem::path& file);

/// vi-<seconds>_<microseconds>.wav, underscore as the decimal point,
/// microseconds zero-padded to six digits.
std::string waveform_filename(double start_time);
double parse_waveform_filename(const std::string& name);

/// Stereo 32-bit little-endian PCM with a minimal RIFF header; channel 0 is
/// voltage, channel 1 current. Physical units map through value =
/// sample * step constant. Chunks are limited to one hour.
std::filesystem::path write_waveform_chunk(const WaveformChunk& chunk,
                                           const CalibrationConstants& calibration,
                                           const std::filesystem::path& dir);

/// Normalized samples in [-1, 1] plus the recording start time; used when no
/// calibration is available to convert to physical units.
struct RawWaveform {
    double start_time = 0.0;
    int sample_rate = 0;
    Eigen::ArrayXd voltage_norm;
    Eigen::ArrayXd current_norm;
};

RawWaveform read_waveform_raw(const std::filesystem::path& file);
WaveformChunk read_waveform_chunk(const std::filesystem::path& file,
                                  const CalibrationConstants& calibration);

struct ReadOptions {
    bool load_waveforms = false;
};

struct ReadResult {
    HouseDataset dataset;
    std::vector<std::string> warnings; ///< unknown files, label text mismatches
};

/// Writes the complete house_<x> tree under root; returns the house dir.
std::filesystem::path write_house(const HouseDataset& dataset, const std::filesystem::path& root);

/// Reads a house_<x> directory back. Unknown file names are ignored with a
/// warning; malformed rows raise parse_error; labels/metadata disagreement
/// raises consistency_error.
ReadResult read_house(const std::filesystem::path& house_dir, const ReadOptions& options = {});

} // namespace dale
