#include "dale/dataset_io.hpp"

#include "dale/errors.hpp"
#include "dale/textdoc.hpp"
#include "dale/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace dale {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string> split_columns(const std::string& line) {
    std::vector<std::string> columns;
    std::size_t begin = 0;
    while (true) {
        std::size_t space = line.find(' ', begin);
        if (space == std::string::npos) {
            columns.push_back(line.substr(begin));
            return columns;
        }
        columns.push_back(line.substr(begin, space - begin));
        begin = space + 1;
    }
}

template <typename T>
T parse_number(const std::string& token, const fs::path& file, int line, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        throw parse_error(file.string(), line, std::string("bad ") + what + " '" + token + "'");
    return value;
}

std::ofstream open_out(const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
    return out;
}

void finish_out(std::ofstream& out, const fs::path& file) {
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + file.string());
}

PowerUnit parse_unit(const TextNode& node) {
    std::string text = node.as_string();
    if (text == "watts") return PowerUnit::watts;
    if (text == "volt_amperes") return PowerUnit::volt_amperes;
    throw parse_error(node.source_file, node.source_line, "unknown unit '" + text + "'");
}

const char* unit_name(PowerUnit unit) {
    return unit == PowerUnit::watts ? "watts" : "volt_amperes";
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

std::uint32_t get_u32(const std::string& data, std::size_t offset) {
    return static_cast<std::uint8_t>(data[offset]) |
           (static_cast<std::uint8_t>(data[offset + 1]) << 8) |
           (static_cast<std::uint8_t>(data[offset + 2]) << 16) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[offset + 3])) << 24);
}

std::uint16_t get_u16(const std::string& data, std::size_t offset) {
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(data[offset]) |
                                      (static_cast<std::uint8_t>(data[offset + 1]) << 8));
}

std::optional<int> try_parse_int(const std::string& token) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
        return std::nullopt;
    return value;
}

std::int32_t to_adc_steps(double value, double step) {
    double steps = value / step;
    if (steps >= 2147483647.0) return 2147483647;
    if (steps <= -2147483648.0) return -2147483648LL;
    return static_cast<std::int32_t>(std::llround(steps));
}

constexpr double kInt32HalfRange = 2147483648.0;

} // namespace

void validate(const HouseMetadata& metadata) {
    std::set<int> channels;
    for (const auto& meter : metadata.meters) {
        if (meter.channel < 1)
            throw consistency_error("metadata: channel indices must be positive");
        if (!channels.insert(meter.channel).second)
            throw consistency_error("metadata: duplicate channel " + std::to_string(meter.channel));
    }
    for (const auto& appliance : metadata.appliances) {
        if (!channels.contains(appliance.meter_channel))
            throw consistency_error("metadata: appliance '" + appliance.name +
                                    "' wired to unknown meter " +
                                    std::to_string(appliance.meter_channel));
        if (!(appliance.on_power_threshold > 0))
            throw consistency_error("metadata: appliance '" + appliance.name +
                                    "' has a non-positive on_power_threshold");
    }
}

std::vector<std::pair<int, std::string>> make_labels(const HouseMetadata& metadata) {
    validate(metadata);
    std::vector<MeterInfo> meters = metadata.meters;
    std::sort(meters.begin(), meters.end(),
              [](const MeterInfo& a, const MeterInfo& b) { return a.channel < b.channel; });
    std::vector<std::pair<int, std::string>> labels;
    for (const auto& meter : meters) {
        if (meter.site_meter) {
            labels.emplace_back(meter.channel, "aggregate");
            continue;
        }
        const ApplianceInfo* wired = nullptr;
        for (const auto& appliance : metadata.appliances) {
            if (appliance.meter_channel == meter.channel) {
                wired = &appliance;
                break;
            }
        }
        if (wired == nullptr)
            throw consistency_error("metadata: channel " + std::to_string(meter.channel) +
                                    " has no appliance and is not a site meter");
        labels.emplace_back(meter.channel, wired->name);
    }
    return labels;
}

void write_channel(const ChannelSeries& series, const fs::path& file) {
    auto out = open_out(file);
    for (const auto& reading : series.readings) {
        if (reading.power < 0) throw std::invalid_argument("channel series: negative power");
        out << reading.timestamp << ' ' << reading.power << '\n';
    }
    finish_out(out, file);
}

ChannelSeries read_channel(const fs::path& file, int channel_index, PowerUnit unit) {
    ChannelSeries series;
    series.channel_index = channel_index;
    series.unit = unit;
    auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty() && i + 1 == lines.size()) break;
        auto cols = split_columns(lines[i]);
        if (cols.size() != 2)
            throw parse_error(file.string(), line_no, "expected 2 columns");
        ChannelReading reading;
        reading.timestamp = parse_number<std::int64_t>(cols[0], file, line_no, "timestamp");
        reading.power = parse_number<int>(cols[1], file, line_no, "power");
        if (reading.power < 0)
            throw parse_error(file.string(), line_no, "negative power reading");
        if (!series.readings.empty() && reading.timestamp < series.readings.back().timestamp)
            throw parse_error(file.string(), line_no, "timestamps must be non-decreasing");
        series.readings.push_back(reading);
    }
    return series;
}

void write_button_events(const std::vector<ButtonEvent>& events, const fs::path& file) {
    auto out = open_out(file);
    for (const auto& event : events) {
        if (event.value != 0 && event.value != 1)
            throw std::invalid_argument("button events: value must be 0 or 1");
        out << event.timestamp << ' ' << event.value << '\n';
    }
    finish_out(out, file);
}

std::vector<ButtonEvent> read_button_events(const fs::path& file) {
    std::vector<ButtonEvent> events;
    auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty() && i + 1 == lines.size()) break;
        auto cols = split_columns(lines[i]);
        if (cols.size() != 2)
            throw parse_error(file.string(), line_no, "expected 2 columns");
        ButtonEvent event;
        event.timestamp = parse_number<std::int64_t>(cols[0], file, line_no, "timestamp");
        event.value = parse_number<int>(cols[1], file, line_no, "value");
        if (event.value != 0 && event.value != 1)
            throw parse_error(file.string(), line_no, "button value must be 0 or 1");
        events.push_back(event);
    }
    return events;
}

void write_mains(const MainsSeries& series, const fs::path& file) {
    auto out = open_out(file);
    for (const auto& row : series) {
        out << format_fixed(row.timestamp, 1) << ' ' << format_fixed(row.active_power, 2) << ' '
            << format_fixed(row.apparent_power, 2) << ' ' << format_fixed(row.rms_voltage, 2)
            << '\n';
    }
    finish_out(out, file);
}

MainsSeries read_mains(const fs::path& file) {
    MainsSeries series;
    auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty() && i + 1 == lines.size()) break;
        auto cols = split_columns(lines[i]);
        if (cols.size() != 4)
            throw parse_error(file.string(), line_no, "expected 4 columns");
        MainsRow row;
        row.timestamp = parse_number<double>(cols[0], file, line_no, "timestamp");
        row.active_power = parse_number<double>(cols[1], file, line_no, "active power");
        row.apparent_power = parse_number<double>(cols[2], file, line_no, "apparent power");
        row.rms_voltage = parse_number<double>(cols[3], file, line_no, "rms voltage");
        if (!series.empty() && row.timestamp <= series.back().timestamp)
            throw parse_error(file.string(), line_no, "timestamps must be increasing");
        series.push_back(row);
    }
    return series;
}

void write_calibration(const CalibrationConstants& constants, const fs::path& file) {
    validate(constants);
    TextNode root = TextNode::map();
    root["volts_per_adc_step"] = TextNode::scalar(format_shortest(constants.volts_per_adc_step));
    root["amps_per_adc_step"] = TextNode::scalar(format_shortest(constants.amps_per_adc_step));
    root["phase_difference"] = TextNode::scalar(format_shortest(constants.phase_difference));
    write_textdoc_file(root, file);
}

CalibrationConstants read_calibration(const fs::path& file) {
    TextNode root = parse_textdoc_file(file);
    CalibrationConstants constants;
    constants.volts_per_adc_step = root.at("volts_per_adc_step").as_double();
    constants.amps_per_adc_step = root.at("amps_per_adc_step").as_double();
    if (const TextNode* phase = root.find("phase_difference"))
        constants.phase_difference = phase->as_double();
    validate(constants);
    return constants;
}

void write_metadata(const HouseMetadata& metadata, const fs::path& file) {
    validate(metadata);
    TextNode root = TextNode::map();
    TextNode building = TextNode::map();
    if (!metadata.building_type.empty()) building["type"] = TextNode::scalar(metadata.building_type);
    if (metadata.construction_year != 0)
        building["construction_year"] = TextNode::scalar(std::to_string(metadata.construction_year));
    if (!metadata.heat_source.empty())
        building["heat_source"] = TextNode::scalar(metadata.heat_source);
    if (metadata.occupants != 0)
        building["occupants"] = TextNode::scalar(std::to_string(metadata.occupants));
    if (!building.entries().empty()) root["building"] = building;

    if (!metadata.meters.empty()) {
        TextNode meters = TextNode::list();
        for (const auto& meter : metadata.meters) {
            TextNode node = TextNode::map();
            node["channel"] = TextNode::scalar(std::to_string(meter.channel));
            node["device"] = TextNode::scalar(meter.device);
            if (meter.site_meter) node["site_meter"] = TextNode::scalar("true");
            node["unit"] = TextNode::scalar(unit_name(meter.unit));
            meters.push_back(node);
        }
        root["meters"] = meters;
    }
    if (!metadata.appliances.empty()) {
        TextNode appliances = TextNode::list();
        for (const auto& appliance : metadata.appliances) {
            TextNode node = TextNode::map();
            node["name"] = TextNode::scalar(appliance.name);
            node["meter"] = TextNode::scalar(std::to_string(appliance.meter_channel));
            if (!appliance.room.empty()) node["room"] = TextNode::scalar(appliance.room);
            if (appliance.on_power_threshold != 5.0)
                node["on_power_threshold"] =
                    TextNode::scalar(format_shortest(appliance.on_power_threshold));
            appliances.push_back(node);
        }
        root["appliances"] = appliances;
    }
    write_textdoc_file(root, file);
}

HouseMetadata read_metadata(const fs::path& file) {
    TextNode root = parse_textdoc_file(file);
    HouseMetadata metadata;
    if (const TextNode* building = root.find("building")) {
        if (const TextNode* v = building->find("type")) metadata.building_type = v->as_string();
        if (const TextNode* v = building->find("construction_year"))
            metadata.construction_year = static_cast<int>(v->as_int());
        if (const TextNode* v = building->find("heat_source")) metadata.heat_source = v->as_string();
        if (const TextNode* v = building->find("occupants"))
            metadata.occupants = static_cast<int>(v->as_int());
    }
    if (const TextNode* meters = root.find("meters")) {
        for (const TextNode& node : meters->items()) {
            MeterInfo meter;
            meter.channel = static_cast<int>(node.at("channel").as_int());
            if (const TextNode* v = node.find("device")) meter.device = v->as_string();
            if (const TextNode* v = node.find("site_meter")) meter.site_meter = v->as_bool();
            if (const TextNode* v = node.find("unit")) meter.unit = parse_unit(*v);
            metadata.meters.push_back(std::move(meter));
        }
    }
    if (const TextNode* appliances = root.find("appliances")) {
        for (const TextNode& node : appliances->items()) {
            ApplianceInfo appliance;
            appliance.name = node.at("name").as_string();
            appliance.meter_channel = static_cast<int>(node.at("meter").as_int());
            if (const TextNode* v = node.find("room")) appliance.room = v->as_string();
            if (const TextNode* v = node.find("on_power_threshold"))
                appliance.on_power_threshold = v->as_double();
            metadata.appliances.push_back(std::move(appliance));
        }
    }
    validate(metadata);
    return metadata;
}

void write_labels(const HouseMetadata& metadata, const fs::path& file) {
    auto labels = make_labels(metadata);
    auto out = open_out(file);
    for (const auto& [channel, name] : labels) out << channel << ' ' << name << '\n';
    finish_out(out, file);
}

std::vector<std::pair<int, std::string>> read_labels(const fs::path& file) {
    std::vector<std::pair<int, std::string>> labels;
    auto lines = read_lines(file);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        if (lines[i].empty() && i + 1 == lines.size()) break;
        auto space = lines[i].find(' ');
        if (space == std::string::npos || space == 0 || space + 1 >= lines[i].size())
            throw parse_error(file.string(), line_no, "expected 'channel name'");
        int channel = parse_number<int>(lines[i].substr(0, space), file, line_no, "channel");
        labels.emplace_back(channel, lines[i].substr(space + 1));
    }
    return labels;
}

std::string waveform_filename(double start_time) {
    double seconds_part = std::floor(start_time);
    auto seconds = static_cast<std::int64_t>(seconds_part);
    auto micros = static_cast<std::int64_t>(std::llround((start_time - seconds_part) * 1e6));
    if (micros >= 1000000) {
        seconds += 1;
        micros -= 1000000;
    }
    std::string micro_text = std::to_string(micros);
    return "vi-" + std::to_string(seconds) + "_" +
           std::string(6 - micro_text.size(), '0') + micro_text + ".wav";
}

double parse_waveform_filename(const std::string& name) {
    auto bad = [&]() -> double {
        throw parse_error(name, 0, "waveform file names look like vi-<seconds>_<microseconds>.wav");
    };
    if (name.rfind("vi-", 0) != 0 || name.size() < 4 + 3 + 7) return bad();
    if (name.substr(name.size() - 4) != ".wav") return bad();
    std::string stem = name.substr(3, name.size() - 7);
    auto underscore = stem.find('_');
    if (underscore == std::string::npos || stem.size() - underscore - 1 != 6) return bad();
    std::int64_t seconds = 0, micros = 0;
    auto secs_text = stem.substr(0, underscore);
    auto micro_text = stem.substr(underscore + 1);
    auto r1 = std::from_chars(secs_text.data(), secs_text.data() + secs_text.size(), seconds);
    auto r2 = std::from_chars(micro_text.data(), micro_text.data() + micro_text.size(), micros);
    if (r1.ec != std::errc{} || r1.ptr != secs_text.data() + secs_text.size()) return bad();
    if (r2.ec != std::errc{} || r2.ptr != micro_text.data() + micro_text.size()) return bad();
    return static_cast<double>(seconds) + static_cast<double>(micros) * 1e-6;
}

fs::path write_waveform_chunk(const WaveformChunk& chunk, const CalibrationConstants& calibration,
                              const fs::path& dir) {
    validate(chunk);
    validate(calibration);
    if (chunk.duration() > 3600.0 + 1e-9)
        throw std::invalid_argument("waveform chunks are limited to one hour");

    const auto frames = static_cast<std::uint32_t>(chunk.size());
    const std::uint32_t data_bytes = frames * 8;
    std::string out;
    out.reserve(44 + data_bytes);
    out += "RIFF";
    put_u32(out, 36 + data_bytes);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, 1); // PCM
    put_u16(out, 2); // stereo: voltage, current
    put_u32(out, static_cast<std::uint32_t>(chunk.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(chunk.sample_rate) * 8);
    put_u16(out, 8);  // block align
    put_u16(out, 32); // bits per sample
    out += "data";
    put_u32(out, data_bytes);
    for (Eigen::Index i = 0; i < chunk.size(); ++i) {
        put_u32(out, static_cast<std::uint32_t>(
                         to_adc_steps(chunk.voltage[i], calibration.volts_per_adc_step)));
        put_u32(out, static_cast<std::uint32_t>(
                         to_adc_steps(chunk.current[i], calibration.amps_per_adc_step)));
    }

    fs::path file = dir / waveform_filename(chunk.start_time);
    auto stream = open_out(file);
    stream.write(out.data(), static_cast<std::streamsize>(out.size()));
    finish_out(stream, file);
    return file;
}

namespace {

struct WavData {
    int sample_rate = 0;
    std::vector<std::int32_t> voltage_steps;
    std::vector<std::int32_t> current_steps;
};

WavData read_wav(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto fail = [&](const std::string& what) -> WavData {
        throw parse_error(file.string(), 0, what);
    };
    if (data.size() < 44 || data.compare(0, 4, "RIFF") != 0 || data.compare(8, 4, "WAVE") != 0)
        return fail("not a RIFF/WAVE file");

    WavData wav;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= data.size()) {
        std::string id = data.substr(pos, 4);
        std::uint32_t size = get_u32(data, pos + 4);
        pos += 8;
        if (pos + size > data.size()) return fail("truncated chunk '" + id + "'");
        if (id == "fmt ") {
            if (size < 16) return fail("short fmt chunk");
            if (get_u16(data, pos) != 1) return fail("not PCM");
            if (get_u16(data, pos + 2) != 2) return fail("expected 2 channels");
            wav.sample_rate = static_cast<int>(get_u32(data, pos + 4));
            if (get_u16(data, pos + 14) != 32) return fail("expected 32-bit samples");
            if (wav.sample_rate <= 0) return fail("bad sample rate");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) return fail("data chunk before fmt");
            if (size % 8 != 0) return fail("data size not a whole number of stereo frames");
            std::size_t frames = size / 8;
            wav.voltage_steps.reserve(frames);
            wav.current_steps.reserve(frames);
            for (std::size_t f = 0; f < frames; ++f) {
                wav.voltage_steps.push_back(static_cast<std::int32_t>(get_u32(data, pos + f * 8)));
                wav.current_steps.push_back(
                    static_cast<std::int32_t>(get_u32(data, pos + f * 8 + 4)));
            }
        }
        pos += size + (size % 2); // chunks are word-aligned
    }
    if (!have_fmt || wav.voltage_steps.empty()) return fail("missing fmt or data chunk");
    return wav;
}

} // namespace

RawWaveform read_waveform_raw(const fs::path& file) {
    WavData wav = read_wav(file);
    RawWaveform raw;
    raw.start_time = parse_waveform_filename(file.filename().string());
    raw.sample_rate = wav.sample_rate;
    const auto frames = static_cast<Eigen::Index>(wav.voltage_steps.size());
    raw.voltage_norm.resize(frames);
    raw.current_norm.resize(frames);
    for (Eigen::Index i = 0; i < frames; ++i) {
        raw.voltage_norm[i] = wav.voltage_steps[static_cast<std::size_t>(i)] / kInt32HalfRange;
        raw.current_norm[i] = wav.current_steps[static_cast<std::size_t>(i)] / kInt32HalfRange;
    }
    return raw;
}

WaveformChunk read_waveform_chunk(const fs::path& file, const CalibrationConstants& calibration) {
    validate(calibration);
    RawWaveform raw = read_waveform_raw(file);
    WaveformChunk chunk;
    chunk.start_time = raw.start_time;
    chunk.sample_rate = raw.sample_rate;
    chunk.voltage = raw.voltage_norm * kInt32HalfRange * calibration.volts_per_adc_step;
    chunk.current = raw.current_norm * kInt32HalfRange * calibration.amps_per_adc_step;
    return chunk;
}

bool dataset_equal(const HouseDataset& a, const HouseDataset& b) {
    if (a.house_number != b.house_number) return false;
    if (!(a.metadata == b.metadata)) return false;
    if (a.channels != b.channels) return false;

    auto nonempty = [](const std::map<int, std::vector<ButtonEvent>>& events) {
        std::map<int, std::vector<ButtonEvent>> out;
        for (const auto& [channel, list] : events)
            if (!list.empty()) out.emplace(channel, list);
        return out;
    };
    if (nonempty(a.button_events) != nonempty(b.button_events)) return false;

    if (a.mains.has_value() != b.mains.has_value()) return false;
    if (a.mains && !(*a.mains == *b.mains)) return false;

    if (a.calibration.has_value() != b.calibration.has_value()) return false;
    if (a.calibration) {
        if (a.calibration->volts_per_adc_step != b.calibration->volts_per_adc_step ||
            a.calibration->amps_per_adc_step != b.calibration->amps_per_adc_step ||
            a.calibration->phase_difference != b.calibration->phase_difference)
            return false;
    }

    if (a.waveform_chunks.size() != b.waveform_chunks.size()) return false;
    for (std::size_t i = 0; i < a.waveform_chunks.size(); ++i) {
        const auto& ca = a.waveform_chunks[i];
        const auto& cb = b.waveform_chunks[i];
        if (ca.start_time != cb.start_time || ca.sample_rate != cb.sample_rate) return false;
        if (ca.size() != cb.size()) return false;
        if ((ca.voltage != cb.voltage).any() || (ca.current != cb.current).any()) return false;
    }
    return true;
}

fs::path write_house(const HouseDataset& dataset, const fs::path& root) {
    validate(dataset.metadata);
    std::set<int> meter_channels;
    for (const auto& meter : dataset.metadata.meters) meter_channels.insert(meter.channel);
    std::set<int> seen;
    for (const auto& series : dataset.channels) {
        if (!meter_channels.contains(series.channel_index))
            throw consistency_error("channel " + std::to_string(series.channel_index) +
                                    " has no metadata entry");
        if (!seen.insert(series.channel_index).second)
            throw consistency_error("duplicate channel series " +
                                    std::to_string(series.channel_index));
    }
    if (!dataset.waveform_chunks.empty() && !dataset.calibration)
        throw std::invalid_argument("waveform chunks need calibration constants to serialize");

    fs::path dir = root / ("house_" + std::to_string(dataset.house_number));
    fs::create_directories(dir);

    write_metadata(dataset.metadata, dir / "metadata.yaml");
    write_labels(dataset.metadata, dir / "labels.dat");
    for (const auto& series : dataset.channels)
        write_channel(series, dir / ("channel_" + std::to_string(series.channel_index) + ".dat"));
    for (const auto& [channel, events] : dataset.button_events) {
        if (events.empty()) continue;
        write_button_events(events,
                            dir / ("channel_" + std::to_string(channel) + "_button_press.dat"));
    }
    if (dataset.mains) write_mains(*dataset.mains, dir / "mains.dat");
    if (dataset.calibration) write_calibration(*dataset.calibration, dir / "calibration.cfg");
    for (const auto& chunk : dataset.waveform_chunks)
        write_waveform_chunk(chunk, *dataset.calibration, dir);
    return dir;
}

ReadResult read_house(const fs::path& house_dir, const ReadOptions& options) {
    ReadResult result;
    HouseDataset& dataset = result.dataset;

    if (!fs::is_directory(house_dir))
        throw std::runtime_error("cannot open house directory " + house_dir.string());
    std::string dir_name = house_dir.filename().string();
    if (dir_name.rfind("house_", 0) != 0)
        throw std::invalid_argument("'" + dir_name + "' is not a house_<x> directory");
    dataset.house_number =
        parse_number<int>(dir_name.substr(6), house_dir, 0, "house number");

    fs::path metadata_file = house_dir / "metadata.yaml";
    if (!fs::exists(metadata_file))
        throw consistency_error("missing metadata.yaml in " + house_dir.string());
    dataset.metadata = read_metadata(metadata_file);

    std::map<int, PowerUnit> unit_by_channel;
    for (const auto& meter : dataset.metadata.meters) unit_by_channel[meter.channel] = meter.unit;

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(house_dir))
        names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());

    for (const std::string& name : names) {
        fs::path path = house_dir / name;
        if (name == "metadata.yaml" || name == "labels.dat") continue;
        if (name == "mains.dat") {
            dataset.mains = read_mains(path);
            continue;
        }
        if (name == "calibration.cfg" || name == "calibration.dat") {
            dataset.calibration = read_calibration(path);
            continue;
        }
        if (name.rfind("vi-", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".wav") {
            bool well_formed = true;
            try {
                parse_waveform_filename(name);
            } catch (const parse_error&) {
                well_formed = false;
            }
            if (well_formed) {
                dataset.waveform_files.push_back(name);
                continue;
            }
        }
        if (name.rfind("channel_", 0) == 0) {
            std::string rest = name.substr(8);
            const std::string button_suffix = "_button_press.dat";
            if (rest.size() > button_suffix.size() &&
                rest.compare(rest.size() - button_suffix.size(), button_suffix.size(),
                             button_suffix) == 0) {
                auto channel = try_parse_int(rest.substr(0, rest.size() - button_suffix.size()));
                if (channel) {
                    dataset.button_events[*channel] = read_button_events(path);
                    continue;
                }
            } else if (rest.size() > 4 && rest.compare(rest.size() - 4, 4, ".dat") == 0) {
                auto channel = try_parse_int(rest.substr(0, rest.size() - 4));
                if (channel) {
                    auto unit = unit_by_channel.find(*channel);
                    if (unit == unit_by_channel.end())
                        throw consistency_error("channel " + std::to_string(*channel) +
                                                " has no metadata entry");
                    dataset.channels.push_back(read_channel(path, *channel, unit->second));
                    continue;
                }
            }
        }
        result.warnings.push_back("ignored unknown file " + name);
    }

    std::sort(dataset.channels.begin(), dataset.channels.end(),
              [](const ChannelSeries& a, const ChannelSeries& b) {
                  return a.channel_index < b.channel_index;
              });

    fs::path labels_file = house_dir / "labels.dat";
    if (fs::exists(labels_file)) {
        auto labels = read_labels(labels_file);
        std::set<int> metadata_channels;
        for (const auto& meter : dataset.metadata.meters) metadata_channels.insert(meter.channel);
        for (const auto& [channel, name] : labels)
            if (!metadata_channels.contains(channel))
                throw consistency_error("labels.dat lists channel " + std::to_string(channel) +
                                        " which has no metadata entry");
        if (labels != make_labels(dataset.metadata))
            result.warnings.push_back("labels.dat disagrees with metadata; metadata wins");
    } else {
        result.warnings.push_back("labels.dat missing; it can be regenerated from metadata");
    }

    if (options.load_waveforms && !dataset.waveform_files.empty()) {
        if (!dataset.calibration) {
            result.warnings.push_back(
                "waveform chunks present but no calibration; leaving them unconverted");
        } else {
            for (const auto& name : dataset.waveform_files)
                dataset.waveform_chunks.push_back(
                    read_waveform_chunk(house_dir / name, *dataset.calibration));
        }
    }
    return result;
}

} // namespace dale
