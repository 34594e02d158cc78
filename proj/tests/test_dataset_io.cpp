#include "dale/dataset_io.hpp"

#include "dale/errors.hpp"
#include "dale/util.hpp"
#include "dataset_gen.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace dale;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dale_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    out << text;
}

HouseMetadata minimal_metadata() {
    HouseMetadata metadata;
    metadata.meters.push_back(MeterInfo{1, "current_cost_tx", true, PowerUnit::volt_amperes});
    metadata.meters.push_back(MeterInfo{2, "edf_iam", false, PowerUnit::watts});
    ApplianceInfo fridge;
    fridge.name = "fridge";
    fridge.meter_channel = 2;
    fridge.room = "kitchen";
    metadata.appliances.push_back(fridge);
    return metadata;
}

} // namespace

TEST_CASE("channel rows serialize as 'timestamp power'") {
    TempDir dir;
    ChannelSeries series;
    series.channel_index = 3;
    series.readings = {{1422000000, 95}};
    write_channel(series, dir.path / "channel_3.dat");
    CHECK(slurp(dir.path / "channel_3.dat") == "1422000000 95\n");
    auto back = read_channel(dir.path / "channel_3.dat", 3, PowerUnit::watts);
    CHECK(back.readings == series.readings);
}

TEST_CASE("mains rows carry 1 and 2 decimal places") {
    TempDir dir;
    MainsSeries series = {{1422000000.1, 230.123, 240.5, 229.0}};
    write_mains(series, dir.path / "mains.dat");
    CHECK(slurp(dir.path / "mains.dat") == "1422000000.1 230.12 240.50 229.00\n");
}

TEST_CASE("mains parser enforces four columns and increasing timestamps") {
    TempDir dir;
    spit(dir.path / "mains.dat", "1422000000.0 1.00 2.00\n");
    CHECK_THROWS_AS(read_mains(dir.path / "mains.dat"), parse_error);
    spit(dir.path / "mains.dat", "10.0 1.00 2.00 230.00\n9.0 1.00 2.00 230.00\n");
    CHECK_THROWS_AS(read_mains(dir.path / "mains.dat"), parse_error);
}

TEST_CASE("button events: format, empty file, and domain violation") {
    TempDir dir;
    write_button_events({{100, 1}}, dir.path / "b.dat");
    CHECK(slurp(dir.path / "b.dat") == "100 1\n");

    write_button_events({}, dir.path / "empty.dat");
    CHECK(read_button_events(dir.path / "empty.dat").empty());

    spit(dir.path / "bad.dat", "100 2\n");
    try {
        read_button_events(dir.path / "bad.dat");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 1);
        CHECK(std::string(e.what()).find("bad.dat") != std::string::npos);
    }
}

TEST_CASE("channel parser rejects malformed rows with file and line") {
    TempDir dir;
    spit(dir.path / "channel_1.dat", "1422000000 10\n1422000006 x\n");
    try {
        read_channel(dir.path / "channel_1.dat", 1, PowerUnit::watts);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line() == 2);
    }
    spit(dir.path / "channel_1.dat", "1422000000 -5\n");
    CHECK_THROWS_AS(read_channel(dir.path / "channel_1.dat", 1, PowerUnit::watts), parse_error);
    spit(dir.path / "channel_1.dat", "1422000010 5\n1422000000 6\n");
    CHECK_THROWS_AS(read_channel(dir.path / "channel_1.dat", 1, PowerUnit::watts), parse_error);
    spit(dir.path / "channel_1.dat", "1422000000  5\n"); // double space
    CHECK_THROWS_AS(read_channel(dir.path / "channel_1.dat", 1, PowerUnit::watts), parse_error);
}

TEST_CASE("fixed-point formatting rounds half away from zero") {
    CHECK(format_fixed(230.123, 2) == "230.12");
    CHECK(format_fixed(240.5, 2) == "240.50");
    CHECK(format_fixed(0.125, 2) == "0.13");
    CHECK(format_fixed(-0.125, 2) == "-0.13");
    CHECK(format_fixed(-0.004, 2) == "0.00"); // no negative zero
    CHECK(format_fixed(1422000000.06, 1) == "1422000000.1");
    CHECK(format_fixed(7.0, 0) == "7");
}

TEST_CASE("arbitrary mains values reparse within their declared precision") {
    TempDir dir;
    std::mt19937_64 rng(515);
    std::uniform_real_distribution<double> watts(0.0, 9000.0);
    std::uniform_real_distribution<double> tenth(0.0, 0.9999);
    MainsSeries series;
    double t = 1422000000.0;
    for (int i = 0; i < 500; ++i) {
        t += 1.0 + tenth(rng) * 0.2;
        double p = watts(rng);
        series.push_back(MainsRow{t, p, p + watts(rng) * 0.1, 225.0 + tenth(rng) * 10.0});
    }
    write_mains(series, dir.path / "mains.dat");
    auto back = read_mains(dir.path / "mains.dat");
    REQUIRE(back.size() == series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(std::abs(back[i].timestamp - series[i].timestamp) <= 0.05 + 1e-9);
        CHECK(std::abs(back[i].active_power - series[i].active_power) <= 0.005 + 1e-9);
        CHECK(std::abs(back[i].apparent_power - series[i].apparent_power) <= 0.005 + 1e-9);
        CHECK(std::abs(back[i].rms_voltage - series[i].rms_voltage) <= 0.005 + 1e-9);
    }
}

TEST_CASE("labels regenerate from metadata") {
    auto labels = make_labels(minimal_metadata());
    REQUIRE(labels.size() == 2);
    CHECK(labels[0] == std::pair<int, std::string>{1, "aggregate"});
    CHECK(labels[1] == std::pair<int, std::string>{2, "fridge"});
}

TEST_CASE("metadata round-trips and defaults the 5 W threshold") {
    TempDir dir;
    auto metadata = minimal_metadata();
    metadata.appliances[0].on_power_threshold = 20.0;
    MeterInfo tv_meter{3, "edf_iam", false, PowerUnit::watts};
    metadata.meters.push_back(tv_meter);
    ApplianceInfo tv;
    tv.name = "television";
    tv.meter_channel = 3;
    metadata.appliances.push_back(tv);

    write_metadata(metadata, dir.path / "metadata.yaml");
    auto back = read_metadata(dir.path / "metadata.yaml");
    CHECK(back == metadata);
    CHECK(back.appliances[0].on_power_threshold == 20.0);
    CHECK(back.appliances[1].on_power_threshold == 5.0);
    // The 5 W default is implicit in the file.
    CHECK(slurp(dir.path / "metadata.yaml").find("on_power_threshold: 20") != std::string::npos);
    CHECK(slurp(dir.path / "metadata.yaml").find("on_power_threshold: 5") == std::string::npos);
}

TEST_CASE("metadata consistency checks") {
    auto metadata = minimal_metadata();
    metadata.meters.push_back(MeterInfo{2, "edf_iam", false, PowerUnit::watts}); // duplicate
    CHECK_THROWS_AS(validate(metadata), consistency_error);

    metadata = minimal_metadata();
    metadata.appliances[0].meter_channel = 9;
    CHECK_THROWS_AS(validate(metadata), consistency_error);

    metadata = minimal_metadata();
    metadata.appliances[0].on_power_threshold = 0.0;
    CHECK_THROWS_AS(validate(metadata), consistency_error);

    metadata = minimal_metadata();
    metadata.meters.push_back(MeterInfo{4, "edf_iam", false, PowerUnit::watts});
    CHECK_THROWS_AS(make_labels(metadata), consistency_error); // no appliance, not a site meter
}

TEST_CASE("waveform filenames use an underscore as the decimal point") {
    CHECK(waveform_filename(1409774400.25) == "vi-1409774400_250000.wav");
    CHECK(waveform_filename(1409774400.0) == "vi-1409774400_000000.wav");
    CHECK(parse_waveform_filename("vi-1409774400_250000.wav") ==
          doctest::Approx(1409774400.25).epsilon(1e-12));
    CHECK_THROWS_AS(parse_waveform_filename("vi-1409774400.wav"), parse_error);
    CHECK_THROWS_AS(parse_waveform_filename("vi-1409774400_25.wav"), parse_error);
}

TEST_CASE("waveform chunks survive a write-read cycle within one ADC step") {
    TempDir dir;
    CalibrationConstants calibration;
    calibration.volts_per_adc_step = 253.0 * std::numbers::sqrt2 / 2147483648.0;
    calibration.amps_per_adc_step = 30.0 * std::numbers::sqrt2 / 2147483648.0;

    auto chunk = synth_waveform(50.0, 1.0, 16000, 230.0, {{1, 5.0, 0.3}, {3, 1.0, 0.1}},
                                1409774400.25);
    auto file = write_waveform_chunk(chunk, calibration, dir.path);
    CHECK(file.filename().string() == "vi-1409774400_250000.wav");

    auto back = read_waveform_chunk(file, calibration);
    CHECK(back.sample_rate == 16000);
    CHECK(back.start_time == doctest::Approx(1409774400.25).epsilon(1e-12));
    REQUIRE(back.size() == chunk.size());
    CHECK((back.voltage - chunk.voltage).abs().maxCoeff() <= calibration.volts_per_adc_step);
    CHECK((back.current - chunk.current).abs().maxCoeff() <= calibration.amps_per_adc_step);
}

TEST_CASE("normalized sample 0.5 maps through volts_per_adc_step * 2^31") {
    TempDir dir;
    CalibrationConstants calibration;
    calibration.volts_per_adc_step = 2.0e-7;
    calibration.amps_per_adc_step = 2.0e-8;
    WaveformChunk chunk;
    chunk.start_time = 1409774400.0;
    chunk.sample_rate = 16000;
    chunk.voltage.resize(2);
    chunk.current.resize(2);
    chunk.voltage[0] = 0.5 * calibration.volts_per_adc_step * 2147483648.0;
    chunk.voltage[1] = 0.0;
    chunk.current.setZero();
    auto file = write_waveform_chunk(chunk, calibration, dir.path);
    auto raw = read_waveform_raw(file);
    CHECK(raw.voltage_norm[0] == doctest::Approx(0.5).epsilon(1e-9));
    // Physical units come back through value * step * 2^31.
    CHECK(raw.voltage_norm[0] * calibration.volts_per_adc_step * 2147483648.0 ==
          doctest::Approx(chunk.voltage[0]).epsilon(1e-9));
}

TEST_CASE("over-hour chunks are refused") {
    CalibrationConstants calibration;
    calibration.volts_per_adc_step = 1e-7;
    calibration.amps_per_adc_step = 1e-8;
    WaveformChunk chunk;
    chunk.sample_rate = 1;
    chunk.voltage = Eigen::ArrayXd::Zero(3601);
    chunk.current = Eigen::ArrayXd::Zero(3601);
    TempDir dir;
    CHECK_THROWS_AS(write_waveform_chunk(chunk, calibration, dir.path), std::invalid_argument);
}

TEST_CASE("a full house tree round-trips exactly") {
    TempDir dir;
    std::mt19937_64 rng(2025);
    for (int trial = 0; trial < 25; ++trial) {
        auto dataset = testgen::random_dataset(rng);
        fs::path house_dir = write_house(dataset, dir.path);
        auto result = read_house(house_dir, {.load_waveforms = true});
        CHECK(result.warnings.empty());
        CHECK(dataset_equal(result.dataset, dataset));
        fs::remove_all(house_dir);
    }
}

TEST_CASE("unknown files are ignored with a warning") {
    TempDir dir;
    std::mt19937_64 rng(7);
    auto dataset = testgen::random_dataset(rng);
    fs::path house_dir = write_house(dataset, dir.path);
    spit(house_dir / "README.txt", "notes\n");
    auto result = read_house(house_dir, {});
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("README.txt") != std::string::npos);
    CHECK(dataset_equal(result.dataset, dataset) ==
          dataset.waveform_chunks.empty()); // chunks not loaded here
}

TEST_CASE("calibration.dat is accepted as an alternative name") {
    TempDir dir;
    CalibrationConstants constants;
    constants.volts_per_adc_step = 1.5e-7;
    constants.amps_per_adc_step = 2.5e-8;
    constants.phase_difference = 0.004;
    write_calibration(constants, dir.path / "calibration.dat");
    auto back = read_calibration(dir.path / "calibration.dat");
    CHECK(back.volts_per_adc_step == constants.volts_per_adc_step);
    CHECK(back.amps_per_adc_step == constants.amps_per_adc_step);
    CHECK(back.phase_difference == constants.phase_difference);

    HouseDataset dataset;
    dataset.house_number = 4;
    dataset.metadata = minimal_metadata();
    auto house_dir = write_house(dataset, dir.path);
    write_calibration(constants, house_dir / "calibration.dat");
    auto result = read_house(house_dir, {});
    REQUIRE(result.dataset.calibration.has_value());
    CHECK(result.dataset.calibration->volts_per_adc_step == constants.volts_per_adc_step);
}

TEST_CASE("labels/metadata mismatch raises a consistency error") {
    TempDir dir;
    HouseDataset dataset;
    dataset.house_number = 2;
    dataset.metadata = minimal_metadata();
    auto house_dir = write_house(dataset, dir.path);
    spit(house_dir / "labels.dat", "1 aggregate\n2 fridge\n7 ghost\n");
    CHECK_THROWS_AS(read_house(house_dir, {}), consistency_error);
}

TEST_CASE("channel files without metadata raise a consistency error") {
    TempDir dir;
    HouseDataset dataset;
    dataset.house_number = 3;
    dataset.metadata = minimal_metadata();
    auto house_dir = write_house(dataset, dir.path);
    spit(house_dir / "channel_9.dat", "1422000000 5\n");
    CHECK_THROWS_AS(read_house(house_dir, {}), consistency_error);
}

TEST_CASE("label text mismatches produce a warning, metadata wins") {
    TempDir dir;
    HouseDataset dataset;
    dataset.house_number = 5;
    dataset.metadata = minimal_metadata();
    auto house_dir = write_house(dataset, dir.path);
    spit(house_dir / "labels.dat", "1 aggregate\n2 freezer\n");
    auto result = read_house(house_dir, {});
    bool warned = false;
    for (const auto& warning : result.warnings)
        if (warning.find("labels.dat") != std::string::npos) warned = true;
    CHECK(warned);
}

TEST_CASE("a hand-written dataset in the documented format parses") {
    // Fixture transcribed from the format rules rather than produced by our
    // own writer: space-separated integer channel rows, four-column mains
    // rows, metadata with extra keys that a stricter schema would trip over.
    TempDir dir;
    fs::path house = dir.path / "house_2";
    fs::create_directories(house);
    spit(house / "metadata.yaml",
         "# house 2, hand maintained\n"
         "building:\n"
         "  type: flat\n"
         "  construction_year: 1965\n"
         "  heat_source: electricity\n"
         "  occupants: 2\n"
         "  elevation_m: 12\n"            // unknown key, ignored
         "meters:\n"
         "  - channel: 1\n"
         "    device: current_cost_tx\n"
         "    site_meter: true\n"
         "    unit: volt_amperes\n"
         "    firmware: 2.1\n"            // unknown key, ignored
         "  - channel: 2\n"
         "    device: edf_iam\n"
         "    unit: watts\n"
         "appliances:\n"
         "  - name: toaster\n"
         "    meter: 2\n"
         "    room: kitchen\n"
         "    manufacturer: acme\n"       // unknown key, ignored
         "extras:\n"                       // unknown section, ignored
         "  - note one\n");
    spit(house / "labels.dat", "1 aggregate\n2 toaster\n");
    spit(house / "channel_1.dat", "1422000000 310\n1422000006 308\n1422000012 311\n");
    spit(house / "channel_2.dat", "1422000001 0\n1422000007 1020\n");
    spit(house / "channel_2_button_press.dat", "1422000100 1\n1422000400 0\n");
    spit(house / "mains.dat",
         "1422000000.0 305.12 312.50 230.01\n"
         "1422000001.0 305.40 312.90 230.00\n");
    spit(house / "calibration.dat",
         "volts_per_adc_step: 1.6e-07\n"
         "amps_per_adc_step: 2.0e-08\n"
         "phase_difference: 0.001\n");

    auto result = read_house(house, {});
    CHECK(result.warnings.empty());
    CHECK(result.dataset.house_number == 2);
    CHECK(result.dataset.metadata.building_type == "flat");
    CHECK(result.dataset.metadata.occupants == 2);
    REQUIRE(result.dataset.channels.size() == 2);
    CHECK(result.dataset.channels[0].unit == PowerUnit::volt_amperes);
    CHECK(result.dataset.channels[1].readings[1].power == 1020);
    REQUIRE(result.dataset.mains.has_value());
    CHECK(result.dataset.mains->at(1).active_power == 305.40);
    REQUIRE(result.dataset.calibration.has_value());
    CHECK(result.dataset.calibration->phase_difference == 0.001);
    CHECK(result.dataset.button_events.at(2).size() == 2);
}

TEST_CASE("channel-like names that do not parse are warnings, not errors") {
    TempDir dir;
    HouseDataset dataset;
    dataset.house_number = 1;
    dataset.metadata = minimal_metadata();
    auto house_dir = write_house(dataset, dir.path);
    spit(house_dir / "channel_notes.dat", "scratch\n");
    spit(house_dir / "vi-badname.wav", "junk");
    auto result = read_house(house_dir, {});
    CHECK(result.warnings.size() == 2);
}

TEST_CASE("missing metadata is a consistency error") {
    TempDir dir;
    fs::create_directories(dir.path / "house_1");
    CHECK_THROWS_AS(read_house(dir.path / "house_1", {}), consistency_error);
}
