#include "dale/calibration.hpp"

#include "dale/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dale;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ReferenceSample resistive_reference(double pf = 1.0) {
    ReferenceSample ref;
    ref.adc_v_rms = 1.0;
    ref.adc_i_rms = 1.0;
    ref.ref_volts_rms = 230.0;
    ref.ref_amps_rms = 10.0;
    ref.ref_power_factor = pf;
    return ref;
}

} // namespace

TEST_CASE("one calibration sample reduces to the direct ratio") {
    ReferenceSample s;
    s.adc_v_rms = 0.5;
    s.adc_i_rms = 0.25;
    s.ref_volts_rms = 230.0;
    s.ref_amps_rms = 5.0;
    auto constants = estimate_constants({s});
    CHECK(constants.volts_per_adc_step == doctest::Approx(460.0).epsilon(1e-12));
    CHECK(constants.amps_per_adc_step == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(constants.phase_difference == 0.0);
}

TEST_CASE("noisy samples recover the generating constant within 1%") {
    const double truth_v = 460.0;
    const double truth_i = 18.0;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<ReferenceSample> samples;
    for (double level : {0.2, 0.5, 0.8}) {
        ReferenceSample s;
        s.adc_v_rms = level;
        s.adc_i_rms = level;
        s.ref_volts_rms = truth_v * level * (1.0 + noise(rng));
        s.ref_amps_rms = truth_i * level * (1.0 + noise(rng));
        samples.push_back(s);
    }
    auto constants = estimate_constants(samples);
    CHECK(constants.volts_per_adc_step == doctest::Approx(truth_v).epsilon(0.01));
    CHECK(constants.amps_per_adc_step == doctest::Approx(truth_i).epsilon(0.01));
}

TEST_CASE("degenerate and invalid calibration inputs") {
    CHECK_THROWS_AS(estimate_constants({}), std::invalid_argument);
    ReferenceSample s = resistive_reference();
    s.adc_i_rms = 0.0;
    CHECK_THROWS_AS(estimate_constants({s}), degenerate_input);
}

TEST_CASE("scaling all adc readings by k scales the constants by 1/k exactly") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> value(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ReferenceSample> samples;
        for (int i = 0; i < 4; ++i) {
            ReferenceSample s;
            s.adc_v_rms = value(rng);
            s.adc_i_rms = value(rng);
            s.ref_volts_rms = value(rng) * 200.0;
            s.ref_amps_rms = value(rng) * 10.0;
            samples.push_back(s);
        }
        const double k = value(rng) + 0.5;
        auto scaled = samples;
        for (auto& s : scaled) {
            s.adc_v_rms *= k;
            s.adc_i_rms *= k;
        }
        auto base = estimate_constants(samples);
        auto after = estimate_constants(scaled);
        CHECK(after.volts_per_adc_step ==
              doctest::Approx(base.volts_per_adc_step / k).epsilon(1e-12));
        CHECK(after.amps_per_adc_step ==
              doctest::Approx(base.amps_per_adc_step / k).epsilon(1e-12));
    }
}

TEST_CASE("applying the constants reproduces the reference rms within the fit residual") {
    std::vector<ReferenceSample> samples;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> noise(-0.02, 0.02);
    for (double level : {0.25, 0.5, 1.0}) {
        ReferenceSample s;
        s.adc_v_rms = level;
        s.adc_i_rms = level;
        s.ref_volts_rms = 450.0 * level * (1.0 + noise(rng));
        s.ref_amps_rms = 20.0 * level * (1.0 + noise(rng));
        samples.push_back(s);
    }
    auto constants = estimate_constants(samples);
    double residual = 0.0;
    for (const auto& s : samples)
        residual = std::max(residual,
                            std::abs(s.ref_volts_rms - constants.volts_per_adc_step * s.adc_v_rms));
    for (const auto& s : samples)
        CHECK(std::abs(constants.volts_per_adc_step * s.adc_v_rms - s.ref_volts_rms) <=
              residual + 1e-12);
}

TEST_CASE("phase estimation is skipped at or below the 0.97 power-factor gate") {
    auto chunk = synth_waveform(50.0, 1.0, 16000, 230.0, {{1, 10.0, 0.0}});
    CHECK(!estimate_phase(chunk, resistive_reference(0.95)).has_value());
    CHECK(!estimate_phase(chunk, resistive_reference(0.97)).has_value());
    CHECK(estimate_phase(chunk, resistive_reference(0.98)).has_value());
}

TEST_CASE("an injected 2 degree sensor shift is recovered within 0.1 degrees") {
    // The current lags the voltage by 2 degrees.
    auto chunk = synth_waveform(50.0, 1.0, 16000, 230.0, {{1, 10.0, -2.0 * kDeg}});
    auto phase = estimate_phase(chunk, resistive_reference());
    REQUIRE(phase.has_value());
    CHECK(*phase == doctest::Approx(2.0 * kDeg).epsilon(0.05));
    CHECK(std::abs(*phase - 2.0 * kDeg) < 0.1 * kDeg);
}

TEST_CASE("a zero-shift resistive load estimates zero within 0.05 degrees") {
    auto chunk = synth_waveform(50.0, 1.0, 16000, 230.0, {{1, 10.0, 0.0}});
    auto phase = estimate_phase(chunk, resistive_reference());
    REQUIRE(phase.has_value());
    CHECK(std::abs(*phase) < 0.05 * kDeg);
}

TEST_CASE("phase estimation needs at least one fundamental cycle") {
    auto chunk = synth_waveform(50.0, 0.01, 16000, 230.0, {{1, 10.0, 0.0}});
    CHECK_THROWS_AS(estimate_phase(chunk, resistive_reference()), std::invalid_argument);
}

TEST_CASE("phase sweep across the search range") {
    for (double shift_deg : {-4.0, -1.5, 0.7, 3.2}) {
        auto chunk = synth_waveform(50.0, 1.0, 16000, 230.0, {{1, 10.0, -shift_deg * kDeg}});
        auto phase = estimate_phase(chunk, resistive_reference());
        REQUIRE(phase.has_value());
        CHECK(std::abs(*phase - shift_deg * kDeg) < 0.1 * kDeg);
    }
}

TEST_CASE("calibration constants validation") {
    CalibrationConstants constants;
    CHECK_THROWS_AS(validate(constants), std::invalid_argument);
    constants.volts_per_adc_step = 1e-7;
    constants.amps_per_adc_step = 1e-8;
    constants.phase_difference = 2.0;
    CHECK_THROWS_AS(validate(constants), std::invalid_argument);
    constants.phase_difference = 0.01;
    CHECK_NOTHROW(validate(constants));
}

TEST_CASE("constants_for maps the adc full scale onto the int32 range") {
    AdcConfig cfg;
    auto constants = constants_for(cfg);
    CHECK(constants.volts_per_adc_step * 2147483648.0 ==
          doctest::Approx(253.0 * std::numbers::sqrt2).epsilon(1e-12));
    CHECK(constants.amps_per_adc_step * 2147483648.0 ==
          doctest::Approx(30.0 * std::numbers::sqrt2).epsilon(1e-12));
}
