#pragma once

#include "dale/waveform.hpp"

#include <optional>
#include <vector>

namespace dale {

/// Per-installation conversion constants between raw ADC steps and physical
/// units. One ADC step is one LSB of the stored 32-bit sample, so physical
/// value = normalized sample * step constant * 2^31.
struct CalibrationConstants {
    double volts_per_adc_step = 0.0;
    double amps_per_adc_step = 0.0;
    double phase_difference = 0.0; ///< radians, current lag introduced by the sensors
};

void validate(const CalibrationConstants& constants);

/// One paired observation: rms values read from the raw ADC stream (in ADC
/// steps) alongside the reference meter's readings.
struct ReferenceSample {
    double adc_v_rms = 0.0;        ///< ADC steps
    double adc_i_rms = 0.0;        ///< ADC steps
    double ref_volts_rms = 0.0;    ///< volts
    double ref_amps_rms = 0.0;     ///< amps
    double ref_power_factor = 1.0; ///< in [0, 1]
};

/// Reference power factor must exceed this before a phase estimate is trusted
/// to measure the sensor chain rather than the load.
inline constexpr double kPhasePowerFactorGate = 0.97;

/// Least-squares ratio fit of reference readings against ADC readings,
/// minimizing sum((ref - c * adc)^2) per channel. One sample reduces to the
/// direct ratio. Throws std::invalid_argument on an empty list and
/// degenerate_input when any ADC rms is zero.
CalibrationConstants estimate_constants(const std::vector<ReferenceSample>& samples);

/// Phase offset (radians) that maximizes the cross-correlation between the
/// chunk's voltage and current at the fundamental, attributed to the sensor
/// chain. Positive means the current lags the voltage. Returns nullopt when
/// the reference power factor is at or below the 0.97 gate (the load itself
/// would dominate the estimate). The chunk must cover at least one
/// fundamental cycle.
std::optional<double> estimate_phase(const WaveformChunk& chunk, const ReferenceSample& ref,
                                     double fundamental_hz = 50.0);

/// Constants matching an AdcConfig whose full-scale peak maps onto the int32
/// extreme of the storage format.
CalibrationConstants constants_for(const AdcConfig& cfg);

} // namespace dale
