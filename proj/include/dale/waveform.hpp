#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dale {

/// One fixed-duration recording of simultaneously sampled mains voltage and
/// current. Values are in physical units (volts, amps) unless a caller keeps
/// track of a different scale.
struct WaveformChunk {
    double start_time = 0.0; ///< seconds since the unix epoch (microsecond precision)
    int sample_rate = 0;     ///< Hz
    Eigen::ArrayXd voltage;  ///< volts
    Eigen::ArrayXd current;  ///< amps

    Eigen::Index size() const { return voltage.size(); }
    double duration() const { return static_cast<double>(size()) / sample_rate; }
};

/// Throws std::invalid_argument unless the chunk has equal-length non-empty
/// sample vectors, a positive sample rate and only finite values.
void validate(const WaveformChunk& chunk);

/// Sound-card style front end: the effective bit depth and the sensor
/// full-scale ranges that the peak-to-peak ADC span is mapped onto.
struct AdcConfig {
    int effective_bits = 15;               ///< signal bits, in [8, 24]
    double full_scale_voltage_rms = 253.0; ///< volts
    double full_scale_current_rms = 30.0;  ///< amps
    double line_input_clip = 1.0;          ///< fraction of full scale before clipping

    /// Volts per ADC step: full-scale rms is converted to a peak-to-peak
    /// span (x 2*sqrt(2)) and divided into 2^effective_bits steps.
    double voltage_step() const;
    /// Amps per ADC step, same construction as voltage_step().
    double current_step() const;
};

void validate(const AdcConfig& cfg);

/// Step size of an ADC whose 2^bits steps span `range` directly, with no
/// peak-to-peak headroom. This is the arithmetic used by monitors whose
/// converter range coincides with the measured signal range.
double adc_range_step(double range, int effective_bits);

/// One per-window reduction of a waveform chunk.
struct PowerMetrics {
    double timestamp = 0.0;      ///< window start, seconds since the epoch
    double active_power = 0.0;   ///< watts
    double apparent_power = 0.0; ///< volt-amperes
    double rms_voltage = 0.0;    ///< volts
};

/// One sinusoidal term of a synthesized current: an integer harmonic of the
/// fundamental with an rms amplitude and a phase offset.
struct CurrentComponent {
    int harmonic = 1;
    double amps_rms = 0.0;
    double phase_rad = 0.0;
};

/// Deterministic test-signal generator: a pure voltage sinusoid at
/// `fundamental_hz` plus a current that is the sum of the listed harmonics.
/// duration * sample_rate must be an integer >= 2.
WaveformChunk synth_waveform(double fundamental_hz, double duration_s, int sample_rate,
                             double v_rms, const std::vector<CurrentComponent>& current_components,
                             double start_time = 0.0);

/// Reduces a chunk to one PowerMetrics row per `chunk_period` window:
/// P = mean(V_i * I_i), S = Vrms * Irms. A trailing window shorter than
/// chunk_period is dropped.
std::vector<PowerMetrics> compute_metrics(const WaveformChunk& chunk, double chunk_period = 1.0);

struct QuantizeResult {
    WaveformChunk chunk;
    std::int64_t clipped_samples = 0;
};

/// Rounds every sample to the nearest ADC step for `cfg`. Samples beyond
/// full scale saturate silently; the count of saturated samples is returned.
QuantizeResult quantize(const WaveformChunk& chunk, const AdcConfig& cfg);

/// Rate conversion with a windowed-sinc anti-alias low-pass (cutoff at
/// 0.45 * target_rate) ahead of decimation. target_rate == sample_rate
/// returns the chunk unchanged.
WaveformChunk downsample(const WaveformChunk& chunk, int target_rate);

/// Root mean square of a sample vector.
double rms(const Eigen::ArrayXd& samples);

/// Apparent power as seen by a CT-clamp meter: measured rms current times a
/// hard-coded nominal voltage (the clamp has no voltage channel).
double ct_apparent_power(const WaveformChunk& chunk, double nominal_volts = 230.0);

} // namespace dale
