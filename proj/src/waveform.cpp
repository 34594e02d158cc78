#include "dale/waveform.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dale {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

double blackman(double position, double half_width) {
    // position in [-half_width, half_width]
    double u = (position + half_width) / (2.0 * half_width);
    return 0.42 - 0.5 * std::cos(kTwoPi * u) + 0.08 * std::cos(2.0 * kTwoPi * u);
}

} // namespace

void validate(const WaveformChunk& chunk) {
    if (chunk.sample_rate <= 0)
        throw std::invalid_argument("waveform chunk: sample_rate must be positive");
    if (chunk.voltage.size() != chunk.current.size())
        throw std::invalid_argument("waveform chunk: voltage and current lengths differ");
    if (chunk.voltage.size() < 1)
        throw std::invalid_argument("waveform chunk: empty");
    if (!chunk.voltage.isFinite().all() || !chunk.current.isFinite().all())
        throw std::invalid_argument("waveform chunk: non-finite sample");
    if (!std::isfinite(chunk.start_time))
        throw std::invalid_argument("waveform chunk: non-finite start time");
}

void validate(const AdcConfig& cfg) {
    if (cfg.effective_bits < 8 || cfg.effective_bits > 24)
        throw std::invalid_argument("adc config: effective_bits outside [8, 24]");
    if (cfg.full_scale_voltage_rms <= 0 || cfg.full_scale_current_rms <= 0)
        throw std::invalid_argument("adc config: full-scale values must be positive");
    if (cfg.line_input_clip <= 0)
        throw std::invalid_argument("adc config: line_input_clip must be positive");
}

double AdcConfig::voltage_step() const {
    return full_scale_voltage_rms * 2.0 * std::numbers::sqrt2 / std::pow(2.0, effective_bits);
}

double AdcConfig::current_step() const {
    return full_scale_current_rms * 2.0 * std::numbers::sqrt2 / std::pow(2.0, effective_bits);
}

double adc_range_step(double range, int effective_bits) {
    if (range <= 0) throw std::invalid_argument("adc_range_step: range must be positive");
    if (effective_bits < 1 || effective_bits > 32)
        throw std::invalid_argument("adc_range_step: bits outside [1, 32]");
    return range / std::pow(2.0, effective_bits);
}

WaveformChunk synth_waveform(double fundamental_hz, double duration_s, int sample_rate,
                             double v_rms, const std::vector<CurrentComponent>& current_components,
                             double start_time) {
    if (sample_rate <= 0) throw std::invalid_argument("synth_waveform: sample_rate must be positive");
    if (!(fundamental_hz > 0)) throw std::invalid_argument("synth_waveform: fundamental must be positive");
    double exact = duration_s * sample_rate;
    auto count = static_cast<Eigen::Index>(std::llround(exact));
    if (count < 2 || std::abs(exact - static_cast<double>(count)) > 1e-9 * std::max(1.0, exact))
        throw std::invalid_argument("synth_waveform: duration * sample_rate must be an integer >= 2");
    for (const auto& c : current_components)
        if (c.harmonic < 1) throw std::invalid_argument("synth_waveform: harmonic numbers must be >= 1");

    WaveformChunk chunk;
    chunk.start_time = start_time;
    chunk.sample_rate = sample_rate;
    Eigen::ArrayXd t =
        Eigen::ArrayXd::LinSpaced(count, 0.0, static_cast<double>(count - 1)) / sample_rate;
    chunk.voltage = std::numbers::sqrt2 * v_rms * (kTwoPi * fundamental_hz * t).sin();
    chunk.current = Eigen::ArrayXd::Zero(count);
    for (const auto& c : current_components)
        chunk.current +=
            std::numbers::sqrt2 * c.amps_rms *
            (kTwoPi * fundamental_hz * c.harmonic * t + c.phase_rad).sin();
    return chunk;
}

double rms(const Eigen::ArrayXd& samples) {
    return std::sqrt(samples.square().mean());
}

std::vector<PowerMetrics> compute_metrics(const WaveformChunk& chunk, double chunk_period) {
    validate(chunk);
    if (!(chunk_period > 0)) throw std::invalid_argument("compute_metrics: chunk_period must be positive");
    auto window = static_cast<Eigen::Index>(std::llround(chunk_period * chunk.sample_rate));
    if (window < 1) throw std::invalid_argument("compute_metrics: chunk_period shorter than one sample");

    std::vector<PowerMetrics> rows;
    rows.reserve(static_cast<std::size_t>(chunk.size() / window));
    for (Eigen::Index offset = 0; offset + window <= chunk.size(); offset += window) {
        auto v = chunk.voltage.segment(offset, window);
        auto i = chunk.current.segment(offset, window);
        PowerMetrics m;
        m.timestamp = chunk.start_time + static_cast<double>(offset) / chunk.sample_rate;
        m.rms_voltage = std::sqrt(v.square().mean());
        m.active_power = (v * i).mean();
        m.apparent_power = m.rms_voltage * std::sqrt(i.square().mean());
        rows.push_back(m);
    }
    return rows;
}

QuantizeResult quantize(const WaveformChunk& chunk, const AdcConfig& cfg) {
    validate(chunk);
    validate(cfg);
    const double half_steps = std::pow(2.0, cfg.effective_bits - 1) * cfg.line_input_clip;

    auto quantize_channel = [&](const Eigen::ArrayXd& samples, double step,
                                std::int64_t& clipped) -> Eigen::ArrayXd {
        Eigen::ArrayXd steps = (samples / step).round();
        clipped += (steps.abs() > half_steps).count();
        return steps.max(-half_steps).min(half_steps) * step;
    };

    QuantizeResult result;
    result.chunk.start_time = chunk.start_time;
    result.chunk.sample_rate = chunk.sample_rate;
    result.chunk.voltage = quantize_channel(chunk.voltage, cfg.voltage_step(), result.clipped_samples);
    result.chunk.current = quantize_channel(chunk.current, cfg.current_step(), result.clipped_samples);
    return result;
}

WaveformChunk downsample(const WaveformChunk& chunk, int target_rate) {
    validate(chunk);
    if (target_rate <= 0) throw std::invalid_argument("downsample: target_rate must be positive");
    if (target_rate > chunk.sample_rate)
        throw std::invalid_argument("downsample: target_rate above source rate");
    if (target_rate == chunk.sample_rate) return chunk;

    const auto n_in = chunk.size();
    const std::int64_t src = chunk.sample_rate;
    const std::int64_t tgt = target_rate;
    const auto n_out = static_cast<Eigen::Index>((static_cast<std::int64_t>(n_in - 1) * tgt) / src + 1);

    // Kernel: sinc low-pass at 0.45 * target_rate, Blackman window, evaluated
    // at fractional source positions. Per-sample kernel-sum normalization
    // keeps unity passband gain at the edges and across phases.
    const double cutoff = 0.45 * static_cast<double>(target_rate) / chunk.sample_rate; // cycles/sample
    const int half_width = 64;
    const int taps = 2 * half_width;

    auto kernel_at = [&](double tau) {
        return 2.0 * cutoff * sinc(2.0 * cutoff * tau) * blackman(tau, half_width);
    };

    // The fractional phase (k * src) mod tgt cycles with period
    // tgt / gcd(src, tgt); precompute one kernel row per distinct phase when
    // that stays small.
    const std::int64_t phases = tgt / std::gcd(src, tgt);
    std::vector<double> table;
    if (phases <= 4096) {
        table.resize(static_cast<std::size_t>(phases) * taps);
        for (std::int64_t p = 0; p < phases; ++p) {
            const double frac =
                static_cast<double>((p * src) % tgt) / static_cast<double>(tgt);
            for (int j = 0; j < taps; ++j)
                table[static_cast<std::size_t>(p) * taps + static_cast<std::size_t>(j)] =
                    kernel_at(static_cast<double>(j - half_width) + frac);
        }
    }

    WaveformChunk out;
    out.start_time = chunk.start_time;
    out.sample_rate = target_rate;
    out.voltage.resize(n_out);
    out.current.resize(n_out);

    for (Eigen::Index k = 0; k < n_out; ++k) {
        const std::int64_t num = static_cast<std::int64_t>(k) * src;
        const auto center = static_cast<Eigen::Index>(num / tgt);
        const double frac = static_cast<double>(num % tgt) / static_cast<double>(tgt);
        const double* row =
            table.empty() ? nullptr
                          : table.data() + static_cast<std::size_t>(k % phases) * taps;
        double acc_v = 0.0, acc_i = 0.0, acc_w = 0.0;
        const Eigen::Index lo = std::max<Eigen::Index>(0, center - half_width + 1);
        const Eigen::Index hi = std::min<Eigen::Index>(n_in - 1, center + half_width);
        for (Eigen::Index m = lo; m <= hi; ++m) {
            const double w =
                row != nullptr
                    ? row[center - m + half_width]
                    : kernel_at(static_cast<double>(center - m) + frac);
            acc_v += w * chunk.voltage[m];
            acc_i += w * chunk.current[m];
            acc_w += w;
        }
        out.voltage[k] = acc_v / acc_w;
        out.current[k] = acc_i / acc_w;
    }
    return out;
}

double ct_apparent_power(const WaveformChunk& chunk, double nominal_volts) {
    validate(chunk);
    return rms(chunk.current) * nominal_volts;
}

} // namespace dale
