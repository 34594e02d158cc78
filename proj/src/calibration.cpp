#include "dale/calibration.hpp"

#include "dale/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dale {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

// Fractional-delay kernel value at integer offset m for delay d (samples).
double delay_kernel(int m, double d, int half_width) {
    double tau = m - d;
    if (std::abs(tau) >= half_width) return 0.0;
    double u = (tau + half_width) / (2.0 * half_width);
    double window = 0.42 - 0.5 * std::cos(2.0 * std::numbers::pi * u) +
                    0.08 * std::cos(4.0 * std::numbers::pi * u);
    return sinc(tau) * window;
}

} // namespace

void validate(const CalibrationConstants& constants) {
    if (!(constants.volts_per_adc_step > 0) || !(constants.amps_per_adc_step > 0))
        throw std::invalid_argument("calibration: step constants must be positive");
    if (!(std::abs(constants.phase_difference) < std::numbers::pi / 2))
        throw std::invalid_argument("calibration: |phase_difference| must be < pi/2");
}

CalibrationConstants estimate_constants(const std::vector<ReferenceSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("estimate_constants: no samples");

    double svv = 0.0, svr = 0.0, sii = 0.0, sir = 0.0;
    for (const auto& s : samples) {
        if (s.adc_v_rms < 0 || s.adc_i_rms < 0 || s.ref_volts_rms < 0 || s.ref_amps_rms < 0)
            throw std::invalid_argument("estimate_constants: negative rms value");
        if (s.adc_v_rms == 0 || s.adc_i_rms == 0)
            throw degenerate_input("estimate_constants: zero adc rms");
        svv += s.adc_v_rms * s.adc_v_rms;
        svr += s.adc_v_rms * s.ref_volts_rms;
        sii += s.adc_i_rms * s.adc_i_rms;
        sir += s.adc_i_rms * s.ref_amps_rms;
    }

    CalibrationConstants constants;
    constants.volts_per_adc_step = svr / svv;
    constants.amps_per_adc_step = sir / sii;
    constants.phase_difference = 0.0;
    return constants;
}

std::optional<double> estimate_phase(const WaveformChunk& chunk, const ReferenceSample& ref,
                                     double fundamental_hz) {
    if (ref.ref_power_factor <= kPhasePowerFactorGate) return std::nullopt;
    validate(chunk);
    if (!(fundamental_hz > 0)) throw std::invalid_argument("estimate_phase: fundamental must be positive");

    const double samples_per_cycle = chunk.sample_rate / fundamental_hz;
    if (static_cast<double>(chunk.size()) < samples_per_cycle)
        throw std::invalid_argument("estimate_phase: chunk shorter than one fundamental cycle");

    const double search_deg = 5.0;
    const double step_deg = 0.01;
    const int kernel_half = 16;
    const double max_delay = search_deg * kDegree / (2.0 * std::numbers::pi * fundamental_hz) *
                             chunk.sample_rate;
    const int max_lag = static_cast<int>(std::ceil(max_delay)) + kernel_half;
    if (chunk.size() < 2 * (max_lag + 1))
        throw std::invalid_argument("estimate_phase: chunk too short for the phase search");

    // C(theta) = sum_n i[n] * v(n - d(theta)) restructured through the integer
    // cross-correlation r[m] = sum_n i[n] * v[n - m], so each candidate phase
    // costs one short dot product with a fractional-delay kernel. The sum
    // covers a whole number of fundamental cycles; a ragged end would warp
    // the correlation peak by a sizeable fraction of a degree.
    const auto n = chunk.size();
    const double usable = static_cast<double>(n - 2 * max_lag);
    const auto window =
        static_cast<Eigen::Index>(std::floor(usable / samples_per_cycle) * samples_per_cycle + 0.5);
    if (window < 1)
        throw std::invalid_argument("estimate_phase: chunk too short for the phase search");
    std::vector<double> corr(static_cast<std::size_t>(2 * max_lag + 1), 0.0);
    for (int m = -max_lag; m <= max_lag; ++m) {
        double acc = 0.0;
        for (Eigen::Index idx = max_lag; idx < max_lag + window; ++idx)
            acc += chunk.current[idx] * chunk.voltage[idx - m];
        corr[static_cast<std::size_t>(m + max_lag)] = acc;
    }

    auto objective = [&](double theta_rad) {
        const double d = theta_rad / (2.0 * std::numbers::pi * fundamental_hz) * chunk.sample_rate;
        const int base = static_cast<int>(std::floor(d));
        double acc = 0.0;
        double gain = 0.0;
        for (int m = base - kernel_half + 1; m <= base + kernel_half; ++m) {
            const double k = delay_kernel(m, d, kernel_half);
            acc += corr[static_cast<std::size_t>(m + max_lag)] * k;
            gain += k;
        }
        // Unit-DC normalization: the raw kernel's gain ripples with the
        // fractional delay, and the correlation peak is flat enough that the
        // ripple would otherwise displace the maximum.
        return acc / gain;
    };

    double best_theta = 0.0;
    double best_value = -std::numeric_limits<double>::infinity();
    const int grid_points = static_cast<int>(std::lround(2 * search_deg / step_deg)) + 1;
    for (int g = 0; g < grid_points; ++g) {
        const double theta = (-search_deg + g * step_deg) * kDegree;
        const double value = objective(theta);
        if (value > best_value) {
            best_value = value;
            best_theta = theta;
        }
    }

    // Parabolic refinement on the winning grid point and its neighbours.
    const double h = step_deg * kDegree;
    const double left = objective(best_theta - h);
    const double right = objective(best_theta + h);
    const double denom = left - 2.0 * best_value + right;
    if (std::abs(denom) > 1e-30) {
        double shift = 0.5 * (left - right) / denom;
        if (std::abs(shift) <= 1.0) best_theta += shift * h;
    }
    return best_theta;
}

CalibrationConstants constants_for(const AdcConfig& cfg) {
    validate(cfg);
    const double int32_half_range = 2147483648.0; // 2^31
    CalibrationConstants constants;
    constants.volts_per_adc_step =
        cfg.full_scale_voltage_rms * std::numbers::sqrt2 / int32_half_range;
    constants.amps_per_adc_step =
        cfg.full_scale_current_rms * std::numbers::sqrt2 / int32_half_range;
    constants.phase_difference = 0.0;
    return constants;
}

} // namespace dale
