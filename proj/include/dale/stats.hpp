#pragma once

#include "dale/dataset_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dale {

struct TimedValue {
    double t = 0.0;
    double v = 0.0;
};

std::vector<TimedValue> to_timed(const ChannelSeries& series);
std::vector<TimedValue> to_timed_active(const MainsSeries& series);

/// Fraction of expected readings that never arrived: 1 - observed/expected,
/// where the expected count treats gaps of large_gap_threshold seconds or
/// more as deliberate (they contribute a single expected reading).
double dropout_rate(std::span<const TimedValue> series, double expected_period,
                    double large_gap_threshold = 120.0);

/// Zero-order-hold energy over [t0, t1] in watt-seconds: each reading holds
/// until the next one.
double zoh_energy_ws(std::span<const TimedValue> series, double t0, double t1);

/// Sum of submeter energy divided by mains energy over the common interval.
double proportion_submetered(std::span<const TimedValue> mains,
                             const std::vector<std::vector<TimedValue>>& submeters);

/// Pearson correlation between the mains series and the sum of the
/// submeters, both mean-resampled onto resample_period bins.
double mains_submeter_correlation(std::span<const TimedValue> mains,
                                  const std::vector<std::vector<TimedValue>>& submeters,
                                  double resample_period = 60.0);

/// Fills gaps at the nominal cadence: gaps longer than long_gap_threshold are
/// filled with zeros (the appliance was unplugged), shorter gaps are
/// forward-filled from the previous reading. Idempotent; original readings
/// are preserved.
std::vector<TimedValue> gap_fill(std::span<const TimedValue> series,
                                 double long_gap_threshold = 120.0,
                                 double nominal_period = 6.0);

struct ValidationReport {
    double uptime_s = 0.0;
    double total_duration_s = 0.0;
    double mean_energy_per_day_kwh = 0.0;
    double mains_vs_submeter_correlation = 0.0;
    double proportion_submetered = 0.0;
    double dropout_rate = 0.0;
};

struct Histogram {
    double bin_width = 1.0;
    double lo = 0.0;
    std::vector<std::int64_t> counts;
};

Histogram make_histogram(std::span<const TimedValue> series, double bin_width, double lo,
                         double hi);

struct ChannelStats {
    int channel = 0;
    std::string name;
    double energy_kwh = 0.0;
    double dropout = 0.0;
};

struct ReportOptions {
    double large_gap_threshold = 120.0;
    double resample_period = 60.0;
    double expected_period = 6.0;   ///< submeter cadence
    double mains_hist_max = 500.0;  ///< mains demand histogram range, 1 W bins
    double appliance_hist_max = 4000.0;
};

struct DatasetReport {
    ValidationReport summary;
    Histogram mains_histogram;
    std::vector<std::pair<int, Histogram>> appliance_histograms;
    std::vector<std::pair<int, std::array<double, 24>>> hourly_on_fraction;
    std::vector<ChannelStats> energy_ranking;                  ///< descending energy
    std::vector<std::pair<std::int64_t, double>> daily_energy_kwh;
};

/// Deterministic validation statistics for one house dataset. Throws
/// insufficient_data when there is nothing to report on.
DatasetReport report(const HouseDataset& dataset, const ReportOptions& options = {});

std::string format_report_summary(const ValidationReport& summary);

/// report.txt plus CSV tables (histograms, hourly usage, energy ranking,
/// daily energy) under dir.
void write_report_files(const DatasetReport& report, const std::filesystem::path& dir);

} // namespace dale
