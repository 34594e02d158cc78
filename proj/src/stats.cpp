#include "dale/stats.hpp"

#include "dale/errors.hpp"
#include "dale/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace dale {

namespace {

void check_sorted(std::span<const TimedValue> series, const char* who) {
    for (std::size_t i = 1; i < series.size(); ++i)
        if (series[i].t < series[i - 1].t)
            throw std::invalid_argument(std::string(who) + ": series must be sorted by time");
}

struct Interval {
    double t0, t1;
};

Interval common_interval(std::span<const TimedValue> mains,
                         const std::vector<std::vector<TimedValue>>& submeters) {
    Interval interval{mains.front().t, mains.back().t};
    for (const auto& sub : submeters) {
        if (sub.empty()) throw std::invalid_argument("submeter series must be non-empty");
        interval.t0 = std::max(interval.t0, sub.front().t);
        interval.t1 = std::min(interval.t1, sub.back().t);
    }
    if (!(interval.t0 < interval.t1))
        throw std::invalid_argument("series time ranges do not overlap");
    return interval;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw undefined_correlation("correlation of a constant series is undefined");
    return sxy / std::sqrt(sxx * syy);
}

/// Time-weighted mean of a zero-order-hold series per bin over
/// [t0, t0 + bins * period), one linear sweep over the readings.
std::vector<double> resample_mean(std::span<const TimedValue> series, double t0, double period,
                                  std::size_t bins) {
    std::vector<double> means(bins, 0.0);
    const double tend = t0 + static_cast<double>(bins) * period;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].t >= tend) break;
        double s = std::max(series[i].t, t0);
        double e = i + 1 < series.size() ? std::min(series[i + 1].t, tend) : tend;
        if (e <= s) continue;
        auto b0 = static_cast<std::size_t>((s - t0) / period);
        auto b1 = std::min(bins - 1, static_cast<std::size_t>((e - t0) / period));
        for (std::size_t b = b0; b <= b1; ++b) {
            double lo = t0 + static_cast<double>(b) * period;
            double overlap = std::min(e, lo + period) - std::max(s, lo);
            if (overlap > 0) means[b] += series[i].v * overlap;
        }
    }
    for (double& m : means) m /= period;
    return means;
}

struct DropoutCounts {
    double observed = 0;
    double expected = 0;
};

DropoutCounts dropout_counts(std::span<const TimedValue> series, double expected_period,
                             double large_gap_threshold) {
    DropoutCounts counts;
    counts.observed = static_cast<double>(series.size());
    counts.expected = 1;
    for (std::size_t i = 1; i < series.size(); ++i) {
        double gap = series[i].t - series[i - 1].t;
        if (gap >= large_gap_threshold)
            counts.expected += 1;
        else
            counts.expected += static_cast<double>(std::llround(gap / expected_period));
    }
    return counts;
}

} // namespace

std::vector<TimedValue> to_timed(const ChannelSeries& series) {
    std::vector<TimedValue> out;
    out.reserve(series.readings.size());
    for (const auto& reading : series.readings)
        out.push_back(TimedValue{static_cast<double>(reading.timestamp),
                                 static_cast<double>(reading.power)});
    return out;
}

std::vector<TimedValue> to_timed_active(const MainsSeries& series) {
    std::vector<TimedValue> out;
    out.reserve(series.size());
    for (const auto& row : series) out.push_back(TimedValue{row.timestamp, row.active_power});
    return out;
}

double dropout_rate(std::span<const TimedValue> series, double expected_period,
                    double large_gap_threshold) {
    if (series.size() < 2)
        throw insufficient_data("dropout_rate needs at least 2 readings");
    if (!(expected_period > 0))
        throw std::invalid_argument("dropout_rate: expected_period must be positive");
    check_sorted(series, "dropout_rate");
    auto counts = dropout_counts(series, expected_period, large_gap_threshold);
    if (counts.expected <= 0) return 0.0;
    return std::clamp(1.0 - counts.observed / counts.expected, 0.0, 1.0);
}

double zoh_energy_ws(std::span<const TimedValue> series, double t0, double t1) {
    if (!(t0 <= t1)) throw std::invalid_argument("zoh_energy: t0 must be <= t1");
    double energy = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        double hold_from = std::max(series[i].t, t0);
        double hold_to = i + 1 < series.size() ? std::min(series[i + 1].t, t1) : t1;
        if (hold_to > hold_from) energy += series[i].v * (hold_to - hold_from);
        if (series[i].t >= t1) break;
    }
    return energy;
}

double proportion_submetered(std::span<const TimedValue> mains,
                             const std::vector<std::vector<TimedValue>>& submeters) {
    if (mains.empty()) throw std::invalid_argument("proportion_submetered: empty mains");
    check_sorted(mains, "proportion_submetered");
    if (submeters.empty()) return 0.0;
    Interval interval = common_interval(mains, submeters);
    double mains_energy = zoh_energy_ws(mains, interval.t0, interval.t1);
    if (mains_energy == 0.0)
        throw degenerate_input("proportion_submetered: zero mains energy");
    double submeter_energy = 0.0;
    for (const auto& sub : submeters) submeter_energy += zoh_energy_ws(sub, interval.t0, interval.t1);
    return submeter_energy / mains_energy;
}

double mains_submeter_correlation(std::span<const TimedValue> mains,
                                  const std::vector<std::vector<TimedValue>>& submeters,
                                  double resample_period) {
    if (mains.empty()) throw std::invalid_argument("correlation: empty mains");
    if (submeters.empty()) throw std::invalid_argument("correlation: no submeters");
    if (!(resample_period > 0))
        throw std::invalid_argument("correlation: resample_period must be positive");
    check_sorted(mains, "correlation");
    Interval interval = common_interval(mains, submeters);
    auto bins = static_cast<std::size_t>((interval.t1 - interval.t0) / resample_period);
    if (bins < 2) throw insufficient_data("correlation needs at least 2 resampled bins");

    std::vector<double> mains_bins = resample_mean(mains, interval.t0, resample_period, bins);
    std::vector<double> sum_bins(bins, 0.0);
    for (const auto& sub : submeters) {
        auto sub_bins = resample_mean(sub, interval.t0, resample_period, bins);
        for (std::size_t b = 0; b < bins; ++b) sum_bins[b] += sub_bins[b];
    }
    return pearson(mains_bins, sum_bins);
}

std::vector<TimedValue> gap_fill(std::span<const TimedValue> series, double long_gap_threshold,
                                 double nominal_period) {
    if (!(nominal_period > 0))
        throw std::invalid_argument("gap_fill: nominal_period must be positive");
    check_sorted(series, "gap_fill");
    std::vector<TimedValue> out;
    out.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        out.push_back(series[i]);
        if (i + 1 == series.size()) break;
        double gap = series[i + 1].t - series[i].t;
        double fill_value = gap > long_gap_threshold ? 0.0 : series[i].v;
        for (double t = series[i].t + nominal_period;
             t <= series[i + 1].t - nominal_period + 1e-9; t += nominal_period)
            out.push_back(TimedValue{t, fill_value});
    }
    return out;
}

Histogram make_histogram(std::span<const TimedValue> series, double bin_width, double lo,
                         double hi) {
    if (!(bin_width > 0) || !(hi > lo))
        throw std::invalid_argument("make_histogram: bad bin spec");
    Histogram hist;
    hist.bin_width = bin_width;
    hist.lo = lo;
    hist.counts.assign(static_cast<std::size_t>(std::ceil((hi - lo) / bin_width)), 0);
    for (const auto& point : series) {
        if (point.v < lo || point.v >= hi) continue;
        ++hist.counts[static_cast<std::size_t>((point.v - lo) / bin_width)];
    }
    return hist;
}

DatasetReport report(const HouseDataset& dataset, const ReportOptions& options) {
    DatasetReport out;

    // The mains signal: the 1 Hz meter file when present, otherwise the site
    // meter's channel.
    std::vector<TimedValue> mains;
    if (dataset.mains && !dataset.mains->empty()) {
        mains = to_timed_active(*dataset.mains);
    } else {
        for (const auto& meter : dataset.metadata.meters) {
            if (!meter.site_meter) continue;
            for (const auto& series : dataset.channels)
                if (series.channel_index == meter.channel) mains = to_timed(series);
            break;
        }
    }
    if (mains.size() < 2) throw insufficient_data("report: no usable mains signal");

    std::map<int, const ChannelSeries*> by_channel;
    for (const auto& series : dataset.channels) by_channel[series.channel_index] = &series;
    std::map<int, double> threshold_by_channel;
    std::map<int, std::string> name_by_channel;
    for (const auto& [channel, name] : make_labels(dataset.metadata))
        name_by_channel[channel] = name;
    for (const auto& appliance : dataset.metadata.appliances)
        threshold_by_channel[appliance.meter_channel] = appliance.on_power_threshold;

    std::vector<std::vector<TimedValue>> submeters;
    std::vector<int> submeter_channels;
    for (const auto& meter : dataset.metadata.meters) {
        if (meter.site_meter) continue;
        auto it = by_channel.find(meter.channel);
        if (it == by_channel.end() || it->second->readings.empty()) continue;
        submeters.push_back(to_timed(*it->second));
        submeter_channels.push_back(meter.channel);
    }

    ValidationReport& summary = out.summary;
    summary.total_duration_s = mains.back().t - mains.front().t;
    double uptime = 0.0;
    for (std::size_t i = 1; i < mains.size(); ++i) {
        double gap = mains[i].t - mains[i - 1].t;
        if (gap < options.large_gap_threshold) uptime += gap;
    }
    summary.uptime_s = uptime;

    // Energy products apply the preprocessing rules first: long gaps mean
    // the meter (and load) were off, so they are zero-filled rather than
    // held at the last reading.
    const double mains_period = dataset.mains && !dataset.mains->empty()
                                    ? 1.0
                                    : options.expected_period;
    auto mains_filled = gap_fill(mains, options.large_gap_threshold, mains_period);
    double mains_energy_ws =
        zoh_energy_ws(mains_filled, mains_filled.front().t, mains_filled.back().t);
    if (uptime > 0)
        summary.mean_energy_per_day_kwh = mains_energy_ws / 3.6e6 / (uptime / 86400.0);

    if (!submeters.empty()) {
        summary.proportion_submetered = proportion_submetered(mains, submeters);
        try {
            summary.mains_vs_submeter_correlation =
                mains_submeter_correlation(mains, submeters, options.resample_period);
        } catch (const undefined_correlation&) {
            summary.mains_vs_submeter_correlation = std::numeric_limits<double>::quiet_NaN();
        }
        DropoutCounts pooled;
        for (const auto& sub : submeters) {
            if (sub.size() < 2) continue;
            auto counts = dropout_counts(sub, options.expected_period, options.large_gap_threshold);
            pooled.observed += counts.observed;
            pooled.expected += counts.expected;
        }
        if (pooled.expected > 0)
            summary.dropout_rate = std::clamp(1.0 - pooled.observed / pooled.expected, 0.0, 1.0);
    }

    out.mains_histogram =
        make_histogram(mains, 1.0, 0.0, options.mains_hist_max);

    for (std::size_t s = 0; s < submeters.size(); ++s) {
        const int channel = submeter_channels[s];
        const auto& series = submeters[s];
        double threshold = 5.0;
        if (auto it = threshold_by_channel.find(channel); it != threshold_by_channel.end())
            threshold = it->second;

        // Power histogram of on-readings, 1 W bins.
        std::vector<TimedValue> on_readings;
        for (const auto& point : series)
            if (point.v >= 1.0) on_readings.push_back(point);
        out.appliance_histograms.emplace_back(
            channel, make_histogram(on_readings, 1.0, 0.0, options.appliance_hist_max));

        // Hour-of-day usage: time-weighted fraction of each hour spent on.
        std::array<double, 24> on_time{};
        std::array<double, 24> total_time{};
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            double t = series[i].t;
            double end = series[i + 1].t;
            if (end - t >= options.large_gap_threshold) continue; // unplugged
            bool on = series[i].v >= threshold;
            while (t < end) {
                double hour_end = (std::floor(t / 3600.0) + 1.0) * 3600.0;
                double slice = std::min(end, hour_end) - t;
                auto hour = static_cast<std::size_t>(
                    std::fmod(std::floor(t / 3600.0), 24.0));
                total_time[hour] += slice;
                if (on) on_time[hour] += slice;
                t += slice;
            }
        }
        std::array<double, 24> fraction{};
        for (std::size_t h = 0; h < 24; ++h)
            fraction[h] = total_time[h] > 0 ? on_time[h] / total_time[h] : 0.0;
        out.hourly_on_fraction.emplace_back(channel, fraction);

        ChannelStats stats;
        stats.channel = channel;
        stats.name = name_by_channel[channel];
        auto filled = gap_fill(series, options.large_gap_threshold, options.expected_period);
        stats.energy_kwh = zoh_energy_ws(filled, filled.front().t, filled.back().t) / 3.6e6;
        if (series.size() >= 2)
            stats.dropout = dropout_rate(series, options.expected_period, options.large_gap_threshold);
        out.energy_ranking.push_back(std::move(stats));
    }
    std::sort(out.energy_ranking.begin(), out.energy_ranking.end(),
              [](const ChannelStats& a, const ChannelStats& b) {
                  if (a.energy_kwh != b.energy_kwh) return a.energy_kwh > b.energy_kwh;
                  return a.channel < b.channel;
              });

    // Daily mains energy on UTC day boundaries.
    std::int64_t first_day = static_cast<std::int64_t>(std::floor(mains.front().t / 86400.0));
    std::int64_t last_day = static_cast<std::int64_t>(std::floor(mains.back().t / 86400.0));
    for (std::int64_t day = first_day; day <= last_day; ++day) {
        double t0 = static_cast<double>(day) * 86400.0;
        double energy = zoh_energy_ws(mains_filled, t0, t0 + 86400.0);
        out.daily_energy_kwh.emplace_back(day * 86400, energy / 3.6e6);
    }
    return out;
}

std::string format_report_summary(const ValidationReport& summary) {
    std::string out;
    out += "uptime_days: " + format_fixed(summary.uptime_s / 86400.0, 3) + "\n";
    out += "total_duration_days: " + format_fixed(summary.total_duration_s / 86400.0, 3) + "\n";
    out += "mean_energy_per_day_kwh: " + format_fixed(summary.mean_energy_per_day_kwh, 2) + "\n";
    out += "mains_vs_submeter_correlation: " +
           format_fixed(summary.mains_vs_submeter_correlation, 3) + "\n";
    out += "proportion_of_energy_submetered: " +
           format_fixed(summary.proportion_submetered, 3) + "\n";
    out += "dropout_rate: " + format_fixed(summary.dropout_rate, 4) + "\n";
    return out;
}

void write_report_files(const DatasetReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [](const std::filesystem::path& file) {
        std::ofstream out(file);
        if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
        return out;
    };

    {
        auto out = open(dir / "report.txt");
        out << format_report_summary(report.summary);
    }
    {
        auto out = open(dir / "mains_histogram.csv");
        out << "bin_start_w,count\n";
        for (std::size_t b = 0; b < report.mains_histogram.counts.size(); ++b)
            out << format_shortest(report.mains_histogram.lo +
                                   static_cast<double>(b) * report.mains_histogram.bin_width)
                << ',' << report.mains_histogram.counts[b] << '\n';
    }
    {
        auto out = open(dir / "appliance_histograms.csv");
        out << "channel,bin_start_w,count\n";
        for (const auto& [channel, hist] : report.appliance_histograms)
            for (std::size_t b = 0; b < hist.counts.size(); ++b)
                if (hist.counts[b] > 0)
                    out << channel << ','
                        << format_shortest(hist.lo + static_cast<double>(b) * hist.bin_width)
                        << ',' << hist.counts[b] << '\n';
    }
    {
        auto out = open(dir / "hourly_usage.csv");
        out << "channel,hour,on_fraction\n";
        for (const auto& [channel, fractions] : report.hourly_on_fraction)
            for (std::size_t h = 0; h < 24; ++h)
                out << channel << ',' << h << ',' << format_fixed(fractions[h], 4) << '\n';
    }
    {
        auto out = open(dir / "energy_ranking.csv");
        out << "rank,channel,name,energy_kwh,dropout_rate\n";
        for (std::size_t i = 0; i < report.energy_ranking.size(); ++i) {
            const auto& row = report.energy_ranking[i];
            out << (i + 1) << ',' << row.channel << ',' << row.name << ','
                << format_fixed(row.energy_kwh, 3) << ',' << format_fixed(row.dropout, 4) << '\n';
        }
    }
    {
        auto out = open(dir / "daily_energy.csv");
        out << "day_start_unix,energy_kwh\n";
        for (const auto& [day, kwh] : report.daily_energy_kwh)
            out << day << ',' << format_fixed(kwh, 3) << '\n';
    }
}

} // namespace dale
