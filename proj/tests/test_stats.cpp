#include "dale/stats.hpp"

#include "dale/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dale;

namespace {

// Textbook two-pass Pearson, kept deliberately separate from the library.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

std::vector<TimedValue> regular_series(double t0, double period, std::size_t n, double value) {
    std::vector<TimedValue> series;
    for (std::size_t i = 0; i < n; ++i)
        series.push_back(TimedValue{t0 + static_cast<double>(i) * period, value});
    return series;
}

} // namespace

TEST_CASE("dropout: perfect cadence has zero dropout") {
    auto series = regular_series(0.0, 6.0, 601, 100.0);
    CHECK(dropout_rate(series, 6.0) == 0.0);
}

TEST_CASE("dropout: deleting every 10th packet loses about 10%") {
    // Constructed-loss oracle: build the full stream, delete every 10th
    // reading, and compare the measured rate against the known deletion
    // fraction.
    std::vector<TimedValue> full = regular_series(0.0, 6.0, 6000, 50.0);
    std::vector<TimedValue> lossy;
    std::size_t deleted = 0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (i % 10 == 9) {
            ++deleted;
            continue;
        }
        lossy.push_back(full[i]);
    }
    double expected = static_cast<double>(deleted) / static_cast<double>(full.size());
    CHECK(dropout_rate(lossy, 6.0) == doctest::Approx(expected).epsilon(0.1));
    CHECK(std::abs(dropout_rate(lossy, 6.0) - 0.10) < 0.01);
}

TEST_CASE("dropout: a three-day unplug gap is ignored") {
    auto first = regular_series(0.0, 6.0, 601, 75.0);
    auto second = regular_series(3600.0 + 3.0 * 86400.0, 6.0, 601, 75.0);
    first.insert(first.end(), second.begin(), second.end());
    CHECK(dropout_rate(first, 6.0) == 0.0);
}

TEST_CASE("dropout input validation") {
    std::vector<TimedValue> tiny = {{0.0, 1.0}};
    CHECK_THROWS_AS(dropout_rate(tiny, 6.0), insufficient_data);
}

TEST_CASE("zoh energy of a constant series is power times duration exactly") {
    auto series = regular_series(100.0, 6.0, 100, 250.0);
    double duration = series.back().t - series.front().t;
    CHECK(zoh_energy_ws(series, series.front().t, series.back().t) == 250.0 * duration);
    // Jittered timestamps keep the identity: the hold covers every gap.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (std::size_t i = 1; i + 1 < series.size(); ++i) series[i].t += jitter(rng);
    CHECK(zoh_energy_ws(series, series.front().t, series.back().t) ==
          doctest::Approx(250.0 * duration).epsilon(1e-12));
}

TEST_CASE("proportion: mains split into two submeters gives exactly 1") {
    auto mains = regular_series(0.0, 1.0, 3600, 400.0);
    auto half_a = regular_series(0.0, 1.0, 3600, 150.0);
    auto half_b = regular_series(0.0, 1.0, 3600, 250.0);
    CHECK(proportion_submetered(mains, {half_a, half_b}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("proportion: empty submeter list gives zero") {
    auto mains = regular_series(0.0, 1.0, 100, 400.0);
    CHECK(proportion_submetered(mains, {}) == 0.0);
}

TEST_CASE("proportion: zero mains energy is degenerate") {
    auto mains = regular_series(0.0, 1.0, 100, 0.0);
    auto sub = regular_series(0.0, 1.0, 100, 10.0);
    CHECK_THROWS_AS(proportion_submetered(mains, {sub}), degenerate_input);
}

TEST_CASE("proportion is invariant under a uniform time shift") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> watts(0.0, 500.0);
    std::vector<TimedValue> mains, sub;
    for (int i = 0; i < 500; ++i) {
        mains.push_back(TimedValue{i * 6.0, watts(rng)});
        sub.push_back(TimedValue{i * 6.0 + 1.0, watts(rng) * 0.5});
    }
    double base = proportion_submetered(mains, {sub});
    const double shift = 987654.0;
    for (auto& p : mains) p.t += shift;
    for (auto& p : sub) p.t += shift;
    CHECK(proportion_submetered(mains, {sub}) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("correlation: submeter sum equal to mains gives 1") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> watts(50.0, 800.0);
    std::vector<TimedValue> mains;
    for (int i = 0; i < 1000; ++i) mains.push_back(TimedValue{i * 6.0, watts(rng)});
    std::vector<TimedValue> half = mains;
    for (auto& p : half) p.v *= 0.5;
    CHECK(mains_submeter_correlation(mains, {half, half}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("correlation matches the brute-force Pearson oracle") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> watts(0.0, 1000.0);
    std::uniform_real_distribution<double> noise(-100.0, 100.0);
    std::vector<TimedValue> mains, sub;
    const double period = 60.0;
    const int bins = 300;
    std::vector<double> mains_vals, sub_vals;
    for (int b = 0; b < bins; ++b) {
        double m = watts(rng);
        double s = 0.8 * m + noise(rng);
        // Constant inside each bin, so the bin means equal the raw values.
        mains.push_back(TimedValue{b * period, m});
        sub.push_back(TimedValue{b * period, s});
        mains_vals.push_back(m);
        sub_vals.push_back(s);
    }
    // The final bin is half-open; append terminators so the last bin is full.
    mains.push_back(TimedValue{bins * period, mains_vals.back()});
    sub.push_back(TimedValue{bins * period, sub_vals.back()});
    double r = mains_submeter_correlation(mains, {sub}, period);
    CHECK(r == doctest::Approx(pearson_oracle(mains_vals, sub_vals)).epsilon(1e-9));
}

TEST_CASE("correlation of a constant series is undefined") {
    auto mains = regular_series(0.0, 6.0, 100, 100.0);
    auto sub = regular_series(0.0, 6.0, 100, 40.0);
    CHECK_THROWS_AS(mains_submeter_correlation(mains, {sub}), undefined_correlation);
}

TEST_CASE("gap_fill forward-fills short gaps at the nominal cadence") {
    std::vector<TimedValue> series = {{0.0, 50.0}, {90.0, 60.0}};
    auto filled = gap_fill(series, 120.0, 6.0);
    REQUIRE(filled.size() > 2);
    CHECK(filled.front().t == 0.0);
    CHECK(filled.back().t == 90.0);
    for (std::size_t i = 1; i + 1 < filled.size(); ++i) {
        CHECK(filled[i].v == 50.0); // forward-filled from the previous reading
        CHECK(std::fmod(filled[i].t, 6.0) == doctest::Approx(0.0));
    }
}

TEST_CASE("gap_fill zero-fills long gaps") {
    std::vector<TimedValue> series = {{0.0, 50.0}, {600.0, 60.0}};
    auto filled = gap_fill(series, 120.0, 6.0);
    REQUIRE(filled.size() > 2);
    for (std::size_t i = 1; i + 1 < filled.size(); ++i) CHECK(filled[i].v == 0.0);
}

TEST_CASE("gap_fill leaves gapless series unchanged") {
    auto series = regular_series(0.0, 6.0, 200, 80.0);
    auto filled = gap_fill(series);
    REQUIRE(filled.size() == series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        CHECK(filled[i].t == series[i].t);
        CHECK(filled[i].v == series[i].v);
    }
}

TEST_CASE("gap_fill is idempotent and preserves originals (property)") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> watts(0.0, 3000.0);
    std::uniform_int_distribution<int> gap_kind(0, 9);
    std::uniform_real_distribution<double> short_gap(1.0, 119.0);
    std::uniform_real_distribution<double> long_gap(121.0, 5000.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TimedValue> series;
        double t = 0.0;
        for (int i = 0; i < 100; ++i) {
            series.push_back(TimedValue{t, std::floor(watts(rng))});
            t += gap_kind(rng) == 0 ? long_gap(rng) : short_gap(rng);
        }
        auto once = gap_fill(series);
        auto twice = gap_fill(once);
        REQUIRE(once.size() == twice.size());
        for (std::size_t i = 0; i < once.size(); ++i) {
            CHECK(once[i].t == twice[i].t);
            CHECK(once[i].v == twice[i].v);
        }
        // All original readings survive.
        std::size_t found = 0, probe = 0;
        for (const auto& original : series) {
            while (probe < once.size() && once[probe].t < original.t) ++probe;
            if (probe < once.size() && once[probe].t == original.t &&
                once[probe].v == original.v)
                ++found;
        }
        CHECK(found == series.size());
        // Dichotomy: inserted points in short gaps repeat the previous value,
        // long gaps hold zero.
        probe = 0;
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            double gap = series[i + 1].t - series[i].t;
            double expected = gap > 120.0 ? 0.0 : series[i].v;
            for (const auto& point : once)
                if (point.t > series[i].t && point.t < series[i + 1].t)
                    CHECK(point.v == expected);
        }
    }
}

TEST_CASE("a single always-on 415 W appliance for a day reports 9.96 kWh") {
    HouseDataset dataset;
    dataset.house_number = 1;
    dataset.metadata.meters.push_back(MeterInfo{1, "soundcard", true, PowerUnit::watts});
    dataset.metadata.meters.push_back(MeterInfo{2, "edf_iam", false, PowerUnit::watts});
    ApplianceInfo heater;
    heater.name = "heater";
    heater.meter_channel = 2;
    dataset.metadata.appliances.push_back(heater);

    ChannelSeries mains_series{1, PowerUnit::watts, {}};
    ChannelSeries heater_series{2, PowerUnit::watts, {}};
    for (int i = 0; i <= 14400; ++i) {
        std::int64_t t = 1422000000 + static_cast<std::int64_t>(i) * 6;
        mains_series.readings.push_back(ChannelReading{t, 415});
        heater_series.readings.push_back(ChannelReading{t, 415});
    }
    dataset.channels = {mains_series, heater_series};

    auto rep = report(dataset);
    CHECK(rep.summary.mean_energy_per_day_kwh == doctest::Approx(9.96).epsilon(0.001));
    CHECK(rep.summary.proportion_submetered == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.summary.dropout_rate == 0.0);
    REQUIRE(rep.energy_ranking.size() == 1);
    CHECK(rep.energy_ranking[0].name == "heater");
    CHECK(rep.energy_ranking[0].energy_kwh == doctest::Approx(9.96).epsilon(0.001));
}

TEST_CASE("top-k ranking matches brute-force energy sums") {
    HouseDataset dataset;
    dataset.house_number = 1;
    dataset.metadata.meters.push_back(MeterInfo{1, "soundcard", true, PowerUnit::watts});
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> power(0, 2000);
    std::vector<double> brute_energy(3, 0.0);
    ChannelSeries site{1, PowerUnit::watts, {}};
    for (int i = 0; i < 1000; ++i)
        site.readings.push_back(ChannelReading{1422000000 + i * 6, 500});
    dataset.channels.push_back(site);
    for (int c = 0; c < 3; ++c) {
        dataset.metadata.meters.push_back(MeterInfo{c + 2, "edf_iam", false, PowerUnit::watts});
        ApplianceInfo info;
        info.name = "app_" + std::to_string(c + 2);
        info.meter_channel = c + 2;
        dataset.metadata.appliances.push_back(info);
        ChannelSeries series{c + 2, PowerUnit::watts, {}};
        for (int i = 0; i < 1000; ++i)
            series.readings.push_back(ChannelReading{1422000000 + i * 6, power(rng)});
        for (std::size_t i = 0; i + 1 < series.readings.size(); ++i)
            brute_energy[static_cast<std::size_t>(c)] +=
                series.readings[i].power *
                static_cast<double>(series.readings[i + 1].timestamp -
                                    series.readings[i].timestamp);
        dataset.channels.push_back(std::move(series));
    }
    auto rep = report(dataset);
    REQUIRE(rep.energy_ranking.size() == 3);
    for (std::size_t i = 1; i < 3; ++i)
        CHECK(rep.energy_ranking[i - 1].energy_kwh >= rep.energy_ranking[i].energy_kwh);
    for (const auto& row : rep.energy_ranking) {
        auto idx = static_cast<std::size_t>(row.channel - 2);
        CHECK(row.energy_kwh == doctest::Approx(brute_energy[idx] / 3.6e6).epsilon(1e-9));
    }
}

TEST_CASE("six-setting vacuum histogram has six separated modes") {
    HouseDataset dataset;
    dataset.house_number = 1;
    dataset.metadata.meters.push_back(MeterInfo{1, "soundcard", true, PowerUnit::watts});
    dataset.metadata.meters.push_back(MeterInfo{2, "edf_iam", false, PowerUnit::watts});
    ApplianceInfo vacuum;
    vacuum.name = "vacuum";
    vacuum.meter_channel = 2;
    dataset.metadata.appliances.push_back(vacuum);

    ChannelSeries site{1, PowerUnit::watts, {}};
    ChannelSeries series{2, PowerUnit::watts, {}};
    std::mt19937_64 rng(37);
    std::uniform_int_distribution<int> setting(0, 5);
    std::int64_t t = 1422000000;
    for (int i = 0; i < 2000; ++i) {
        t += 6;
        site.readings.push_back(ChannelReading{t, 700});
        series.readings.push_back(
            ChannelReading{t, i % 3 == 0 ? 0 : 400 + 200 * setting(rng)});
    }
    dataset.channels = {site, series};
    auto rep = report(dataset);
    REQUIRE(rep.appliance_histograms.size() == 1);
    const auto& hist = rep.appliance_histograms[0].second;
    // Count clusters of non-zero bins separated by empty bins.
    int clusters = 0;
    bool inside = false;
    for (std::int64_t count : hist.counts) {
        if (count > 0 && !inside) {
            ++clusters;
            inside = true;
        } else if (count == 0) {
            inside = false;
        }
    }
    CHECK(clusters == 6);
}

TEST_CASE("unplug gaps are zero-filled, not held, in the energy products") {
    // 1 h at 500 W, a 3-day unplug while the last reading was 500 W, then
    // another hour at 500 W. Mean energy per active day must stay at the
    // 500 W level instead of absorbing three phantom days of 500 W.
    HouseDataset dataset;
    dataset.house_number = 1;
    dataset.metadata.meters.push_back(MeterInfo{1, "soundcard", true, PowerUnit::watts});
    dataset.metadata.meters.push_back(MeterInfo{2, "edf_iam", false, PowerUnit::watts});
    ApplianceInfo tv;
    tv.name = "television";
    tv.meter_channel = 2;
    dataset.metadata.appliances.push_back(tv);

    ChannelSeries site{1, PowerUnit::watts, {}};
    ChannelSeries series{2, PowerUnit::watts, {}};
    auto add_hour = [&](std::int64_t start) {
        for (std::int64_t t = start; t < start + 3600; t += 6) {
            site.readings.push_back(ChannelReading{t, 500});
            series.readings.push_back(ChannelReading{t, 500});
        }
    };
    add_hour(1422000000);
    add_hour(1422000000 + 3600 + 3 * 86400);
    dataset.channels = {site, series};

    auto rep = report(dataset);
    const double active_days = rep.summary.uptime_s / 86400.0;
    CHECK(rep.summary.mean_energy_per_day_kwh ==
          doctest::Approx(0.5 * 24.0).epsilon(0.01)); // 500 W per active day
    CHECK(active_days < 0.1);
    REQUIRE(rep.energy_ranking.size() == 1);
    // ~2 h of 500 W, not 74 h.
    CHECK(rep.energy_ranking[0].energy_kwh == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("report rejects an empty dataset") {
    HouseDataset dataset;
    CHECK_THROWS_AS(report(dataset), insufficient_data);
}
