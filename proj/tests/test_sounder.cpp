// SPDX-License-Identifier: Apache-2.0
//
// thz-umi: simulation and characterization toolkit for 220 GHz urban-microcell channels
// Copyright (C) 2026 The thz-umi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "thzumi/estimation.hpp"
#include "thzumi/sounder.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>

using namespace thzumi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    const FrequencyPlan kPlan;
    const ScanGrid kGrid;

    Mpc path(double delay, double gain_db, double az = 30.0, double el = 0.0)
    {
        Mpc m;
        m.delay = delay;
        m.gain = std::pow(10.0, gain_db / 20.0);
        m.azimuth = az;
        m.elevation = el;
        m.origin = {OriginKind::los, ""};
        return m;
    }

    MpcSet single(double delay, double gain_db, double az = 30.0, double el = 0.0)
    {
        MpcSet s;
        s.mpcs.push_back(path(delay, gain_db, az, el));
        return s;
    }

    DssScan quiet_scan(const MpcSet &set, const ScanOptions &base = {}, const AntennaPattern &rx = AntennaPattern::rx_horn(),
                       const AntennaPattern &tx = AntennaPattern::tx_waveguide())
    {
        ScanOptions o = base;
        o.add_noise = false;
        std::mt19937_64 rng(1);
        return simulate_scan(set, kPlan, kGrid, rx, tx, SounderParams{}, o, rng);
    }

    std::size_t strongest_bin(std::span<const std::complex<float>> cir)
    {
        std::size_t best = 0;
        for (std::size_t k = 1; k < cir.size(); ++k)
            if (std::norm(cir[k]) > std::norm(cir[best]))
                best = k;
        return best;
    }

    double db(std::complex<float> v) { return 10.0 * std::log10(std::norm(std::complex<double>(v))); }

    // Sub-bin delay of the strongest sample of one CIR.
    double peak_delay(const DssScan &scan, std::size_t dir)
    {
        auto cir = scan.cir(dir);
        std::size_t k = strongest_bin(cir);
        return (static_cast<double>(k) + fractional_peak_offset(cir, k, true)) * kPlan.delay_resolution();
    }

    std::size_t boresight(double az, double el)
    {
        return kGrid.index(static_cast<std::size_t>(az / kGrid.azimuth_step),
                           static_cast<std::size_t>((el - kGrid.elevation_start) / kGrid.elevation_step));
    }
}

TEST_CASE("Horn pattern", "[sounder]")
{
    AntennaPattern horn = AntennaPattern::rx_horn();
    CHECK(antenna_gain(horn, 0.0) == 26.0);
    CHECK_THAT(antenna_gain(horn, 4.0), WithinAbs(23.0, 1e-12));
    CHECK_THAT(antenna_gain(horn, -4.0), WithinAbs(23.0, 1e-12));
    CHECK_THAT(antenna_gain(horn, 60.0), WithinAbs(-4.0, 1e-12));
    CHECK_THAT(antenna_gain(horn, 180.0), WithinAbs(-4.0, 1e-12));
    AntennaPattern wg = AntennaPattern::tx_waveguide();
    CHECK(antenna_gain(wg, 0.0) == 7.0);
    CHECK(antenna_gain(wg, 120.0) == 7.0);
}

TEST_CASE("Pulse shape", "[sounder]")
{
    CHECK(pulse(0.0) == 1.0);
    for (int k = 1; k < 20; ++k)
    {
        CHECK_THAT(pulse(k), WithinAbs(0.0, 1e-12));
        CHECK_THAT(pulse(-k), WithinAbs(0.0, 1e-12));
    }
    CHECK_THAT(pulse(0.3), WithinAbs(pulse(-0.3), 1e-15));
}

TEST_CASE("Sounder arithmetic", "[sounder]")
{
    CHECK_THAT(kPlan.delay_resolution() * 1e9, WithinAbs(0.651, 5e-4));
    // 19.5 cm of path length is one delay bin.
    CHECK_THAT(kSpeedOfLight * kPlan.delay_resolution(), WithinAbs(0.195, 5e-4));
    double tau = 410.0 / kSpeedOfLight;
    CHECK_THAT(tau * 1e9, WithinAbs(1367.6, 0.05));
    CHECK_THAT((tau - kPlan.max_delay()) * 1e9, WithinAbs(34.0, 0.5));
    CHECK(kPlan.extension_length() == 106);
    CHECK_THAT(kSpeedOfLight * kPlan.extended_samples / kPlan.bandwidth, WithinAbs(420.0, 1.0));
}

TEST_CASE("Timestamps follow the visiting order", "[sounder]")
{
    auto t = scan_timestamps(kGrid, 2.0);
    REQUIRE(t.size() == 180);
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t[i] == 2.0 * static_cast<double>(i));
}

TEST_CASE("Single path on boresight", "[sounder]")
{
    const double tau = 100e-9;
    DssScan scan = quiet_scan(single(tau, -100.0));
    REQUIRE(scan.n_directions() == 180);
    REQUIRE(scan.samples_per_cir == 2048);
    auto cir = scan.cir(boresight(30.0, 0.0));
    CHECK(strongest_bin(cir) == static_cast<std::size_t>(std::lround(tau / kPlan.delay_resolution())));

    // On a bin centre the sample carries the full composed level.
    double on_grid = 154.0 * kPlan.delay_resolution();
    DssScan exact = quiet_scan(single(on_grid, -100.0));
    auto c2 = exact.cir(boresight(30.0, 0.0));
    CHECK(strongest_bin(c2) == 154);
    CHECK_THAT(db(c2[154]), WithinAbs(-100.0 + 26.0 + 7.0, 1e-3));
    // The neighbours see the pattern.
    CHECK_THAT(db(exact.cir(boresight(40.0, 0.0))[154]), WithinAbs(-100.0 + 7.0 + 26.0 - 12.0 * (10.0 / 8.0) * (10.0 / 8.0), 1e-3));
}

TEST_CASE("Circular aliasing", "[sounder]")
{
    const double tau = 1366.7e-9;
    DssScan scan = quiet_scan(single(tau, -110.0));
    std::size_t d = boresight(30.0, 0.0);
    double wrapped = peak_delay(scan, d);
    CHECK_THAT(wrapped * 1e9, WithinAbs(34.0, kPlan.delay_resolution() * 1e9));
    CHECK_THAT(wrapped, WithinAbs(tau - kPlan.max_delay(), 0.05e-9));

    DssScan ext = dealias_extend(scan);
    CHECK(ext.extended);
    CHECK(ext.samples_per_cir == 2154);
    for (std::size_t dir : {std::size_t{0}, d, std::size_t{179}})
        for (std::size_t k = 2048; k < 2154; ++k)
            CHECK(ext.cir(dir)[k] == ext.cir(dir)[k - 2048]);
    std::size_t late = 2048 + strongest_bin(scan.cir(d));
    CHECK(strongest_bin(ext.cir(d).subspan(2048)) + 2048 == late);
    CHECK_THAT(static_cast<double>(late) * kPlan.delay_resolution() * 1e9, WithinAbs(1366.7, kPlan.delay_resolution() * 1e9));
    CHECK_THROWS(dealias_extend(ext));

    // The 410 m route end wraps the same way.
    DssScan far = quiet_scan(single(410.0 / kSpeedOfLight, -110.0));
    CHECK_THAT(peak_delay(far, d), WithinAbs(410.0 / kSpeedOfLight - kPlan.max_delay(), 0.05e-9));
}

TEST_CASE("Wrap-around identity", "[sounder][property]")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> tau(0.0, 1300e-9), az(0.0, 360.0), el(-20.0, 20.0);
    for (int i = 0; i < 5; ++i)
    {
        double t = tau(rng), a = az(rng), e = el(rng);
        DssScan x = quiet_scan(single(t, -90.0, a, e));
        DssScan y = quiet_scan(single(t + kPlan.max_delay(), -90.0, a, e));
        double worst = 0.0, peak = 0.0;
        for (std::size_t k = 0; k < x.samples.size(); ++k)
        {
            worst = std::max(worst, std::abs(std::complex<double>(x.samples[k]) - std::complex<double>(y.samples[k])));
            peak = std::max(peak, static_cast<double>(std::abs(x.samples[k])));
        }
        CHECK(worst <= 1e-5 * peak);
    }
}

TEST_CASE("Energy with isotropic antennas", "[sounder][property]")
{
    AntennaPattern iso{0.0, 360.0, 0.0, AntennaKind::waveguide};
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> bin(20, 2000);
    std::uniform_real_distribution<double> g(-120.0, -80.0), frac(0.0, 1.0);
    MpcSet on_grid, off_grid;
    double truth = 0.0;
    for (int i = 0; i < 12; ++i)
    {
        double gain = g(rng);
        int b = bin(rng);
        on_grid.mpcs.push_back(path(b * kPlan.delay_resolution(), gain));
        off_grid.mpcs.push_back(path((b + frac(rng)) * kPlan.delay_resolution(), gain));
        truth += std::pow(10.0, gain / 10.0);
    }
    for (const MpcSet *set : {&on_grid, &off_grid})
    {
        DssScan scan = quiet_scan(*set, {}, iso, iso);
        for (std::size_t d : {std::size_t{0}, std::size_t{77}})
        {
            double e = 0.0;
            for (auto v : scan.cir(d))
                e += std::norm(std::complex<double>(v));
            // Paths are well apart on average; cross terms stay small.
            CHECK_THAT(e, WithinRel(truth, set == &on_grid ? 1e-4 : 0.05));
        }
    }
    // Off the grid the raised-cosine samples lose 1 - (roll-off / 4)(1 - cos 2 pi f) of the energy.
    for (double f : {0.0, 0.1, 0.25, 0.5, 0.8})
    {
        DssScan scan = quiet_scan(single((500.0 + f) * kPlan.delay_resolution(), -100.0), {}, iso, iso);
        double e = 0.0;
        for (auto v : scan.cir(0))
            e += std::norm(std::complex<double>(v));
        double expected = 1.0 - kPulseRollOff / 4.0 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * f));
        CHECK_THAT(e / 1e-10, WithinAbs(expected, 1e-3));
        if (f == 0.0)
            CHECK_THAT(e, WithinRel(1e-10, 0.01));
    }
}

TEST_CASE("Noise-only scan sits at the floor", "[sounder]")
{
    SounderParams sp;
    sp.noise_margin = 0.0;
    std::mt19937_64 rng(5);
    DssScan scan = simulate_scan(MpcSet{}, kPlan, kGrid, AntennaPattern::rx_horn(), AntennaPattern::tx_waveguide(), sp, {}, rng);
    double sum = 0.0;
    for (auto v : scan.samples)
        sum += std::norm(std::complex<double>(v));
    double mean_db = 10.0 * std::log10(sum / static_cast<double>(scan.samples.size()));
    CHECK_THAT(mean_db, WithinAbs(sp.noise_floor, 3.0));

    // Default margin keeps the noise well under the floor.
    std::mt19937_64 rng2(5);
    DssScan quiet = simulate_scan(MpcSet{}, kPlan, kGrid, AntennaPattern::rx_horn(), AntennaPattern::tx_waveguide(), SounderParams{}, {}, rng2);
    sum = 0.0;
    for (auto v : quiet.samples)
        sum += std::norm(std::complex<double>(v));
    CHECK_THAT(10.0 * std::log10(sum / static_cast<double>(quiet.samples.size())), WithinAbs(-180.0, 0.5));
}

TEST_CASE("Calibration", "[sounder]")
{
    MpcSet set = single(200e-9, -95.0);
    set.mpcs.push_back(path(450e-9, -105.0, 120.0, 10.0));
    DssScan raw = quiet_scan(set);

    std::vector<std::complex<double>> identity(kPlan.n_samples, 1.0);
    CHECK(apply_calibration(raw, identity) == raw);

    std::vector<std::complex<double>> flat(kPlan.n_samples, std::pow(10.0, 6.0 / 20.0));
    DssScan down = apply_calibration(raw, flat);
    std::size_t d = boresight(30.0, 0.0);
    std::size_t k = strongest_bin(raw.cir(d));
    CHECK_THAT(db(down.cir(d)[k]), WithinAbs(db(raw.cir(d)[k]) - 6.0, 1e-4));

    // Injected response removed again.
    std::vector<std::complex<double>> r(kPlan.n_samples);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = std::polar(1.0 + 0.3 * std::cos(0.01 * static_cast<double>(i)), 0.002 * static_cast<double>(i * i % 977));
    ScanOptions with_r;
    with_r.system_response = r;
    DssScan fixed = apply_calibration(quiet_scan(set, with_r), r);
    double worst = -1000.0;
    for (std::size_t i = 0; i < raw.samples.size(); ++i)
    {
        double e = std::norm(std::complex<double>(fixed.samples[i]) - std::complex<double>(raw.samples[i]));
        if (e > 0.0)
            worst = std::max(worst, 10.0 * std::log10(e));
    }
    CHECK(worst < -120.0);

    auto bad = identity;
    bad[17] = 0.0;
    try
    {
        apply_calibration(raw, bad);
        FAIL("expected an error");
    }
    catch (const std::invalid_argument &e)
    {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_calibration(raw, std::vector<std::complex<double>>(10, 1.0)), std::invalid_argument);
}

TEST_CASE("Drift correction", "[sounder]")
{
    const double tau = 300.3e-9;
    MpcSet set = single(tau, -100.0);
    std::vector<DriftAnchor> anchors;
    for (std::size_t d = 0; d < 180; d += 5)
        anchors.push_back({d, tau});

    SECTION("linear drift")
    {
        ScanOptions o;
        o.drift = {2e-9, 1e-9};
        DssScan drifted = quiet_scan(set, o);
        // Uncorrected, the last direction is off by hundreds of ns.
        CHECK(std::abs(peak_delay(drifted, 179) - tau) > 100e-9);
        DriftFit fit;
        DssScan fixed = correct_drift(drifted, anchors, &fit);
        CHECK_THAT(fit.slope, WithinAbs(1e-9, 1e-12));
        CHECK_THAT(fit.offset, WithinAbs(2e-9, 0.05e-9));
        for (std::size_t d = 0; d < 180; ++d)
            CHECK(std::abs(peak_delay(fixed, d) - tau) < 0.1e-9);
    }

    SECTION("two anchors are enough")
    {
        ScanOptions o;
        o.drift = {0.0, 0.5e-9};
        std::vector<DriftAnchor> two{{3, tau}, {170, tau}};
        DssScan fixed = correct_drift(quiet_scan(set, o), two);
        for (std::size_t d = 0; d < 180; d += 7)
            CHECK(std::abs(peak_delay(fixed, d) - tau) < 0.1e-9);
    }

    SECTION("offset only")
    {
        ScanOptions o;
        o.drift = {3e-9, 0.0};
        DriftFit fit;
        correct_drift(quiet_scan(set, o), anchors, &fit);
        CHECK(std::abs(fit.slope) < 1e-12);
    }

    SECTION("no drift")
    {
        DssScan raw = quiet_scan(set);
        DriftFit fit;
        DssScan same = correct_drift(raw, anchors, &fit);
        CHECK(std::abs(fit.offset) < kPlan.delay_resolution());
        for (std::size_t d = 0; d < 180; ++d)
            CHECK(std::abs(peak_delay(same, d) - peak_delay(raw, d)) < kPlan.delay_resolution());
    }

    SECTION("anchor errors")
    {
        DssScan raw = quiet_scan(set);
        std::vector<DriftAnchor> one{{0, tau}};
        CHECK_THROWS_AS(correct_drift(raw, one), std::invalid_argument);
        std::vector<DriftAnchor> same{{4, tau}, {4, tau}};
        CHECK_THROWS_AS(correct_drift(raw, same), std::invalid_argument);
    }
}

TEST_CASE("Scan container", "[sounder][io]")
{
    std::mt19937_64 rng(6);
    MpcSet set = single(123e-9, -98.0);
    set.link = {7, 36.9, LinkCase::olos, 14.5};
    DssScan scan = simulate_scan(set, kPlan, kGrid, AntennaPattern::rx_horn(), AntennaPattern::tx_waveguide(), SounderParams{}, {}, rng);
    auto bytes = serialize_scan(scan);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "THZSCAN1");
    CHECK(parse_scan(bytes) == scan);

    auto path = std::filesystem::temp_directory_path() / "thzumi_test.thzscan";
    write_scan(path.string(), scan);
    CHECK(read_scan(path.string()) == scan);
    std::filesystem::remove(path);

    DssScan ext = dealias_extend(scan);
    CHECK(parse_scan(serialize_scan(ext)) == ext);

    auto broken = bytes;
    broken[0] = 'X';
    CHECK_THROWS(parse_scan(broken));
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    CHECK_THROWS(parse_scan(cut));

    std::string csv = pdp_csv(scan, -200.0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2049);
}

TEST_CASE("Noise draws are seed-controlled", "[sounder][property]")
{
    MpcSet set = single(77e-9, -120.0);
    auto run = [&](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return simulate_scan(set, kPlan, kGrid, AntennaPattern::rx_horn(), AntennaPattern::tx_waveguide(), SounderParams{}, {}, rng);
    };
    CHECK(run(9) == run(9));
    CHECK_FALSE(run(9) == run(10));
}
