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

#include "thzumi/channel_synth.hpp"
#include "thzumi/characterization.hpp"

#include "catch_amalgamated.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <random>

using namespace thzumi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    UmiCaseParams without_sigmas(UmiCaseParams p)
    {
        p.sf_sigma = p.k_sigma = p.ds_sigma = p.asa_sigma = p.esa_sigma = 0.0;
        return p;
    }

    // Per-cluster power of a generated set.
    std::vector<double> cluster_powers(const MpcSet &set)
    {
        std::map<int, double> p;
        for (const auto &m : set.mpcs)
            p[m.cluster_id.value_or(-1)] += m.power();
        std::vector<double> out;
        for (const auto &[id, v] : p)
            out.push_back(v);
        return out;
    }

    SynthesisOptions windowed()
    {
        SynthesisOptions o;
        o.max_excess_delay = FrequencyPlan{}.max_delay();
        return o;
    }

    Vec3 on_route(double d) { return {route_coordinate(d, 16.6, 1.6), 0.0, 1.6}; }
}

TEST_CASE("Large-scale draws without spread", "[synth]")
{
    std::mt19937_64 rng(1);
    LargeScaleDraw los = draw_large_scale(without_sigmas(UmiCaseParams::los_defaults()), rng);
    CHECK(los.k == 17.54);
    CHECK_THAT(los.ds, WithinRel(20.89e-9, 1e-12));
    CHECK_THAT(los.asa, WithinRel(13.18, 1e-12));
    CHECK_THAT(los.esa, WithinRel(3.98, 1e-12));
    CHECK(los.sf == 0.0);

    LargeScaleDraw olos = draw_large_scale(without_sigmas(UmiCaseParams::olos_defaults()), rng);
    CHECK(olos.k == 8.68);
    CHECK_THAT(olos.ds, WithinRel(74.13e-9, 1e-12));
    CHECK_THAT(olos.asa, WithinRel(38.90, 1e-12));
    CHECK_THAT(olos.esa, WithinRel(6.92, 1e-12));
    CHECK(olos.sf == 0.0);
}

TEST_CASE("Large-scale draw statistics", "[synth][montecarlo]")
{
    std::mt19937_64 rng(2);
    UmiCaseParams p = UmiCaseParams::los_defaults();
    p.asa_sigma = 1.0; // provoke the caps
    p.esa_sigma = 1.0;
    double k = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
    {
        LargeScaleDraw d = draw_large_scale(p, rng);
        k += d.k;
        REQUIRE(d.asa <= 104.0);
        REQUIRE(d.esa <= 52.0);
        REQUIRE(d.ds > 0.0);
    }
    CHECK_THAT(k / n, WithinAbs(17.54, 0.5));
}

TEST_CASE("Cluster counts", "[synth][montecarlo]")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i)
        CHECK(draw_cluster_count(1.0, rng) == 1);
    CHECK_THROWS_AS(draw_cluster_count(0.9, rng), std::domain_error);
    for (double mean : {2.56, 4.14})
    {
        double s = 0.0;
        for (int i = 0; i < 10000; ++i)
        {
            std::size_t c = draw_cluster_count(mean, rng);
            REQUIRE(c >= 1);
            s += static_cast<double>(c);
        }
        CHECK_THAT(s / 10000.0, WithinAbs(mean, 0.1));
    }
}

TEST_CASE("Cluster skeletons", "[synth]")
{
    std::mt19937_64 rng(4);
    SynthesisOptions so;
    LargeScaleDraw ls{10.0, 20e-9, 13.0, 4.0, 0.0};

    ClusterLayout one = generate_clusters(ls, 1, 100e-9, {180.0, 0.0}, so, rng);
    REQUIRE(one.clusters.size() == 1);
    CHECK(one.clusters[0].power == 1.0);
    CHECK(one.clusters[0].delay == 100e-9);
    CHECK(k_factor(std::vector<double>{1.0}) == kSingleClusterK);

    ClusterLayout two = generate_clusters(ls, 2, 100e-9, {180.0, 0.0}, so, rng);
    REQUIRE(two.clusters.size() == 2);
    CHECK_THAT(two.clusters[0].power, WithinAbs(10.0 / 11.0, 1e-12));
    CHECK_THAT(two.clusters[1].power, WithinAbs(1.0 / 11.0, 1e-12));
    CHECK_THAT(two.clusters[0].power, WithinAbs(0.909, 5e-4));

    for (int i = 0; i < 500; ++i)
    {
        std::uniform_real_distribution<double> kd(0.0, 25.0); // the direct cluster stays the strongest
        LargeScaleDraw d{kd(rng), 30e-9, 20.0, 5.0, 0.0};
        std::size_t n = 2 + i % 6;
        ClusterLayout l = generate_clusters(d, n, 50e-9, {90.0, -3.0}, so, rng);
        REQUIRE(l.clusters.size() == n);
        std::vector<double> p;
        double sum = 0.0;
        for (const auto &c : l.clusters)
        {
            p.push_back(c.power);
            sum += c.power;
            CHECK(c.delay >= l.direct_delay);
        }
        CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
        CHECK_THAT(k_factor(p), WithinAbs(d.k, 0.01));
        CHECK(l.clusters[0].delay == 50e-9);
        CHECK(l.clusters[0].azimuth == 90.0);
    }
}

TEST_CASE("One ray per cluster reproduces the skeletons", "[synth]")
{
    std::mt19937_64 rng(5);
    SynthesisOptions so;
    so.rays_per_cluster = 1;
    UmiCaseParams cp = UmiCaseParams::los_defaults();
    LargeScaleDraw ls{12.0, 20e-9, 13.0, 4.0, 0.0};
    ClusterLayout l = generate_clusters(ls, 4, 200e-9, {180.0, 2.0}, so, rng);
    MpcSet set = generate_rays(l, cp, so, LinkCase::los, rng);
    REQUIRE(set.mpcs.size() == 4);
    for (const auto &m : set.mpcs)
    {
        const auto &s = l.clusters.at(static_cast<std::size_t>(*m.cluster_id));
        CHECK(m.delay == s.delay);
        CHECK_THAT(m.power(), WithinRel(s.power, 1e-12));
        CHECK(m.azimuth == s.azimuth);
        CHECK(m.elevation == s.elevation);
    }
    CHECK(set.mpcs.front().origin.kind == OriginKind::los);
}

TEST_CASE("Ray sets: normalization, K and cluster delay spread", "[synth][montecarlo]")
{
    std::mt19937_64 rng(6);
    SynthesisOptions so = windowed();
    UmiCaseParams cp = UmiCaseParams::los_defaults();
    cp.cds_mean = 4e-9;

    double cds_sum = 0.0;
    std::size_t cds_n = 0;
    int realization = 0;
    while (cds_n < 1000)
    {
        LargeScaleDraw ls = draw_large_scale(cp, rng);
        std::size_t n = 2 + realization++ % 4;
        ClusterLayout l = generate_clusters(ls, n, 150e-9, {180.0, 0.0}, so, rng);
        SynthesisOptions all_rays = so;
        all_rays.visibility_range = 0.0;
        MpcSet set = generate_rays(l, cp, all_rays, LinkCase::los, rng);
        CHECK_THAT(set.total_power(), WithinAbs(1.0, 1e-9));
        CHECK(std::is_sorted(set.mpcs.begin(), set.mpcs.end(), [](const Mpc &a, const Mpc &b) { return a.delay < b.delay; }));
        CHECK(set.direct() != nullptr);
        CHECK_THAT(k_factor(cluster_powers(set)), WithinAbs(ls.k, 0.05));
        for (std::size_t c = 1; c < n; ++c)
        {
            std::vector<Mpc> members;
            for (const auto &m : set.mpcs)
                if (m.cluster_id == static_cast<int>(c))
                    members.push_back(m);
            REQUIRE(members.size() == so.rays_per_cluster);
            cds_sum += cluster_spreads(members).cds;
            ++cds_n;
        }
    }
    CHECK_THAT(cds_sum / static_cast<double>(cds_n), WithinAbs(4e-9, 0.5e-9));
}

TEST_CASE("K survives the visibility cut", "[synth][property]")
{
    std::mt19937_64 rng(7);
    SynthesisOptions so = windowed();
    for (LinkCase lc : {LinkCase::los, LinkCase::olos})
    {
        UmiCaseParams cp = lc == LinkCase::los ? UmiCaseParams::los_defaults() : UmiCaseParams::olos_defaults();
        for (int i = 0; i < 200; ++i)
        {
            LargeScaleDraw ls = draw_large_scale(cp, rng);
            std::size_t n = draw_cluster_count(cp.n_clusters_mean, rng);
            ClusterLayout l = generate_clusters(ls, n, 300e-9, {180.0, -4.0}, so, rng);
            MpcSet set = generate_rays(l, cp, so, lc, rng);
            CHECK_THAT(set.total_power(), WithinAbs(1.0, 1e-9));
            if (n > 1)
                CHECK_THAT(k_factor(cluster_powers(set)), WithinAbs(ls.k, 0.05));
            for (const auto &m : set.mpcs)
            {
                CHECK(m.delay >= l.direct_delay);
                CHECK(m.delay <= l.direct_delay + so.max_excess_delay + 1e-15);
                CHECK(m.azimuth >= 0.0);
                CHECK(m.azimuth < 360.0);
                CHECK(std::abs(m.elevation) <= 90.0);
            }
        }
    }
}

TEST_CASE("Realized delay spread follows the drawn mean", "[synth][montecarlo]")
{
    std::mt19937_64 rng(8);
    SynthesisOptions so = windowed();
    UmiCaseParams cp = without_sigmas(UmiCaseParams::los_defaults());
    double ds = 0.0, asa = 0.0;
    const int n = 1000;
    for (int i = 0; i < n; ++i)
    {
        LargeScaleDraw ls = draw_large_scale(cp, rng);
        ClusterLayout l = generate_clusters(ls, draw_cluster_count(cp.n_clusters_mean, rng), 100e-9, {180.0, 0.0}, so, rng);
        MpcSet set = generate_rays(l, cp, so, LinkCase::los, rng);
        ds += rms_delay_spread(set.mpcs);
        asa += circular_angle_spread(set.mpcs, AnglePlane::azimuth);
    }
    CHECK_THAT(ds / n, WithinRel(20.89e-9, 0.10));
    CHECK_THAT(asa / n, WithinRel(13.18, 0.10));
}

TEST_CASE("Scene echoes", "[synth][geometry]")
{
    const double f = 220e9;

    SECTION("Rx at the scatterer")
    {
        Scene s = make_route_scene({190.0});
        s.scatterers.push_back({on_route(190.0), 10.0, "board"});
        auto e = scene_echoes(s, 0, f);
        REQUIRE(e.size() == 1);
        CHECK_THAT(e[0].delay, WithinRel((on_route(190.0) - s.tx_position).norm() / kSpeedOfLight, 1e-12));
        CHECK(e[0].origin.kind == OriginKind::scatterer);
        CHECK(e[0].origin.label == "board");
    }

    SECTION("Guideboard trajectory")
    {
        std::vector<double> d;
        for (double x = 100.0; x <= 190.0; x += 10.0)
            d.push_back(x);
        Scene s = make_route_scene(d);
        Scatterer board;
        board.position = on_route(190.0);
        board.facing_azimuth_deg = 180.0;
        s.scatterers.push_back(board);
        double prev = 1.0;
        for (std::size_t i = 0; i < d.size(); ++i)
        {
            auto e = scene_echoes(s, i, f);
            REQUIRE(e.size() == 1);
            CHECK(e[0].delay < prev);
            prev = e[0].delay;
        }
        CHECK_THAT(prev, WithinRel(s.link_distance(d.size() - 1) / kSpeedOfLight, 1e-9));
        // 1-D route: (190 + 90) / c at 100 m; the heights add about 2 ns.
        CHECK_THAT(scene_echoes(s, 0, f)[0].delay * 1e9, WithinAbs(280.0 / kSpeedOfLight * 1e9, 3.0));
    }

    SECTION("Sign ahead of the Rx")
    {
        Scene s = make_route_scene({170.0});
        s.scatterers.push_back({on_route(230.0), 10.0, "sign"});
        auto e = scene_echoes(s, 0, f);
        REQUIRE(e.size() == 1);
        CHECK_THAT(e[0].delay * 1e9, WithinAbs(967.0, 3.0));
        CHECK_THAT(e[0].azimuth, WithinAbs(0.0, 1e-6));
    }

    SECTION("Back side of a scatterer is weaker")
    {
        Scene s = make_route_scene({150.0, 250.0});
        Scatterer board;
        board.position = on_route(200.0);
        board.reflectivity_loss_db = 0.0;
        board.facing_azimuth_deg = 180.0;
        s.scatterers.push_back(board);
        double front = -scene_echoes(s, 0, f)[0].gain_db();
        double back = -scene_echoes(s, 1, f)[0].gain_db();
        double d1 = (board.position - s.tx_position).norm();
        CHECK_THAT(front, WithinAbs(fspl(f, d1 + (s.rx_positions[0] - board.position).norm()), 1e-9));
        CHECK_THAT(back, WithinAbs(fspl(f, d1 + (s.rx_positions[1] - board.position).norm()) + 20.0, 1e-9));
    }
}

TEST_CASE("Link synthesis", "[synth]")
{
    ParameterBundle p;
    p.los = without_sigmas(p.los);
    p.los.n_clusters_mean = 1.0;
    p.scene = make_route_scene({100.0});

    SECTION("Single path at 100 m")
    {
        p.synthesis.rays_per_cluster = 1;
        std::mt19937_64 rng(9);
        LinkRealization r = synthesize_link(p.scene, 0, p, rng);
        REQUIRE(r.set.mpcs.size() == 1);
        CHECK_THAT(r.set.mpcs[0].gain_db(), WithinAbs(-117.5, 0.05));
        CHECK_THAT(r.set.mpcs[0].gain_db(), WithinAbs(-ci_path_loss(100.0, 220e9, p.los, 0.0), 1e-9));
        CHECK_THAT(r.set.mpcs[0].delay, WithinRel(100.0 / kSpeedOfLight, 1e-12));
    }

    SECTION("Ray-expanded link keeps the total power")
    {
        std::mt19937_64 rng(9);
        LinkRealization r = synthesize_link(p.scene, 0, p, rng);
        CHECK(r.set.mpcs.size() > 1);
        CHECK_THAT(10.0 * std::log10(r.set.total_power()), WithinAbs(-117.5, 0.05));
    }

    SECTION("OLoS direct path carries the foliage loss")
    {
        ParameterBundle q;
        q.scene = make_route_scene({410.0});
        q.scene.foliage_segments = {{0.0, 500.0, 1.0}};
        q.foliage.loss_mean = 22.0;
        q.foliage.loss_sigma = 0.0;
        std::mt19937_64 rng(10);
        LinkRealization r = synthesize_link(q.scene, 0, q, rng);
        REQUIRE(r.state.link_case == LinkCase::olos);
        CHECK(r.state.foliage_loss == 22.0);
        const Mpc *d = r.set.direct();
        REQUIRE(d != nullptr);
        CHECK(d->origin.kind == OriginKind::olos_direct);
        CHECK_THAT(-d->gain_db() - fspl(220e9, 410.0), WithinAbs(22.0, 1e-9));
        CHECK_THAT(d->gain_db(), WithinAbs(-160.0, 8.0));
    }
}

TEST_CASE("Synthesis is deterministic", "[synth][property]")
{
    ParameterBundle p;
    for (std::size_t i = 0; i < p.scene.rx_positions.size(); ++i)
    {
        std::mt19937_64 a(100 + i), b(100 + i);
        LinkRealization x = synthesize_link(p.scene, i, p, a);
        LinkRealization y = synthesize_link(p.scene, i, p, b);
        CHECK(x.set == y.set);
        CHECK(x.set.direct() != nullptr);
        CHECK(std::count_if(x.set.mpcs.begin(), x.set.mpcs.end(), [](const Mpc &m) { return m.origin.is_direct(); }) == 1);
        CHECK_THAT(x.set.direct()->delay, WithinRel(p.scene.link_distance(i) / kSpeedOfLight, 1e-12));
        for (const auto &m : x.set.mpcs)
        {
            CHECK(m.gain > 0.0);
            CHECK(m.gain_db() >= p.sounder.pdp_clip_value);
            CHECK(m.delay >= x.set.direct()->delay);
        }
    }
}
