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
#include "thzumi/clustering.hpp"

#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace thzumi;
using Catch::Matchers::WithinAbs;

namespace
{
    Mpc at(double delay_ns, double az, double el, double gain = 1e-6)
    {
        Mpc m;
        m.delay = delay_ns * 1e-9;
        m.azimuth = az;
        m.elevation = el;
        m.gain = gain;
        return m;
    }

    // Cluster memberships as a set of sorted index sets.
    std::set<std::vector<std::size_t>> memberships(const ClusterResult &r)
    {
        std::set<std::vector<std::size_t>> out;
        for (const auto &c : r.clusters)
            out.insert(c.members);
        return out;
    }

    // Clusters of a generated link with well-separated centres, or nothing.
    struct Suite
    {
        std::vector<Mpc> mpcs;
        std::vector<int> labels;
    };

    double centre_distance(const ClusterSkeleton &a, const ClusterSkeleton &b, const DelayNormalization &n)
    {
        Mpc x = at(a.delay * 1e9, a.azimuth, a.elevation), y = at(b.delay * 1e9, b.azimuth, b.elevation);
        return mcd(x, y, ClusteringParams{}.delay_weight, std::max(n.tau_max, ClusteringParams{}.delay_span_floor), n.tau_std);
    }

    std::optional<Suite> separated_link(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        SynthesisOptions so;
        so.max_excess_delay = FrequencyPlan{}.max_delay();
        so.visibility_range = 0.0;
        // Compact clusters: spreads well under the clustering radius.
        UmiCaseParams cp = UmiCaseParams::olos_defaults();
        cp.cds_mean = 2e-9;
        cp.casa_mean = 3.0;
        cp.cesa_mean = 1.0;
        LargeScaleDraw ls = draw_large_scale(cp, rng);
        ls.k = 3.0;
        ClusterLayout l = generate_clusters(ls, 3, 100e-9, {180.0, 0.0}, so, rng);
        MpcSet set = generate_rays(l, cp, so, LinkCase::olos, rng);
        DelayNormalization n = delay_normalization(set.mpcs);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = i + 1; j < 3; ++j)
                if (centre_distance(l.clusters[i], l.clusters[j], n) < 0.6)
                    return std::nullopt;
        Suite s;
        s.mpcs = set.mpcs;
        for (const auto &m : set.mpcs)
            s.labels.push_back(*m.cluster_id);
        return s;
    }
}

TEST_CASE("MCD basics", "[clustering]")
{
    Mpc a = at(100, 30, 5);
    CHECK(mcd(a, a, 8.0, 500e-9, 100e-9) == 0.0);
    CHECK_THAT(mcd(at(100, 0, 0), at(100, 180, 0), 8.0, 500e-9, 100e-9), WithinAbs(1.0, 1e-12));
    CHECK_THAT(mcd(at(100, 0, 90), at(100, 0, -90), 8.0, 500e-9, 100e-9), WithinAbs(1.0, 1e-12));
    // Delay term alone: zeta |dt| tau_std / tau_max^2.
    CHECK_THAT(mcd(at(100, 10, 0), at(150, 10, 0), 8.0, 500e-9, 100e-9), WithinAbs(8.0 * 50e-9 * 100e-9 / (500e-9 * 500e-9), 1e-12));
    CHECK_THAT(mcd(at(0, 0, 0), at(0, 90, 0), 8.0, 1e-9, 1e-9), WithinAbs(std::sqrt(2.0) / 2.0, 1e-12));
}

TEST_CASE("MCD symmetry and sign", "[clustering][property]")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0.0, 1000.0), az(0.0, 360.0), el(-90.0, 90.0), z(0.0, 20.0);
    for (int i = 0; i < 2000; ++i)
    {
        Mpc a = at(d(rng), az(rng), el(rng)), b = at(d(rng), az(rng), el(rng));
        double zeta = z(rng);
        double x = mcd(a, b, zeta, 1000e-9, 300e-9);
        CHECK(x >= 0.0);
        CHECK(x == mcd(b, a, zeta, 1000e-9, 300e-9));
        CHECK(mcd(a, a, zeta, 1000e-9, 300e-9) == 0.0);
        // The angular part never exceeds 1.
        CHECK(mcd(at(100, a.azimuth, a.elevation), at(100, b.azimuth, b.elevation), zeta, 1000e-9, 300e-9) <= 1.0 + 1e-12);
    }
}

TEST_CASE("Delay normalization", "[clustering]")
{
    std::vector<Mpc> none;
    CHECK(delay_normalization(none).tau_max == 0.0);
    std::vector<Mpc> one{at(10, 0, 0)};
    CHECK(delay_normalization(one).tau_std == 0.0);
    std::vector<Mpc> three{at(10, 0, 0), at(20, 0, 0), at(40, 0, 0)};
    DelayNormalization n = delay_normalization(three);
    CHECK_THAT(n.tau_max, WithinAbs(30e-9, 1e-18));
    CHECK_THAT(n.tau_std, WithinAbs(std::sqrt(((10.0 - 70.0 / 3) * (10.0 - 70.0 / 3) + (20.0 - 70.0 / 3) * (20.0 - 70.0 / 3) +
                                               (40.0 - 70.0 / 3) * (40.0 - 70.0 / 3)) / 2.0) * 1e-9, 1e-18));
}

TEST_CASE("DBSCAN on small inputs", "[clustering]")
{
    ClusteringParams p;
    CHECK(dbscan(std::vector<Mpc>{}, p).clusters.empty());

    std::vector<Mpc> lone{at(100, 10, 0)};
    ClusterResult r = dbscan(lone, p);
    CHECK(r.clusters.empty());
    CHECK(r.noise == std::vector<std::size_t>{0});
    CHECK(r.labels() == std::vector<int>{-1});

    std::vector<Mpc> two_groups;
    for (int i = 0; i < 5; ++i)
        two_groups.push_back(at(100 + i * 0.5, 10 + i, 0));
    for (int i = 0; i < 5; ++i)
        two_groups.push_back(at(400 + i * 0.5, 200 + i, 5));
    r = dbscan(two_groups, p);
    REQUIRE(r.clusters.size() == 2);
    CHECK(r.noise.empty());
    CHECK(r.clusters[0].members == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(r.clusters[1].members == std::vector<std::size_t>{5, 6, 7, 8, 9});
    CHECK(r.n_points == 10);
    CHECK(r.params == p);

    ClusteringParams bad = p;
    bad.eps = 0.0;
    CHECK_THROWS(dbscan(two_groups, bad));
    bad = p;
    bad.min_pts = 0;
    CHECK_THROWS(dbscan(two_groups, bad));
}

TEST_CASE("DBSCAN partitions its input", "[clustering][property]")
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(0.0, 800.0), az(0.0, 360.0), el(-20.0, 20.0);
    for (int t = 0; t < 200; ++t)
    {
        std::vector<Mpc> m(1 + t % 40);
        for (auto &x : m)
            x = at(d(rng), az(rng), el(rng));
        ClusterResult r = dbscan(m, ClusteringParams{});
        std::vector<int> seen(m.size(), 0);
        for (const auto &c : r.clusters)
        {
            CHECK(c.members.size() >= ClusteringParams{}.min_pts);
            for (auto i : c.members)
                ++seen[i];
        }
        for (auto i : r.noise)
            ++seen[i];
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
}

TEST_CASE("Memberships do not depend on input order", "[clustering][property]")
{
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 1; seed <= 200; ++seed)
    {
        std::mt19937_64 g(seed);
        SynthesisOptions so;
        so.max_excess_delay = FrequencyPlan{}.max_delay();
        UmiCaseParams cp = UmiCaseParams::olos_defaults();
        LargeScaleDraw ls = draw_large_scale(cp, g);
        ClusterLayout l = generate_clusters(ls, draw_cluster_count(cp.n_clusters_mean, g), 100e-9, {180.0, 0.0}, so, g);
        std::vector<Mpc> m = generate_rays(l, cp, so, LinkCase::olos, g).mpcs;

        std::vector<std::size_t> perm(m.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<Mpc> shuffled(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            shuffled[i] = m[perm[i]];

        ClusterResult a = dbscan(m, ClusteringParams{});
        ClusterResult b = dbscan(shuffled, ClusteringParams{});
        // Map the shuffled result back to original indices.
        ClusterResult back = b;
        for (auto &c : back.clusters)
        {
            for (auto &i : c.members)
                i = perm[i];
            std::sort(c.members.begin(), c.members.end());
        }
        for (auto &i : back.noise)
            i = perm[i];
        std::sort(back.noise.begin(), back.noise.end());
        CHECK(memberships(a) == memberships(back));
        CHECK(a.noise == back.noise);
    }
}

TEST_CASE("Well-separated synthetic clusters are recovered", "[clustering][montecarlo]")
{
    std::size_t n = 0, exact = 0;
    double ari = 0.0;
    for (std::uint64_t seed = 1; n < 1000; ++seed)
    {
        auto s = separated_link(seed);
        if (!s)
            continue;
        ++n;
        ClusterResult r = dbscan(s->mpcs, ClusteringParams{});
        std::vector<int> found = r.labels();
        ari += adjusted_rand_index(found, s->labels);
        exact += r.clusters.size() == 3 && r.noise.empty();
    }
    INFO("clusters recovered exactly on " << exact << " of " << n);
    CHECK(exact >= n * 95 / 100);
    CHECK(ari / static_cast<double>(n) >= 0.9);
}

TEST_CASE("Adjusted Rand index", "[clustering]")
{
    std::vector<int> a{0, 0, 1, 1, 2, 2};
    CHECK_THAT(adjusted_rand_index(a, a), WithinAbs(1.0, 1e-12));
    std::vector<int> relabelled{5, 5, 3, 3, 9, 9};
    CHECK_THAT(adjusted_rand_index(a, relabelled), WithinAbs(1.0, 1e-12));
    std::vector<int> merged{0, 0, 0, 0, 0, 0};
    CHECK(adjusted_rand_index(a, merged) < 0.5);
    // Noise counts as singletons.
    std::vector<int> noise{-1, -1, -1, -1, -1, -1};
    std::vector<int> singles{0, 1, 2, 3, 4, 5};
    CHECK_THAT(adjusted_rand_index(noise, singles), WithinAbs(1.0, 1e-12));
}

TEST_CASE("Cluster CSV round trip", "[clustering][io]")
{
    std::vector<Mpc> m{at(100, 0, 0), at(100.2, 1, 0), at(700, 200, 0), at(700.3, 201, 0), at(300, 90, 10)};
    ClusteringParams p;
    p.eps = 0.25;
    ClusterResult r = dbscan(m, p);
    ClusterResult back = cluster_result_from_csv(to_csv(r));
    CHECK(back.labels() == r.labels());
    CHECK(back.params == r.params);
    CHECK(back.n_points == r.n_points);
    CHECK(to_csv(back) == to_csv(r));
    CHECK_THROWS(cluster_result_from_csv("mpc_index,cluster_id\n0,zero\n"));
}
