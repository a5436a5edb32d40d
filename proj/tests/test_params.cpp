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

#include "thzumi/params.hpp"

#include "catch_amalgamated.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace thzumi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    bool has_violation(const std::vector<Violation> &v, const std::string &field)
    {
        return std::any_of(v.begin(), v.end(), [&](const Violation &x) { return x.field == field; });
    }
}

TEST_CASE("Empty config yields the defaults", "[params]")
{
    ParameterBundle b = parse_config("{}");
    CHECK(b == ParameterBundle{});
    CHECK(validate(b).empty());

    CHECK(b.los.ple == 1.91);
    CHECK(b.olos.ple == 2.38);
    CHECK(b.los.k_mean == 17.54);
    CHECK(b.olos.k_mean == 8.68);
    CHECK(b.los.ds_mean == 20.89e-9);
    CHECK(b.olos.ds_mean == 74.13e-9);
    CHECK(b.los.asa_mean == 13.18);
    CHECK(b.olos.asa_mean == 38.90);
    CHECK(b.los.esa_mean == 3.98);
    CHECK(b.olos.esa_mean == 6.92);
    CHECK(b.los.n_clusters_mean == 2.56);
    CHECK(b.olos.n_clusters_mean == 4.14);
    CHECK(b.olos.sf_sigma == 5.58);
    CHECK(b.foliage.loss_mean == 16.74);
    CHECK(b.foliage.loss_sigma == 7.26);
    CHECK(b.sounder.noise_floor == -170.0);
    CHECK(b.sounder.pdp_clip_value == -200.0);
    CHECK(b.sounder.dynamic_range == 30.0);
    CHECK(b.sounder.averaging_count == 5000);
    CHECK(b.grid.size() == 180);
    CHECK(b.scene.rx_positions.size() == 24);
}

TEST_CASE("Derived frequency-plan quantities", "[params]")
{
    FrequencyPlan p;
    CHECK_THAT(p.delay_resolution() * 1e9, WithinAbs(0.651, 5e-4));
    CHECK_THAT(p.max_delay() * 1e9, WithinAbs(1333.3, 0.05));
    CHECK_THAT(p.max_path_length(), WithinAbs(399.8, 0.1));
    CHECK(p.extension_length() == 106);
}

TEST_CASE("Overrides are applied", "[params]")
{
    ParameterBundle b = parse_config(R"({"umi": {"los": {"ple": 2.0}, "olos": {"k_mean_db": 7.5}}})");
    CHECK(b.los.ple == 2.0);
    CHECK(b.olos.k_mean == 7.5);
    CHECK(b.olos.ple == 2.38);

    ParameterBundle c = parse_config(R"({"umi": {"los": {"ple": 1.91}}})");
    CHECK(c.los.ple == 1.91);
}

TEST_CASE("Invalid values name the offending field", "[params]")
{
    try
    {
        parse_config(R"({"umi": {"los": {"sf_sigma_db": -1}}})");
        FAIL("expected ConfigError");
    }
    catch (const ConfigError &e)
    {
        CHECK(e.field().find("sf_sigma") != std::string::npos);
    }

    try
    {
        parse_config("{not json");
        FAIL("expected ConfigError");
    }
    catch (const ConfigError &e)
    {
        CHECK(e.field().empty());
    }

    CHECK_THROWS_AS(parse_config(R"({"sounder": {"dynamic_range_db": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"umi": {"los": {"ple": "two"}}})"), ConfigError);
}

TEST_CASE("validate reports every violation", "[params]")
{
    ParameterBundle b;
    b.los.n_clusters_mean = 0.5;
    b.plan.extended_samples = 2000;
    b.sounder.pdp_clip_value = -150.0;
    b.foliage.clamp_min = 40.0;
    auto v = validate(b);
    CHECK(has_violation(v, "umi.los.n_clusters_mean"));
    CHECK(has_violation(v, "frequency.extended_samples"));
    CHECK(has_violation(v, "sounder.pdp_clip_db"));
    CHECK(v.size() >= 4);

    auto it = std::find_if(v.begin(), v.end(), [](const Violation &x) { return x.field == "umi.los.n_clusters_mean"; });
    REQUIRE(it != v.end());
    CHECK(it->message.find("n_clusters_mean") != std::string::npos);
}

TEST_CASE("Serialization round trip", "[params]")
{
    ParameterBundle b;
    b.los.ple = 1.87;
    b.olos.cds_mean = 12e-9;
    b.synthesis.foliage_mode = FoliageMode::embedded;
    b.clustering.eps = 0.31;
    b.scene.scatterers.front().reflectivity_loss_db = 13.0;

    std::string text = serialize_config(b);
    ParameterBundle back = parse_config(text);
    CHECK(back == b);
    CHECK(serialize_config(back) == text);

    auto path = std::filesystem::temp_directory_path() / "thzumi_params_roundtrip.json";
    std::ofstream(path) << text;
    CHECK(load_config(path.string()) == b);
    std::filesystem::remove(path);
}

TEST_CASE("Derived fields in a file are ignored", "[params]")
{
    ParameterBundle b = parse_config(R"({"derived": {"delay_resolution_s": 1.0, "max_delay_s": 5.0}})");
    CHECK(b == ParameterBundle{});
    CHECK_THAT(b.plan.delay_resolution(), WithinRel(1.0 / 1.536e9, 1e-15));
}

TEST_CASE("Fallback cluster spreads", "[params]")
{
    UmiCaseParams c = UmiCaseParams::los_defaults();
    CHECK(c.uses_fallback_cluster_spreads());
    CHECK_THAT(c.cds(), WithinRel(c.ds_mean / 5.0, 1e-15));
    CHECK_THAT(c.casa(), WithinRel(c.asa_mean / 3.0, 1e-15));
    CHECK_THAT(c.cesa(), WithinRel(c.esa_mean / 2.0, 1e-15));
    c.cds_mean = 4e-9;
    c.casa_mean = 2.0;
    c.cesa_mean = 1.0;
    CHECK_FALSE(c.uses_fallback_cluster_spreads());
    CHECK(c.cds() == 4e-9);
}

TEST_CASE("Scan grid indexing", "[params]")
{
    ScanGrid g;
    CHECK(g.n_azimuth() == 36);
    CHECK(g.n_elevation() == 5);
    CHECK(g.azimuth_wraps());
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(g.index(g.azimuth_index(i), g.elevation_index(i)) == i);
    CHECK(g.direction(g.index(3, 1)) == Direction{30.0, -10.0});
}
