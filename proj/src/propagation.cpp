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

#include "thzumi/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace thzumi
{
    std::string to_string(LinkCase c)
    {
        return c == LinkCase::los ? "LoS" : "OLoS";
    }

    LinkCase parse_link_case(const std::string &s)
    {
        if (s == "LoS" || s == "los")
            return LinkCase::los;
        if (s == "OLoS" || s == "olos")
            return LinkCase::olos;
        throw std::invalid_argument("Unknown link case '" + s + "'.");
    }

    double fspl(double freq_hz, double distance_m)
    {
        if (!(freq_hz > 0.0) || !(distance_m > 0.0))
            throw std::domain_error("fspl: frequency and distance must be positive.");
        return 20.0 * std::log10(4.0 * std::numbers::pi * freq_hz * distance_m / kSpeedOfLight);
    }

    double ci_path_loss(double distance_m, double freq_hz, const UmiCaseParams &case_params, double shadow_draw_db)
    {
        if (!(distance_m >= 1.0))
            throw std::domain_error("ci_path_loss: distance below the 1 m reference.");
        return fspl(freq_hz, 1.0) + 10.0 * case_params.ple * std::log10(distance_m) + shadow_draw_db;
    }

    double foliage_excess_loss(double path_loss_db, double path_delay_s, double freq_hz)
    {
        if (!(path_delay_s > 0.0))
            throw std::domain_error("foliage_excess_loss: path delay must be positive.");
        return path_loss_db - fspl(freq_hz, kSpeedOfLight * path_delay_s);
    }

    namespace
    {
        double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
        double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

        // Mean of N(mu, sigma) restricted to [lo, hi].
        double truncated_mean(double mu, double sigma, double lo, double hi)
        {
            double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
            double z = normal_cdf(b) - normal_cdf(a);
            if (z < 1e-300)
                return a > 0.0 ? lo : hi;
            return mu + sigma * (normal_pdf(a) - normal_pdf(b)) / z;
        }

        // Location of the parent Gaussian whose truncation to the clamp range has the configured mean.
        double parent_location(const FoliageParams &p)
        {
            double lo = p.clamp_min - 10.0 * p.loss_sigma, hi = p.clamp_max + 10.0 * p.loss_sigma;
            for (int i = 0; i < 200; ++i)
            {
                double mid = 0.5 * (lo + hi);
                (truncated_mean(mid, p.loss_sigma, p.clamp_min, p.clamp_max) < p.loss_mean ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }

    double draw_foliage_loss(const FoliageParams &params, std::mt19937_64 &rng)
    {
        if (params.loss_sigma == 0.0 || params.clamp_min >= params.clamp_max)
            return std::clamp(params.loss_mean, params.clamp_min, params.clamp_max);
        std::normal_distribution<double> gauss(parent_location(params), params.loss_sigma);
        for (;;)
        {
            double v = gauss(rng);
            if (v >= params.clamp_min && v <= params.clamp_max)
                return v;
        }
    }

    namespace
    {
        // Thickest foliage segment crossed by the link, 0 when unobstructed.
        double crossed_thickness(const Scene &scene, std::size_t rx_index)
        {
            const Vec3 &rx = scene.rx_positions.at(rx_index);
            double lo = std::min(scene.tx_position.x, rx.x);
            double hi = std::max(scene.tx_position.x, rx.x);
            double thickness = 0.0;
            for (const auto &seg : scene.foliage_segments)
                if (seg.start_m <= hi && seg.end_m >= lo)
                    thickness = std::max(thickness, seg.thickness_proxy);
            return thickness;
        }
    }

    bool is_obstructed(const Scene &scene, std::size_t rx_index)
    {
        return crossed_thickness(scene, rx_index) > 0.0;
    }

    LinkState classify_link(const Scene &scene, std::size_t rx_index, const FoliageParams &foliage, std::mt19937_64 &rng)
    {
        double thickness = crossed_thickness(scene, rx_index);
        if (thickness <= 0.0)
            return {LinkCase::los, 0.0};
        double loss = draw_foliage_loss(foliage, rng) * thickness;
        return {LinkCase::olos, std::clamp(loss, foliage.clamp_min, foliage.clamp_max)};
    }

    std::string route_csv(const Scene &scene, const std::vector<LinkState> &states)
    {
        if (states.size() != scene.rx_positions.size())
            throw std::invalid_argument("route_csv: one link state per Rx position required.");
        std::ostringstream out;
        out << "distance_m,case,foliage_loss_db\n";
        out << std::setprecision(17);
        for (std::size_t i = 0; i < states.size(); ++i)
            out << scene.link_distance(i) << ',' << to_string(states[i].link_case) << ',' << states[i].foliage_loss << '\n';
        return out.str();
    }

    // ---- Route scenes ------------------------------------------------------

    double route_coordinate(double link_distance_m, double tx_height_m, double point_height_m)
    {
        double dh = tx_height_m - point_height_m;
        if (link_distance_m < std::abs(dh))
            throw std::domain_error("route_coordinate: distance shorter than the height difference.");
        return std::sqrt(link_distance_m * link_distance_m - dh * dh);
    }

    Scene make_route_scene(const std::vector<double> &link_distances_m, double tx_height_m, double rx_height_m)
    {
        Scene s;
        s.tx_position = {0.0, 0.0, tx_height_m};
        for (double d : link_distances_m)
            s.rx_positions.push_back({route_coordinate(d, tx_height_m, rx_height_m), 0.0, rx_height_m});
        return s;
    }

    Scene campus_route_scene()
    {
        const std::vector<double> distances = {34, 47, 60, 73, 86, 99, 112, 125, 138,
                                               150, 165, 180, 196, 212, 228, 244, 262, 282, 302, 322, 345, 368, 390, 410};
        Scene s = make_route_scene(distances, 16.6, 1.6);

        // Scatterers sit at Rx height on the route line, so an Rx standing at one sees
        // the echo arrive exactly with the Tx-scatterer delay.
        auto on_route = [](double distance) { return Vec3{route_coordinate(distance, 16.6, 1.6), 0.0, 1.6}; };

        Scatterer guideboard;
        guideboard.position = on_route(190.0);
        guideboard.label = "guideboard";
        guideboard.reflectivity_loss_db = 12.0;
        guideboard.facing_azimuth_deg = 180.0; // faces the Tx

        Scatterer sign;
        sign.position = on_route(230.0);
        sign.label = "sign";
        sign.reflectivity_loss_db = 22.0;
        sign.facing_azimuth_deg = 180.0;
        sign.visible_from_m = 140.0;
        sign.visible_to_m = 200.0;

        Scatterer rear;
        rear.position = on_route(290.0);
        rear.label = "guideboard_rear";
        rear.reflectivity_loss_db = 12.0;
        rear.facing_azimuth_deg = 0.0; // faces away from the Tx
        rear.visible_from_m = 180.0;
        rear.visible_to_m = 215.0;

        s.scatterers = {guideboard, sign, rear};
        s.foliage_segments = {{145.0, 175.0, 1.0}, {190.0, 265.0, 1.2}, {280.0, 420.0, 0.9}};
        return s;
    }
}
