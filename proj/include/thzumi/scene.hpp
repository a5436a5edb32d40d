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

#ifndef THZUMI_SCENE_HPP
#define THZUMI_SCENE_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace thzumi
{
    // Cartesian position in meters. The route runs along +x, z is height above ground.
    struct Vec3
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;

        Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
        Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
        Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
        double dot(const Vec3 &o) const { return x * o.x + y * o.y + z * o.z; }
        double norm() const { return std::sqrt(dot(*this)); }
        bool operator==(const Vec3 &) const = default;
    };

    // Point scatterer (guideboard, sign, pillar).
    struct Scatterer
    {
        Vec3 position;
        double reflectivity_loss_db = 10.0; // >= 0
        std::string label;
        std::optional<double> facing_azimuth_deg; // normal of the reflecting face; empty = omnidirectional
        double backscatter_penalty_db = 20.0;     // extra loss when Tx or Rx sits behind the face
        std::optional<double> visible_from_m;     // Tx-Rx distance window in which the echo exists
        std::optional<double> visible_to_m;
        bool operator==(const Scatterer &) const = default;
    };

    // Foliage along the route, given as an interval of route coordinate x.
    struct FoliageSegment
    {
        double start_m = 0.0;
        double end_m = 0.0;
        double thickness_proxy = 1.0;
        bool operator==(const FoliageSegment &) const = default;
    };

    struct Scene
    {
        Vec3 tx_position{0.0, 0.0, 16.6};
        std::vector<Vec3> rx_positions;
        std::vector<Scatterer> scatterers;
        std::vector<FoliageSegment> foliage_segments;
        double max_route_m = 500.0;

        double link_distance(std::size_t rx_index) const { return (rx_positions.at(rx_index) - tx_position).norm(); }
        bool operator==(const Scene &) const = default;
    };

    // Rx on the route centerline at the given Tx-Rx (3D) distances.
    Scene make_route_scene(const std::vector<double> &link_distances_m, double tx_height_m = 16.6, double rx_height_m = 1.6);

    // 24-position campus route: 9 clear-LoS positions followed by 15 foliage-obstructed ones,
    // one guideboard facing the Tx at 190 m, a sign at 230 m and a rear-facing guideboard at 290 m.
    Scene campus_route_scene();

    // Route-coordinate position (x) of a point at the given 3D distance from the Tx.
    double route_coordinate(double link_distance_m, double tx_height_m, double point_height_m);
}

#endif
