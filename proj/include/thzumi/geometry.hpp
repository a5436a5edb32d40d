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

#ifndef THZUMI_GEOMETRY_HPP
#define THZUMI_GEOMETRY_HPP

#include "thzumi/params.hpp"
#include "thzumi/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace thzumi
{
    inline constexpr double kDegToRad = std::numbers::pi / 180.0;
    inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

    // Azimuth folded into [0, 360).
    inline double wrap_azimuth(double deg)
    {
        double w = std::fmod(deg, 360.0);
        if (w < 0.0)
            w += 360.0;
        return w >= 360.0 ? 0.0 : w;
    }

    // Signed azimuth difference a - b folded into [-180, 180).
    inline double azimuth_difference(double a, double b)
    {
        double d = std::fmod(a - b + 180.0, 360.0);
        if (d < 0.0)
            d += 360.0;
        return d - 180.0;
    }

    inline Vec3 unit_vector(const Direction &d)
    {
        double az = d.azimuth * kDegToRad, el = d.elevation * kDegToRad;
        return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
    }

    // Arrival direction at `from` of a wave coming from `to`.
    inline Direction direction_towards(const Vec3 &from, const Vec3 &to)
    {
        Vec3 v = to - from;
        double horizontal = std::hypot(v.x, v.y);
        return {wrap_azimuth(std::atan2(v.y, v.x) * kRadToDeg), std::atan2(v.z, horizontal) * kRadToDeg};
    }

    // Great-circle angle between two directions, degrees (chord form, accurate near 0).
    inline double angle_between(const Direction &a, const Direction &b)
    {
        double chord = (unit_vector(a) - unit_vector(b)).norm();
        return 2.0 * std::asin(std::min(1.0, chord / 2.0)) * kRadToDeg;
    }
}

#endif
