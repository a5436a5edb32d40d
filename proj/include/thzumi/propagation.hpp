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

#ifndef THZUMI_PROPAGATION_HPP
#define THZUMI_PROPAGATION_HPP

#include "thzumi/params.hpp"
#include "thzumi/scene.hpp"

#include <random>
#include <string>

// Large-scale propagation laws. All losses are positive dB.
namespace thzumi
{
    enum class LinkCase
    {
        los,
        olos
    };

    std::string to_string(LinkCase c);
    LinkCase parse_link_case(const std::string &s);

    struct LinkState
    {
        LinkCase link_case = LinkCase::los;
        double foliage_loss = 0.0; // dB, 0 for LoS
    };

    // Free-space path loss 20 log10(4 pi f d / c). Throws std::domain_error on non-positive input.
    double fspl(double freq_hz, double distance_m);

    // Close-in reference distance model: fspl(f0, 1 m) + 10 n log10(d) + shadow.
    double ci_path_loss(double distance_m, double freq_hz, const UmiCaseParams &case_params, double shadow_draw_db);

    // Excess loss of the LoS/OLoS path over free space at the distance its delay implies.
    // May come out negative from estimation noise; clamping is up to the caller.
    double foliage_excess_loss(double path_loss_db, double path_delay_s, double freq_hz);

    // Gaussian redrawn until inside the clamp range. The Gaussian is centred so that the clamped
    // draws have mean loss_mean; loss_sigma is its spread before clamping.
    double draw_foliage_loss(const FoliageParams &params, std::mt19937_64 &rng);

    // OLoS iff the ground projection of the Tx-Rx segment overlaps a foliage interval.
    // OLoS links take one foliage draw scaled by the thickest overlapping segment, re-clamped.
    LinkState classify_link(const Scene &scene, std::size_t rx_index, const FoliageParams &foliage, std::mt19937_64 &rng);

    // Geometric part of classify_link, no draw.
    bool is_obstructed(const Scene &scene, std::size_t rx_index);

    // Route export: one line per Rx (distance, case, foliage_loss).
    std::string route_csv(const Scene &scene, const std::vector<LinkState> &states);
}

#endif
