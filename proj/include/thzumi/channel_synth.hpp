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

#ifndef THZUMI_CHANNEL_SYNTH_HPP
#define THZUMI_CHANNEL_SYNTH_HPP

#include "thzumi/mpc.hpp"
#include "thzumi/params.hpp"
#include "thzumi/propagation.hpp"

#include <random>
#include <vector>

namespace thzumi
{
    struct LargeScaleDraw
    {
        double k = 0.0;   // dB
        double ds = 0.0;  // s
        double asa = 0.0; // deg
        double esa = 0.0; // deg
        double sf = 0.0;  // dB
    };

    // K Gaussian in dB, DS/ASA/ESA log-normal around log10 of the configured means, SF zero-mean.
    // ASA above 104 deg and ESA above 52 deg are redrawn.
    LargeScaleDraw draw_large_scale(const UmiCaseParams &case_params, std::mt19937_64 &rng);

    // 1 + Poisson(mean - 1). Throws std::domain_error for mean < 1.
    std::size_t draw_cluster_count(double mean, std::mt19937_64 &rng);

    struct ClusterSkeleton
    {
        double delay = 0.0; // s
        double power = 0.0; // share of the link power
        double azimuth = 0.0;
        double elevation = 0.0;
        // Unscaled draws behind the placement: excess delay in units of the delay scale,
        // angle offsets in units of the angular scales.
        double unit_delay = 0.0;
        double unit_azimuth = 0.0;
        double unit_elevation = 0.0;
    };

    struct ClusterLayout
    {
        LargeScaleDraw ls;
        double direct_delay = 0.0;
        Direction direct_direction;
        std::vector<ClusterSkeleton> clusters; // clusters[0] holds the direct path
    };

    // Cluster 0 sits at direct_delay with power K/(1+K); the others get exponential excess delays,
    // exponential-in-delay powers with per-cluster shadowing and wrapped-Gaussian angle offsets.
    // Delay and angle scales are calibrated on the skeleton to the drawn DS/ASA/ESA.
    ClusterLayout generate_clusters(const LargeScaleDraw &ls, std::size_t n_clusters, double direct_delay,
                                    const Direction &direct_direction, const SynthesisOptions &options, std::mt19937_64 &rng);

    // Expands every cluster into rays and re-calibrates the link-level spreads on the ray set.
    // Gains are normalized to unit total power; cluster_id is the cluster index.
    MpcSet generate_rays(const ClusterLayout &layout, const UmiCaseParams &case_params, const SynthesisOptions &options,
                         LinkCase link_case, std::mt19937_64 &rng);

    // Deterministic single-bounce echoes of the scene scatterers at one Rx (absolute gains).
    std::vector<Mpc> scene_echoes(const Scene &scene, std::size_t rx_index, double freq_hz);

    struct LinkRealization
    {
        MpcSet set;
        LinkState state;
        LargeScaleDraw ls;
        std::size_t n_clusters = 0;
    };

    // classify_link -> large-scale draws -> clusters and rays -> path-loss scaling -> scene echoes.
    LinkRealization synthesize_link(const Scene &scene, std::size_t rx_index, const ParameterBundle &params, std::mt19937_64 &rng);
}

#endif
