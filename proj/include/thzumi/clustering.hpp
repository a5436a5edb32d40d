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

#ifndef THZUMI_CLUSTERING_HPP
#define THZUMI_CLUSTERING_HPP

#include "thzumi/mpc.hpp"
#include "thzumi/params.hpp"

#include <span>
#include <string>
#include <vector>

namespace thzumi
{
    struct Cluster
    {
        int id = 0;
        std::vector<std::size_t> members; // indices into the clustered MPC list, ascending
    };

    struct ClusterResult
    {
        std::vector<Cluster> clusters;
        std::vector<std::size_t> noise;
        ClusteringParams params;
        std::size_t n_points = 0;

        // Per-point cluster id, -1 for noise.
        std::vector<int> labels() const;
    };

    // Multipath component distance: half the chord between arrival unit vectors, combined with
    // the delay offset weighted by zeta * tau_std / tau_max^2.
    double mcd(const Mpc &a, const Mpc &b, double zeta, double tau_max, double tau_std);

    // Normalizers used by dbscan: tau_max is the delay span of the set, tau_std the sample
    // standard deviation of the delays. Both are 0 for fewer than two MPCs.
    struct DelayNormalization
    {
        double tau_max = 0.0;
        double tau_std = 0.0;
    };
    DelayNormalization delay_normalization(std::span<const Mpc> mpcs);

    // Density clustering over the MCD metric. A point is core when at least min_pts points
    // (itself included) lie within eps. Cores are expanded in index order; border points join
    // the cluster of their nearest core, so memberships do not depend on input order.
    ClusterResult dbscan(std::span<const Mpc> mpcs, const ClusteringParams &params);

    // Two-column CSV (mpc_index, cluster_id with -1 for noise) plus "# key=value" parameter lines.
    std::string to_csv(const ClusterResult &result);
    ClusterResult cluster_result_from_csv(const std::string &text);

    // Adjusted Rand index between two labelings; negative labels are treated as singletons.
    double adjusted_rand_index(std::span<const int> a, std::span<const int> b);
}

#endif
