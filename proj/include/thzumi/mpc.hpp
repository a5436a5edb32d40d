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

#ifndef THZUMI_MPC_HPP
#define THZUMI_MPC_HPP

#include "thzumi/propagation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace thzumi
{
    enum class OriginKind
    {
        los,
        olos_direct,
        stochastic,
        scatterer,
        estimated
    };

    struct Origin
    {
        OriginKind kind = OriginKind::stochastic;
        std::string label; // scatterer label

        bool is_direct() const { return kind == OriginKind::los || kind == OriginKind::olos_direct; }
        bool operator==(const Origin &) const = default;
    };

    std::string to_string(const Origin &o);
    Origin parse_origin(const std::string &s);

    // One multipath component. gain is the linear amplitude path gain (no antennas).
    struct Mpc
    {
        double delay = 0.0;     // s
        double gain = 0.0;      // linear amplitude
        double azimuth = 0.0;   // deg, [0, 360)
        double elevation = 0.0; // deg, [-90, 90]
        std::optional<int> cluster_id;
        Origin origin;

        double power() const { return gain * gain; }
        double gain_db() const;
        bool operator==(const Mpc &) const = default;
    };

    struct LinkInfo
    {
        std::size_t rx_index = 0;
        double distance = 0.0; // m, Tx-Rx
        LinkCase link_case = LinkCase::los;
        double foliage_loss = 0.0; // dB
        bool operator==(const LinkInfo &) const = default;
    };

    struct MpcSet
    {
        LinkInfo link;
        std::vector<Mpc> mpcs;

        void sort_by_delay();
        double total_power() const;
        // The unique LoS / OLoS-direct component, nullptr when absent (estimated sets).
        const Mpc *direct() const;
        bool operator==(const MpcSet &) const = default;
    };

    // CSV interchange: "# key=value" link metadata lines, then
    // delay_s,gain_db,az_deg,el_deg,cluster_id,origin (cluster_id empty when unassigned).
    std::string to_csv(const MpcSet &set);
    MpcSet mpc_set_from_csv(const std::string &text);
    void write_mpc_set(const std::string &path, const MpcSet &set);
    MpcSet read_mpc_set(const std::string &path);

    // What a CSV round trip does to a set (gain goes through dB).
    MpcSet canonicalize(const MpcSet &set);

    // Shared by file writers.
    std::string read_text_file(const std::string &path);
    void write_text_file(const std::string &path, const std::string &content);
}

#endif
