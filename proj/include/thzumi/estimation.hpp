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

#ifndef THZUMI_ESTIMATION_HPP
#define THZUMI_ESTIMATION_HPP

#include "thzumi/mpc.hpp"
#include "thzumi/params.hpp"
#include "thzumi/sounder.hpp"

#include <optional>
#include <vector>

namespace thzumi
{
    enum class PdpKind
    {
        directional,
        omni
    };

    struct Pdp
    {
        double delay_resolution = 0.0; // s
        std::vector<double> power_db;  // per delay bin, never below the clip value
        PdpKind kind = PdpKind::directional;

        double delay(std::size_t bin) const { return static_cast<double>(bin) * delay_resolution; }
    };

    // 10 log10 |h|^2 per bin, floored at the clip value. With eliminate_noise, bins under the
    // noise floor are set to the clip value.
    Pdp directional_pdp(const DssScan &scan, std::size_t direction, const SounderParams &sounder, bool eliminate_noise = false);

    // Noise-eliminated directional PDPs summed in linear power over all directions.
    // clip_noise = false keeps the noise samples (shows the floor rise).
    Pdp omni_pdp(const DssScan &scan, const SounderParams &sounder, bool clip_noise = true);

    // Path-gain threshold 10^(max(strongest - R, NF + 5) / 20), linear amplitude.
    double mpc_threshold(double strongest_gain_db, const SounderParams &sounder);

    struct EstimatorOptions
    {
        double candidate_margin = 5.0; // dB above the noise floor for a local maximum to count
        double sidelobe_margin = 3.0;  // candidates within sidelobe_level - margin of a stronger one at the same delay are dropped
        double floor_margin = 6.0;     // dB a candidate must clear the per-bin median over all directions
        bool refine_angles = true;
        std::optional<double> dynamic_range; // dB, replaces the sounder's R in the path-gain threshold
        bool unwrap_delays = true;     // native scans: excess delays counted forward from the strongest estimate
    };

    // Peak-search estimator: local maxima per direction, side-lobe suppression, merge of duplicate
    // detections across neighbouring steerings, pattern-based angle refinement, antenna de-embedding
    // and the path-gain threshold. Output is sorted by delay with origin "estimated".
    MpcSet extract_mpcs(const DssScan &scan, const SounderParams &sounder, const AntennaPattern &rx_pattern,
                        const AntennaPattern &tx_pattern, const EstimatorOptions &options = {});
}

#endif
