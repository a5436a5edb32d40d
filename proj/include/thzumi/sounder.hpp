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

#ifndef THZUMI_SOUNDER_HPP
#define THZUMI_SOUNDER_HPP

#include "thzumi/mpc.hpp"
#include "thzumi/params.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace thzumi
{
    // Gaussian main lobe G0 - 12 (offset / hpbw)^2 floored at G0 - sidelobe_level (horn),
    // uniform G0 (waveguide). Negative offsets are mirrored.
    double antenna_gain(const AntennaPattern &pattern, double offset_deg);

    inline constexpr double kPulseRollOff = 0.1;
    inline constexpr std::size_t kPulseHalfWidth = 256; // samples evaluated on each side of a path

    // Raised-cosine pulse at t samples from its centre; p(0) = 1, zero at other integers.
    double pulse(double t_samples);

    struct DriftModel
    {
        double offset_at_t0 = 0.0; // s
        double slope = 0.0;        // s per s
        double at(double t) const { return offset_at_t0 + slope * t; }
    };

    struct DssScan
    {
        FrequencyPlan plan;
        ScanGrid grid;
        LinkInfo link;
        std::vector<double> timestamps; // s, one per direction
        std::size_t samples_per_cir = 0;
        bool extended = false;
        std::vector<std::complex<float>> samples; // direction-major

        std::size_t n_directions() const { return timestamps.size(); }
        std::span<const std::complex<float>> cir(std::size_t direction) const;
        std::span<std::complex<float>> cir(std::size_t direction);
        bool operator==(const DssScan &) const = default;
    };

    struct ScanOptions
    {
        bool add_noise = true;
        DriftModel drift;
        // Optional system frequency response (DFT bin order, length n_samples) multiplied onto every CIR.
        std::vector<std::complex<double>> system_response;
    };

    // Direction timestamps: azimuth-major visiting order times the dwell time.
    std::vector<double> scan_timestamps(const ScanGrid &grid, double dwell_time);

    DssScan simulate_scan(const MpcSet &set, const FrequencyPlan &plan, const ScanGrid &grid, const AntennaPattern &rx_pattern,
                          const AntennaPattern &tx_pattern, const SounderParams &sounder, const ScanOptions &options,
                          std::mt19937_64 &rng);

    // Divides every CIR spectrum by the response. Throws std::invalid_argument on a length
    // mismatch or a zero bin (the message names the bin).
    DssScan apply_calibration(const DssScan &scan, std::span<const std::complex<double>> response);

    struct DriftAnchor
    {
        std::size_t direction = 0;
        double true_delay = 0.0; // s
    };

    struct DriftFit
    {
        double offset = 0.0; // s at t = 0
        double slope = 0.0;  // s per s
    };

    // Least-squares linear drift from anchor peak delays; every CIR is shifted back by the fitted offset.
    DssScan correct_drift(const DssScan &scan, std::span<const DriftAnchor> anchors, DriftFit *fit = nullptr);

    // Appends the first (extended - native) samples to every CIR.
    DssScan dealias_extend(const DssScan &scan);

    // Sub-bin peak position around local maximum k: offset in [-0.5, 0.5] bins, found by inverting
    // the pulse magnitude ratio of k and its stronger neighbour.
    double fractional_peak_offset(std::span<const std::complex<float>> cir, std::size_t k, bool circular);
    // Pulse magnitude at a sub-bin offset (for amplitude correction).
    double pulse_peak_loss(double offset_bins);

    // Binary container, little-endian:
    //   char[8] "THZSCAN1", u32 version, u32 flags (bit 0 extended),
    //   f64 center_freq, f64 bandwidth, u32 n_samples, u32 extended_samples, u32 samples_per_cir,
    //   f64 x 6 grid (az start/stop/step, el start/stop/step), u32 n_directions, f64 timestamps[n_directions],
    //   u32 metadata length, metadata JSON (link info), complex64 samples[n_directions * samples_per_cir].
    std::vector<std::uint8_t> serialize_scan(const DssScan &scan);
    DssScan parse_scan(std::span<const std::uint8_t> bytes);
    void write_scan(const std::string &path, const DssScan &scan);
    DssScan read_scan(const std::string &path);

    // One row per delay bin, one column per direction, values 10 log10 |h|^2 (floored at clip_db).
    std::string pdp_csv(const DssScan &scan, double clip_db);
}

#endif
