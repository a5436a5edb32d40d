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

#ifndef THZUMI_PARAMS_HPP
#define THZUMI_PARAMS_HPP

#include "thzumi/scene.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thzumi
{
    inline constexpr double kSpeedOfLight = 299792458.0; // m/s

    // Sounder frequency plan. Derived quantities are always recomputed, never stored.
    struct FrequencyPlan
    {
        double center_freq = 220e9;        // Hz
        double bandwidth = 1.536e9;        // Hz
        std::size_t n_samples = 2048;      // native CIR length
        std::size_t extended_samples = 2154;

        double delay_resolution() const { return 1.0 / bandwidth; }
        double max_delay() const { return static_cast<double>(n_samples) / bandwidth; }
        double max_path_length() const { return kSpeedOfLight * max_delay(); }
        std::size_t extension_length() const { return extended_samples - n_samples; }
        bool operator==(const FrequencyPlan &) const = default;
    };

    // Steering direction in degrees.
    struct Direction
    {
        double azimuth = 0.0;
        double elevation = 0.0;
        bool operator==(const Direction &) const = default;
    };

    // Direction-scan grid. Directions are indexed azimuth-major: index = ia * n_elevation() + ie.
    struct ScanGrid
    {
        double azimuth_start = 0.0;
        double azimuth_stop = 350.0;
        double azimuth_step = 10.0;
        double elevation_start = -20.0;
        double elevation_stop = 20.0;
        double elevation_step = 10.0;

        std::size_t n_azimuth() const;
        std::size_t n_elevation() const;
        std::size_t size() const { return n_azimuth() * n_elevation(); }
        std::size_t index(std::size_t ia, std::size_t ie) const { return ia * n_elevation() + ie; }
        std::size_t azimuth_index(std::size_t index) const { return index / n_elevation(); }
        std::size_t elevation_index(std::size_t index) const { return index % n_elevation(); }
        Direction direction(std::size_t index) const;

        // True when the azimuth axis closes on itself (e.g. 0..350 step 10).
        bool azimuth_wraps() const;
        bool operator==(const ScanGrid &) const = default;
    };

    enum class AntennaKind
    {
        waveguide, // open waveguide, treated as uniform gain
        horn       // Gaussian main lobe with a flat side-lobe floor
    };

    struct AntennaPattern
    {
        double boresight_gain = 26.0; // dBi
        double hpbw = 8.0;            // degrees
        double sidelobe_level = 30.0; // floor, dB below boresight
        AntennaKind kind = AntennaKind::horn;

        static AntennaPattern rx_horn() { return {}; }
        static AntennaPattern tx_waveguide() { return {7.0, 90.0, 30.0, AntennaKind::waveguide}; }
        bool operator==(const AntennaPattern &) const = default;
    };

    // Per-case (LoS / OLoS) large-scale statistics. Log-normal quantities keep the linear
    // mean as the median of the log10 distribution: mu = log10(mean), spread in log10 units.
    struct UmiCaseParams
    {
        double ple = 1.91;
        double sf_sigma = 1.32;       // dB
        double k_mean = 17.54;        // dB
        double k_sigma = 3.0;         // dB
        double ds_mean = 20.89e-9;    // s
        double ds_sigma = 0.3;        // log10
        double asa_mean = 13.18;      // deg
        double asa_sigma = 0.3;       // log10
        double esa_mean = 3.98;       // deg
        double esa_sigma = 0.3;       // log10
        double n_clusters_mean = 2.56;
        std::optional<double> cds_mean;  // s, defaults to ds_mean / 5
        std::optional<double> casa_mean; // deg, defaults to asa_mean / 3
        std::optional<double> cesa_mean; // deg, defaults to esa_mean / 2

        double cds() const { return cds_mean.value_or(ds_mean / 5.0); }
        double casa() const { return casa_mean.value_or(asa_mean / 3.0); }
        double cesa() const { return cesa_mean.value_or(esa_mean / 2.0); }
        bool uses_fallback_cluster_spreads() const { return !cds_mean || !casa_mean || !cesa_mean; }

        static UmiCaseParams los_defaults();
        static UmiCaseParams olos_defaults();
        bool operator==(const UmiCaseParams &) const = default;
    };

    struct FoliageParams
    {
        double loss_mean = 16.74;  // dB
        double loss_sigma = 7.26;  // dB
        double clamp_min = 5.0;    // dB
        double clamp_max = 32.0;   // dB
        bool operator==(const FoliageParams &) const = default;
    };

    struct SounderParams
    {
        double noise_floor = -170.0;    // dB, level below which samples count as noise
        double pdp_clip_value = -200.0; // dB, replacement level for noise samples
        double dynamic_range = 30.0;    // dB, R in the path-gain threshold
        std::size_t averaging_count = 5000;
        double noise_margin = 10.0;     // dB, simulated mean noise power sits this far below noise_floor
        double dwell_time = 2.0;        // s per steering direction
        bool operator==(const SounderParams &) const = default;
    };

    // How an OLoS foliage draw enters a synthesized link.
    enum class FoliageMode
    {
        embedded,   // OLoS close-in statistics already contain the foliage; total power follows CI + SF
        direct_path // direct path set to FSPL + foliage, the rest of the link scaled to keep K
    };

    struct SynthesisOptions
    {
        std::size_t rays_per_cluster = 10;
        double direct_ray_share = 0.3;       // fraction of direct-cluster power carried by the direct ray
        double ray_power_decay = 2.0;        // ray power ~ exp(-decay * unit delay offset) inside scattered clusters
        double visibility_range = 30.0;      // dB below the strongest ray; weaker scattered rays are not generated
        double max_excess_delay = 0.0;       // s, latest ray after the direct path; 0 uses the sounder window
        double power_decay = 2.0;            // cluster power ~ exp(-(r - 1) * normalized excess delay)
        double cluster_shadowing = 3.0;      // dB, per-cluster power jitter
        double elevation_limit = 20.0;       // deg, |elevation| bound for stochastic rays
        double satellite_max_offset = 30.0;  // deg, widest angle offset of a direct-cluster satellite
        FoliageMode foliage_mode = FoliageMode::direct_path;
        bool operator==(const SynthesisOptions &) const = default;
    };

    struct ClusteringParams
    {
        double eps = 0.2;
        std::size_t min_pts = 2;
        double delay_weight = 8.0; // zeta
        double delay_span_floor = 700e-9; // s, lower bound on the delay span used to normalize MCD
        bool operator==(const ClusteringParams &) const = default;
    };

    struct ParameterBundle
    {
        FrequencyPlan plan;
        ScanGrid grid;
        AntennaPattern rx_antenna = AntennaPattern::rx_horn();
        AntennaPattern tx_antenna = AntennaPattern::tx_waveguide();
        SounderParams sounder;
        FoliageParams foliage;
        UmiCaseParams los = UmiCaseParams::los_defaults();
        UmiCaseParams olos = UmiCaseParams::olos_defaults();
        SynthesisOptions synthesis;
        ClusteringParams clustering;
        Scene scene = campus_route_scene();

        bool operator==(const ParameterBundle &) const = default;
    };

    struct Violation
    {
        std::string field;
        std::string message;
    };

    // Raised by load_config. field() names the offending key ("" for syntax errors).
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(std::string field, const std::string &what)
            : std::runtime_error(what), field_(std::move(field)) {}
        const std::string &field() const { return field_; }

    private:
        std::string field_;
    };

    // Every invariant violation in the bundle, not just the first.
    std::vector<Violation> validate(const ParameterBundle &bundle);

    ParameterBundle load_config(const std::string &path);
    ParameterBundle parse_config(const std::string &json_text);

    // Normalized JSON of the whole bundle, derived fields included under "derived".
    std::string serialize_config(const ParameterBundle &bundle);

    // Stand-alone scene files share the "scene" key layout of the config.
    Scene parse_scene(const std::string &json_text);
    Scene load_scene(const std::string &path);
    std::string serialize_scene(const Scene &scene);
}

#endif
