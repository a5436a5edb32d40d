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

#ifndef THZUMI_PIPELINE_HPP
#define THZUMI_PIPELINE_HPP

#include "thzumi/channel_synth.hpp"
#include "thzumi/characterization.hpp"
#include "thzumi/clustering.hpp"
#include "thzumi/estimation.hpp"
#include "thzumi/sounder.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace thzumi
{
    enum class Stream : std::uint64_t
    {
        link = 1,     // classification and synthesis
        sounding = 2, // scan noise
        foliage = 3   // stand-alone foliage draws
    };

    // Independent generator per (seed, index, stream).
    std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, Stream stream);

    // Runs body(i) for i in [0, n) on up to `jobs` threads. Rethrows the first exception (lowest index).
    void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)> &body);

    // ---- Stages ------------------------------------------------------------

    LinkRealization generate_link(const ParameterBundle &params, std::size_t rx_index, std::uint64_t seed);
    DssScan sound_link(const MpcSet &set, const ParameterBundle &params, std::uint64_t seed, const ScanOptions &options = {});
    MpcSet estimate_link(const DssScan &scan, const ParameterBundle &params, const EstimatorOptions &options = {});
    ClusterResult cluster_link(const MpcSet &set, const ParameterBundle &params);

    // Ensemble fits for one link case.
    struct CaseFits
    {
        LinkCase link_case = LinkCase::los;
        std::size_t n_links = 0;
        std::size_t n_finite_k = 0;
        std::optional<FitReport> path_loss;  // close-in
        std::optional<FitReport> k_factor;   // Gaussian in dB, single-cluster links excluded
        std::optional<FitReport> ds;         // log-normal
        std::optional<FitReport> asa;        // log-normal
        std::optional<FitReport> esa;        // log-normal
        std::optional<FitReport> n_clusters; // Gaussian
        std::optional<FitReport> cds;        // log-normal over multi-member clusters
        std::optional<FitReport> casa;
        std::optional<FitReport> cesa;
    };

    // One CaseFits per link case present, LoS first. Fits with fewer than 3 usable samples are left empty.
    std::vector<CaseFits> fit_cases(std::span<const ChannelStats> stats, double freq_hz);
    std::string to_json(const CaseFits &fits);
    std::string to_json(std::span<const CaseFits> fits);

    // Summary values keyed like the reference parameter file.
    std::map<std::string, double> measured_summary(const CaseFits &fits);

    // ---- Round trip --------------------------------------------------------

    struct RoundtripOptions
    {
        std::size_t n_links = 100; // per case
        std::uint64_t seed = 1;
        std::size_t jobs = 1;
        double min_distance = 34.0;  // m
        double max_distance = 410.0; // m
        EstimatorOptions estimator;
    };

    struct AcceptanceCheck
    {
        std::string name;
        double measured = 0.0; // NaN when the quantity could not be estimated
        double target = 0.0;
        double lower = 0.0;
        double upper = 0.0;
        bool pass = false;
    };

    struct RoundtripReport
    {
        std::vector<AcceptanceCheck> checks;
        std::vector<CaseFits> fits;
        std::vector<ChannelStats> stats;

        bool passed() const;
        std::string text() const;
        std::string to_json() const;
    };

    // Route scenes with evenly spaced links: LoS without foliage, OLoS fully foliage-covered.
    Scene roundtrip_scene(LinkCase link_case, const RoundtripOptions &options);

    // generate -> scan -> estimate -> cluster -> characterize for both cases, checked against the
    // configured statistics with the acceptance tolerances.
    RoundtripReport run_roundtrip(const ParameterBundle &params, const RoundtripOptions &options);

    // ---- Route PDP ---------------------------------------------------------

    struct RoutePdp
    {
        std::vector<double> distances; // m, one row each
        std::vector<LinkCase> cases;
        std::vector<bool> extended;
        std::vector<std::size_t> search_start; // first bin that is not an aliased copy
        double delay_resolution = 0.0;
        std::size_t n_columns = 0;
        std::vector<std::vector<double>> power_db; // rows x columns, omni PDP

        // Strongest bin of a row at or after its search start.
        std::size_t peak_bin(std::size_t row) const;
        // Local maxima of a row within range_db of its peak, ascending.
        std::vector<std::size_t> peak_candidates(std::size_t row, double range_db) const;
    };

    // Omni PDP per Rx of the configured scene. Rows whose link is longer than the native maximum
    // path length are de-aliased; shorter rows are padded with the clip value.
    RoutePdp route_pdp(const ParameterBundle &params, std::uint64_t seed, std::size_t jobs = 1);
    std::string route_pdp_csv(const RoutePdp &pdp);

    // Straight delay-versus-distance line through the route PDP.
    struct RouteTrajectory
    {
        double slope = 0.0;     // s per m
        double intercept = 0.0; // s
        std::size_t rows_matched = 0;
        std::vector<std::optional<std::size_t>> bins; // matched candidate per row
    };

    // Line through the most rows: every pair of peak candidates proposes a line, rows vote with a
    // candidate within tolerance_bins, and the winner is refitted by least squares.
    RouteTrajectory detect_trajectory(const RoutePdp &pdp, double range_db, double tolerance_bins = 1.0);

    // ---- Run manifest ------------------------------------------------------

    std::string sha256_hex(const std::string &data);
    std::string config_hash(const ParameterBundle &params);
    std::string utc_timestamp();

    struct RunManifest
    {
        std::string command;
        std::string config_hash;
        std::uint64_t seed = 0;
        std::string tool_version;
        std::string started;
        std::string finished;
        std::vector<std::string> outputs; // relative to the run directory
    };
    std::string to_json(const RunManifest &manifest);

    const char *tool_version();
}

#endif
