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

#ifndef THZUMI_CHARACTERIZATION_HPP
#define THZUMI_CHARACTERIZATION_HPP

#include "thzumi/clustering.hpp"
#include "thzumi/mpc.hpp"

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace thzumi
{
    inline constexpr double kAzimuthSpreadCap = 104.0;  // deg
    inline constexpr double kElevationSpreadCap = 52.0; // deg
    inline constexpr double kSingleClusterK = std::numeric_limits<double>::infinity();

    enum class AnglePlane
    {
        azimuth,
        elevation
    };

    // Power-weighted rms delay spread, seconds.
    double rms_delay_spread(std::span<const Mpc> mpcs);

    // Resultant-vector angular spread sqrt(-2 ln R) in degrees, capped at 104 (azimuth) / 52 (elevation).
    double circular_angle_spread(std::span<const Mpc> mpcs, AnglePlane plane);

    // 10 log10(P_strongest / sum of the others), +inf for a single cluster.
    double k_factor(std::span<const double> cluster_powers);

    struct ClusterSpreads
    {
        double cds = 0.0;  // s
        double casa = 0.0; // deg
        double cesa = 0.0; // deg
        bool operator==(const ClusterSpreads &) const = default;
    };
    ClusterSpreads cluster_spreads(std::span<const Mpc> members);

    struct StatsOptions
    {
        // DBSCAN noise points count as singleton clusters.
        bool noise_as_clusters = true;
        // Compute DS/ASA/ESA over cluster centroids (power-summed, power-weighted means) instead of MPCs.
        bool cluster_level_spreads = false;
    };

    struct ChannelStats
    {
        LinkInfo link;
        double path_loss = 0.0; // dB, -10 log10 of the total power
        double k_factor = kSingleClusterK;
        double ds = 0.0;  // s
        double asa = 0.0; // deg
        double esa = 0.0; // deg
        std::size_t n_clusters = 0;
        std::vector<double> cluster_powers;
        std::vector<ClusterSpreads> clusters;
        bool operator==(const ChannelStats &) const = default;
    };

    // Statistics of one clustered link. The cluster result must index into set.mpcs.
    ChannelStats channel_stats(const MpcSet &set, const ClusterResult &clusters, const StatsOptions &options = {});

    // Table with one row per link, and its inverse.
    std::string stats_csv(std::span<const ChannelStats> stats);
    std::vector<ChannelStats> stats_from_csv(const std::string &text);

    enum class FitKind
    {
        close_in,
        gaussian,
        lognormal
    };
    std::string to_string(FitKind k);

    struct FitParameter
    {
        std::string name;
        double value = 0.0;
        double std_error = 0.0;
        double lower = 0.0; // 95 % bounds
        double upper = 0.0;
    };

    struct FitReport
    {
        FitKind kind = FitKind::gaussian;
        std::vector<FitParameter> parameters; // close_in: ple, sf_sigma; gaussian: mean, sigma; lognormal: mu_log10, sigma_log10
        std::string goodness_name;            // "rmse" or "ks"
        double goodness = 0.0;
        std::size_t n_samples = 0;
        std::map<std::string, double> derived; // lognormal: "median" = 10^mu

        const FitParameter &parameter(const std::string &name) const;
        double value(const std::string &name) const { return parameter(name).value; }
    };

    // Least-squares PLE of fspl(f, 1 m) + 10 n log10(d); points are (distance m, path loss dB).
    FitReport fit_ci(std::span<const std::pair<double, double>> points, double freq_hz);
    FitReport fit_gaussian(std::span<const double> samples);
    // Fit in log10 units; samples must be positive and finite.
    FitReport fit_lognormal(std::span<const double> samples);

    std::string to_json(const FitReport &report);
    FitReport fit_report_from_json(const std::string &text);

    // Sorted step CDF with probabilities k/N.
    std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples);
    std::string cdf_csv(std::span<const std::pair<double, double>> cdf);

    // Reference parameter file: {"scenario": ..., "parameters": {name: {"value": v, "unit": u}}}.
    struct ReferenceSet
    {
        std::string scenario;
        std::vector<std::string> order; // file order of the parameter names
        std::map<std::string, double> values;
        std::map<std::string, std::string> units;
    };
    ReferenceSet parse_reference(const std::string &json_text);
    ReferenceSet load_reference(const std::string &path);

    struct ComparisonRow
    {
        std::string name;
        std::string unit;
        std::optional<double> measured;
        std::optional<double> reference;
        std::optional<double> difference; // measured - reference
        std::optional<double> ratio;      // measured / reference
        std::string annotation;           // empty, "unavailable", or a disparity note
    };

    // Rows follow the reference file order, then measured-only names. Ratios at or beyond 1.5 or 2/3
    // are annotated; dB quantities are annotated on difference >= 3 dB.
    std::vector<ComparisonRow> compare_3gpp(const std::map<std::string, double> &measured, const ReferenceSet &reference);
    std::string comparison_csv(std::span<const ComparisonRow> rows);
    std::string comparison_text(std::span<const ComparisonRow> rows);
}

#endif
