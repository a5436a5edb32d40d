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

#include "thzumi/estimation.hpp"

#include "thzumi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace thzumi
{
    namespace
    {
        constexpr double kUnwrapGuardBins = 16.0;

        double power_db(std::complex<float> v)
        {
            double p = std::norm(std::complex<double>(v));
            return p > 0.0 ? 10.0 * std::log10(p) : -std::numeric_limits<double>::infinity();
        }

        struct Candidate
        {
            std::size_t direction;
            std::size_t ia, ie;
            std::size_t bin;
            double offset; // fractional bin
            double level;  // dB, pulse-corrected received level
        };

        // Signed distance b - a on a circle of n bins (or plain difference).
        long long bin_distance(std::size_t a, std::size_t b, std::size_t n, bool circular)
        {
            long long d = static_cast<long long>(b) - static_cast<long long>(a);
            if (circular)
            {
                long long nn = static_cast<long long>(n);
                d = ((d % nn) + nn) % nn;
                if (d > nn / 2)
                    d -= nn;
            }
            return d;
        }

        // Sub-step position of a Gaussian-lobe peak from the centre level and the stronger neighbour.
        // curvature is in dB per deg^2, step in degrees; result clamped to +-step/2.
        double lobe_offset(double centre_db, double neighbour_db, double signed_step, double curvature)
        {
            double s = signed_step;
            double x = (s * s - (centre_db - neighbour_db) / curvature) / (2.0 * s);
            double half = std::abs(s) / 2.0;
            return std::clamp(x, -half, half);
        }
    }

    Pdp directional_pdp(const DssScan &scan, std::size_t direction, const SounderParams &sounder, bool eliminate_noise)
    {
        if (direction >= scan.n_directions())
            throw std::out_of_range("directional_pdp: direction " + std::to_string(direction) + " is not in the scan grid.");
        Pdp pdp;
        pdp.delay_resolution = scan.plan.delay_resolution();
        pdp.kind = PdpKind::directional;
        for (auto v : scan.cir(direction))
        {
            double p = power_db(v);
            if (eliminate_noise && p < sounder.noise_floor)
                p = sounder.pdp_clip_value;
            pdp.power_db.push_back(std::max(p, sounder.pdp_clip_value));
        }
        return pdp;
    }

    Pdp omni_pdp(const DssScan &scan, const SounderParams &sounder, bool clip_noise)
    {
        Pdp pdp;
        pdp.delay_resolution = scan.plan.delay_resolution();
        pdp.kind = PdpKind::omni;
        std::vector<double> acc(scan.samples_per_cir, 0.0);
        const double clip_lin = std::pow(10.0, sounder.pdp_clip_value / 10.0);
        for (std::size_t d = 0; d < scan.n_directions(); ++d)
        {
            auto h = scan.cir(d);
            for (std::size_t k = 0; k < h.size(); ++k)
            {
                double p = std::norm(std::complex<double>(h[k]));
                if ((clip_noise && 10.0 * std::log10(p) < sounder.noise_floor) || p < clip_lin)
                    p = clip_lin;
                acc[k] += p;
            }
        }
        for (double p : acc)
            pdp.power_db.push_back(std::max(10.0 * std::log10(p), sounder.pdp_clip_value));
        return pdp;
    }

    double mpc_threshold(double strongest_gain_db, const SounderParams &sounder)
    {
        if (!std::isfinite(strongest_gain_db))
            throw std::domain_error("mpc_threshold: strongest gain must be finite.");
        return std::pow(10.0, std::max(strongest_gain_db - sounder.dynamic_range, sounder.noise_floor + 5.0) / 20.0);
    }

    MpcSet extract_mpcs(const DssScan &scan, const SounderParams &sounder, const AntennaPattern &rx_pattern,
                        const AntennaPattern &tx_pattern, const EstimatorOptions &options)
    {
        if (scan.n_directions() == 0 || scan.samples_per_cir == 0)
            throw std::invalid_argument("extract_mpcs: empty scan.");
        const ScanGrid &grid = scan.grid;
        const std::size_t len = scan.samples_per_cir;
        const bool circular = !scan.extended;
        const std::size_t first_bin = scan.extended ? scan.plan.extension_length() : 0;
        const double bin = scan.plan.delay_resolution();
        const double floor_db = sounder.noise_floor + options.candidate_margin;
        const std::size_t n_az = grid.n_azimuth(), n_el = grid.n_elevation();

        MpcSet out;
        out.link = scan.link;

        // Side-lobe floor: away from its main lobe every path leaks into all steerings at the same
        // level, so the per-bin median over directions tracks the leaked part of the channel.
        std::vector<double> floor_median(len, -std::numeric_limits<double>::infinity());
        if (rx_pattern.kind == AntennaKind::horn && scan.n_directions() >= 8)
        {
            std::vector<double> column(scan.n_directions());
            for (std::size_t k = first_bin; k < len; ++k)
            {
                for (std::size_t d = 0; d < scan.n_directions(); ++d)
                    column[d] = std::norm(std::complex<double>(scan.cir(d)[k]));
                auto mid = column.begin() + static_cast<std::ptrdiff_t>(column.size() / 2);
                std::nth_element(column.begin(), mid, column.end());
                if (*mid > 0.0)
                    floor_median[k] = 10.0 * std::log10(*mid);
            }
        }

        // Candidates: local maxima per direction.
        std::vector<Candidate> cands;
        for (std::size_t d = 0; d < scan.n_directions(); ++d)
        {
            auto h = scan.cir(d);
            for (std::size_t k = first_bin; k < len; ++k)
            {
                double p = std::norm(std::complex<double>(h[k]));
                double left = -1.0, right = -1.0;
                if (k > first_bin)
                    left = std::norm(std::complex<double>(h[k - 1]));
                else if (circular)
                    left = std::norm(std::complex<double>(h[len - 1]));
                if (k + 1 < len)
                    right = std::norm(std::complex<double>(h[k + 1]));
                else if (circular)
                    right = std::norm(std::complex<double>(h[0]));
                if (!(p >= left && p > right) || 10.0 * std::log10(p) <= floor_db)
                    continue;
                if (10.0 * std::log10(p) < floor_median[k] + options.floor_margin)
                    continue;
                double delta = fractional_peak_offset(h, k, circular);
                double level = 10.0 * std::log10(p) - 20.0 * std::log10(pulse_peak_loss(delta));
                cands.push_back({d, grid.azimuth_index(d), grid.elevation_index(d), k, delta, level});
            }
        }
        if (cands.empty())
            return out;

        // Side-lobe copies: much weaker candidates sharing a delay bin with a strong one.
        {
            std::vector<double> bin_max(len, -std::numeric_limits<double>::infinity());
            for (const auto &c : cands)
                bin_max[c.bin] = std::max(bin_max[c.bin], c.level);
            const double limit = rx_pattern.sidelobe_level - options.sidelobe_margin;
            std::vector<Candidate> kept;
            for (const auto &c : cands)
            {
                double ref = bin_max[c.bin];
                for (long long o : {-1LL, 1LL})
                {
                    long long b = static_cast<long long>(c.bin) + o;
                    if (circular)
                        b = (b + static_cast<long long>(len)) % static_cast<long long>(len);
                    if (b >= 0 && b < static_cast<long long>(len))
                        ref = std::max(ref, bin_max[static_cast<std::size_t>(b)]);
                }
                if (rx_pattern.kind == AntennaKind::horn && ref - c.level >= limit)
                    continue;
                kept.push_back(c);
            }
            cands.swap(kept);
        }

        // Merge duplicates: strongest first, ties by lower azimuth then lower elevation.
        std::sort(cands.begin(), cands.end(), [](const Candidate &a, const Candidate &b) {
            if (a.level != b.level)
                return a.level > b.level;
            if (a.ia != b.ia)
                return a.ia < b.ia;
            if (a.ie != b.ie)
                return a.ie < b.ie;
            return a.bin < b.bin;
        });
        const bool wraps = grid.azimuth_wraps();
        std::vector<bool> removed(cands.size(), false);
        std::vector<Candidate> accepted;
        for (std::size_t i = 0; i < cands.size(); ++i)
        {
            if (removed[i])
                continue;
            accepted.push_back(cands[i]);
            for (std::size_t j = i + 1; j < cands.size(); ++j)
            {
                if (removed[j])
                    continue;
                if (std::abs(bin_distance(cands[i].bin, cands[j].bin, len, circular)) > 1)
                    continue;
                if (std::abs(bin_distance(cands[i].ia, cands[j].ia, n_az, wraps)) > 1)
                    continue;
                if (std::abs(static_cast<long long>(cands[i].ie) - static_cast<long long>(cands[j].ie)) > 1)
                    continue;
                removed[j] = true;
            }
        }

        // Angle refinement and de-embedding.
        const double tx_gain = antenna_gain(tx_pattern, 0.0);
        const bool horn = rx_pattern.kind == AntennaKind::horn;
        auto level_at = [&](std::size_t ia, std::size_t ie, std::size_t k) {
            return power_db(scan.cir(grid.index(ia, ie))[k]);
        };
        for (const auto &c : accepted)
        {
            Direction steer = grid.direction(c.direction);
            Direction est = steer;
            const double centre = power_db(scan.cir(c.direction)[c.bin]);
            if (options.refine_angles && horn)
            {
                const double base_curv = 12.0 / (rx_pattern.hpbw * rx_pattern.hpbw);
                if (c.ie > 0 && c.ie + 1 < n_el)
                {
                    double lo = level_at(c.ia, c.ie - 1, c.bin), hi = level_at(c.ia, c.ie + 1, c.bin);
                    double nb = std::max(lo, hi);
                    if (nb >= sounder.noise_floor)
                        est.elevation += lobe_offset(centre, nb, hi >= lo ? grid.elevation_step : -grid.elevation_step, base_curv);
                }
                bool has_lo = wraps || c.ia > 0, has_hi = wraps || c.ia + 1 < n_az;
                if (has_lo && has_hi)
                {
                    std::size_t ia_lo = (c.ia + n_az - 1) % n_az, ia_hi = (c.ia + 1) % n_az;
                    double lo = level_at(ia_lo, c.ie, c.bin), hi = level_at(ia_hi, c.ie, c.bin);
                    double nb = std::max(lo, hi);
                    double cos_el = std::cos(est.elevation * kDegToRad);
                    if (nb >= sounder.noise_floor && cos_el > 1e-6)
                        est.azimuth += lobe_offset(centre, nb, hi >= lo ? grid.azimuth_step : -grid.azimuth_step,
                                                   base_curv * cos_el * cos_el);
                }
                est.azimuth = wrap_azimuth(est.azimuth);
            }
            double gain_db = c.level - tx_gain - antenna_gain(rx_pattern, angle_between(steer, est));
            Mpc m;
            m.delay = (static_cast<double>(c.bin) + c.offset) * bin;
            m.gain = std::pow(10.0, gain_db / 20.0);
            m.azimuth = est.azimuth;
            m.elevation = est.elevation;
            m.origin = {OriginKind::estimated, ""};
            out.mpcs.push_back(m);
        }

        if (out.mpcs.empty())
            return out;

        // Path-gain threshold against the strongest estimate.
        double strongest = -std::numeric_limits<double>::infinity();
        for (const auto &m : out.mpcs)
            strongest = std::max(strongest, m.gain_db());
        SounderParams limits = sounder;
        if (options.dynamic_range)
            limits.dynamic_range = *options.dynamic_range;
        const double thr = mpc_threshold(strongest, limits);
        std::erase_if(out.mpcs, [&](const Mpc &m) { return m.gain < thr; });

        // Circular delay axis: excess delays run forward from the strongest estimate.
        if (circular && options.unwrap_delays && out.mpcs.size() > 1)
        {
            const double period = scan.plan.max_delay();
            const auto peak = std::max_element(out.mpcs.begin(), out.mpcs.end(),
                                               [](const Mpc &a, const Mpc &b) { return a.gain < b.gain; });
            const double origin = std::fmod(peak->delay, period);
            // Estimates just ahead of the peak stay ahead of it.
            const double guard = kUnwrapGuardBins * bin;
            for (auto &m : out.mpcs)
            {
                double excess = std::fmod(m.delay - origin, period);
                if (excess < 0.0)
                    excess += period;
                if (excess > period - guard)
                    excess -= period;
                m.delay = origin + excess;
            }
        }
        out.sort_by_delay();
        return out;
    }
}
