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

#include "thzumi/channel_synth.hpp"

#include "thzumi/characterization.hpp"
#include "thzumi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace thzumi
{
    namespace
    {
        double draw_normal(double mean, double sigma, std::mt19937_64 &rng)
        {
            if (sigma <= 0.0)
                return mean;
            return std::normal_distribution<double>(mean, sigma)(rng);
        }

        double draw_log10_normal(double mean, double sigma, std::mt19937_64 &rng)
        {
            if (sigma <= 0.0)
                return mean;
            return std::pow(10.0, std::normal_distribution<double>(std::log10(mean), sigma)(rng));
        }

        // Smallest scale in [0, hi] at which f reaches target: coarse scan, then bisection.
        // Falls back to the scan maximum when the target is out of reach.
        double fit_scale(const std::function<double(double)> &f, double target, double hi)
        {
            constexpr int kScan = 128;
            double prev_s = 0.0, prev_v = f(0.0);
            if (prev_v >= target)
                return 0.0;
            double best_s = 0.0, best_v = prev_v;
            for (int k = 1; k <= kScan; ++k)
            {
                double s = hi * k / kScan, v = f(s);
                if (v >= target)
                {
                    double lo = prev_s, up = s;
                    for (int it = 0; it < 60; ++it)
                    {
                        double mid = 0.5 * (lo + up);
                        (f(mid) >= target ? up : lo) = mid;
                    }
                    return std::abs(f(lo) - target) < std::abs(f(up) - target) ? lo : up;
                }
                if (v > best_v)
                {
                    best_v = v;
                    best_s = s;
                }
                prev_s = s;
                prev_v = v;
            }
            return best_s;
        }

        // Scale for a function that grows without bound (delay spreads).
        double fit_growing_scale(const std::function<double(double)> &f, double target, double guess)
        {
            if (f(0.0) >= target)
                return 0.0;
            double lo = 0.0, hi = guess > 0.0 ? guess : 1.0;
            for (int it = 0; it < 200 && f(hi) < target; ++it)
            {
                lo = hi;
                hi *= 2.0;
            }
            for (int it = 0; it < 100; ++it)
            {
                double mid = 0.5 * (lo + hi);
                (f(mid) >= target ? hi : lo) = mid;
                if (hi - lo <= 1e-12 * hi)
                    break;
            }
            return hi;
        }

        double max_abs(const std::vector<double> &x)
        {
            double m = 0.0;
            for (double v : x)
                m = std::max(m, std::abs(v));
            return m > 0.0 ? m : 1.0;
        }

        double clamp_elevation(double el, double limit, double keep)
        {
            double lo = std::min(-limit, keep), hi = std::max(limit, keep);
            return std::clamp(el, lo, hi);
        }

        // Intra-cluster ray offsets, all in final units (s, deg).
        struct RayOffsets
        {
            std::vector<double> delay, azimuth, elevation, power;
            std::vector<bool> direct;
        };

        double weighted_rms(const std::vector<double> &x, const std::vector<double> &w)
        {
            double p = 0.0, m1 = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                p += w[i];
                m1 += w[i] * x[i];
                m2 += w[i] * x[i] * x[i];
            }
            if (!(p > 0.0))
                return 0.0;
            m1 /= p;
            m2 /= p;
            return std::sqrt(std::max(0.0, m2 - m1 * m1));
        }

        double weighted_circular(const std::vector<double> &deg, const std::vector<double> &w, double cap)
        {
            std::vector<Mpc> m(deg.size());
            for (std::size_t i = 0; i < deg.size(); ++i)
            {
                m[i].azimuth = deg[i];
                m[i].gain = std::sqrt(w[i]);
            }
            return std::min(cap, circular_angle_spread(m, AnglePlane::azimuth));
        }

        // Scales raw offsets so their power-weighted spread hits target.
        void scale_delay_offsets(std::vector<double> &x, const std::vector<double> &w, double target)
        {
            double s = weighted_rms(x, w);
            double k = s > 0.0 ? target / s : 0.0;
            for (auto &v : x)
                v *= k;
        }

        void scale_angle_offsets(std::vector<double> &x, const std::vector<double> &w, double target, double hi)
        {
            if (target <= 0.0)
            {
                std::fill(x.begin(), x.end(), 0.0);
                return;
            }
            std::vector<double> raw = x, tmp(x.size());
            auto f = [&](double s) {
                for (std::size_t i = 0; i < raw.size(); ++i)
                    tmp[i] = s * raw[i];
                return weighted_circular(tmp, w, 360.0);
            };
            double s = fit_scale(f, target, hi / max_abs(raw));
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = s * raw[i];
        }
    }

    LargeScaleDraw draw_large_scale(const UmiCaseParams &cp, std::mt19937_64 &rng)
    {
        LargeScaleDraw ls;
        ls.k = draw_normal(cp.k_mean, cp.k_sigma, rng);
        ls.ds = draw_log10_normal(cp.ds_mean, cp.ds_sigma, rng);
        do
            ls.asa = draw_log10_normal(cp.asa_mean, cp.asa_sigma, rng);
        while (ls.asa > kAzimuthSpreadCap);
        do
            ls.esa = draw_log10_normal(cp.esa_mean, cp.esa_sigma, rng);
        while (ls.esa > kElevationSpreadCap);
        ls.sf = draw_normal(0.0, cp.sf_sigma, rng);
        return ls;
    }

    std::size_t draw_cluster_count(double mean, std::mt19937_64 &rng)
    {
        if (!(mean >= 1.0))
            throw std::domain_error("draw_cluster_count: mean must be at least 1.");
        if (mean == 1.0)
            return 1;
        return 1 + static_cast<std::size_t>(std::poisson_distribution<long long>(mean - 1.0)(rng));
    }

    ClusterLayout generate_clusters(const LargeScaleDraw &ls, std::size_t n_clusters, double direct_delay,
                                    const Direction &direct_direction, const SynthesisOptions &options, std::mt19937_64 &rng)
    {
        if (n_clusters < 1)
            throw std::invalid_argument("generate_clusters: at least one cluster is required.");
        ClusterLayout layout;
        layout.ls = ls;
        layout.direct_delay = direct_delay;
        layout.direct_direction = direct_direction;

        ClusterSkeleton direct;
        direct.delay = direct_delay;
        direct.power = 1.0;
        direct.azimuth = direct_direction.azimuth;
        direct.elevation = direct_direction.elevation;
        layout.clusters.push_back(direct);
        if (n_clusters == 1)
            return layout;

        std::exponential_distribution<double> expo(1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> spread(-1.0, 1.0);
        std::vector<ClusterSkeleton> others(n_clusters - 1);
        for (auto &c : others)
        {
            c.unit_delay = expo(rng);
            double shadow = draw_normal(0.0, options.cluster_shadowing, rng);
            c.power = std::exp(-(options.power_decay - 1.0) * c.unit_delay) * std::pow(10.0, -shadow / 10.0);
            c.unit_azimuth = gauss(rng);
            c.unit_elevation = gauss(rng);
        }
        std::stable_sort(others.begin(), others.end(), [](const auto &a, const auto &b) { return a.unit_delay < b.unit_delay; });

        const double k_lin = std::pow(10.0, ls.k / 10.0);
        double raw_sum = 0.0;
        for (const auto &c : others)
            raw_sum += c.power;
        layout.clusters[0].power = k_lin / (1.0 + k_lin);
        for (auto &c : others)
            c.power *= 1.0 / (1.0 + k_lin) / raw_sum;

        // Delay spread is linear in the delay scale once the direct cluster is pinned at zero excess.
        std::vector<double> x{0.0}, w{layout.clusters[0].power};
        for (const auto &c : others)
        {
            x.push_back(c.unit_delay);
            w.push_back(c.power);
        }
        double unit_ds = weighted_rms(x, w);
        double delay_scale = unit_ds > 0.0 ? ls.ds / unit_ds : 0.0;

        std::vector<double> ga{0.0}, he{0.0}, tmp;
        for (const auto &c : others)
        {
            ga.push_back(c.unit_azimuth);
            he.push_back(c.unit_elevation);
        }
        auto az_spread = [&](double s) {
            tmp.assign(ga.size(), 0.0);
            for (std::size_t i = 0; i < ga.size(); ++i)
                tmp[i] = direct_direction.azimuth + s * ga[i];
            return weighted_circular(tmp, w, kAzimuthSpreadCap);
        };
        auto el_spread = [&](double s) {
            tmp.assign(he.size(), 0.0);
            for (std::size_t i = 0; i < he.size(); ++i)
                tmp[i] = clamp_elevation(direct_direction.elevation + s * he[i], options.elevation_limit, direct_direction.elevation);
            return weighted_circular(tmp, w, kElevationSpreadCap);
        };
        double az_scale = fit_scale(az_spread, ls.asa, 180.0 / max_abs(ga));
        double el_scale = fit_scale(el_spread, ls.esa, 90.0 / max_abs(he));

        for (auto &c : others)
        {
            c.delay = direct_delay + delay_scale * c.unit_delay;
            c.azimuth = wrap_azimuth(direct_direction.azimuth + az_scale * c.unit_azimuth);
            c.elevation = clamp_elevation(direct_direction.elevation + el_scale * c.unit_elevation, options.elevation_limit,
                                          direct_direction.elevation);
            layout.clusters.push_back(c);
        }
        return layout;
    }

    MpcSet generate_rays(const ClusterLayout &layout, const UmiCaseParams &cp, const SynthesisOptions &options,
                         LinkCase link_case, std::mt19937_64 &rng)
    {
        if (layout.clusters.empty())
            throw std::invalid_argument("generate_rays: no clusters.");
        const Origin direct_origin{link_case == LinkCase::los ? OriginKind::los : OriginKind::olos_direct, ""};
        const std::size_t m = std::max<std::size_t>(1, options.rays_per_cluster);
        const Direction &dd = layout.direct_direction;
        const double lim = options.elevation_limit;

        MpcSet set;
        if (m == 1)
        {
            for (std::size_t c = 0; c < layout.clusters.size(); ++c)
            {
                const auto &s = layout.clusters[c];
                Mpc r{s.delay, std::sqrt(s.power), s.azimuth, s.elevation, static_cast<int>(c),
                      c == 0 ? direct_origin : Origin{}};
                set.mpcs.push_back(r);
            }
            set.sort_by_delay();
            return set;
        }

        std::exponential_distribution<double> expo(1.0);
        std::uniform_real_distribution<double> spread(-1.0, 1.0);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<RayOffsets> offsets(layout.clusters.size());
        for (std::size_t c = 0; c < layout.clusters.size(); ++c)
        {
            auto &o = offsets[c];
            const double p = layout.clusters[c].power;
            if (c == 0)
            {
                const double share = std::clamp(options.direct_ray_share, 0.0, 1.0);
                o.delay.push_back(0.0);
                o.azimuth.push_back(0.0);
                o.elevation.push_back(0.0);
                o.power.push_back(share * p);
                o.direct.push_back(true);
                if (share < 1.0)
                    for (std::size_t r = 1; r < m; ++r)
                    {
                        o.delay.push_back(expo(rng));
                        o.azimuth.push_back(spread(rng));
                        o.elevation.push_back(spread(rng));
                        o.power.push_back((1.0 - share) * p / static_cast<double>(m - 1));
                        o.direct.push_back(false);
                    }
            }
            else
            {
                for (std::size_t r = 0; r < m; ++r)
                {
                    o.delay.push_back(expo(rng));
                    o.azimuth.push_back(gauss(rng));
                    o.elevation.push_back(gauss(rng));
                    o.direct.push_back(false);
                }
                // The earliest ray marks the cluster delay; angle offsets are centred on the cluster mean.
                double d0 = *std::min_element(o.delay.begin(), o.delay.end());
                double ma = 0.0, me = 0.0, wsum = 0.0;
                for (std::size_t r = 0; r < m; ++r)
                {
                    o.delay[r] -= d0;
                    ma += o.azimuth[r];
                    me += o.elevation[r];
                    o.power.push_back(std::exp(-options.ray_power_decay * o.delay[r]));
                    wsum += o.power.back();
                }
                for (auto &w : o.power)
                    w *= p / wsum;
                for (std::size_t r = 0; r < m; ++r)
                {
                    o.azimuth[r] -= ma / static_cast<double>(m);
                    o.elevation[r] -= me / static_cast<double>(m);
                }
            }
            if (o.delay.size() > 1)
            {
                scale_delay_offsets(o.delay, o.power, cp.cds());
                scale_angle_offsets(o.azimuth, o.power, cp.casa(), 180.0);
                scale_angle_offsets(o.elevation, o.power, cp.cesa(), 90.0);
            }
        }

        const auto &cl = layout.clusters;
        // g scales the direct-cluster satellite offsets.
        auto build = [&](double ds_scale, double az_scale, double el_scale, double gd = 1.0, double ga = 1.0, double ge = 1.0) {
            std::vector<Mpc> rays;
            for (std::size_t c = 0; c < cl.size(); ++c)
            {
                const auto &o = offsets[c];
                double excess = ds_scale * cl[c].unit_delay;
                if (options.max_excess_delay > 0.0)
                    excess = std::min(excess, options.max_excess_delay);
                double centre_delay = layout.direct_delay + excess;
                double centre_az = dd.azimuth + az_scale * cl[c].unit_azimuth;
                double centre_el = dd.elevation + el_scale * cl[c].unit_elevation;
                for (std::size_t r = 0; r < o.delay.size(); ++r)
                {
                    Mpc ray;
                    const bool sat = c == 0;
                    ray.delay = centre_delay + (sat ? gd : 1.0) * o.delay[r];
                    if (options.max_excess_delay > 0.0)
                        ray.delay = std::min(ray.delay, layout.direct_delay + options.max_excess_delay);
                    ray.gain = std::sqrt(o.power[r]);
                    if (o.direct[r])
                    {
                        ray.delay = layout.direct_delay;
                        ray.azimuth = dd.azimuth;
                        ray.elevation = dd.elevation;
                        ray.origin = direct_origin;
                    }
                    else
                    {
                        ray.azimuth = wrap_azimuth(centre_az + (sat ? ga : 1.0) * o.azimuth[r]);
                        ray.elevation = clamp_elevation(centre_el + (sat ? ge : 1.0) * o.elevation[r], lim, dd.elevation);
                    }
                    ray.cluster_id = static_cast<int>(c);
                    rays.push_back(ray);
                }
            }
            if (options.visibility_range > 0.0 && cl.size() > 1)
            {
                double peak = 0.0;
                for (const auto &r : rays)
                    peak = std::max(peak, r.power());
                const double floor = peak * std::pow(10.0, -options.visibility_range / 10.0);
                // Each cluster keeps at least its strongest ray.
                std::vector<double> best(cl.size(), 0.0);
                for (const auto &r : rays)
                    best[*r.cluster_id] = std::max(best[*r.cluster_id], r.power());
                std::erase_if(rays, [&](const Mpc &r) {
                    return *r.cluster_id != 0 && r.power() < floor && r.power() < best[*r.cluster_id];
                });
                double p0 = 0.0, rest = 0.0;
                for (const auto &r : rays)
                    (*r.cluster_id == 0 ? p0 : rest) += r.power();
                if (rest > 0.0 && p0 > 0.0)
                {
                    const double g = std::sqrt(std::pow(10.0, layout.ls.k / 10.0) * rest / p0);
                    for (auto &r : rays)
                        if (*r.cluster_id == 0)
                            r.gain *= g;
                }
            }
            return rays;
        };

        double ds_scale = 0.0, az_scale = 0.0, el_scale = 0.0;
        if (cl.size() > 1)
        {
            // Skeleton scales are the starting point; re-fit them with the rays in place.
            double unit_ds = 0.0;
            {
                std::vector<double> x, w;
                for (const auto &c : cl)
                {
                    x.push_back(c.unit_delay);
                    w.push_back(c.power);
                }
                unit_ds = weighted_rms(x, w);
            }
            double guess = unit_ds > 0.0 ? layout.ls.ds / unit_ds : 1e-9;
            ds_scale = fit_growing_scale([&](double s) { return rms_delay_spread(build(s, 0.0, 0.0)); }, layout.ls.ds, guess);
            std::vector<double> ga, he;
            for (const auto &c : cl)
            {
                ga.push_back(c.unit_azimuth);
                he.push_back(c.unit_elevation);
            }
            az_scale = fit_scale([&](double s) { return circular_angle_spread(build(0.0, s, 0.0), AnglePlane::azimuth); },
                                 layout.ls.asa, 180.0 / max_abs(ga));
            el_scale = fit_scale([&](double s) { return circular_angle_spread(build(0.0, 0.0, s), AnglePlane::elevation); },
                                 layout.ls.esa, 90.0 / max_abs(he));
        }

        // Spread still short of the draw: widen the direct-cluster satellites.
        double gd = 1.0, ga = 1.0, ge = 1.0;
        if (offsets[0].delay.size() > 1)
        {
            const auto &o = offsets[0];
            constexpr double kShort = 0.99;
            if (rms_delay_spread(build(ds_scale, 0.0, 0.0)) < kShort * layout.ls.ds)
            {
                auto f = [&](double t) { return rms_delay_spread(build(ds_scale, 0.0, 0.0, 1.0 + t)); };
                gd = 1.0 + (options.max_excess_delay > 0.0
                                ? fit_scale(f, layout.ls.ds, std::max(0.0, options.max_excess_delay / max_abs(o.delay) - 1.0))
                                : fit_growing_scale(f, layout.ls.ds, 1.0));
            }
            if (circular_angle_spread(build(0.0, az_scale, 0.0), AnglePlane::azimuth) < kShort * layout.ls.asa)
                ga = 1.0 + fit_scale([&](double t) {
                           return circular_angle_spread(build(0.0, az_scale, 0.0, 1.0, 1.0 + t), AnglePlane::azimuth);
                       },
                       layout.ls.asa, std::max(0.0, options.satellite_max_offset / max_abs(o.azimuth) - 1.0));
            if (circular_angle_spread(build(0.0, 0.0, el_scale), AnglePlane::elevation) < kShort * layout.ls.esa)
                ge = 1.0 + fit_scale([&](double t) {
                           return circular_angle_spread(build(0.0, 0.0, el_scale, 1.0, 1.0, 1.0 + t),
                                                        AnglePlane::elevation);
                       },
                       layout.ls.esa, std::max(0.0, options.satellite_max_offset / max_abs(o.elevation) - 1.0));
        }

        set.mpcs = build(ds_scale, az_scale, el_scale, gd, ga, ge);
        double total = set.total_power();
        for (auto &r : set.mpcs)
            r.gain /= std::sqrt(total);
        set.sort_by_delay();
        return set;
    }

    std::vector<Mpc> scene_echoes(const Scene &scene, std::size_t rx_index, double freq_hz)
    {
        const Vec3 tx = scene.tx_position, rx = scene.rx_positions.at(rx_index);
        const double link = scene.link_distance(rx_index);
        std::vector<Mpc> out;
        for (const auto &s : scene.scatterers)
        {
            if ((s.visible_from_m && link < *s.visible_from_m) || (s.visible_to_m && link > *s.visible_to_m))
                continue;
            const double d1 = (s.position - tx).norm(), d2 = (rx - s.position).norm();
            double loss = fspl(freq_hz, d1 + d2) + s.reflectivity_loss_db;
            if (s.facing_azimuth_deg)
            {
                double a = *s.facing_azimuth_deg * kDegToRad;
                Vec3 normal{std::cos(a), std::sin(a), 0.0};
                if (normal.dot(tx - s.position) < 0.0 || normal.dot(rx - s.position) < 0.0)
                    loss += s.backscatter_penalty_db;
            }
            Mpc e;
            e.delay = (d1 + d2) / kSpeedOfLight;
            e.gain = std::pow(10.0, -loss / 20.0);
            Direction aoa = d2 > 1e-9 ? direction_towards(rx, s.position) : direction_towards(rx, tx);
            e.azimuth = aoa.azimuth;
            e.elevation = aoa.elevation;
            e.origin = {OriginKind::scatterer, s.label};
            out.push_back(e);
        }
        return out;
    }

    LinkRealization synthesize_link(const Scene &scene, std::size_t rx_index, const ParameterBundle &params, std::mt19937_64 &rng)
    {
        LinkRealization out;
        out.state = classify_link(scene, rx_index, params.foliage, rng);
        const UmiCaseParams &cp = out.state.link_case == LinkCase::los ? params.los : params.olos;
        out.ls = draw_large_scale(cp, rng);
        out.n_clusters = draw_cluster_count(cp.n_clusters_mean, rng);

        const Vec3 tx = scene.tx_position, rx = scene.rx_positions.at(rx_index);
        const double d = scene.link_distance(rx_index);
        const double freq = params.plan.center_freq;
        ClusterLayout layout = generate_clusters(out.ls, out.n_clusters, d / kSpeedOfLight, direction_towards(rx, tx),
                                                 params.synthesis, rng);
        SynthesisOptions so = params.synthesis;
        if (so.max_excess_delay <= 0.0)
            so.max_excess_delay = params.plan.max_delay();
        MpcSet set = generate_rays(layout, cp, so, out.state.link_case, rng);

        double scale_db = -ci_path_loss(d, freq, cp, out.ls.sf);
        if (out.state.link_case == LinkCase::olos && params.synthesis.foliage_mode == FoliageMode::direct_path)
        {
            const Mpc *direct = set.direct();
            scale_db = -(fspl(freq, d) + out.state.foliage_loss) - direct->gain_db();
        }
        const double scale = std::pow(10.0, scale_db / 20.0);
        for (auto &m : set.mpcs)
            m.gain *= scale;

        int next_id = static_cast<int>(layout.clusters.size());
        for (auto e : scene_echoes(scene, rx_index, freq))
        {
            e.cluster_id = next_id++;
            set.mpcs.push_back(e);
        }
        std::erase_if(set.mpcs, [&](const Mpc &m) { return !m.origin.is_direct() && m.gain_db() < params.sounder.pdp_clip_value; });
        set.sort_by_delay();
        set.link = {rx_index, d, out.state.link_case, out.state.foliage_loss};
        out.set = std::move(set);
        return out;
    }
}
