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

#include "thzumi/pipeline.hpp"

#include "json.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace thzumi
{
    namespace
    {
        using ojson = nlohmann::ordered_json;

        ojson fit_json(const std::optional<FitReport> &f)
        {
            if (!f)
                return nullptr;
            return ojson::parse(to_json(*f));
        }

        std::optional<FitReport> try_fit(const std::vector<double> &x, bool lognormal)
        {
            if (x.size() < 3)
                return std::nullopt;
            return lognormal ? fit_lognormal(x) : fit_gaussian(x);
        }

        double nan() { return std::numeric_limits<double>::quiet_NaN(); }

        AcceptanceCheck absolute_check(const std::string &name, double measured, double target, double tol)
        {
            AcceptanceCheck c{name, measured, target, target - tol, target + tol, false};
            c.pass = std::isfinite(measured) && measured >= c.lower && measured <= c.upper;
            return c;
        }

        AcceptanceCheck relative_check(const std::string &name, double measured, double target, double rel)
        {
            AcceptanceCheck c{name, measured, target, target * (1.0 - rel), target * (1.0 + rel), false};
            c.pass = std::isfinite(measured) && measured >= c.lower && measured <= c.upper;
            return c;
        }

        const CaseFits *find_case(const std::vector<CaseFits> &fits, LinkCase c)
        {
            for (const auto &f : fits)
                if (f.link_case == c)
                    return &f;
            return nullptr;
        }
    }

    std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, Stream stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          static_cast<std::uint32_t>(stream)};
        return std::mt19937_64(seq);
    }

    void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)> &body)
    {
        jobs = std::max<std::size_t>(1, std::min(jobs, n));
        if (jobs <= 1)
        {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::size_t error_index = n;
        std::exception_ptr error;
        auto worker = [&] {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (i < error_index)
                    {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < jobs; ++t)
            threads.emplace_back(worker);
        for (auto &t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

    LinkRealization generate_link(const ParameterBundle &params, std::size_t rx_index, std::uint64_t seed)
    {
        auto rng = substream(seed, rx_index, Stream::link);
        return synthesize_link(params.scene, rx_index, params, rng);
    }

    DssScan sound_link(const MpcSet &set, const ParameterBundle &params, std::uint64_t seed, const ScanOptions &options)
    {
        auto rng = substream(seed, set.link.rx_index, Stream::sounding);
        return simulate_scan(set, params.plan, params.grid, params.rx_antenna, params.tx_antenna, params.sounder, options, rng);
    }

    MpcSet estimate_link(const DssScan &scan, const ParameterBundle &params, const EstimatorOptions &options)
    {
        return extract_mpcs(scan, params.sounder, params.rx_antenna, params.tx_antenna, options);
    }

    ClusterResult cluster_link(const MpcSet &set, const ParameterBundle &params) { return dbscan(set.mpcs, params.clustering); }

    std::vector<CaseFits> fit_cases(std::span<const ChannelStats> stats, double freq_hz)
    {
        std::vector<CaseFits> out;
        for (LinkCase c : {LinkCase::los, LinkCase::olos})
        {
            std::vector<std::pair<double, double>> pl;
            std::vector<double> k, ds, asa, esa, nc, cds, casa, cesa;
            for (const auto &s : stats)
            {
                if (s.link.link_case != c)
                    continue;
                pl.emplace_back(s.link.distance, s.path_loss);
                if (std::isfinite(s.k_factor))
                    k.push_back(s.k_factor);
                if (s.ds > 0.0)
                    ds.push_back(s.ds);
                if (s.asa > 0.0)
                    asa.push_back(s.asa);
                if (s.esa > 0.0)
                    esa.push_back(s.esa);
                nc.push_back(static_cast<double>(s.n_clusters));
                for (const auto &cl : s.clusters)
                {
                    if (cl.cds > 0.0)
                        cds.push_back(cl.cds);
                    if (cl.casa > 0.0)
                        casa.push_back(cl.casa);
                    if (cl.cesa > 0.0)
                        cesa.push_back(cl.cesa);
                }
            }
            if (pl.empty())
                continue;
            CaseFits f;
            f.link_case = c;
            f.n_links = pl.size();
            f.n_finite_k = k.size();
            bool distinct = std::any_of(pl.begin(), pl.end(), [&](const auto &p) { return p.first != pl.front().first; });
            if (distinct)
                f.path_loss = fit_ci(pl, freq_hz);
            f.k_factor = try_fit(k, false);
            f.ds = try_fit(ds, true);
            f.asa = try_fit(asa, true);
            f.esa = try_fit(esa, true);
            f.n_clusters = try_fit(nc, false);
            f.cds = try_fit(cds, true);
            f.casa = try_fit(casa, true);
            f.cesa = try_fit(cesa, true);
            out.push_back(std::move(f));
        }
        return out;
    }

    std::string to_json(const CaseFits &f)
    {
        ojson j;
        j["case"] = to_string(f.link_case);
        j["n_links"] = f.n_links;
        j["n_finite_k"] = f.n_finite_k;
        j["path_loss"] = fit_json(f.path_loss);
        j["k_factor_db"] = fit_json(f.k_factor);
        j["ds_s"] = fit_json(f.ds);
        j["asa_deg"] = fit_json(f.asa);
        j["esa_deg"] = fit_json(f.esa);
        j["n_clusters"] = fit_json(f.n_clusters);
        j["cds_s"] = fit_json(f.cds);
        j["casa_deg"] = fit_json(f.casa);
        j["cesa_deg"] = fit_json(f.cesa);
        return j.dump(2) + "\n";
    }

    std::string to_json(std::span<const CaseFits> fits)
    {
        ojson j = ojson::object();
        for (const auto &f : fits)
            j[to_string(f.link_case)] = ojson::parse(to_json(f));
        return j.dump(2) + "\n";
    }

    std::map<std::string, double> measured_summary(const CaseFits &f)
    {
        std::map<std::string, double> m;
        if (f.path_loss)
        {
            m["ple"] = f.path_loss->value("ple");
            m["sf_sigma_db"] = f.path_loss->value("sf_sigma");
        }
        if (f.k_factor)
        {
            m["k_mean_db"] = f.k_factor->value("mean");
            m["k_sigma_db"] = f.k_factor->value("sigma");
        }
        if (f.ds)
            m["ds_mean_ns"] = f.ds->derived.at("median") * 1e9;
        if (f.asa)
            m["asa_mean_deg"] = f.asa->derived.at("median");
        if (f.esa)
            m["zsa_mean_deg"] = f.esa->derived.at("median");
        if (f.n_clusters)
            m["n_clusters"] = f.n_clusters->value("mean");
        if (f.cds)
            m["cds_ns"] = f.cds->derived.at("median") * 1e9;
        if (f.casa)
            m["casa_deg"] = f.casa->derived.at("median");
        if (f.cesa)
            m["cesa_deg"] = f.cesa->derived.at("median");
        return m;
    }

    bool RoundtripReport::passed() const
    {
        return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto &c) { return c.pass; });
    }

    std::string RoundtripReport::text() const
    {
        std::ostringstream out;
        out << std::setprecision(5);
        for (const auto &c : checks)
            out << (c.pass ? "PASS " : "FAIL ") << c.name << ": measured " << c.measured << ", target " << c.target
                << ", accepted [" << c.lower << ", " << c.upper << "]\n";
        out << (passed() ? "roundtrip: all checks passed\n" : "roundtrip: some checks failed\n");
        return out.str();
    }

    std::string RoundtripReport::to_json() const
    {
        ojson j;
        j["passed"] = passed();
        j["checks"] = ojson::array();
        for (const auto &c : checks)
        {
            ojson r;
            r["name"] = c.name;
            r["measured"] = std::isfinite(c.measured) ? ojson(c.measured) : ojson(nullptr);
            r["target"] = c.target;
            r["lower"] = c.lower;
            r["upper"] = c.upper;
            r["pass"] = c.pass;
            j["checks"].push_back(r);
        }
        j["fits"] = ojson::object();
        for (const auto &f : fits)
            j["fits"][thzumi::to_string(f.link_case)] = ojson::parse(thzumi::to_json(f));
        return j.dump(2) + "\n";
    }

    Scene roundtrip_scene(LinkCase link_case, const RoundtripOptions &options)
    {
        if (options.n_links < 2 || !(options.max_distance > options.min_distance))
            throw std::invalid_argument("roundtrip: need at least two links over a positive distance range.");
        std::vector<double> d(options.n_links);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = options.min_distance +
                   (options.max_distance - options.min_distance) * static_cast<double>(i) / static_cast<double>(d.size() - 1);
        Scene s = make_route_scene(d);
        if (link_case == LinkCase::olos)
            s.foliage_segments = {{-1.0, 2.0 * options.max_distance, 1.0}};
        return s;
    }

    RoundtripReport run_roundtrip(const ParameterBundle &params, const RoundtripOptions &options)
    {
        RoundtripReport report;
        for (LinkCase c : {LinkCase::los, LinkCase::olos})
        {
            ParameterBundle p = params;
            p.scene = roundtrip_scene(c, options);
            // Ensemble statistics: the OLoS close-in fit already carries the foliage.
            p.synthesis.foliage_mode = FoliageMode::embedded;
            const std::uint64_t case_seed = options.seed * 2 + (c == LinkCase::olos ? 1 : 0);
            std::vector<ChannelStats> stats(p.scene.rx_positions.size());
            parallel_for(stats.size(), options.jobs, [&](std::size_t i) {
                MpcSet truth = canonicalize(generate_link(p, i, case_seed).set);
                DssScan scan = sound_link(truth, p, case_seed);
                MpcSet est = canonicalize(estimate_link(scan, p, options.estimator));
                if (est.mpcs.empty())
                    throw std::runtime_error("roundtrip: no MPC estimated for link " + std::to_string(i) + ".");
                ClusterResult cl = cluster_link(est, p);
                stats[i] = channel_stats(est, cl);
            });
            report.stats.insert(report.stats.end(), stats.begin(), stats.end());
        }
        report.fits = fit_cases(report.stats, params.plan.center_freq);

        auto value = [](const std::optional<FitReport> &f, const std::string &name) { return f ? f->value(name) : nan(); };
        auto median = [](const std::optional<FitReport> &f) { return f ? f->derived.at("median") : nan(); };
        static const CaseFits empty{};
        const CaseFits &los = find_case(report.fits, LinkCase::los) ? *find_case(report.fits, LinkCase::los) : empty;
        const CaseFits &olos = find_case(report.fits, LinkCase::olos) ? *find_case(report.fits, LinkCase::olos) : empty;
        const auto &L = params.los, &O = params.olos;
        auto &ch = report.checks;
        ch.push_back(absolute_check("LoS PLE", value(los.path_loss, "ple"), L.ple, 0.10));
        ch.push_back(absolute_check("LoS SF sigma [dB]", value(los.path_loss, "sf_sigma"), L.sf_sigma, 0.4));
        ch.push_back(absolute_check("LoS K mean [dB]", value(los.k_factor, "mean"), L.k_mean, 1.5));
        ch.push_back(relative_check("LoS DS mean [ns]", median(los.ds) * 1e9, L.ds_mean * 1e9, 0.20));
        ch.push_back(relative_check("LoS ASA mean [deg]", median(los.asa), L.asa_mean, 0.20));
        ch.push_back(relative_check("LoS ESA mean [deg]", median(los.esa), L.esa_mean, 0.25));
        ch.push_back(absolute_check("LoS clusters mean", value(los.n_clusters, "mean"), L.n_clusters_mean, 0.5));
        ch.push_back(absolute_check("OLoS PLE", value(olos.path_loss, "ple"), O.ple, 0.15));
        ch.push_back(absolute_check("OLoS SF sigma [dB]", value(olos.path_loss, "sf_sigma"), O.sf_sigma, 1.0));
        ch.push_back(absolute_check("OLoS K mean [dB]", value(olos.k_factor, "mean"), O.k_mean, 1.5));
        ch.push_back(relative_check("OLoS DS mean [ns]", median(olos.ds) * 1e9, O.ds_mean * 1e9, 0.20));
        ch.push_back(absolute_check("OLoS clusters mean", value(olos.n_clusters, "mean"), O.n_clusters_mean, 0.6));
        return report;
    }

    std::size_t RoutePdp::peak_bin(std::size_t row) const
    {
        const auto &r = power_db.at(row);
        std::size_t best = search_start.at(row);
        for (std::size_t k = best; k < r.size(); ++k)
            if (r[k] > r[best])
                best = k;
        return best;
    }

    std::vector<std::size_t> RoutePdp::peak_candidates(std::size_t row, double range_db) const
    {
        const auto &r = power_db.at(row);
        const double floor = r[peak_bin(row)] - range_db;
        std::vector<std::size_t> out;
        for (std::size_t k = search_start.at(row); k < r.size(); ++k)
        {
            if (r[k] < floor)
                continue;
            bool left = k == 0 || r[k] >= r[k - 1];
            bool right = k + 1 == r.size() || r[k] > r[k + 1];
            if (left && right)
                out.push_back(k);
        }
        return out;
    }

    RouteTrajectory detect_trajectory(const RoutePdp &pdp, double range_db, double tolerance_bins)
    {
        const std::size_t n = pdp.distances.size();
        std::vector<std::vector<std::size_t>> cands(n);
        for (std::size_t i = 0; i < n; ++i)
            cands[i] = pdp.peak_candidates(i, range_db);

        // Candidate of row i nearest to the line, if within tolerance.
        auto nearest = [&](std::size_t i, double slope, double offset) -> std::optional<std::size_t> {
            const double y = slope * pdp.distances[i] + offset;
            const auto &c = cands[i];
            auto it = std::lower_bound(c.begin(), c.end(), y, [](std::size_t k, double v) { return static_cast<double>(k) < v; });
            std::optional<std::size_t> best;
            double err = tolerance_bins;
            for (auto j : {it, it == c.begin() ? c.end() : it - 1})
                if (j != c.end() && std::abs(static_cast<double>(*j) - y) <= err)
                {
                    err = std::abs(static_cast<double>(*j) - y);
                    best = *j;
                }
            return best;
        };

        std::size_t best_count = 0;
        double best_residual = 0.0, best_slope = 0.0, best_offset = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
            {
                const double dd = pdp.distances[j] - pdp.distances[i];
                if (dd == 0.0)
                    continue;
                for (auto a : cands[i])
                    for (auto b : cands[j])
                    {
                        const double slope = (static_cast<double>(b) - static_cast<double>(a)) / dd;
                        const double offset = static_cast<double>(a) - slope * pdp.distances[i];
                        std::size_t count = 0;
                        double residual = 0.0;
                        for (std::size_t r = 0; r < n; ++r)
                            if (auto k = nearest(r, slope, offset))
                            {
                                ++count;
                                residual += std::abs(static_cast<double>(*k) - slope * pdp.distances[r] - offset);
                            }
                        if (count > best_count || (count == best_count && residual < best_residual))
                        {
                            best_count = count;
                            best_residual = residual;
                            best_slope = slope;
                            best_offset = offset;
                        }
                    }
            }

        RouteTrajectory t;
        t.bins.resize(n);
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, m = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            if ((t.bins[r] = nearest(r, best_slope, best_offset)))
            {
                const double x = pdp.distances[r], y = static_cast<double>(*t.bins[r]);
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
                m += 1.0;
            }
        t.rows_matched = static_cast<std::size_t>(m);
        double den = m * sxx - sx * sx;
        double slope = den > 0.0 ? (m * sxy - sx * sy) / den : best_slope;
        double offset = m > 0.0 ? (sy - slope * sx) / m : best_offset;
        t.slope = slope * pdp.delay_resolution;
        t.intercept = offset * pdp.delay_resolution;
        return t;
    }

    RoutePdp route_pdp(const ParameterBundle &params, std::uint64_t seed, std::size_t jobs)
    {
        const Scene &scene = params.scene;
        const std::size_t n = scene.rx_positions.size();
        RoutePdp out;
        out.delay_resolution = params.plan.delay_resolution();
        out.n_columns = params.plan.extended_samples;
        out.distances.resize(n);
        out.cases.resize(n);
        out.extended.resize(n);
        out.search_start.resize(n);
        out.power_db.resize(n);
        std::vector<char> ext(n, 0);
        parallel_for(n, jobs, [&](std::size_t i) {
            LinkRealization link = generate_link(params, i, seed);
            DssScan scan = sound_link(canonicalize(link.set), params, seed);
            const double d = scene.link_distance(i);
            std::size_t start = 0;
            if (d > params.plan.max_path_length())
            {
                scan = dealias_extend(scan);
                start = params.plan.extension_length();
                ext[i] = 1;
            }
            Pdp pdp = omni_pdp(scan, params.sounder);
            std::vector<double> row(out.n_columns, params.sounder.pdp_clip_value);
            for (std::size_t k = start; k < pdp.power_db.size() && k < row.size(); ++k)
                row[k] = pdp.power_db[k];
            out.distances[i] = d;
            out.cases[i] = link.state.link_case;
            out.search_start[i] = start;
            out.power_db[i] = std::move(row);
        });
        for (std::size_t i = 0; i < n; ++i)
            out.extended[i] = ext[i] != 0;
        return out;
    }

    std::string route_pdp_csv(const RoutePdp &pdp)
    {
        std::ostringstream out;
        out.precision(10);
        out << "distance_m,case";
        for (std::size_t k = 0; k < pdp.n_columns; ++k)
            out << ',' << static_cast<double>(k) * pdp.delay_resolution;
        out << '\n';
        for (std::size_t i = 0; i < pdp.distances.size(); ++i)
        {
            out << pdp.distances[i] << ',' << to_string(pdp.cases[i]);
            for (double v : pdp.power_db[i])
                out << ',' << v;
            out << '\n';
        }
        return out.str();
    }

    std::string sha256_hex(const std::string &data)
    {
        unsigned char digest[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("SHA-256 digest failed.");
        std::ostringstream out;
        for (unsigned int i = 0; i < len; ++i)
            out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
        return out.str();
    }

    std::string config_hash(const ParameterBundle &params) { return sha256_hex(serialize_config(params)); }

    std::string utc_timestamp()
    {
        auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream out;
        out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        return out.str();
    }

    std::string to_json(const RunManifest &m)
    {
        ojson j;
        j["command"] = m.command;
        j["config_hash"] = m.config_hash;
        j["seed"] = m.seed;
        j["tool_version"] = m.tool_version;
        j["started"] = m.started;
        j["finished"] = m.finished;
        j["outputs"] = m.outputs;
        return j.dump(2) + "\n";
    }

    const char *tool_version()
    {
#ifdef THZUMI_VERSION
        return THZUMI_VERSION;
#else
        return "0.0.0";
#endif
    }
}
