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

// Command-line front end. Every subcommand writes into a run directory (--out) and records a
// manifest.json there; stages exchange data through files only.

#include "thzumi/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace thzumi;
using ojson = nlohmann::ordered_json;

namespace
{
    constexpr int kExitOk = 0;
    constexpr int kExitValidation = 2;
    constexpr int kExitSchema = 3;

    // Failure of a roundtrip or a user input that is well-formed but not acceptable.
    struct ValidationFailure : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct Globals
    {
        std::string config;
        std::uint64_t seed = 1;
        std::size_t jobs = 1;
        std::string out = "run";
    };

    ParameterBundle load_params(const Globals &g) { return g.config.empty() ? ParameterBundle{} : load_config(g.config); }

    std::string link_stem(const LinkInfo &link)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "rx_%03zu", link.rx_index);
        return buf;
    }

    // Files named directly, plus the files with the extension inside named directories, sorted.
    std::vector<fs::path> expand_inputs(const std::vector<std::string> &inputs, const std::string &ext)
    {
        std::vector<fs::path> out;
        for (const auto &in : inputs)
        {
            fs::path p(in);
            if (fs::is_directory(p))
            {
                std::vector<fs::path> found;
                for (const auto &e : fs::directory_iterator(p))
                    if (e.is_regular_file() && e.path().extension() == ext)
                        found.push_back(e.path());
                std::sort(found.begin(), found.end());
                out.insert(out.end(), found.begin(), found.end());
            }
            else if (fs::is_regular_file(p))
                out.push_back(p);
            else
                throw std::runtime_error("Input not found: " + in);
        }
        if (out.empty())
            throw std::runtime_error("No " + ext + " inputs given.");
        return out;
    }

    class Run
    {
    public:
        Run(std::string command, const Globals &g, const ParameterBundle &params)
            : dir_(g.out)
        {
            manifest_.command = std::move(command);
            manifest_.config_hash = config_hash(params);
            manifest_.seed = g.seed;
            manifest_.tool_version = tool_version();
            manifest_.started = utc_timestamp();
            fs::create_directories(dir_);
        }

        // Writes text under the run directory and records it.
        void write(const std::string &relative, const std::string &content)
        {
            fs::path p = dir_ / relative;
            fs::create_directories(p.parent_path());
            write_text_file(p.string(), content);
            record(relative);
        }

        void write_scan_file(const std::string &relative, const DssScan &scan)
        {
            fs::path p = dir_ / relative;
            fs::create_directories(p.parent_path());
            write_scan(p.string(), scan);
            record(relative);
        }

        // Earlier stages run into the same directory stay listed under "stages".
        void finish()
        {
            manifest_.finished = utc_timestamp();
            fs::path mp = dir_ / "manifest.json";
            ojson stages = ojson::array();
            std::vector<std::string> all;
            if (fs::exists(mp))
            {
                try
                {
                    ojson old = ojson::parse(read_text_file(mp.string()));
                    if (old.contains("stages"))
                        stages = old["stages"];
                    for (const auto &o : old.value("outputs", std::vector<std::string>{}))
                        all.push_back(o);
                }
                catch (const nlohmann::json::exception &)
                {
                }
            }
            ojson current = ojson::parse(to_json(manifest_));
            stages.push_back(current);
            for (const auto &o : manifest_.outputs)
                if (std::find(all.begin(), all.end(), o) == all.end())
                    all.push_back(o);
            ojson j = current;
            j["outputs"] = all;
            j["stages"] = stages;
            write_text_file(mp.string(), j.dump(2) + "\n");
        }

    private:
        void record(const std::string &relative)
        {
            if (std::find(manifest_.outputs.begin(), manifest_.outputs.end(), relative) == manifest_.outputs.end())
                manifest_.outputs.push_back(relative);
        }

        fs::path dir_;
        RunManifest manifest_;
    };

    std::string fallback_note(const ParameterBundle &p)
    {
        if (p.los.uses_fallback_cluster_spreads() || p.olos.uses_fallback_cluster_spreads())
            return "fallback cluster-spread defaults: CDS/CASA/CESA fall back to DS/5, ASA/3, ESA/2";
        return "";
    }

    // ---- generate ------------------------------------------------------------

    int cmd_generate(const Globals &g)
    {
        ParameterBundle p = load_params(g);
        Run run("generate", g, p);
        const std::size_t n = p.scene.rx_positions.size();
        std::vector<LinkRealization> links(n);
        parallel_for(n, g.jobs, [&](std::size_t i) { links[i] = generate_link(p, i, g.seed); });
        std::vector<LinkState> states;
        for (const auto &l : links)
        {
            run.write("mpc/" + link_stem(l.set.link) + ".csv", to_csv(l.set));
            states.push_back(l.state);
        }
        run.write("route.csv", route_csv(p.scene, states));
        run.finish();
        return kExitOk;
    }

    // ---- scan ----------------------------------------------------------------

    int cmd_scan(const Globals &g, const std::vector<std::string> &inputs, bool no_noise)
    {
        ParameterBundle p = load_params(g);
        auto files = expand_inputs(inputs, ".csv");
        Run run("scan", g, p);
        std::vector<DssScan> scans(files.size());
        ScanOptions opt;
        opt.add_noise = !no_noise;
        parallel_for(files.size(), g.jobs, [&](std::size_t i) {
            scans[i] = sound_link(read_mpc_set(files[i].string()), p, g.seed, opt);
        });
        for (const auto &s : scans)
            run.write_scan_file("scan/" + link_stem(s.link) + ".thzscan", s);
        run.finish();
        return kExitOk;
    }

    // ---- estimate ------------------------------------------------------------

    int cmd_estimate(const Globals &g, const std::vector<std::string> &inputs, std::optional<double> r_override)
    {
        ParameterBundle p = load_params(g);
        auto files = expand_inputs(inputs, ".thzscan");
        Run run("estimate", g, p);
        EstimatorOptions eo;
        eo.dynamic_range = r_override;
        std::vector<MpcSet> sets(files.size());
        parallel_for(files.size(), g.jobs, [&](std::size_t i) { sets[i] = estimate_link(read_scan(files[i].string()), p, eo); });
        for (const auto &s : sets)
            run.write("est/" + link_stem(s.link) + ".csv", to_csv(s));
        run.finish();
        return kExitOk;
    }

    // ---- cluster -------------------------------------------------------------

    int cmd_cluster(const Globals &g, const std::vector<std::string> &inputs)
    {
        ParameterBundle p = load_params(g);
        auto files = expand_inputs(inputs, ".csv");
        Run run("cluster", g, p);
        for (const auto &f : files)
        {
            MpcSet s = read_mpc_set(f.string());
            run.write("clusters/" + link_stem(s.link) + ".csv", to_csv(cluster_link(s, p)));
        }
        run.finish();
        return kExitOk;
    }

    // ---- characterize --------------------------------------------------------

    std::string default_reference()
    {
#ifdef THZUMI_DATA_DIR
        return std::string(THZUMI_DATA_DIR) + "/3gpp_umi_los_220ghz.json";
#else
        return "data/3gpp_umi_los_220ghz.json";
#endif
    }

    void write_characterization(Run &run, const ParameterBundle &p, const std::vector<ChannelStats> &stats,
                                const std::string &reference_path)
    {
        run.write("stats.csv", stats_csv(stats));
        auto fits = fit_cases(stats, p.plan.center_freq);
        ojson j = ojson::parse(to_json(std::span<const CaseFits>(fits)));
        if (auto note = fallback_note(p); !note.empty())
            j["notes"] = ojson::array({note});
        run.write("fits.json", j.dump(2) + "\n");

        for (const auto &f : fits)
        {
            const std::string c = to_string(f.link_case);
            std::vector<double> k, ds, asa, esa;
            for (const auto &s : stats)
            {
                if (s.link.link_case != f.link_case)
                    continue;
                if (std::isfinite(s.k_factor))
                    k.push_back(s.k_factor);
                ds.push_back(s.ds * 1e9);
                asa.push_back(s.asa);
                esa.push_back(s.esa);
            }
            if (!k.empty())
                run.write("cdf/k_factor_db_" + c + ".csv", cdf_csv(empirical_cdf(k)));
            run.write("cdf/ds_ns_" + c + ".csv", cdf_csv(empirical_cdf(ds)));
            run.write("cdf/asa_deg_" + c + ".csv", cdf_csv(empirical_cdf(asa)));
            run.write("cdf/esa_deg_" + c + ".csv", cdf_csv(empirical_cdf(esa)));
        }

        auto los = std::find_if(fits.begin(), fits.end(), [](const CaseFits &f) { return f.link_case == LinkCase::los; });
        if (los != fits.end())
        {
            ReferenceSet ref = load_reference(reference_path);
            auto rows = compare_3gpp(measured_summary(*los), ref);
            run.write("comparison.csv", comparison_csv(rows));
            std::string text = comparison_text(rows);
            if (auto note = fallback_note(p); !note.empty())
                text += "note: " + note + "\n";
            run.write("comparison.txt", text);
        }
    }

    int cmd_characterize(const Globals &g, const std::vector<std::string> &inputs, const std::string &clusters_dir,
                         const std::string &reference_path)
    {
        ParameterBundle p = load_params(g);
        auto files = expand_inputs(inputs, ".csv");
        Run run("characterize", g, p);
        std::vector<ChannelStats> stats(files.size());
        parallel_for(files.size(), g.jobs, [&](std::size_t i) {
            MpcSet s = read_mpc_set(files[i].string());
            if (s.mpcs.empty())
                throw ValidationFailure("characterize: " + files[i].string() + " holds no MPC.");
            ClusterResult cl;
            fs::path cf = fs::path(clusters_dir) / (link_stem(s.link) + ".csv");
            if (!clusters_dir.empty() && fs::exists(cf))
            {
                cl = cluster_result_from_csv(read_text_file(cf.string()));
                if (cl.n_points != s.mpcs.size())
                    throw std::runtime_error("characterize: " + cf.string() + " does not match " + files[i].string() + ".");
            }
            else
                cl = cluster_link(s, p);
            stats[i] = channel_stats(s, cl);
        });
        write_characterization(run, p, stats, reference_path);
        run.finish();
        return kExitOk;
    }

    // ---- roundtrip -----------------------------------------------------------

    int cmd_roundtrip(const Globals &g, std::size_t n, std::optional<double> r_override)
    {
        if (n < 50)
            throw ValidationFailure("roundtrip: need at least 50 realizations per case, got " + std::to_string(n) + ".");
        ParameterBundle p = load_params(g);
        Run run("roundtrip", g, p);
        RoundtripOptions o;
        o.n_links = n;
        o.seed = g.seed;
        o.jobs = g.jobs;
        o.estimator.dynamic_range = r_override;
        RoundtripReport report = run_roundtrip(p, o);
        run.write("roundtrip.txt", report.text());
        run.write("roundtrip.json", report.to_json());
        run.write("stats.csv", stats_csv(report.stats));
        run.finish();
        std::cout << report.text();
        return report.passed() ? kExitOk : kExitValidation;
    }

    // ---- route-pdp -----------------------------------------------------------

    int cmd_route_pdp(const Globals &g)
    {
        ParameterBundle p = load_params(g);
        Run run("route-pdp", g, p);
        RoutePdp pdp = route_pdp(p, g.seed, g.jobs);
        run.write("route_pdp.csv", route_pdp_csv(pdp));
        run.finish();
        return kExitOk;
    }

    // ---- foliage-stats -------------------------------------------------------

    int cmd_foliage_stats(const Globals &g, std::size_t n, const std::vector<std::string> &inputs)
    {
        ParameterBundle p = load_params(g);
        Run run("foliage-stats", g, p);
        std::vector<double> loss;
        std::ostringstream csv;
        csv << std::setprecision(17);
        if (inputs.empty())
        {
            auto rng = substream(g.seed, 0, Stream::foliage);
            csv << "draw,foliage_loss_db\n";
            for (std::size_t i = 0; i < n; ++i)
            {
                loss.push_back(draw_foliage_loss(p.foliage, rng));
                csv << i << ',' << loss.back() << '\n';
            }
        }
        else
        {
            // Excess loss of the strongest estimate on every OLoS link.
            csv << "rx_index,distance_m,foliage_loss_db\n";
            for (const auto &f : expand_inputs(inputs, ".csv"))
            {
                MpcSet s = read_mpc_set(f.string());
                if (s.link.link_case != LinkCase::olos || s.mpcs.empty())
                    continue;
                auto best = std::max_element(s.mpcs.begin(), s.mpcs.end(),
                                             [](const Mpc &a, const Mpc &b) { return a.gain < b.gain; });
                double delay = s.link.distance > 0.0 ? s.link.distance / kSpeedOfLight : best->delay;
                loss.push_back(foliage_excess_loss(-best->gain_db(), delay, p.plan.center_freq));
                csv << s.link.rx_index << ',' << s.link.distance << ',' << loss.back() << '\n';
            }
        }
        run.write("foliage_loss.csv", csv.str());
        if (!loss.empty())
            run.write("foliage_cdf.csv", cdf_csv(empirical_cdf(loss)));
        if (loss.size() >= 3)
            run.write("foliage_fit.json", to_json(fit_gaussian(loss)));
        run.finish();
        return kExitOk;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"thzumi: 220 GHz urban-microcell channel simulation and characterization"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version()));

    Globals g;
    app.add_option("--config", g.config, "Configuration JSON (defaults apply when omitted)");
    app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Run directory")->capture_default_str();

    auto *gen = app.add_subcommand("generate", "Synthesize one MPC set per Rx of the scene");

    std::vector<std::string> inputs;
    bool no_noise = false;
    auto *scan = app.add_subcommand("scan", "Simulate direction scans of MPC sets");
    scan->add_option("inputs", inputs, "MPC set CSV files or directories")->required();
    scan->add_flag("--no-noise", no_noise, "Leave receiver noise out");

    std::optional<double> r_override;
    auto *est = app.add_subcommand("estimate", "Extract MPCs from scans");
    est->add_option("inputs", inputs, "Scan files or directories")->required();
    est->add_option("--dynamic-range", r_override, "Replace R of the path-gain threshold (dB, may be 0)");

    auto *clu = app.add_subcommand("cluster", "Cluster estimated MPC sets");
    clu->add_option("inputs", inputs, "MPC set CSV files or directories")->required();

    std::string clusters_dir, reference = default_reference();
    auto *cha = app.add_subcommand("characterize", "Channel statistics, fits and the 3GPP comparison");
    cha->add_option("inputs", inputs, "Estimated MPC set CSV files or directories")->required();
    cha->add_option("--clusters", clusters_dir, "Directory with cluster CSVs named like the sets");
    cha->add_option("--reference", reference, "3GPP reference parameter file")->capture_default_str();

    std::size_t n_real = 100;
    auto *rt = app.add_subcommand("roundtrip", "generate -> scan -> estimate -> cluster -> characterize check");
    rt->add_option("-n,--realizations", n_real, "Links per case (at least 50)")->capture_default_str();
    rt->add_option("--dynamic-range", r_override, "Replace R of the path-gain threshold (dB, may be 0)");

    auto *pdp = app.add_subcommand("route-pdp", "Distance x delay omni PDP matrix of the scene route");

    std::size_t n_draws = 200;
    auto *fol = app.add_subcommand("foliage-stats", "Foliage-loss draws or estimates with a Gaussian fit");
    fol->add_option("-n,--draws", n_draws, "Number of draws when no inputs are given")->capture_default_str();
    fol->add_option("inputs", inputs, "Estimated MPC sets; OLoS links give one excess-loss sample each");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try
    {
        if (*gen)
            return cmd_generate(g);
        if (*scan)
            return cmd_scan(g, inputs, no_noise);
        if (*est)
            return cmd_estimate(g, inputs, r_override);
        if (*clu)
            return cmd_cluster(g, inputs);
        if (*cha)
            return cmd_characterize(g, inputs, clusters_dir, reference);
        if (*rt)
            return cmd_roundtrip(g, n_real, r_override);
        if (*pdp)
            return cmd_route_pdp(g);
        if (*fol)
            return cmd_foliage_stats(g, n_draws, inputs);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error";
        if (!e.field().empty())
            std::cerr << " (" << e.field() << ")";
        std::cerr << ": " << e.what() << '\n';
        return e.field().empty() ? kExitSchema : kExitValidation;
    }
    catch (const ValidationFailure &e)
    {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::domain_error &e)
    {
        std::cerr << e.what() << '\n';
        return kExitValidation;
    }
    catch (const std::exception &e)
    {
        std::cerr << e.what() << '\n';
        return kExitSchema;
    }
    return kExitOk;
}
