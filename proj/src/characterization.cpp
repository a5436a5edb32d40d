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

#include "thzumi/characterization.hpp"

#include "thzumi/geometry.hpp"
#include "thzumi/propagation.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace thzumi
{
    namespace
    {
        constexpr double kZ95 = 1.959963984540054;

        double normal_cdf(double x, double mean, double sigma)
        {
            if (sigma <= 0.0)
                return x < mean ? 0.0 : 1.0;
            return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
        }

        // Two-sided KS distance between the sample and a fitted normal.
        double ks_normal(std::vector<double> x, double mean, double sigma)
        {
            std::sort(x.begin(), x.end());
            const double n = static_cast<double>(x.size());
            double d = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
            {
                double f = normal_cdf(x[i], mean, sigma);
                d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
            }
            return d;
        }

        FitParameter make_parameter(const std::string &name, double value, double se)
        {
            return {name, value, se, value - kZ95 * se, value + kZ95 * se};
        }

        std::string join(const std::vector<double> &v)
        {
            std::ostringstream out;
            out.precision(17);
            for (std::size_t i = 0; i < v.size(); ++i)
                out << (i ? ";" : "") << v[i];
            return out.str();
        }

        std::vector<double> split_doubles(const std::string &s)
        {
            std::vector<double> out;
            std::istringstream in(s);
            std::string item;
            while (std::getline(in, item, ';'))
                if (!item.empty())
                    out.push_back(std::stod(item));
            return out;
        }

        std::vector<std::string> split_fields(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cur;
            for (char c : line)
            {
                if (c == ',')
                {
                    out.push_back(cur);
                    cur.clear();
                }
                else
                    cur += c;
            }
            out.push_back(cur);
            return out;
        }
    }

    double rms_delay_spread(std::span<const Mpc> mpcs)
    {
        if (mpcs.empty())
            throw std::invalid_argument("rms_delay_spread: empty MPC set.");
        // Delays are taken relative to the first one to keep the moments well conditioned.
        const double ref = mpcs.front().delay;
        double p = 0.0, m1 = 0.0, m2 = 0.0;
        for (const auto &m : mpcs)
        {
            double w = m.power(), t = m.delay - ref;
            p += w;
            m1 += w * t;
            m2 += w * t * t;
        }
        if (!(p > 0.0))
            return 0.0;
        m1 /= p;
        m2 /= p;
        return std::sqrt(std::max(0.0, m2 - m1 * m1));
    }

    double circular_angle_spread(std::span<const Mpc> mpcs, AnglePlane plane)
    {
        if (mpcs.empty())
            throw std::invalid_argument("circular_angle_spread: empty MPC set.");
        std::complex<double> acc = 0.0;
        double p = 0.0;
        for (const auto &m : mpcs)
        {
            double theta = (plane == AnglePlane::azimuth ? m.azimuth : m.elevation) * kDegToRad;
            acc += m.power() * std::polar(1.0, theta);
            p += m.power();
        }
        const double cap = plane == AnglePlane::azimuth ? kAzimuthSpreadCap : kElevationSpreadCap;
        if (!(p > 0.0))
            return 0.0;
        double r = std::abs(acc) / p;
        if (r >= 1.0)
            return 0.0;
        if (r <= 0.0)
            return cap;
        return std::min(cap, std::sqrt(-2.0 * std::log(r)) * kRadToDeg);
    }

    double k_factor(std::span<const double> cluster_powers)
    {
        if (cluster_powers.empty())
            throw std::invalid_argument("k_factor: no clusters.");
        if (cluster_powers.size() == 1)
            return kSingleClusterK;
        auto it = std::max_element(cluster_powers.begin(), cluster_powers.end());
        double rest = 0.0;
        for (auto i = cluster_powers.begin(); i != cluster_powers.end(); ++i)
            if (i != it)
                rest += *i;
        if (!(rest > 0.0))
            return kSingleClusterK;
        return 10.0 * std::log10(*it / rest);
    }

    ClusterSpreads cluster_spreads(std::span<const Mpc> members)
    {
        if (members.empty())
            throw std::invalid_argument("cluster_spreads: empty cluster.");
        return {rms_delay_spread(members), circular_angle_spread(members, AnglePlane::azimuth),
                circular_angle_spread(members, AnglePlane::elevation)};
    }

    ChannelStats channel_stats(const MpcSet &set, const ClusterResult &clusters, const StatsOptions &options)
    {
        if (set.mpcs.empty())
            throw std::invalid_argument("channel_stats: empty MPC set.");
        if (clusters.n_points != set.mpcs.size())
            throw std::invalid_argument("channel_stats: cluster result does not match the MPC set.");

        std::vector<std::vector<std::size_t>> groups;
        for (const auto &c : clusters.clusters)
            if (!c.members.empty())
                groups.push_back(c.members);
        if (options.noise_as_clusters)
            for (auto i : clusters.noise)
                groups.push_back({i});
        if (groups.empty())
            throw std::invalid_argument("channel_stats: no clusters.");

        ChannelStats s;
        s.link = set.link;
        double total = set.total_power();
        if (!(total > 0.0))
            throw std::invalid_argument("channel_stats: non-positive total power.");
        s.path_loss = -10.0 * std::log10(total);

        std::vector<Mpc> centroids;
        for (const auto &g : groups)
        {
            std::vector<Mpc> members;
            for (auto i : g)
                members.push_back(set.mpcs.at(i));
            double p = 0.0, tau = 0.0;
            std::complex<double> az = 0.0;
            double el = 0.0;
            for (const auto &m : members)
            {
                p += m.power();
                tau += m.power() * m.delay;
                az += m.power() * std::polar(1.0, m.azimuth * kDegToRad);
                el += m.power() * m.elevation;
            }
            s.cluster_powers.push_back(p);
            s.clusters.push_back(cluster_spreads(members));
            Mpc c;
            c.gain = std::sqrt(p);
            c.delay = p > 0.0 ? tau / p : members.front().delay;
            c.azimuth = wrap_azimuth(std::arg(az) * kRadToDeg);
            c.elevation = p > 0.0 ? el / p : members.front().elevation;
            centroids.push_back(c);
        }
        s.n_clusters = groups.size();
        s.k_factor = k_factor(s.cluster_powers);

        std::span<const Mpc> basis = options.cluster_level_spreads ? std::span<const Mpc>(centroids) : std::span<const Mpc>(set.mpcs);
        if (options.cluster_level_spreads)
            std::sort(centroids.begin(), centroids.end(), [](const Mpc &a, const Mpc &b) { return a.delay < b.delay; });
        s.ds = rms_delay_spread(basis);
        s.asa = circular_angle_spread(basis, AnglePlane::azimuth);
        s.esa = circular_angle_spread(basis, AnglePlane::elevation);
        return s;
    }

    std::string stats_csv(std::span<const ChannelStats> stats)
    {
        std::ostringstream out;
        out.precision(17);
        out << "rx_index,distance_m,case,foliage_loss_db,path_loss_db,k_factor_db,ds_s,asa_deg,esa_deg,n_clusters,"
               "cluster_powers,cds_s,casa_deg,cesa_deg\n";
        for (const auto &s : stats)
        {
            std::vector<double> cds, casa, cesa;
            for (const auto &c : s.clusters)
            {
                cds.push_back(c.cds);
                casa.push_back(c.casa);
                cesa.push_back(c.cesa);
            }
            out << s.link.rx_index << ',' << s.link.distance << ',' << to_string(s.link.link_case) << ','
                << s.link.foliage_loss << ',' << s.path_loss << ',' << s.k_factor << ',' << s.ds << ',' << s.asa << ','
                << s.esa << ',' << s.n_clusters << ',' << join(s.cluster_powers) << ',' << join(cds) << ','
                << join(casa) << ',' << join(cesa) << '\n';
        }
        return out.str();
    }

    std::vector<ChannelStats> stats_from_csv(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        if (!std::getline(in, line) || line.rfind("rx_index,", 0) != 0)
            throw std::runtime_error("Stats CSV: missing header line.");
        std::vector<ChannelStats> out;
        while (std::getline(in, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            auto f = split_fields(line);
            if (f.size() != 14)
                throw std::runtime_error("Stats CSV: expected 14 fields, got " + std::to_string(f.size()) + ".");
            ChannelStats s;
            s.link.rx_index = std::stoul(f[0]);
            s.link.distance = std::stod(f[1]);
            s.link.link_case = parse_link_case(f[2]);
            s.link.foliage_loss = std::stod(f[3]);
            s.path_loss = std::stod(f[4]);
            s.k_factor = std::stod(f[5]);
            s.ds = std::stod(f[6]);
            s.asa = std::stod(f[7]);
            s.esa = std::stod(f[8]);
            s.n_clusters = std::stoul(f[9]);
            s.cluster_powers = split_doubles(f[10]);
            auto cds = split_doubles(f[11]), casa = split_doubles(f[12]), cesa = split_doubles(f[13]);
            if (cds.size() != casa.size() || cds.size() != cesa.size())
                throw std::runtime_error("Stats CSV: cluster spread lists differ in length.");
            for (std::size_t i = 0; i < cds.size(); ++i)
                s.clusters.push_back({cds[i], casa[i], cesa[i]});
            out.push_back(std::move(s));
        }
        return out;
    }

    std::string to_string(FitKind k)
    {
        switch (k)
        {
        case FitKind::close_in:
            return "close_in";
        case FitKind::gaussian:
            return "gaussian";
        case FitKind::lognormal:
            return "lognormal";
        }
        return "gaussian";
    }

    const FitParameter &FitReport::parameter(const std::string &name) const
    {
        for (const auto &p : parameters)
            if (p.name == name)
                return p;
        throw std::out_of_range("FitReport has no parameter '" + name + "'.");
    }

    FitReport fit_ci(std::span<const std::pair<double, double>> points, double freq_hz)
    {
        if (points.empty())
            throw std::invalid_argument("fit_ci: no points.");
        double lo = points.front().first, hi = lo;
        for (const auto &[d, pl] : points)
        {
            if (!(d >= 1.0))
                throw std::domain_error("fit_ci: distances must be at least 1 m.");
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (points.size() < 2 || lo == hi)
            throw std::invalid_argument("fit_ci: at least two distinct distances are required.");

        const double fspl1 = fspl(freq_hz, 1.0);
        double sxx = 0.0, sxy = 0.0;
        for (const auto &[d, pl] : points)
        {
            double x = 10.0 * std::log10(d);
            sxx += x * x;
            sxy += x * (pl - fspl1);
        }
        double ple = sxy / sxx, ss = 0.0;
        for (const auto &[d, pl] : points)
        {
            double r = pl - fspl1 - ple * 10.0 * std::log10(d);
            ss += r * r;
        }
        const double n = static_cast<double>(points.size());
        double sf = std::sqrt(ss / (n - 1.0));

        FitReport rep;
        rep.kind = FitKind::close_in;
        rep.n_samples = points.size();
        rep.parameters.push_back(make_parameter("ple", ple, sf / std::sqrt(sxx)));
        rep.parameters.push_back(make_parameter("sf_sigma", sf, sf / std::sqrt(2.0 * (n - 1.0))));
        rep.goodness_name = "rmse";
        rep.goodness = std::sqrt(ss / n);
        return rep;
    }

    FitReport fit_gaussian(std::span<const double> samples)
    {
        if (samples.size() < 3)
            throw std::invalid_argument("fit_gaussian: at least 3 samples are required.");
        const double n = static_cast<double>(samples.size());
        double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n, ss = 0.0;
        double residual = 0.0;
        for (double x : samples)
            residual += x - mean;
        mean += residual / n;
        if (std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples.front(); }))
            mean = samples.front();
        for (double x : samples)
            ss += (x - mean) * (x - mean);
        double sigma = std::sqrt(ss / n);

        FitReport rep;
        rep.kind = FitKind::gaussian;
        rep.n_samples = samples.size();
        rep.parameters.push_back(make_parameter("mean", mean, sigma / std::sqrt(n)));
        rep.parameters.push_back(make_parameter("sigma", sigma, sigma / std::sqrt(2.0 * n)));
        rep.goodness_name = "ks";
        rep.goodness = ks_normal({samples.begin(), samples.end()}, mean, sigma);
        return rep;
    }

    FitReport fit_lognormal(std::span<const double> samples)
    {
        std::vector<double> logs;
        for (double x : samples)
        {
            if (!(x > 0.0) || !std::isfinite(x))
                throw std::domain_error("fit_lognormal: samples must be positive and finite.");
            logs.push_back(std::log10(x));
        }
        if (logs.size() < 3)
            throw std::invalid_argument("fit_lognormal: at least 3 samples are required.");
        FitReport g = fit_gaussian(logs);
        FitReport rep;
        rep.kind = FitKind::lognormal;
        rep.n_samples = g.n_samples;
        rep.parameters = g.parameters;
        rep.parameters[0].name = "mu_log10";
        rep.parameters[1].name = "sigma_log10";
        rep.goodness_name = g.goodness_name;
        rep.goodness = g.goodness;
        double mu = rep.parameters[0].value, s = rep.parameters[1].value;
        rep.derived["median"] = std::pow(10.0, mu);
        rep.derived["linear_mean"] = std::pow(10.0, mu) * std::exp(0.5 * std::pow(s * std::log(10.0), 2));
        return rep;
    }

    std::string to_json(const FitReport &report)
    {
        nlohmann::ordered_json j;
        j["kind"] = to_string(report.kind);
        j["n_samples"] = report.n_samples;
        j["parameters"] = nlohmann::ordered_json::array();
        for (const auto &p : report.parameters)
            j["parameters"].push_back({{"name", p.name}, {"value", p.value}, {"std_error", p.std_error},
                                       {"lower", p.lower}, {"upper", p.upper}});
        j["goodness"] = {{"name", report.goodness_name}, {"value", report.goodness}};
        j["derived"] = nlohmann::ordered_json::object();
        for (const auto &[k, v] : report.derived)
            j["derived"][k] = v;
        return j.dump(2) + "\n";
    }

    FitReport fit_report_from_json(const std::string &text)
    {
        auto j = nlohmann::json::parse(text);
        FitReport r;
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "close_in")
            r.kind = FitKind::close_in;
        else if (kind == "gaussian")
            r.kind = FitKind::gaussian;
        else if (kind == "lognormal")
            r.kind = FitKind::lognormal;
        else
            throw std::runtime_error("FitReport: unknown kind '" + kind + "'.");
        r.n_samples = j.at("n_samples").get<std::size_t>();
        for (const auto &p : j.at("parameters"))
            r.parameters.push_back({p.at("name").get<std::string>(), p.at("value").get<double>(),
                                    p.at("std_error").get<double>(), p.at("lower").get<double>(),
                                    p.at("upper").get<double>()});
        r.goodness_name = j.at("goodness").at("name").get<std::string>();
        r.goodness = j.at("goodness").at("value").get<double>();
        if (j.contains("derived"))
            for (const auto &[k, v] : j.at("derived").items())
                r.derived[k] = v.get<double>();
        if (r.parameters.size() != 2)
            throw std::runtime_error("FitReport: expected 2 parameters for kind " + kind + ".");
        return r;
    }

    std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> samples)
    {
        if (samples.empty())
            throw std::invalid_argument("empirical_cdf: no samples.");
        std::vector<double> x(samples.begin(), samples.end());
        std::sort(x.begin(), x.end());
        std::vector<std::pair<double, double>> out;
        const double n = static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            double p = static_cast<double>(i + 1) / n;
            if (!out.empty() && out.back().first == x[i])
                out.back().second = p;
            else
                out.emplace_back(x[i], p);
        }
        return out;
    }

    std::string cdf_csv(std::span<const std::pair<double, double>> cdf)
    {
        std::ostringstream out;
        out.precision(17);
        out << "value,probability\n";
        for (const auto &[v, p] : cdf)
            out << v << ',' << p << '\n';
        return out.str();
    }

    ReferenceSet parse_reference(const std::string &json_text)
    {
        nlohmann::ordered_json j;
        try
        {
            j = nlohmann::ordered_json::parse(json_text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw std::runtime_error(std::string("Reference file: ") + e.what());
        }
        ReferenceSet r;
        r.scenario = j.value("scenario", "");
        if (!j.contains("parameters") || !j["parameters"].is_object())
            throw std::runtime_error("Reference file: missing \"parameters\" object.");
        for (const auto &[name, entry] : j["parameters"].items())
        {
            r.order.push_back(name);
            if (entry.is_number())
                r.values[name] = entry.get<double>();
            else if (entry.is_object())
            {
                if (entry.contains("value") && entry["value"].is_number())
                    r.values[name] = entry["value"].get<double>();
                if (entry.contains("unit"))
                    r.units[name] = entry["unit"].get<std::string>();
            }
        }
        return r;
    }

    ReferenceSet load_reference(const std::string &path) { return parse_reference(read_text_file(path)); }

    std::vector<ComparisonRow> compare_3gpp(const std::map<std::string, double> &measured, const ReferenceSet &reference)
    {
        std::vector<std::string> names = reference.order;
        for (const auto &[k, v] : reference.values)
            if (std::find(names.begin(), names.end(), k) == names.end())
                names.push_back(k);
        for (const auto &[k, v] : measured)
            if (std::find(names.begin(), names.end(), k) == names.end())
                names.push_back(k);

        std::vector<ComparisonRow> rows;
        for (const auto &name : names)
        {
            ComparisonRow row;
            row.name = name;
            if (auto u = reference.units.find(name); u != reference.units.end())
                row.unit = u->second;
            if (auto m = measured.find(name); m != measured.end())
                row.measured = m->second;
            if (auto r = reference.values.find(name); r != reference.values.end())
                row.reference = r->second;
            if (!row.measured || !row.reference)
            {
                row.annotation = "unavailable";
                rows.push_back(row);
                continue;
            }
            row.difference = *row.measured - *row.reference;
            if (*row.reference != 0.0)
                row.ratio = *row.measured / *row.reference;
            std::ostringstream note;
            note << std::setprecision(3);
            if (row.unit == "dB")
            {
                if (std::abs(*row.difference) >= 3.0)
                    note << (*row.difference > 0 ? "larger by " : "smaller by ") << std::abs(*row.difference) << " dB";
            }
            else if (row.ratio)
            {
                if (*row.ratio >= 1.5)
                    note << "about " << *row.ratio << "x the reference";
                else if (*row.ratio <= 2.0 / 3.0)
                    note << "about " << *row.ratio << " of the reference";
            }
            row.annotation = note.str();
            rows.push_back(row);
        }
        return rows;
    }

    std::string comparison_csv(std::span<const ComparisonRow> rows)
    {
        std::ostringstream out;
        out.precision(10);
        out << "parameter,unit,measured,reference,difference,ratio,annotation\n";
        auto opt = [&](const std::optional<double> &v) {
            if (v)
                out << *v;
        };
        for (const auto &r : rows)
        {
            out << r.name << ',' << r.unit << ',';
            opt(r.measured);
            out << ',';
            opt(r.reference);
            out << ',';
            opt(r.difference);
            out << ',';
            opt(r.ratio);
            out << ',' << r.annotation << '\n';
        }
        return out.str();
    }

    std::string comparison_text(std::span<const ComparisonRow> rows)
    {
        auto fmt = [](const std::optional<double> &v) {
            if (!v)
                return std::string("-");
            std::ostringstream s;
            s << std::setprecision(4) << *v;
            return s.str();
        };
        std::vector<std::vector<std::string>> cells{{"parameter", "unit", "measured", "reference", "difference", "ratio", "note"}};
        for (const auto &r : rows)
            cells.push_back({r.name, r.unit, fmt(r.measured), fmt(r.reference), fmt(r.difference), fmt(r.ratio), r.annotation});
        std::vector<std::size_t> width(cells.front().size(), 0);
        for (const auto &row : cells)
            for (std::size_t c = 0; c < row.size(); ++c)
                width[c] = std::max(width[c], row[c].size());
        std::ostringstream out;
        for (const auto &row : cells)
        {
            for (std::size_t c = 0; c < row.size(); ++c)
            {
                out << row[c];
                if (c + 1 < row.size())
                    out << std::string(width[c] - row[c].size() + 2, ' ');
            }
            out << '\n';
        }
        return out.str();
    }
}
