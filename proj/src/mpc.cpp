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

#include "thzumi/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace thzumi
{
    std::string to_string(const Origin &o)
    {
        switch (o.kind)
        {
        case OriginKind::los:
            return "LoS";
        case OriginKind::olos_direct:
            return "OLoS-direct";
        case OriginKind::stochastic:
            return "stochastic";
        case OriginKind::scatterer:
            return "scatterer:" + o.label;
        case OriginKind::estimated:
            return "estimated";
        }
        return "stochastic";
    }

    Origin parse_origin(const std::string &s)
    {
        if (s == "LoS")
            return {OriginKind::los, {}};
        if (s == "OLoS-direct")
            return {OriginKind::olos_direct, {}};
        if (s == "stochastic")
            return {OriginKind::stochastic, {}};
        if (s == "estimated")
            return {OriginKind::estimated, {}};
        if (s.rfind("scatterer:", 0) == 0)
            return {OriginKind::scatterer, s.substr(10)};
        throw std::invalid_argument("Unknown MPC origin '" + s + "'.");
    }

    double Mpc::gain_db() const
    {
        return 20.0 * std::log10(gain);
    }

    void MpcSet::sort_by_delay()
    {
        std::stable_sort(mpcs.begin(), mpcs.end(), [](const Mpc &a, const Mpc &b) { return a.delay < b.delay; });
    }

    double MpcSet::total_power() const
    {
        double p = 0.0;
        for (const auto &m : mpcs)
            p += m.power();
        return p;
    }

    const Mpc *MpcSet::direct() const
    {
        for (const auto &m : mpcs)
            if (m.origin.is_direct())
                return &m;
        return nullptr;
    }

    // ---- CSV ---------------------------------------------------------------

    namespace
    {
        std::vector<std::string> split(const std::string &line, char sep)
        {
            std::vector<std::string> out;
            std::string cur;
            for (char c : line)
            {
                if (c == sep)
                {
                    out.push_back(cur);
                    cur.clear();
                }
                else if (c != '\r')
                    cur.push_back(c);
            }
            out.push_back(cur);
            return out;
        }

        double parse_double(const std::string &s, std::size_t line_no)
        {
            try
            {
                std::size_t pos = 0;
                double v = std::stod(s, &pos);
                if (pos != s.size())
                    throw std::invalid_argument("trailing characters");
                return v;
            }
            catch (const std::exception &)
            {
                // stod rejects "-inf"/"inf" on some libcs; accept them explicitly.
                if (s == "-inf")
                    return -std::numeric_limits<double>::infinity();
                if (s == "inf")
                    return std::numeric_limits<double>::infinity();
                throw std::runtime_error("MPC CSV line " + std::to_string(line_no) + ": bad number '" + s + "'.");
            }
        }
    }

    std::string to_csv(const MpcSet &set)
    {
        std::ostringstream out;
        out << std::setprecision(17);
        out << "# rx_index=" << set.link.rx_index << '\n';
        out << "# distance_m=" << set.link.distance << '\n';
        out << "# case=" << to_string(set.link.link_case) << '\n';
        out << "# foliage_loss_db=" << set.link.foliage_loss << '\n';
        out << "delay_s,gain_db,az_deg,el_deg,cluster_id,origin\n";
        for (const auto &m : set.mpcs)
        {
            std::string origin = to_string(m.origin);
            if (origin.find_first_of(",\n") != std::string::npos)
                throw std::invalid_argument("MPC origin label may not contain commas or newlines.");
            out << m.delay << ',' << m.gain_db() << ',' << m.azimuth << ',' << m.elevation << ',';
            if (m.cluster_id)
                out << *m.cluster_id;
            out << ',' << origin << '\n';
        }
        return out.str();
    }

    MpcSet mpc_set_from_csv(const std::string &text)
    {
        MpcSet set;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        bool header_seen = false;
        while (std::getline(in, line))
        {
            ++line_no;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            if (line[0] == '#')
            {
                auto eq = line.find('=');
                if (eq == std::string::npos)
                    continue;
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                std::string value = line.substr(eq + 1);
                if (key == "rx_index")
                    set.link.rx_index = std::stoul(value);
                else if (key == "distance_m")
                    set.link.distance = parse_double(value, line_no);
                else if (key == "case")
                    set.link.link_case = parse_link_case(value);
                else if (key == "foliage_loss_db")
                    set.link.foliage_loss = parse_double(value, line_no);
                continue;
            }
            if (!header_seen)
            {
                if (line != "delay_s,gain_db,az_deg,el_deg,cluster_id,origin")
                    throw std::runtime_error("MPC CSV: unexpected header '" + line + "'.");
                header_seen = true;
                continue;
            }
            auto f = split(line, ',');
            if (f.size() != 6)
                throw std::runtime_error("MPC CSV line " + std::to_string(line_no) + ": expected 6 fields.");
            Mpc m;
            m.delay = parse_double(f[0], line_no);
            m.gain = std::pow(10.0, parse_double(f[1], line_no) / 20.0);
            m.azimuth = parse_double(f[2], line_no);
            m.elevation = parse_double(f[3], line_no);
            if (!f[4].empty())
                m.cluster_id = std::stoi(f[4]);
            m.origin = parse_origin(f[5]);
            set.mpcs.push_back(m);
        }
        if (!header_seen)
            throw std::runtime_error("MPC CSV: missing header line.");
        return set;
    }

    MpcSet canonicalize(const MpcSet &set)
    {
        return mpc_set_from_csv(to_csv(set));
    }

    std::string read_text_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("Cannot open '" + path + "'.");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write_text_file(const std::string &path, const std::string &content)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("Cannot write '" + path + "'.");
        out << content;
        if (!out)
            throw std::runtime_error("Write failed for '" + path + "'.");
    }

    void write_mpc_set(const std::string &path, const MpcSet &set)
    {
        write_text_file(path, to_csv(set));
    }

    MpcSet read_mpc_set(const std::string &path)
    {
        return mpc_set_from_csv(read_text_file(path));
    }
}
