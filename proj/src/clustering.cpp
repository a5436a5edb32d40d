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

#include "thzumi/clustering.hpp"

#include "thzumi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace thzumi
{
    std::vector<int> ClusterResult::labels() const
    {
        std::vector<int> out(n_points, -1);
        for (const auto &c : clusters)
            for (auto m : c.members)
                out.at(m) = c.id;
        return out;
    }

    double mcd(const Mpc &a, const Mpc &b, double zeta, double tau_max, double tau_std)
    {
        if (!(tau_max > 0.0))
            throw std::invalid_argument("mcd: tau_max must be positive.");
        Vec3 du = unit_vector({a.azimuth, a.elevation}) - unit_vector({b.azimuth, b.elevation});
        double angular = du.dot(du) / 4.0;
        double delay = zeta * std::abs(a.delay - b.delay) * tau_std / (tau_max * tau_max);
        return std::sqrt(angular + delay * delay);
    }

    DelayNormalization delay_normalization(std::span<const Mpc> mpcs)
    {
        DelayNormalization n;
        if (mpcs.size() < 2)
            return n;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
        for (const auto &m : mpcs)
        {
            lo = std::min(lo, m.delay);
            hi = std::max(hi, m.delay);
            sum += m.delay;
        }
        double mean = sum / static_cast<double>(mpcs.size()), ss = 0.0;
        for (const auto &m : mpcs)
            ss += (m.delay - mean) * (m.delay - mean);
        n.tau_max = hi - lo;
        n.tau_std = std::sqrt(ss / static_cast<double>(mpcs.size() - 1));
        return n;
    }

    ClusterResult dbscan(std::span<const Mpc> mpcs, const ClusteringParams &params)
    {
        if (!(params.eps > 0.0) || params.min_pts < 1)
            throw std::invalid_argument("dbscan: eps must be positive and min_pts at least 1.");

        ClusterResult result;
        result.params = params;
        result.n_points = mpcs.size();
        const std::size_t n = mpcs.size();
        if (n == 0)
            return result;

        DelayNormalization norm = delay_normalization(mpcs);
        // A single delay value leaves no delay term; any positive span keeps mcd well defined.
        double tau_max = std::max(norm.tau_max, params.delay_span_floor);
        if (!(tau_max > 0.0))
            tau_max = 1.0;

        std::vector<double> dist(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                dist[i * n + j] = dist[j * n + i] = mcd(mpcs[i], mpcs[j], params.delay_weight, tau_max, norm.tau_std);

        std::vector<std::vector<std::size_t>> neighbours(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (dist[i * n + j] <= params.eps)
                    neighbours[i].push_back(j);

        std::vector<bool> core(n);
        for (std::size_t i = 0; i < n; ++i)
            core[i] = neighbours[i].size() >= params.min_pts;

        std::vector<int> label(n, -1);
        int next_id = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!core[i] || label[i] >= 0)
                continue;
            int id = next_id++;
            std::deque<std::size_t> queue{i};
            label[i] = id;
            while (!queue.empty())
            {
                std::size_t p = queue.front();
                queue.pop_front();
                for (auto q : neighbours[p])
                    if (core[q] && label[q] < 0)
                    {
                        label[q] = id;
                        queue.push_back(q);
                    }
            }
        }

        // Border points: nearest core within eps; equal distances fall back to MPC content.
        auto content_key = [&](std::size_t k) {
            return std::make_tuple(mpcs[k].delay, mpcs[k].azimuth, mpcs[k].elevation, mpcs[k].gain);
        };
        for (std::size_t i = 0; i < n; ++i)
        {
            if (core[i])
                continue;
            std::size_t best = n;
            for (auto q : neighbours[i])
            {
                if (!core[q])
                    continue;
                if (best == n || dist[i * n + q] < dist[i * n + best] ||
                    (dist[i * n + q] == dist[i * n + best] && content_key(q) < content_key(best)))
                    best = q;
            }
            if (best != n)
                label[i] = label[best];
        }

        result.clusters.resize(static_cast<std::size_t>(next_id));
        for (int id = 0; id < next_id; ++id)
            result.clusters[static_cast<std::size_t>(id)].id = id;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (label[i] < 0)
                result.noise.push_back(i);
            else
                result.clusters[static_cast<std::size_t>(label[i])].members.push_back(i);
        }
        return result;
    }

    std::string to_csv(const ClusterResult &result)
    {
        std::ostringstream out;
        out.precision(17);
        out << "# eps=" << result.params.eps << '\n';
        out << "# min_pts=" << result.params.min_pts << '\n';
        out << "# delay_weight=" << result.params.delay_weight << '\n';
        out << "mpc_index,cluster_id\n";
        auto labels = result.labels();
        for (std::size_t i = 0; i < labels.size(); ++i)
            out << i << ',' << labels[i] << '\n';
        return out.str();
    }

    ClusterResult cluster_result_from_csv(const std::string &text)
    {
        ClusterResult r;
        std::istringstream in(text);
        std::string line;
        bool header = false;
        std::vector<int> labels;
        while (std::getline(in, line))
        {
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            if (line[0] == '#')
            {
                auto eq = line.find('=');
                if (eq == std::string::npos)
                    continue;
                std::string key = line.substr(2, eq - 2), value = line.substr(eq + 1);
                if (key == "eps")
                    r.params.eps = std::stod(value);
                else if (key == "min_pts")
                    r.params.min_pts = std::stoul(value);
                else if (key == "delay_weight")
                    r.params.delay_weight = std::stod(value);
                continue;
            }
            if (!header)
            {
                if (line != "mpc_index,cluster_id")
                    throw std::runtime_error("Cluster CSV: unexpected header '" + line + "'.");
                header = true;
                continue;
            }
            auto comma = line.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("Cluster CSV: malformed line '" + line + "'.");
            std::size_t idx = std::stoul(line.substr(0, comma));
            if (idx != labels.size())
                throw std::runtime_error("Cluster CSV: indices must be consecutive from 0.");
            labels.push_back(std::stoi(line.substr(comma + 1)));
        }
        if (!header)
            throw std::runtime_error("Cluster CSV: missing header line.");

        r.n_points = labels.size();
        std::map<int, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < labels.size(); ++i)
        {
            if (labels[i] < 0)
                r.noise.push_back(i);
            else
                groups[labels[i]].push_back(i);
        }
        for (auto &[id, members] : groups)
            r.clusters.push_back({id, members});
        return r;
    }

    double adjusted_rand_index(std::span<const int> a, std::span<const int> b)
    {
        if (a.size() != b.size())
            throw std::invalid_argument("adjusted_rand_index: labelings differ in length.");
        const std::size_t n = a.size();
        if (n < 2)
            return 1.0;

        // Noise points become unique singleton labels.
        auto relabel = [n](std::span<const int> l) {
            std::vector<long long> out(l.size());
            for (std::size_t i = 0; i < l.size(); ++i)
                out[i] = l[i] >= 0 ? l[i] : -static_cast<long long>(i) - 1;
            (void)n;
            return out;
        };
        auto la = relabel(a), lb = relabel(b);

        std::map<std::pair<long long, long long>, double> joint;
        std::map<long long, double> ca, cb;
        for (std::size_t i = 0; i < n; ++i)
        {
            joint[{la[i], lb[i]}] += 1.0;
            ca[la[i]] += 1.0;
            cb[lb[i]] += 1.0;
        }
        auto pairs = [](double k) { return k * (k - 1.0) / 2.0; };
        double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
        for (const auto &[k, v] : joint)
            sum_joint += pairs(v);
        for (const auto &[k, v] : ca)
            sum_a += pairs(v);
        for (const auto &[k, v] : cb)
            sum_b += pairs(v);
        double total = pairs(static_cast<double>(n));
        double expected = sum_a * sum_b / total;
        double max_index = 0.5 * (sum_a + sum_b);
        if (max_index == expected)
            return 1.0;
        return (sum_joint - expected) / (max_index - expected);
    }
}
