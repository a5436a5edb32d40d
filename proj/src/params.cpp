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

#include "thzumi/params.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace thzumi
{
    using nlohmann::json;

    // ---- ScanGrid ----------------------------------------------------------

    namespace
    {
        std::size_t axis_count(double start, double stop, double step)
        {
            if (!(step > 0.0) || stop < start)
                return 0;
            return static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
        }

        bool divides(double start, double stop, double step)
        {
            if (!(step > 0.0) || stop < start)
                return false;
            double q = (stop - start) / step;
            return std::abs(q - std::round(q)) < 1e-9;
        }
    }

    std::size_t ScanGrid::n_azimuth() const { return axis_count(azimuth_start, azimuth_stop, azimuth_step); }
    std::size_t ScanGrid::n_elevation() const { return axis_count(elevation_start, elevation_stop, elevation_step); }

    Direction ScanGrid::direction(std::size_t idx) const
    {
        if (idx >= size())
            throw std::out_of_range("Direction index " + std::to_string(idx) + " outside scan grid.");
        return {azimuth_start + azimuth_step * static_cast<double>(azimuth_index(idx)),
                elevation_start + elevation_step * static_cast<double>(elevation_index(idx))};
    }

    bool ScanGrid::azimuth_wraps() const
    {
        return std::abs(azimuth_stop + azimuth_step - azimuth_start - 360.0) < 1e-9;
    }

    UmiCaseParams UmiCaseParams::los_defaults()
    {
        return {};
    }

    UmiCaseParams UmiCaseParams::olos_defaults()
    {
        UmiCaseParams p;
        p.ple = 2.38;
        p.sf_sigma = 5.58;
        p.k_mean = 8.68;
        p.ds_mean = 74.13e-9;
        p.asa_mean = 38.90;
        p.esa_mean = 6.92;
        p.n_clusters_mean = 4.14;
        return p;
    }

    // ---- Validation --------------------------------------------------------

    namespace
    {
        void check(std::vector<Violation> &out, bool ok, const std::string &field, const std::string &message)
        {
            if (!ok)
                out.push_back({field, message});
        }

        void validate_case(std::vector<Violation> &out, const UmiCaseParams &c, const std::string &prefix)
        {
            check(out, c.ple > 0.0, prefix + ".ple", "ple > 0");
            check(out, c.sf_sigma >= 0.0, prefix + ".sf_sigma_db", "sf_sigma ≥ 0");
            check(out, c.k_sigma >= 0.0, prefix + ".k_sigma_db", "k_sigma ≥ 0");
            check(out, c.ds_mean > 0.0, prefix + ".ds_mean_s", "ds_mean > 0");
            check(out, c.ds_sigma >= 0.0, prefix + ".ds_sigma_log10", "ds_sigma ≥ 0");
            check(out, c.asa_mean > 0.0, prefix + ".asa_mean_deg", "asa_mean > 0");
            check(out, c.asa_sigma >= 0.0, prefix + ".asa_sigma_log10", "asa_sigma ≥ 0");
            check(out, c.esa_mean > 0.0, prefix + ".esa_mean_deg", "esa_mean > 0");
            check(out, c.esa_sigma >= 0.0, prefix + ".esa_sigma_log10", "esa_sigma ≥ 0");
            check(out, c.n_clusters_mean >= 1.0, prefix + ".n_clusters_mean", "n_clusters_mean ≥ 1");
            check(out, !c.cds_mean || *c.cds_mean >= 0.0, prefix + ".cds_mean_s", "cds_mean ≥ 0");
            check(out, !c.casa_mean || *c.casa_mean >= 0.0, prefix + ".casa_mean_deg", "casa_mean ≥ 0");
            check(out, !c.cesa_mean || *c.cesa_mean >= 0.0, prefix + ".cesa_mean_deg", "cesa_mean ≥ 0");
        }
    }

    std::vector<Violation> validate(const ParameterBundle &b)
    {
        std::vector<Violation> v;

        const auto &f = b.plan;
        check(v, f.center_freq > 0.0, "frequency.center_freq_hz", "center_freq > 0");
        check(v, f.bandwidth > 0.0, "frequency.bandwidth_hz", "bandwidth > 0");
        check(v, f.n_samples > 0, "frequency.n_samples", "n_samples > 0");
        check(v, f.extended_samples >= f.n_samples, "frequency.extended_samples", "extended_samples ≥ n_samples");

        const auto &g = b.grid;
        check(v, divides(g.azimuth_start, g.azimuth_stop, g.azimuth_step), "scan_grid.azimuth_step_deg",
              "azimuth step must be positive and divide the azimuth range exactly");
        check(v, divides(g.elevation_start, g.elevation_stop, g.elevation_step), "scan_grid.elevation_step_deg",
              "elevation step must be positive and divide the elevation range exactly");
        check(v, g.elevation_start >= -90.0 && g.elevation_stop <= 90.0, "scan_grid.elevation_start_deg",
              "elevation range within [-90, 90]");

        for (const auto &[name, a] : {std::pair{"rx_antenna", &b.rx_antenna}, std::pair{"tx_antenna", &b.tx_antenna}})
        {
            check(v, a->hpbw > 0.0, std::string(name) + ".hpbw_deg", "hpbw > 0");
            check(v, a->sidelobe_level > 3.0, std::string(name) + ".sidelobe_level_db", "sidelobe_level > 3");
        }

        const auto &s = b.sounder;
        check(v, s.pdp_clip_value < s.noise_floor, "sounder.pdp_clip_db", "pdp_clip_value < noise_floor");
        check(v, s.dynamic_range > 0.0, "sounder.dynamic_range_db", "dynamic_range_R > 0");
        check(v, s.averaging_count >= 1, "sounder.averaging_count", "averaging_count ≥ 1");
        check(v, s.noise_margin >= 0.0, "sounder.noise_margin_db", "noise_margin ≥ 0");
        check(v, s.dwell_time > 0.0, "sounder.dwell_time_s", "dwell_time > 0");

        const auto &fo = b.foliage;
        check(v, fo.clamp_min <= fo.clamp_max, "foliage.clamp_range_db", "clamp_range ordered");
        check(v, fo.loss_mean >= fo.clamp_min && fo.loss_mean <= fo.clamp_max, "foliage.loss_mean_db",
              "loss_mean inside clamp_range");
        check(v, fo.loss_sigma >= 0.0, "foliage.loss_sigma_db", "loss_sigma ≥ 0");

        validate_case(v, b.los, "umi.los");
        validate_case(v, b.olos, "umi.olos");

        const auto &sy = b.synthesis;
        check(v, sy.rays_per_cluster >= 1, "synthesis.rays_per_cluster", "rays_per_cluster ≥ 1");
        check(v, sy.direct_ray_share > 0.0 && sy.direct_ray_share <= 1.0, "synthesis.direct_ray_share",
              "direct_ray_share in (0, 1]");
        check(v, sy.power_decay >= 1.0, "synthesis.power_decay", "power_decay ≥ 1");
        check(v, sy.cluster_shadowing >= 0.0, "synthesis.cluster_shadowing_db", "cluster_shadowing ≥ 0");
        check(v, sy.elevation_limit > 0.0 && sy.elevation_limit <= 90.0, "synthesis.elevation_limit_deg",
              "elevation_limit in (0, 90]");
        check(v, sy.satellite_max_offset >= 0.0, "synthesis.satellite_max_offset_deg", "satellite_max_offset ≥ 0");
        check(v, sy.ray_power_decay >= 0.0, "synthesis.ray_power_decay", "ray_power_decay ≥ 0");
        check(v, sy.visibility_range >= 0.0, "synthesis.visibility_range_db", "visibility_range ≥ 0");
        check(v, sy.max_excess_delay >= 0.0, "synthesis.max_excess_delay_s", "max_excess_delay ≥ 0");

        const auto &c = b.clustering;
        check(v, c.eps > 0.0, "clustering.eps", "eps > 0");
        check(v, c.min_pts >= 1, "clustering.min_pts", "min_pts ≥ 1");
        check(v, c.delay_weight >= 0.0, "clustering.delay_weight", "delay_weight ≥ 0");
        check(v, c.delay_span_floor >= 0.0, "clustering.delay_span_floor_s", "delay_span_floor ≥ 0");

        const auto &sc = b.scene;
        check(v, sc.tx_position.z > 0.0, "scene.tx_position", "tx height > 0");
        for (std::size_t i = 0; i < sc.rx_positions.size(); ++i)
        {
            const auto &p = sc.rx_positions[i];
            std::string field = "scene.rx_positions[" + std::to_string(i) + "]";
            check(v, p.z > 0.0, field, "rx height > 0");
            check(v, p.x >= 0.0 && p.x <= sc.max_route_m, field, "route coordinate within [0, max_route_m]");
        }
        for (std::size_t i = 0; i < sc.scatterers.size(); ++i)
            check(v, sc.scatterers[i].reflectivity_loss_db >= 0.0,
                  "scene.scatterers[" + std::to_string(i) + "].reflectivity_loss_db", "reflectivity loss ≥ 0");
        for (std::size_t i = 0; i < sc.foliage_segments.size(); ++i)
        {
            const auto &seg = sc.foliage_segments[i];
            std::string field = "scene.foliage_segments[" + std::to_string(i) + "]";
            check(v, seg.start_m <= seg.end_m, field, "foliage interval ordered");
            check(v, seg.thickness_proxy > 0.0, field, "thickness_proxy > 0");
        }
        return v;
    }

    // ---- JSON reading ------------------------------------------------------

    namespace
    {
        // Walks one JSON object, records the keys it consumed and rejects leftovers.
        class ObjectReader
        {
        public:
            ObjectReader(const json &j, std::string path) : j_(j), path_(std::move(path))
            {
                if (!j_.is_object())
                    throw ConfigError(path_, "Expected an object at '" + display() + "'.");
            }

            template <typename T>
            void get(const char *key, T &out)
            {
                seen_.insert(key);
                auto it = j_.find(key);
                if (it == j_.end() || it->is_null())
                    return;
                try
                {
                    out = it->template get<T>();
                }
                catch (const json::exception &e)
                {
                    throw ConfigError(field(key), "Bad value for '" + field(key) + "': " + e.what());
                }
            }

            template <typename T>
            void get(const char *key, std::optional<T> &out)
            {
                seen_.insert(key);
                auto it = j_.find(key);
                if (it == j_.end() || it->is_null())
                    return;
                try
                {
                    out = it->template get<T>();
                }
                catch (const json::exception &e)
                {
                    throw ConfigError(field(key), "Bad value for '" + field(key) + "': " + e.what());
                }
            }

            const json *child(const char *key)
            {
                seen_.insert(key);
                auto it = j_.find(key);
                return (it == j_.end() || it->is_null()) ? nullptr : &*it;
            }

            void ignore(const char *key) { seen_.insert(key); }

            std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

            void finish() const
            {
                for (auto it = j_.begin(); it != j_.end(); ++it)
                    if (!seen_.count(it.key()))
                        throw ConfigError(field(it.key()), "Unknown key '" + field(it.key()) + "'.");
            }

        private:
            std::string display() const { return path_.empty() ? "<root>" : path_; }

            const json &j_;
            std::string path_;
            std::set<std::string> seen_;
        };

        Vec3 read_vec3(const json &j, const std::string &field)
        {
            if (!j.is_array() || j.size() != 3)
                throw ConfigError(field, "Expected [x, y, z] at '" + field + "'.");
            try
            {
                return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
            }
            catch (const json::exception &e)
            {
                throw ConfigError(field, "Bad position at '" + field + "': " + e.what());
            }
        }

        json write_vec3(const Vec3 &p) { return json::array({p.x, p.y, p.z}); }

        AntennaKind parse_kind(const std::string &s, const std::string &field)
        {
            if (s == "horn")
                return AntennaKind::horn;
            if (s == "waveguide")
                return AntennaKind::waveguide;
            throw ConfigError(field, "Unknown antenna kind '" + s + "' at '" + field + "'.");
        }

        std::string kind_name(AntennaKind k) { return k == AntennaKind::horn ? "horn" : "waveguide"; }

        FoliageMode parse_foliage_mode(const std::string &s, const std::string &field)
        {
            if (s == "embedded")
                return FoliageMode::embedded;
            if (s == "direct_path")
                return FoliageMode::direct_path;
            throw ConfigError(field, "Unknown foliage mode '" + s + "' at '" + field + "'.");
        }

        std::string foliage_mode_name(FoliageMode m) { return m == FoliageMode::embedded ? "embedded" : "direct_path"; }

        void read_antenna(const json &j, const std::string &path, AntennaPattern &a)
        {
            ObjectReader r(j, path);
            r.get("boresight_gain_dbi", a.boresight_gain);
            r.get("hpbw_deg", a.hpbw);
            r.get("sidelobe_level_db", a.sidelobe_level);
            std::optional<std::string> kind;
            r.get("kind", kind);
            if (kind)
                a.kind = parse_kind(*kind, r.field("kind"));
            r.finish();
        }

        void read_case(const json &j, const std::string &path, UmiCaseParams &c)
        {
            ObjectReader r(j, path);
            r.get("ple", c.ple);
            r.get("sf_sigma_db", c.sf_sigma);
            r.get("k_mean_db", c.k_mean);
            r.get("k_sigma_db", c.k_sigma);
            r.get("ds_mean_s", c.ds_mean);
            r.get("ds_sigma_log10", c.ds_sigma);
            r.get("asa_mean_deg", c.asa_mean);
            r.get("asa_sigma_log10", c.asa_sigma);
            r.get("esa_mean_deg", c.esa_mean);
            r.get("esa_sigma_log10", c.esa_sigma);
            r.get("n_clusters_mean", c.n_clusters_mean);
            r.get("cds_mean_s", c.cds_mean);
            r.get("casa_mean_deg", c.casa_mean);
            r.get("cesa_mean_deg", c.cesa_mean);
            r.finish();
        }

        Scene read_scene(const json &j, const std::string &path)
        {
            ObjectReader r(j, path);
            Scene scene;
            scene.rx_positions.clear();
            scene.scatterers.clear();
            scene.foliage_segments.clear();

            if (const json *tx = r.child("tx_position"))
                scene.tx_position = read_vec3(*tx, r.field("tx_position"));
            r.get("max_route_m", scene.max_route_m);

            const json *rx = r.child("rx_positions");
            const json *dist = r.child("rx_distances_m");
            if (rx && dist)
                throw ConfigError(r.field("rx_positions"), "Give either rx_positions or rx_distances_m, not both.");
            if (rx)
            {
                if (!rx->is_array())
                    throw ConfigError(r.field("rx_positions"), "Expected a list of positions.");
                for (std::size_t i = 0; i < rx->size(); ++i)
                    scene.rx_positions.push_back(
                        read_vec3((*rx)[i], r.field("rx_positions") + "[" + std::to_string(i) + "]"));
            }
            if (dist)
            {
                std::vector<double> d;
                double rx_height = 1.6;
                try
                {
                    d = dist->get<std::vector<double>>();
                }
                catch (const json::exception &e)
                {
                    throw ConfigError(r.field("rx_distances_m"), std::string("Bad distance list: ") + e.what());
                }
                r.get("rx_height_m", rx_height);
                for (double di : d)
                    if (!(di > std::abs(scene.tx_position.z - rx_height)))
                        throw ConfigError(r.field("rx_distances_m"), "Link distance shorter than the Tx-Rx height difference.");
                Scene route = make_route_scene(d, scene.tx_position.z, rx_height);
                for (auto &p : route.rx_positions)
                    p = p + Vec3{scene.tx_position.x, scene.tx_position.y, 0.0};
                scene.rx_positions = route.rx_positions;
            }
            else
                r.ignore("rx_height_m");

            if (const json *sc = r.child("scatterers"))
            {
                if (!sc->is_array())
                    throw ConfigError(r.field("scatterers"), "Expected a list of scatterers.");
                for (std::size_t i = 0; i < sc->size(); ++i)
                {
                    std::string p = r.field("scatterers") + "[" + std::to_string(i) + "]";
                    ObjectReader sr((*sc)[i], p);
                    Scatterer s;
                    if (const json *pos = sr.child("position"))
                        s.position = read_vec3(*pos, sr.field("position"));
                    else
                        throw ConfigError(sr.field("position"), "Scatterer needs a position.");
                    sr.get("reflectivity_loss_db", s.reflectivity_loss_db);
                    sr.get("label", s.label);
                    sr.get("facing_azimuth_deg", s.facing_azimuth_deg);
                    sr.get("backscatter_penalty_db", s.backscatter_penalty_db);
                    sr.get("visible_from_m", s.visible_from_m);
                    sr.get("visible_to_m", s.visible_to_m);
                    sr.finish();
                    scene.scatterers.push_back(s);
                }
            }
            if (const json *fs = r.child("foliage_segments"))
            {
                if (!fs->is_array())
                    throw ConfigError(r.field("foliage_segments"), "Expected a list of foliage segments.");
                for (std::size_t i = 0; i < fs->size(); ++i)
                {
                    ObjectReader fr((*fs)[i], r.field("foliage_segments") + "[" + std::to_string(i) + "]");
                    FoliageSegment seg;
                    fr.get("start_m", seg.start_m);
                    fr.get("end_m", seg.end_m);
                    fr.get("thickness_proxy", seg.thickness_proxy);
                    fr.finish();
                    scene.foliage_segments.push_back(seg);
                }
            }
            r.finish();
            return scene;
        }

        json write_scene(const Scene &s)
        {
            json j;
            j["tx_position"] = write_vec3(s.tx_position);
            j["max_route_m"] = s.max_route_m;
            j["rx_positions"] = json::array();
            for (const auto &p : s.rx_positions)
                j["rx_positions"].push_back(write_vec3(p));
            j["scatterers"] = json::array();
            for (const auto &sc : s.scatterers)
            {
                json o;
                o["position"] = write_vec3(sc.position);
                o["reflectivity_loss_db"] = sc.reflectivity_loss_db;
                o["label"] = sc.label;
                o["facing_azimuth_deg"] = sc.facing_azimuth_deg ? json(*sc.facing_azimuth_deg) : json(nullptr);
                o["backscatter_penalty_db"] = sc.backscatter_penalty_db;
                o["visible_from_m"] = sc.visible_from_m ? json(*sc.visible_from_m) : json(nullptr);
                o["visible_to_m"] = sc.visible_to_m ? json(*sc.visible_to_m) : json(nullptr);
                j["scatterers"].push_back(o);
            }
            j["foliage_segments"] = json::array();
            for (const auto &f : s.foliage_segments)
                j["foliage_segments"].push_back({{"start_m", f.start_m}, {"end_m", f.end_m}, {"thickness_proxy", f.thickness_proxy}});
            return j;
        }

        json write_case(const UmiCaseParams &c)
        {
            auto opt = [](const std::optional<double> &v) { return v ? json(*v) : json(nullptr); };
            return {{"ple", c.ple},
                    {"sf_sigma_db", c.sf_sigma},
                    {"k_mean_db", c.k_mean},
                    {"k_sigma_db", c.k_sigma},
                    {"ds_mean_s", c.ds_mean},
                    {"ds_sigma_log10", c.ds_sigma},
                    {"asa_mean_deg", c.asa_mean},
                    {"asa_sigma_log10", c.asa_sigma},
                    {"esa_mean_deg", c.esa_mean},
                    {"esa_sigma_log10", c.esa_sigma},
                    {"n_clusters_mean", c.n_clusters_mean},
                    {"cds_mean_s", opt(c.cds_mean)},
                    {"casa_mean_deg", opt(c.casa_mean)},
                    {"cesa_mean_deg", opt(c.cesa_mean)}};
        }

        json write_antenna(const AntennaPattern &a)
        {
            return {{"boresight_gain_dbi", a.boresight_gain},
                    {"hpbw_deg", a.hpbw},
                    {"sidelobe_level_db", a.sidelobe_level},
                    {"kind", kind_name(a.kind)}};
        }

        json parse_text(const std::string &text)
        {
            try
            {
                return json::parse(text);
            }
            catch (const json::parse_error &e)
            {
                throw ConfigError("", std::string("Malformed config: ") + e.what());
            }
        }

        std::string read_file(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
                throw ConfigError("", "Cannot open config file '" + path + "'.");
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }
    }

    ParameterBundle parse_config(const std::string &json_text)
    {
        ParameterBundle b;
        json root = parse_text(json_text);
        if (root.is_null())
            root = json::object();

        ObjectReader r(root, "");
        r.ignore("derived");
        r.ignore("notes");

        if (const json *j = r.child("frequency"))
        {
            ObjectReader f(*j, "frequency");
            f.get("center_freq_hz", b.plan.center_freq);
            f.get("bandwidth_hz", b.plan.bandwidth);
            f.get("n_samples", b.plan.n_samples);
            f.get("extended_samples", b.plan.extended_samples);
            f.ignore("delay_resolution_s");
            f.ignore("max_delay_s");
            f.finish();
        }
        if (const json *j = r.child("scan_grid"))
        {
            ObjectReader g(*j, "scan_grid");
            g.get("azimuth_start_deg", b.grid.azimuth_start);
            g.get("azimuth_stop_deg", b.grid.azimuth_stop);
            g.get("azimuth_step_deg", b.grid.azimuth_step);
            g.get("elevation_start_deg", b.grid.elevation_start);
            g.get("elevation_stop_deg", b.grid.elevation_stop);
            g.get("elevation_step_deg", b.grid.elevation_step);
            g.finish();
        }
        if (const json *j = r.child("rx_antenna"))
            read_antenna(*j, "rx_antenna", b.rx_antenna);
        if (const json *j = r.child("tx_antenna"))
            read_antenna(*j, "tx_antenna", b.tx_antenna);
        if (const json *j = r.child("sounder"))
        {
            ObjectReader s(*j, "sounder");
            s.get("noise_floor_db", b.sounder.noise_floor);
            s.get("pdp_clip_db", b.sounder.pdp_clip_value);
            s.get("dynamic_range_db", b.sounder.dynamic_range);
            s.get("averaging_count", b.sounder.averaging_count);
            s.get("noise_margin_db", b.sounder.noise_margin);
            s.get("dwell_time_s", b.sounder.dwell_time);
            s.finish();
        }
        if (const json *j = r.child("foliage"))
        {
            ObjectReader f(*j, "foliage");
            f.get("loss_mean_db", b.foliage.loss_mean);
            f.get("loss_sigma_db", b.foliage.loss_sigma);
            if (const json *cr = f.child("clamp_range_db"))
            {
                if (!cr->is_array() || cr->size() != 2 || !(*cr)[0].is_number() || !(*cr)[1].is_number())
                    throw ConfigError("foliage.clamp_range_db", "Expected [min, max] at 'foliage.clamp_range_db'.");
                b.foliage.clamp_min = (*cr)[0].get<double>();
                b.foliage.clamp_max = (*cr)[1].get<double>();
            }
            f.finish();
        }
        if (const json *j = r.child("umi"))
        {
            ObjectReader u(*j, "umi");
            if (const json *c = u.child("los"))
                read_case(*c, "umi.los", b.los);
            if (const json *c = u.child("olos"))
                read_case(*c, "umi.olos", b.olos);
            u.finish();
        }
        if (const json *j = r.child("synthesis"))
        {
            ObjectReader s(*j, "synthesis");
            s.get("rays_per_cluster", b.synthesis.rays_per_cluster);
            s.get("direct_ray_share", b.synthesis.direct_ray_share);
            s.get("power_decay", b.synthesis.power_decay);
            s.get("cluster_shadowing_db", b.synthesis.cluster_shadowing);
            s.get("elevation_limit_deg", b.synthesis.elevation_limit);
            s.get("satellite_max_offset_deg", b.synthesis.satellite_max_offset);
            s.get("ray_power_decay", b.synthesis.ray_power_decay);
            s.get("visibility_range_db", b.synthesis.visibility_range);
            s.get("max_excess_delay_s", b.synthesis.max_excess_delay);
            std::optional<std::string> mode;
            s.get("foliage_mode", mode);
            if (mode)
                b.synthesis.foliage_mode = parse_foliage_mode(*mode, "synthesis.foliage_mode");
            s.finish();
        }
        if (const json *j = r.child("clustering"))
        {
            ObjectReader c(*j, "clustering");
            c.get("eps", b.clustering.eps);
            c.get("min_pts", b.clustering.min_pts);
            c.get("delay_weight", b.clustering.delay_weight);
            c.get("delay_span_floor_s", b.clustering.delay_span_floor);
            c.finish();
        }
        if (const json *j = r.child("scene"))
            b.scene = read_scene(*j, "scene");
        r.finish();

        auto violations = validate(b);
        if (!violations.empty())
        {
            std::string msg = "Invalid config:";
            for (const auto &v : violations)
                msg += " [" + v.field + ": " + v.message + "]";
            throw ConfigError(violations.front().field, msg);
        }
        return b;
    }

    ParameterBundle load_config(const std::string &path)
    {
        return parse_config(read_file(path));
    }

    std::string serialize_config(const ParameterBundle &b)
    {
        json j;
        j["frequency"] = {{"center_freq_hz", b.plan.center_freq},
                          {"bandwidth_hz", b.plan.bandwidth},
                          {"n_samples", b.plan.n_samples},
                          {"extended_samples", b.plan.extended_samples}};
        j["scan_grid"] = {{"azimuth_start_deg", b.grid.azimuth_start},
                          {"azimuth_stop_deg", b.grid.azimuth_stop},
                          {"azimuth_step_deg", b.grid.azimuth_step},
                          {"elevation_start_deg", b.grid.elevation_start},
                          {"elevation_stop_deg", b.grid.elevation_stop},
                          {"elevation_step_deg", b.grid.elevation_step}};
        j["rx_antenna"] = write_antenna(b.rx_antenna);
        j["tx_antenna"] = write_antenna(b.tx_antenna);
        j["sounder"] = {{"noise_floor_db", b.sounder.noise_floor},
                        {"pdp_clip_db", b.sounder.pdp_clip_value},
                        {"dynamic_range_db", b.sounder.dynamic_range},
                        {"averaging_count", b.sounder.averaging_count},
                        {"noise_margin_db", b.sounder.noise_margin},
                        {"dwell_time_s", b.sounder.dwell_time}};
        j["foliage"] = {{"loss_mean_db", b.foliage.loss_mean},
                        {"loss_sigma_db", b.foliage.loss_sigma},
                        {"clamp_range_db", {b.foliage.clamp_min, b.foliage.clamp_max}}};
        j["umi"] = {{"los", write_case(b.los)}, {"olos", write_case(b.olos)}};
        j["synthesis"] = {{"rays_per_cluster", b.synthesis.rays_per_cluster},
                          {"direct_ray_share", b.synthesis.direct_ray_share},
                          {"power_decay", b.synthesis.power_decay},
                          {"cluster_shadowing_db", b.synthesis.cluster_shadowing},
                          {"elevation_limit_deg", b.synthesis.elevation_limit},
                          {"satellite_max_offset_deg", b.synthesis.satellite_max_offset},
                          {"ray_power_decay", b.synthesis.ray_power_decay},
                          {"visibility_range_db", b.synthesis.visibility_range},
                          {"max_excess_delay_s", b.synthesis.max_excess_delay},
                          {"foliage_mode", foliage_mode_name(b.synthesis.foliage_mode)}};
        j["clustering"] = {{"eps", b.clustering.eps},
                           {"min_pts", b.clustering.min_pts},
                           {"delay_weight", b.clustering.delay_weight},
                           {"delay_span_floor_s", b.clustering.delay_span_floor}};
        j["scene"] = write_scene(b.scene);

        json notes = json::array();
        for (const auto &[name, c] : {std::pair{"los", &b.los}, std::pair{"olos", &b.olos}})
            if (c->uses_fallback_cluster_spreads())
                notes.push_back(std::string("umi.") + name +
                                ": cluster spreads not configured; fallback defaults CDS=DS/5, CASA=ASA/3, CESA=ESA/2 in use (not measured values)");
        j["notes"] = notes;
        j["derived"] = {{"delay_resolution_s", b.plan.delay_resolution()},
                        {"max_delay_s", b.plan.max_delay()},
                        {"max_path_length_m", b.plan.max_path_length()},
                        {"scan_directions", b.grid.size()}};
        return j.dump(2);
    }

    Scene parse_scene(const std::string &json_text)
    {
        return read_scene(parse_text(json_text), "scene");
    }

    Scene load_scene(const std::string &path)
    {
        return parse_scene(read_file(path));
    }

    std::string serialize_scene(const Scene &scene)
    {
        return write_scene(scene).dump(2);
    }
}
