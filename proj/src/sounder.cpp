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

#include "thzumi/sounder.hpp"

#include "fft.hpp"
#include "thzumi/geometry.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace thzumi
{
    namespace
    {
        constexpr double kPi = std::numbers::pi;
        constexpr char kMagic[8] = {'T', 'H', 'Z', 'S', 'C', 'A', 'N', '1'};
        constexpr std::uint32_t kContainerVersion = 1;

        struct Writer
        {
            std::vector<std::uint8_t> bytes;

            template <typename T>
            void put(T value)
            {
                std::uint8_t raw[sizeof(T)];
                std::memcpy(raw, &value, sizeof(T));
                if constexpr (std::endian::native == std::endian::big)
                    std::reverse(raw, raw + sizeof(T));
                bytes.insert(bytes.end(), raw, raw + sizeof(T));
            }
            void u32(std::size_t v)
            {
                if (v > 0xFFFFFFFFull)
                    throw std::runtime_error("Scan container: value exceeds 32 bits.");
                put(static_cast<std::uint32_t>(v));
            }
        };

        struct Reader
        {
            std::span<const std::uint8_t> bytes;
            std::size_t pos = 0;

            void need(std::size_t n) const
            {
                if (pos + n > bytes.size())
                    throw std::runtime_error("Scan container: truncated at byte " + std::to_string(pos) + ".");
            }
            template <typename T>
            T get()
            {
                need(sizeof(T));
                std::uint8_t raw[sizeof(T)];
                std::memcpy(raw, bytes.data() + pos, sizeof(T));
                if constexpr (std::endian::native == std::endian::big)
                    std::reverse(raw, raw + sizeof(T));
                pos += sizeof(T);
                T v;
                std::memcpy(&v, raw, sizeof(T));
                return v;
            }
        };

        std::vector<std::complex<double>> to_double(std::span<const std::complex<float>> x)
        {
            std::vector<std::complex<double>> out(x.size());
            for (std::size_t i = 0; i < x.size(); ++i)
                out[i] = {x[i].real(), x[i].imag()};
            return out;
        }

        void store(std::span<std::complex<float>> dst, const std::vector<std::complex<double>> &src, double scale)
        {
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] = {static_cast<float>(src[i].real() * scale), static_cast<float>(src[i].imag() * scale)};
        }

        // Pulse taps of one path on the circular delay grid (unit amplitude).
        struct Taps
        {
            std::vector<std::size_t> index;
            std::vector<double> value;
        };

        Taps path_taps(double delay_bins, std::size_t n)
        {
            double u = std::fmod(delay_bins, static_cast<double>(n));
            if (u < 0.0)
                u += static_cast<double>(n);
            const long long k0 = static_cast<long long>(std::floor(u));
            const long long w = static_cast<long long>(std::min(kPulseHalfWidth, n / 2));
            Taps t;
            for (long long k = k0 - w + 1; k <= k0 + w; ++k)
            {
                double p = pulse(static_cast<double>(k) - u);
                if (p == 0.0)
                    continue;
                long long idx = k % static_cast<long long>(n);
                if (idx < 0)
                    idx += static_cast<long long>(n);
                t.index.push_back(static_cast<std::size_t>(idx));
                t.value.push_back(p);
            }
            return t;
        }

        // Multiplies the spectrum of x by exp(+j 2 pi f shift), i.e. advances x by shift_bins.
        void advance(std::vector<std::complex<double>> &x, double shift_bins)
        {
            const std::size_t n = x.size();
            detail::fft(x, false);
            for (std::size_t k = 0; k < n; ++k)
            {
                double f = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
                if (n % 2 == 0 && k == n / 2)
                    x[k] *= std::cos(kPi * shift_bins);
                else
                    x[k] *= std::polar(1.0, 2.0 * kPi * f * shift_bins / static_cast<double>(n));
            }
            detail::fft(x, true);
            for (auto &v : x)
                v /= static_cast<double>(n);
        }

        double pulse_ratio(double delta) { return std::abs(pulse(1.0 - delta)) / std::abs(pulse(delta)); }
    }

    double antenna_gain(const AntennaPattern &pattern, double offset_deg)
    {
        if (pattern.kind == AntennaKind::waveguide)
            return pattern.boresight_gain;
        double off = std::abs(offset_deg);
        double g = pattern.boresight_gain - 12.0 * (off / pattern.hpbw) * (off / pattern.hpbw);
        return std::max(g, pattern.boresight_gain - pattern.sidelobe_level);
    }

    double pulse(double t)
    {
        if (t == 0.0)
            return 1.0;
        const double b = kPulseRollOff;
        const double sinc = std::sin(kPi * t) / (kPi * t);
        const double den = 1.0 - (2.0 * b * t) * (2.0 * b * t);
        if (std::abs(den) < 1e-10)
        {
            double x = 1.0 / (2.0 * b);
            return kPi / 4.0 * std::sin(kPi * x) / (kPi * x);
        }
        return sinc * std::cos(kPi * b * t) / den;
    }

    std::span<const std::complex<float>> DssScan::cir(std::size_t direction) const
    {
        if (direction >= n_directions())
            throw std::out_of_range("DssScan: direction index out of range.");
        return {samples.data() + direction * samples_per_cir, samples_per_cir};
    }

    std::span<std::complex<float>> DssScan::cir(std::size_t direction)
    {
        if (direction >= n_directions())
            throw std::out_of_range("DssScan: direction index out of range.");
        return {samples.data() + direction * samples_per_cir, samples_per_cir};
    }

    std::vector<double> scan_timestamps(const ScanGrid &grid, double dwell_time)
    {
        std::vector<double> t(grid.size());
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = static_cast<double>(i) * dwell_time;
        return t;
    }

    DssScan simulate_scan(const MpcSet &set, const FrequencyPlan &plan, const ScanGrid &grid, const AntennaPattern &rx_pattern,
                          const AntennaPattern &tx_pattern, const SounderParams &sounder, const ScanOptions &options,
                          std::mt19937_64 &rng)
    {
        const std::size_t n = plan.n_samples;
        const double bin = plan.delay_resolution();
        if (!options.system_response.empty() && options.system_response.size() != n)
            throw std::invalid_argument("simulate_scan: system response length must equal n_samples.");

        DssScan scan;
        scan.plan = plan;
        scan.grid = grid;
        scan.link = set.link;
        scan.timestamps = scan_timestamps(grid, sounder.dwell_time);
        scan.samples_per_cir = n;
        scan.samples.assign(scan.timestamps.size() * n, {0.0f, 0.0f});

        const double tx_gain = antenna_gain(tx_pattern, 0.0);
        // The carrier phase follows the delay as the sounder sees it, modulo the CIR period.
        std::vector<std::complex<double>> phasor(set.mpcs.size());
        for (std::size_t m = 0; m < set.mpcs.size(); ++m)
        {
            double tau = std::fmod(set.mpcs[m].delay, plan.max_delay());
            phasor[m] = set.mpcs[m].gain * std::polar(1.0, -2.0 * kPi * std::fmod(plan.center_freq * tau, 1.0));
        }

        const bool fixed_offset = options.drift.slope == 0.0;
        std::vector<Taps> cached;
        if (fixed_offset)
            for (const auto &m : set.mpcs)
                cached.push_back(path_taps((m.delay + options.drift.offset_at_t0) / bin, n));

        const double noise_power = std::pow(10.0, (sounder.noise_floor - sounder.noise_margin) / 10.0);
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
        std::vector<std::complex<double>> acc(n);
        for (std::size_t d = 0; d < scan.n_directions(); ++d)
        {
            std::fill(acc.begin(), acc.end(), std::complex<double>{});
            const Direction steer = grid.direction(d);
            const double drift = options.drift.at(scan.timestamps[d]);
            for (std::size_t m = 0; m < set.mpcs.size(); ++m)
            {
                const Mpc &mpc = set.mpcs[m];
                double off = angle_between(steer, {mpc.azimuth, mpc.elevation});
                double g = std::pow(10.0, (antenna_gain(rx_pattern, off) + tx_gain) / 20.0);
                std::complex<double> c = phasor[m] * g;
                Taps local;
                const Taps &taps = fixed_offset ? cached[m] : (local = path_taps((mpc.delay + drift) / bin, n));
                for (std::size_t i = 0; i < taps.index.size(); ++i)
                    acc[taps.index[i]] += c * taps.value[i];
            }
            if (!options.system_response.empty())
            {
                detail::fft(acc, false);
                for (std::size_t k = 0; k < n; ++k)
                    acc[k] *= options.system_response[k];
                detail::fft(acc, true);
                for (auto &v : acc)
                    v /= static_cast<double>(n);
            }
            if (options.add_noise)
                for (auto &v : acc)
                {
                    double re = gauss(rng);
                    double im = gauss(rng);
                    v += std::complex<double>(re, im);
                }
            store(scan.cir(d), acc, 1.0);
        }
        return scan;
    }

    DssScan apply_calibration(const DssScan &scan, std::span<const std::complex<double>> response)
    {
        if (response.size() != scan.samples_per_cir)
            throw std::invalid_argument("apply_calibration: response has " + std::to_string(response.size()) +
                                        " bins, the scan has " + std::to_string(scan.samples_per_cir) + " samples per CIR.");
        bool identity = true;
        for (std::size_t k = 0; k < response.size(); ++k)
        {
            if (response[k] == std::complex<double>(0.0, 0.0))
                throw std::invalid_argument("apply_calibration: response bin " + std::to_string(k) + " is zero.");
            if (response[k] != std::complex<double>(1.0, 0.0))
                identity = false;
        }
        DssScan out = scan;
        if (identity)
            return out;
        const double n = static_cast<double>(scan.samples_per_cir);
        for (std::size_t d = 0; d < out.n_directions(); ++d)
        {
            auto x = to_double(scan.cir(d));
            detail::fft(x, false);
            for (std::size_t k = 0; k < x.size(); ++k)
                x[k] /= response[k];
            detail::fft(x, true);
            store(out.cir(d), x, 1.0 / n);
        }
        return out;
    }

    double fractional_peak_offset(std::span<const std::complex<float>> cir, std::size_t k, bool circular)
    {
        const std::size_t n = cir.size();
        if (k >= n)
            throw std::out_of_range("fractional_peak_offset: bin out of range.");
        const double a0 = std::abs(cir[k]);
        if (!(a0 > 0.0))
            return 0.0;
        double left = 0.0, right = 0.0;
        if (k > 0)
            left = std::abs(cir[k - 1]);
        else if (circular)
            left = std::abs(cir[n - 1]);
        if (k + 1 < n)
            right = std::abs(cir[k + 1]);
        else if (circular)
            right = std::abs(cir[0]);

        const double sign = right >= left ? 1.0 : -1.0;
        const double r = std::min(1.0, std::max(left, right) / a0);
        if (r <= 0.0)
            return 0.0;
        double lo = 0.0, hi = 0.5;
        for (int it = 0; it < 60; ++it)
        {
            double mid = 0.5 * (lo + hi);
            (pulse_ratio(mid) < r ? lo : hi) = mid;
        }
        return sign * 0.5 * (lo + hi);
    }

    double pulse_peak_loss(double offset_bins) { return std::abs(pulse(offset_bins)); }

    DssScan correct_drift(const DssScan &scan, std::span<const DriftAnchor> anchors, DriftFit *fit)
    {
        if (anchors.size() < 2)
            throw std::invalid_argument("correct_drift: at least two anchors are required.");
        const double bin = scan.plan.delay_resolution();
        const double period = static_cast<double>(scan.plan.n_samples) * bin;

        std::vector<double> t, o;
        for (const auto &a : anchors)
        {
            auto h = scan.cir(a.direction);
            std::size_t k = 0;
            for (std::size_t i = 1; i < h.size(); ++i)
                if (std::norm(h[i]) > std::norm(h[k]))
                    k = i;
            double measured = (static_cast<double>(k) + fractional_peak_offset(h, k, !scan.extended)) * bin;
            double off = std::remainder(measured - a.true_delay, period);
            t.push_back(scan.timestamps.at(a.direction));
            o.push_back(off);
        }
        const double m = static_cast<double>(t.size());
        double tm = 0.0, om = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
        {
            tm += t[i] / m;
            om += o[i] / m;
        }
        double stt = 0.0, sto = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
        {
            stt += (t[i] - tm) * (t[i] - tm);
            sto += (t[i] - tm) * (o[i] - om);
        }
        if (!(stt > 0.0))
            throw std::invalid_argument("correct_drift: anchors must be taken at distinct timestamps.");
        DriftFit f{om - sto / stt * tm, sto / stt};
        if (fit)
            *fit = f;

        DssScan out = scan;
        for (std::size_t d = 0; d < out.n_directions(); ++d)
        {
            auto x = to_double(scan.cir(d));
            advance(x, (f.offset + f.slope * scan.timestamps[d]) / bin);
            store(out.cir(d), x, 1.0);
        }
        return out;
    }

    DssScan dealias_extend(const DssScan &scan)
    {
        if (scan.extended || scan.samples_per_cir != scan.plan.n_samples)
            throw std::invalid_argument("dealias_extend: scan is already extended.");
        const std::size_t n = scan.plan.n_samples, ext = scan.plan.extended_samples;
        if (ext < n || ext - n > n)
            throw std::invalid_argument("dealias_extend: extension must lie between 0 and n_samples.");
        DssScan out = scan;
        out.extended = true;
        out.samples_per_cir = ext;
        out.samples.assign(scan.n_directions() * ext, {});
        for (std::size_t d = 0; d < scan.n_directions(); ++d)
        {
            auto src = scan.cir(d);
            auto dst = out.cir(d);
            std::copy(src.begin(), src.end(), dst.begin());
            std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(ext - n), dst.begin() + static_cast<std::ptrdiff_t>(n));
        }
        return out;
    }

    std::vector<std::uint8_t> serialize_scan(const DssScan &scan)
    {
        Writer w;
        for (char c : kMagic)
            w.put(static_cast<std::uint8_t>(c));
        w.put(kContainerVersion);
        w.put(static_cast<std::uint32_t>(scan.extended ? 1u : 0u));
        w.put(scan.plan.center_freq);
        w.put(scan.plan.bandwidth);
        w.u32(scan.plan.n_samples);
        w.u32(scan.plan.extended_samples);
        w.u32(scan.samples_per_cir);
        const auto &g = scan.grid;
        for (double v : {g.azimuth_start, g.azimuth_stop, g.azimuth_step, g.elevation_start, g.elevation_stop, g.elevation_step})
            w.put(v);
        w.u32(scan.timestamps.size());
        for (double t : scan.timestamps)
            w.put(t);

        nlohmann::ordered_json meta;
        meta["rx_index"] = scan.link.rx_index;
        meta["distance_m"] = scan.link.distance;
        meta["case"] = to_string(scan.link.link_case);
        meta["foliage_loss_db"] = scan.link.foliage_loss;
        std::string text = meta.dump();
        w.u32(text.size());
        w.bytes.insert(w.bytes.end(), text.begin(), text.end());

        for (const auto &s : scan.samples)
        {
            w.put(s.real());
            w.put(s.imag());
        }
        return std::move(w.bytes);
    }

    DssScan parse_scan(std::span<const std::uint8_t> bytes)
    {
        Reader r{bytes};
        r.need(8);
        if (std::memcmp(bytes.data(), kMagic, 8) != 0)
            throw std::runtime_error("Scan container: bad magic.");
        r.pos = 8;
        std::uint32_t version = r.get<std::uint32_t>();
        if (version != kContainerVersion)
            throw std::runtime_error("Scan container: unsupported version " + std::to_string(version) + ".");
        DssScan s;
        s.extended = (r.get<std::uint32_t>() & 1u) != 0;
        s.plan.center_freq = r.get<double>();
        s.plan.bandwidth = r.get<double>();
        s.plan.n_samples = r.get<std::uint32_t>();
        s.plan.extended_samples = r.get<std::uint32_t>();
        s.samples_per_cir = r.get<std::uint32_t>();
        s.grid.azimuth_start = r.get<double>();
        s.grid.azimuth_stop = r.get<double>();
        s.grid.azimuth_step = r.get<double>();
        s.grid.elevation_start = r.get<double>();
        s.grid.elevation_stop = r.get<double>();
        s.grid.elevation_step = r.get<double>();
        std::size_t n_dirs = r.get<std::uint32_t>();
        r.need(n_dirs * 8);
        for (std::size_t i = 0; i < n_dirs; ++i)
            s.timestamps.push_back(r.get<double>());

        std::size_t meta_len = r.get<std::uint32_t>();
        r.need(meta_len);
        std::string text(reinterpret_cast<const char *>(bytes.data() + r.pos), meta_len);
        r.pos += meta_len;
        try
        {
            auto meta = nlohmann::json::parse(text);
            s.link.rx_index = meta.at("rx_index").get<std::size_t>();
            s.link.distance = meta.at("distance_m").get<double>();
            s.link.link_case = parse_link_case(meta.at("case").get<std::string>());
            s.link.foliage_loss = meta.at("foliage_loss_db").get<double>();
        }
        catch (const nlohmann::json::exception &e)
        {
            throw std::runtime_error(std::string("Scan container: bad link metadata: ") + e.what());
        }

        const std::size_t count = n_dirs * s.samples_per_cir;
        if (bytes.size() - r.pos != count * 8)
            throw std::runtime_error("Scan container: sample block holds " + std::to_string(bytes.size() - r.pos) +
                                     " bytes, expected " + std::to_string(count * 8) + ".");
        if (n_dirs != s.grid.size())
            throw std::runtime_error("Scan container: direction count does not match the grid.");
        s.samples.resize(count);
        for (auto &v : s.samples)
        {
            float re = r.get<float>();
            float im = r.get<float>();
            v = {re, im};
        }
        return s;
    }

    void write_scan(const std::string &path, const DssScan &scan)
    {
        auto bytes = serialize_scan(scan);
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("Cannot open '" + path + "' for writing.");
        out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw std::runtime_error("Failed writing '" + path + "'.");
    }

    DssScan read_scan(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("Cannot open '" + path + "' for reading.");
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse_scan(bytes);
    }

    std::string pdp_csv(const DssScan &scan, double clip_db)
    {
        std::ostringstream out;
        out.precision(10);
        out << "delay_s";
        for (std::size_t d = 0; d < scan.n_directions(); ++d)
        {
            Direction dir = scan.grid.direction(d);
            out << ",az" << dir.azimuth << "_el" << dir.elevation;
        }
        out << '\n';
        const double bin = scan.plan.delay_resolution();
        for (std::size_t k = 0; k < scan.samples_per_cir; ++k)
        {
            out << static_cast<double>(k) * bin;
            for (std::size_t d = 0; d < scan.n_directions(); ++d)
            {
                double p = std::norm(std::complex<double>(scan.cir(d)[k]));
                out << ',' << (p > 0.0 ? std::max(clip_db, 10.0 * std::log10(p)) : clip_db);
            }
            out << '\n';
        }
        return out.str();
    }
}
