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

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace thzumi::detail
{
    namespace
    {
        std::mutex plan_mutex;
        std::map<std::pair<std::size_t, bool>, fftw_plan> plans;

        fftw_plan get_plan(std::size_t n, bool inverse)
        {
            std::lock_guard<std::mutex> lock(plan_mutex);
            auto key = std::make_pair(n, inverse);
            if (auto it = plans.find(key); it != plans.end())
                return it->second;
            std::vector<std::complex<double>> buf(n);
            auto *p = reinterpret_cast<fftw_complex *>(buf.data());
            fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
            plans[key] = plan;
            return plan;
        }
    }

    void fft(std::vector<std::complex<double>> &data, bool inverse)
    {
        if (data.empty())
            return;
        fftw_plan plan = get_plan(data.size(), inverse);
        auto *p = reinterpret_cast<fftw_complex *>(data.data());
        fftw_execute_dft(plan, p, p);
    }
}
