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

#ifndef THZUMI_FFT_HPP
#define THZUMI_FFT_HPP

#include <complex>
#include <vector>

namespace thzumi::detail
{
    // In-place unnormalized DFT, X[k] = sum x[n] exp(-j 2 pi k n / N) for forward.
    void fft(std::vector<std::complex<double>> &data, bool inverse);
}

#endif
