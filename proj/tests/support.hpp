// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The fdris authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "fdris/random.hpp"
#include "fdris/geometry.hpp"

#include <cmath>

namespace fdris::testing {

inline double rel_diff(const CMat& a, const CMat& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline DirCosines random_cosines(Rng& rng) {
    // Uniform in the visible disc ele^2 + azi^2 <= 1.
    while (true) {
        const double e = rng.uniform(-1.0, 1.0);
        const double a = rng.uniform(-1.0, 1.0);
        if (e * e + a * a <= 1.0) return {e, a};
    }
}

inline UpaGeometry random_geometry(Rng& rng, int max_side = 6) {
    const double lambda = rng.uniform(1e-3, 1e-2);
    return {rng.uniform_int(1, max_side), rng.uniform_int(1, max_side), lambda * rng.uniform(0.3, 0.7), lambda};
}

inline UpaGeometry half_wave(int n_z, int n_y) { return UpaGeometry::half_wavelength(n_z, n_y, 3e-3); }

// Phase difference wrapped to (-pi, pi].
inline double wrapped(double phase) { return std::remainder(phase, 2.0 * kPi); }

}  // namespace fdris::testing
