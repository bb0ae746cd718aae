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

#include "fdris/common.hpp"
#include "fdris/random.hpp"

namespace fdris {

double nmse(const CMat& truth, const CMat& estimate) {
    require_dims(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(),
                 "nmse: shape mismatch");
    const double denom = truth.squaredNorm();
    require(denom > 0.0, "nmse: reference matrix is zero");
    return (truth - estimate).squaredNorm() / denom;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

std::uint64_t hash_label(std::string_view label) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double Rng::uniform(double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(engine_);
}

int Rng::uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return dist(engine_);
}

double Rng::normal(double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
}

cd Rng::complex_normal(double variance) {
    std::normal_distribution<double> dist(0.0, std::sqrt(variance / 2.0));
    const double re = dist(engine_);
    const double im = dist(engine_);
    return {re, im};
}

CMat Rng::complex_normal(Eigen::Index rows, Eigen::Index cols, double variance) {
    CMat out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = complex_normal(variance);
    return out;
}

CMat Rng::unit_modulus(Eigen::Index rows, Eigen::Index cols) {
    CMat out(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = std::polar(1.0, uniform(0.0, 2.0 * kPi));
    return out;
}

}  // namespace fdris
