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

#include "fdris/common.hpp"

#include <cstdint>
#include <random>
#include <string_view>

namespace fdris {

// splitmix64 finalizer; used to derive independent child streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);
std::uint64_t hash_label(std::string_view label);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::mt19937_64& engine() { return engine_; }

    // New generator whose stream depends only on this seed and the label.
    Rng child(std::string_view label) const { return Rng(mix_seed(seed_, hash_label(label))); }

    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);  // inclusive
    double normal(double mean, double stddev);
    cd complex_normal(double variance);
    CMat complex_normal(Eigen::Index rows, Eigen::Index cols, double variance);
    // Entries exp(j*theta) with theta ~ U[0, 2pi).
    CMat unit_modulus(Eigen::Index rows, Eigen::Index cols);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace fdris
