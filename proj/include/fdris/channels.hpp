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

#include "fdris/dictionaries.hpp"
#include "fdris/random.hpp"

#include <array>
#include <utility>
#include <vector>

namespace fdris {

// Close-in path loss: PL[dB] = intercept + 10 exponent log10(d) + N(0, shadow^2).
struct PathLossModel {
    double intercept = 72.0;
    double exponent = 2.92;
    double shadow_db = 8.7;

    static PathLossModel los() { return {61.4, 2.0, 5.8}; }
    static PathLossModel nlos() { return {72.0, 2.92, 8.7}; }
};

// Variance of one complex path gain: aleph * 10^(-PL/10) with
// aleph = u^1.8 * 10^(0.1 s), u ~ U(0,1), s ~ N(0, 16).
double path_gain_variance(const PathLossModel& model, double distance, Rng& rng);
cd sample_path_gain(const PathLossModel& model, double distance, Rng& rng);

struct PathSet {
    std::vector<DirCosines> angles;
    std::vector<cd> gains;
    std::size_t count() const { return angles.size(); }
};

// Paths between the two transceivers. side1/side2 are the cosines seen at
// transceiver 1 and 2; gain_12 drives the 1 -> 2 channel, gain_21 the reverse.
struct DirectPaths {
    std::vector<DirCosines> side1;
    std::vector<DirCosines> side2;
    std::vector<cd> gain_12;
    std::vector<cd> gain_21;
    std::size_t count() const { return side1.size(); }
};

// Paths between one transceiver and the RIS, shared by both directions.
struct RisLinkPaths {
    std::vector<DirCosines> trx;
    std::vector<DirCosines> ris;
    std::vector<cd> to_ris;    // transmitter -> RIS
    std::vector<cd> from_ris;  // RIS -> receiver
    std::size_t count() const { return trx.size(); }
};

struct SiPaths {
    PathSet nlos;
    double los_range = 0.0;
    cd los_gain{0.0, 0.0};
};

// Transceiver 0 is the base station, 1 the user. Index i is the transmitter
// and j = 1 - i its peer.
struct ChannelSet {
    std::array<DuplexLayout, 2> trx;
    UpaGeometry ris;
    double noise_power = 1e-12;

    DirectPaths direct;
    std::array<RisLinkPaths, 2> ris_links;
    std::array<SiPaths, 2> si;

    std::array<CMat, 2> h_d;       // [i]: TX i -> RX j, N_{j,r} x N_{i,t}
    std::array<CMat, 2> h_t;       // [i]: TX i -> RIS, L x N_{i,t}
    std::array<CMat, 2> h_r;       // [i]: RIS -> RX i, N_{i,r} x L
    std::array<CMat, 2> h_si_los;  // [i]: TX i -> RX i
    std::array<CMat, 2> h_si_nlos;

    CMat h_si(int i) const { return h_si_los[i] + h_si_nlos[i]; }
    // TX i -> RIS(v) -> RX j.
    CMat cascaded(int i, const CVec& v) const;
};

// Returns {TX1 -> RX2, TX2 -> RX1}.
std::pair<CMat, CMat> gen_direct(const DirectPaths& paths, const DuplexLayout& trx1, const DuplexLayout& trx2);
// Returns {TX -> RIS (L x N_t), RIS -> RX (N_r x L)}.
std::pair<CMat, CMat> gen_ris_link(const RisLinkPaths& paths, const DuplexLayout& trx, const UpaGeometry& ris);
// Returns {line-of-sight, non-line-of-sight}.
std::pair<CMat, CMat> gen_si(const DuplexLayout& layout, const PathSet& nlos, double los_range, cd los_gain);

// Steering matrices and gains with the array normalization folded into the
// gains, so H_T = pi_ris diag(to_ris) pi_tx^H and H_R = pi_rx diag(from_ris) pi_ris^H.
struct RisFactorization {
    CMat pi_tx;
    CMat pi_rx;
    CMat pi_ris;
    CVec to_ris;
    CVec from_ris;
};

RisFactorization ris_factorization(const RisLinkPaths& paths, const DuplexLayout& trx, const UpaGeometry& ris);

// diag(from_ris_j) pi_ris_j^H diag(v) pi_ris_i diag(to_ris_i), size B_j x B_i.
CMat effective_cascade(const RisFactorization& rx_side, const CVec& v, const RisFactorization& tx_side);

// Column b_i * B_j + b_j is (a(rho_i) .* conj(a(rho_j))) * to_ris_i * from_ris_j,
// so ||effective_cascade||_F = ||v^T xi||.
CMat angular_cascade(const RisFactorization& tx_side, const RisFactorization& rx_side, const UpaGeometry& ris);

struct ArrayDims {
    int n_z = 8;
    int n_y = 8;
};

struct ScenarioConfig {
    ArrayDims bs_tx{8, 8}, bs_rx{8, 8}, ue_tx{8, 8}, ue_rx{8, 8};
    ArrayDims ris{16, 16};
    double wavelength = 3e-3;
    double spacing_wavelengths = 0.5;
    double d0_wavelengths = 20.0;
    double bs_ris_distance = 45.0;
    std::array<double, 2> bs_ue_range{25.0, 65.0};
    std::array<double, 2> ris_ue_range{1.0, 20.0};
    std::array<double, 2> si_scatter_range{15.0, 30.0};  // one-way
    std::array<int, 2> path_range{2, 5};
    double noise_dbm = -90.0;
    double inr_db = 35.0;
    bool on_grid = false;
    int grid_oversampling = 2;
    int ris_grid_oversampling = 2;
    bool los_first_path = true;

    void validate() const;
    DuplexLayout layout(int trx) const;
    UpaGeometry ris_geometry() const;
    AngleGrid trx_grid(int trx) const;
    AngleGrid ris_grid() const;
};

ChannelSet generate_scenario(const ScenarioConfig& config, Rng& rng);

// |gamma|^2 = noise * 10^(inr/10).
double inr_to_gain(double inr_db, double noise_power);

}  // namespace fdris
