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
#include <vector>

namespace fdris {

// Two-way full-duplex link. Index i is a transmitter and j = 1 - i its peer.
struct LinkMatrices {
    std::array<CMat, 2> h_dc;  // [i]: TX i -> RX j (direct plus cascaded)
    std::array<CMat, 2> h_si;  // [i]: TX i -> RX i
    std::array<double, 2> power{1.0, 1.0};
    double noise_power = 1.0;

    void validate() const;
};

// f[i] precodes the streams of TX i; w[j] combines them at RX j.
struct Beamformers {
    std::array<CMat, 2> f;
    std::array<CMat, 2> w;
};

struct HybridBeamformers {
    std::array<CMat, 2> f_rf, f_bb;
    std::array<CMat, 2> w_rf, w_bb;

    Beamformers digital() const;
};

struct SeBreakdown {
    std::array<double, 2> per_rx{0.0, 0.0};  // [j]: rate of the streams received at j
    double sum = 0.0;
    bool regularized = false;
};

SeBreakdown spectral_efficiency(const LinkMatrices& link, const Beamformers& bf);

// Error covariance of the streams decoded at RX j, unit-power symbols.
CMat mse_matrix(const LinkMatrices& link, const Beamformers& bf, int j);

// sum_j Tr(Q_j E_j) - ln det Q_j.
double wmmse_objective(const LinkMatrices& link, const Beamformers& bf, const std::array<CMat, 2>& weights);

struct ConvergencePoint {
    int iteration = 0;
    double objective = 0.0;
    double sum_se = 0.0;
};

struct WmmseOptions {
    int n_st = 4;
    int max_iters = 200;
    double tol = 1e-8;
};

struct WmmseResult {
    Beamformers bf;
    std::vector<ConvergencePoint> trace;
    bool converged = false;
};

WmmseResult wmmse_digital(const LinkMatrices& link, const WmmseOptions& options, Rng& rng);

struct HybridOptions {
    int n_st = 4;
    int m_rf = 4;
    int iterations = 200;
    int cd_sweeps = 3;
    int inner_loops = 5;         // baseband/analog alternations per block and iteration
    double tol = 1e-8;           // early stop on relative objective change; 0 runs all iterations
    bool record_substeps = false;
};

struct HybridResult {
    HybridBeamformers bf;
    std::vector<ConvergencePoint> trace;
    std::vector<double> substep_objectives;  // after every block update
    int rejected_rf_steps = 0;               // analog precoder steps undone to keep power feasible
    bool converged = false;
};

HybridResult h_wmmse_sic(const LinkMatrices& link, const HybridOptions& options, Rng& rng);

// Minimizer of Tr(X^H T X) - 2 Re Tr(X^H G) subject to Tr(X^H K X) <= power,
// X = (T + mu K)^{-1} G with mu >= 0 found by bisection.
struct PowerSolve {
    CMat x;
    double mu = 0.0;
};
PowerSolve solve_power_constrained(const CMat& t, const CMat& g, const CMat& k, double power, double rel_tol = 1e-12);

// f(R) = Re Tr(R^H U R C) - 2 Re Tr(R^H D) over unit-modulus R.
double cd_objective(const CMat& r, const CMat& u, const CMat& c, const CMat& d);

struct CdResult {
    CMat r;
    std::vector<double> objective;  // after each sweep, or each entry when requested
};

// Exact per-entry minimization sweeping column by column.
CdResult cd_unit_modulus_gram(const CMat& r_init, const CMat& u, const CMat& c, const CMat& d, int sweeps,
                              bool record_entries = false);
// Same objective written as Tr(B^H R^H U R B) - 2 Re Tr(B^H R^H F).
CdResult cd_unit_modulus(const CMat& r_init, const CMat& u, const CMat& b, const CMat& f, int sweeps,
                         bool record_entries = false);

// Sparse approximation of a digital solution by m_rf dictionary atoms per
// side, then rescaled to the transmit power.
HybridBeamformers decoupled_baseline(const LinkMatrices& link, const Beamformers& digital,
                                     const std::array<const Dictionary*, 2>& tx_dicts,
                                     const std::array<const Dictionary*, 2>& rx_dicts, int m_rf, int lookahead = 5);

struct PassivePhases {
    CVec v;
    bool degenerate = false;
};

// Unit-modulus v maximizing ||v^T xi_12||^2 + ||v^T xi_21||^2 through the
// principal eigenvector of xi_12 xi_12^H + xi_21 xi_21^H.
PassivePhases optimize_passive(const CMat& xi_12, const CMat& xi_21);
double passive_objective(const CVec& v, const CMat& xi);

struct CascadedBound {
    double se = 0.0;     // top-n_st singular modes of pi_r lambda pi_t^H
    double bound = 0.0;  // n_st log2(1 + factor Tr(lambda lambda^H))
};
CascadedBound cascaded_se_bound(const CMat& lambda, const CMat& pi_t, const CMat& pi_r, double tx_power,
                                double noise_power, int n_st);

}  // namespace fdris
