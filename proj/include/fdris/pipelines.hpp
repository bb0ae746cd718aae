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

#include "fdris/channels.hpp"
#include "fdris/recovery.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace fdris {

// Pilot lengths per campaign. Each campaign sends n pilot columns and
// observes them through n combiners, rf_chains at a time, so it consumes
// n * n / rf_chains slots.
struct PilotPlan {
    int n_s = 32;
    int n_d = 32;
    int n_c = 32;
    int q = 64;
    double pilot_dbm = 30.0;
    int rf_chains = 4;

    void validate() const;
    double pilot_power() const { return dbm_to_watt(pilot_dbm); }
};

struct TrxDictionaries {
    Dictionary tx;
    Dictionary rx;
};

struct DictionarySet {
    std::array<TrxDictionaries, 2> trx;
    Dictionary ris;

    static DictionarySet build(const ChannelSet& cs, const AngleGrid& grid0, const AngleGrid& grid1,
                               const AngleGrid& ris_grid);
    static DictionarySet build(const ChannelSet& cs, const ScenarioConfig& cfg);
};

struct NamedEstimate {
    std::string name;
    CMat estimate;
    double nmse = 0.0;
};

struct AngleEstimate {
    std::string role;  // e.g. "bs_dl", "ue_ul"
    std::vector<Eigen::Index> indices;
    std::vector<DirCosines> cosines;
};

struct EstimationReport {
    std::vector<NamedEstimate> estimates;
    std::vector<AngleEstimate> angles;
    std::size_t pilot_slots = 0;
    bool refine_converged = true;

    const NamedEstimate& get(const std::string& name) const;
    double nmse(const std::string& name) const { return get(name).nmse; }
};

// Channel estimates assumed known when cancelling other contributions from a
// campaign's measurements; unset entries default to the true channel.
struct PriorEstimates {
    std::array<std::optional<CMat>, 2> si;
    std::array<std::optional<CMat>, 2> direct;
};

// Y = W^H H X + W^H N with fresh noise in every slot of rf_chains combiners.
CMat measure(const CMat& combiner, const CMat& channel, const CMat& pilots, double noise_power, int rf_chains,
             Rng& rng);

// Random-phase pilots with total power `power` per column.
CMat random_pilots(Eigen::Index antennas, Eigen::Index count, double power, Rng& rng);

// Line-of-sight self-interference gain from one pilot sent along the known
// spherical responses.
cd estimate_si_los_gain(const ChannelSet& cs, int trx, double pilot_power, Rng& rng);

enum class SensingFramework { khatri_rao, kronecker };

struct SiOptions {
    SensingFramework framework = SensingFramework::khatri_rao;
    int lookahead = 5;
    bool offgrid = false;
    bool known_los = false;
};

// Estimates "si" and "si_nlos" of transceiver `trx`.
EstimationReport estimate_si(const ChannelSet& cs, int trx, const PilotPlan& plan, const TrxDictionaries& dict,
                             const SiOptions& options, Rng& rng);

struct DirectOptions {
    bool joint = true;  // shared support across both directions
    int lookahead = 5;
    bool offgrid = false;
};

// Estimates "direct_12" (TX1 -> RX2) and "direct_21".
EstimationReport estimate_direct(const ChannelSet& cs, const PilotPlan& plan, const DictionarySet& dicts,
                                 const DirectOptions& options, Rng& rng, const PriorEstimates& priors = {});

struct CascadedOptions {
    bool joint = true;
    int lookahead = 5;
};

// Supports recovered by the two-stage cascaded estimator, per direction
// ([0]: BS -> UE, [1]: UE -> BS).
struct CascadedSupports {
    std::array<std::vector<Eigen::Index>, 2> bs;
    std::array<std::vector<Eigen::Index>, 2> ue;
};

// Estimates "cascaded_dl" and "cascaded_ul" with the RIS phases all ones.
EstimationReport estimate_cascaded_stage12(const ChannelSet& cs, const PilotPlan& plan, const DictionarySet& dicts,
                                           const CascadedOptions& options, Rng& rng,
                                           CascadedSupports* supports = nullptr,
                                           const PriorEstimates& priors = {});

struct RisOptions {
    bool offgrid = false;
    std::optional<CMat> phases;  // Q x L; random unit modulus when unset
};

// Estimates "xi_dl" and "xi_ul"; columns are aligned to the true path order
// before scoring.
EstimationReport estimate_ris_angles(const ChannelSet& cs, const CascadedSupports& supports, const PilotPlan& plan,
                                     const DictionarySet& dicts, const RisOptions& options, Rng& rng,
                                     const PriorEstimates& priors = {});

// Greedy one-to-one assignment of estimated to true steering vectors by
// largest |inner product|; -1 for unmatched true columns.
std::vector<Eigen::Index> match_columns(const CMat& truth, const CMat& estimate);

}  // namespace fdris
