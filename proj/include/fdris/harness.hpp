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

#include "fdris/beamforming.hpp"
#include "fdris/pipelines.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fdris {

enum class Campaign { si, direct, cascaded, beamforming };

struct BeamformingSetup {
    double tx_dbm = 20.0;
    int n_st = 4;
    int m_rf = 4;
    int hybrid_iterations = 200;
    int cd_sweeps = 3;
    int wmmse_iterations = 200;
};

struct Sweep {
    std::string parameter;       // empty: one point at value 0
    std::vector<double> values;
};

// Method identifiers take an optional "@<dBm>" suffix that overrides the
// pilot or transmit power, e.g. "d-laomp@20".
struct ExperimentConfig {
    Campaign campaign = Campaign::si;
    ScenarioConfig scenario;
    PilotPlan plan;
    BeamformingSetup beamforming;
    Sweep sweep;
    std::vector<std::string> methods;
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    int lookahead = 5;
    int si_trx = 1;

    void validate() const;
};

struct ResultRow {
    double sweep = 0.0;
    std::string method;
    std::string metric;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation across trials
    int trials = 0;
};

struct ResultTable {
    std::string sweep_parameter;
    std::vector<ResultRow> rows;

    const ResultRow& find(double sweep, const std::string& method, const std::string& metric) const;
};

enum class OutputFormat { csv, json };

// Seed of trial `trial` at sweep point `sweep`.
std::uint64_t trial_seed(std::uint64_t master, std::size_t sweep, std::size_t trial);

ExperimentConfig apply_sweep(const ExperimentConfig& config, double value);

// Per-trial metric values, keyed "method/metric", in a fixed order.
std::vector<std::pair<std::string, double>> run_trial(const ExperimentConfig& config, std::uint64_t seed);

ResultTable run_experiment(const ExperimentConfig& config);

ExperimentConfig figure_preset(int figure);
std::vector<std::string> known_methods(Campaign campaign);

void emit_results(const ResultTable& table, std::ostream& out, OutputFormat format);
void write_results(const ResultTable& table, const std::string& path, OutputFormat format);
ResultTable read_results(std::istream& in, OutputFormat format);

std::string to_string(Campaign campaign);
Campaign campaign_from_string(const std::string& name);

// Link matrices for beamforming with the RIS phases chosen by optimize_passive
// on the true angular cascades.
LinkMatrices link_from_channels(const ChannelSet& cs, double tx_power);

}  // namespace fdris
