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

#include "fdris/harness.hpp"
#include "fdris/serialization.hpp"
#include "support.hpp"

#include <doctest.h>

#include <map>
#include <set>

#include <cmath>
#include <sstream>

using namespace fdris;
using namespace fdris::testing;

namespace {

std::string csv_of(const ResultTable& t) {
    std::ostringstream os;
    emit_results(t, os, OutputFormat::csv);
    return os.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

// Reduced arrays keep trial costs in the millisecond range.
ExperimentConfig small_config(Campaign campaign) {
    ExperimentConfig c;
    c.campaign = campaign;
    c.scenario.bs_tx = c.scenario.bs_rx = c.scenario.ue_tx = c.scenario.ue_rx = {4, 2};
    c.scenario.ris = {4, 4};
    c.plan = {8, 8, 8, 8, 30.0, 4};
    c.beamforming.n_st = 1;
    c.beamforming.m_rf = 2;
    c.beamforming.hybrid_iterations = 5;
    c.beamforming.wmmse_iterations = 20;
    c.trials = 4;
    c.methods = known_methods(campaign);
    return c;
}

bool same_tables(const ResultTable& a, const ResultTable& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        const auto &x = a.rows[k], &y = b.rows[k];
        if (x.sweep != y.sweep || x.method != y.method || x.metric != y.metric || x.mean != y.mean || x.std != y.std ||
            x.trials != y.trials)
            return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("empty table writes only the header") {
    CHECK(csv_of({}) == "sweep,method,metric,mean,std,trials\n");
}

TEST_CASE("one-row table writes two lines") {
    ResultTable t{"n_s", {{16, "kr-laomp", "nmse", 0.125, 0.5, 3}}};
    const std::string s = csv_of(t);
    CHECK(count_lines(s) == 2);
    CHECK(s.substr(s.find('\n') + 1) == "16,kr-laomp,nmse,0.125,0.5,3\n");
}

TEST_CASE("CSV and JSON round trip to identical tables") {
    Rng rng(1);
    ResultTable t{"inr_db", {}};
    for (int k = 0; k < 20; ++k)
        t.rows.push_back({rng.uniform(-50, 50), k % 2 ? "hybrid" : "digital@20", "se", rng.normal(0, 1e3),
                          std::abs(rng.normal(0, 1e-7)), k + 1});
    t.rows.push_back({0.1, "x", "nmse", std::nextafter(1.0, 2.0), 1.0 / 3.0, 1});
    for (auto fmt : {OutputFormat::csv, OutputFormat::json}) {
        std::ostringstream os;
        emit_results(t, os, fmt);
        std::istringstream is(os.str());
        const ResultTable back = read_results(is, fmt);
        CHECK(same_tables(t, back));
        if (fmt == OutputFormat::json) CHECK(back.sweep_parameter == "inr_db");
    }
}

TEST_CASE("malformed CSV is rejected") {
    std::istringstream bad_header("a,b\n");
    CHECK_THROWS(read_results(bad_header, OutputFormat::csv));
    std::istringstream short_row("sweep,method,metric,mean,std,trials\n1,a,b,2\n");
    CHECK_THROWS(read_results(short_row, OutputFormat::csv));
}

TEST_CASE("trial seeds differ across sweep points and trials") {
    std::set<std::uint64_t> seen;
    for (std::size_t s = 0; s < 10; ++s)
        for (std::size_t t = 0; t < 100; ++t) seen.insert(trial_seed(42, s, t));
    CHECK(seen.size() == 1000);
    CHECK(trial_seed(42, 3, 7) == trial_seed(42, 3, 7));
    CHECK(trial_seed(42, 3, 7) != trial_seed(43, 3, 7));
}

TEST_CASE("results do not depend on the thread count") {
    for (Campaign c : {Campaign::si, Campaign::direct, Campaign::cascaded, Campaign::beamforming}) {
        ExperimentConfig cfg = small_config(c);
        cfg.sweep = {"pilot_dbm", {20.0, 30.0}};
        if (c == Campaign::beamforming) cfg.sweep = {"tx_dbm", {10.0, 20.0}};
        cfg.threads = 1;
        const ResultTable one = run_experiment(cfg);
        cfg.threads = 3;
        const ResultTable three = run_experiment(cfg);
        CHECK(same_tables(one, three));
        CHECK(one.rows.size() > 0);
        for (const auto& r : one.rows) {
            CHECK(std::isfinite(r.mean));
            CHECK(r.mean >= 0.0);
            CHECK(r.trials == 4);
        }
    }
}

TEST_CASE("duplicated methods give identical rows") {
    ExperimentConfig cfg = small_config(Campaign::direct);
    cfg.trials = 1;
    cfg.methods = {"d-laomp", "d-laomp"};
    const ResultTable t = run_experiment(cfg);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].mean == t.rows[1].mean);
}

TEST_CASE("beamforming trials report every method") {
    const ExperimentConfig cfg = small_config(Campaign::beamforming);
    const auto vals = run_trial(cfg, 5);
    CHECK(vals.size() == 5);
    for (const auto& [key, v] : vals) {
        CHECK(key.substr(key.size() - 3) == "/se");
        CHECK(v >= 0.0);
    }
}

TEST_CASE("power suffixes override the configured power") {
    ExperimentConfig cfg = small_config(Campaign::direct);
    cfg.trials = 2;
    cfg.methods = {"d-laomp@20", "d-laomp"};
    cfg.plan.pilot_dbm = 20.0;
    const ResultTable t = run_experiment(cfg);
    CHECK(t.find(0.0, "d-laomp@20", "nmse").mean == t.find(0.0, "d-laomp", "nmse").mean);
    cfg.methods = {"d-laomp@2x"};
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("configuration validation") {
    ExperimentConfig cfg = small_config(Campaign::si);
    cfg.methods = {"hybrid"};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config(Campaign::si);
    cfg.trials = 0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = small_config(Campaign::si);
    cfg.sweep = {"n_s", {}};
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.sweep = {"colour", {1.0}};
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    CHECK_THROWS_AS(campaign_from_string("weather"), ConfigError);
    for (Campaign c : {Campaign::si, Campaign::direct, Campaign::cascaded, Campaign::beamforming})
        CHECK(campaign_from_string(to_string(c)) == c);
}

TEST_CASE("sweeps update the named parameter") {
    const ExperimentConfig base = small_config(Campaign::beamforming);
    ExperimentConfig c = base;
    c.sweep = {"inr_db", {0}};
    CHECK(apply_sweep(c, 42.0).scenario.inr_db == 42.0);
    c.sweep = {"n_st", {3}};
    const ExperimentConfig s = apply_sweep(c, 3.0);
    CHECK(s.beamforming.n_st == 3);
    CHECK(s.beamforming.m_rf == 3);
    c.sweep = {"q", {1}};
    CHECK_THROWS_AS(apply_sweep(c, 2.5), DomainError);
}

TEST_CASE("figure presets cover every figure with the printed axes") {
    const std::map<int, std::vector<double>> axes{
        {3, {16, 32, 48, 64}},  {4, {16, 32, 48, 64}},  {5, {16, 32, 48, 64}},
        {6, {32, 64, 128, 256}}, {7, {20, 25, 30, 35, 40, 45, 50, 55}}, {8, {20, 25, 30, 35, 40, 45, 50, 55}},
        {9, {-5, 0, 5, 10, 15, 20, 25, 30}}, {10, {1, 2, 3, 4, 5, 6, 7, 8}}};
    for (const auto& [fig, values] : axes) {
        const ExperimentConfig c = figure_preset(fig);
        CHECK_NOTHROW(c.validate());
        CHECK(c.sweep.values == values);
        CHECK(c.trials == 100);
    }
    CHECK(figure_preset(7).beamforming.tx_dbm == 10.0);
    CHECK(figure_preset(8).beamforming.tx_dbm == 20.0);
    CHECK(figure_preset(3).plan.pilot_dbm == 30.0);
    CHECK_THROWS_AS(figure_preset(2), ConfigError);
    CHECK_THROWS_AS(figure_preset(11), ConfigError);
}

TEST_CASE("matrix JSON is row-major pairs") {
    CMat m(2, 2);
    m << cd(1, 2), cd(3, 4), cd(5, 6), cd(7, 8);
    const Json j = matrix_to_json(m);
    CHECK(j.at("rows") == 2);
    CHECK(j.at("data")[1] == Json::array({3.0, 4.0}));
    CHECK(rel_diff(matrix_from_json(j), m) == 0.0);
    Json bad = j;
    bad["rows"] = 3;
    CHECK_THROWS(matrix_from_json(bad));
}

TEST_CASE("channel sets round trip through JSON") {
    ScenarioConfig cfg;
    cfg.bs_tx = cfg.bs_rx = {4, 4};
    cfg.ris = {4, 4};
    Rng rng(2);
    const ChannelSet cs = generate_scenario(cfg, rng);
    const Json j = to_json(cs);
    CHECK(j.at("format") == "fdris.channel_set.v1");
    const ChannelSet back = channel_set_from_json(Json::parse(j.dump()));
    CHECK(back.noise_power == cs.noise_power);
    CHECK(back.ris.n_z == cs.ris.n_z);
    CHECK(back.trx[1].d0 == cs.trx[1].d0);
    CHECK(back.direct.side1 == cs.direct.side1);
    CHECK(back.ris_links[1].from_ris == cs.ris_links[1].from_ris);
    CHECK(back.si[0].los_gain == cs.si[0].los_gain);
    for (int i = 0; i < 2; ++i) {
        CHECK(rel_diff(back.h_d[i], cs.h_d[i]) == 0.0);
        CHECK(rel_diff(back.h_t[i], cs.h_t[i]) == 0.0);
        CHECK(rel_diff(back.h_r[i], cs.h_r[i]) == 0.0);
        CHECK(rel_diff(back.h_si(i), cs.h_si(i)) == 0.0);
    }
}

TEST_CASE("estimation reports serialize their estimates") {
    EstimationReport rep;
    rep.estimates.push_back({"si", CMat::Identity(2, 2), 0.25});
    rep.angles.push_back({"si", {3, 7}, {{0.5, -0.25}, {0.0, 0.0}}});
    rep.pilot_slots = 256;
    const Json j = to_json(rep);
    CHECK(j.at("pilot_slots") == 256);
    CHECK(j.at("estimates")[0].at("nmse") == 0.25);
    CHECK(j.at("angles")[0].at("indices") == Json::array({3, 7}));
}

TEST_CASE("experiment configurations round trip through JSON") {
    ExperimentConfig c = figure_preset(4);
    c.seed = 99;
    c.threads = 2;
    c.scenario.inr_db = 41.5;
    c.scenario.on_grid = true;
    c.plan.q = 16;
    c.beamforming.cd_sweeps = 7;
    const ExperimentConfig back = experiment_from_json(Json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.methods == c.methods);
    CHECK(back.sweep.values == c.sweep.values);
}

TEST_CASE("configuration JSON rejects unknown keys and keeps defaults") {
    CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"campaign": "si", "colour": 1})")), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"pilots": {"n_x": 3}})")), ConfigError);
    CHECK_THROWS_AS(experiment_from_json(Json::parse(R"({"trials": "many"})")), ConfigError);
    const ExperimentConfig c = experiment_from_json(Json::parse(R"({"campaign": "direct", "trials": 7})"));
    CHECK(c.campaign == Campaign::direct);
    CHECK(c.trials == 7);
    CHECK(c.plan.n_d == PilotPlan{}.n_d);
    const ExperimentConfig f = experiment_from_json(Json::parse(R"({"figure": 6, "trials": 3})"));
    CHECK(f.sweep.parameter == "q");
    CHECK(f.trials == 3);
}

}
