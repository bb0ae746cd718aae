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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace fdris {

std::string to_string(Campaign campaign) {
    switch (campaign) {
        case Campaign::si: return "si";
        case Campaign::direct: return "direct";
        case Campaign::cascaded: return "cascaded";
        case Campaign::beamforming: return "beamforming";
    }
    return "si";
}

Campaign campaign_from_string(const std::string& name) {
    for (Campaign c : {Campaign::si, Campaign::direct, Campaign::cascaded, Campaign::beamforming})
        if (to_string(c) == name) return c;
    throw ConfigError("unknown campaign: " + name);
}

std::vector<std::string> known_methods(Campaign campaign) {
    switch (campaign) {
        case Campaign::si:
            return {"kr-omp", "kr-laomp", "k-omp", "k-laomp", "kr-omp-offgrid", "kr-laomp-offgrid"};
        case Campaign::direct:
            return {"omp", "laomp", "d-omp", "d-laomp", "laomp-offgrid", "d-laomp-offgrid"};
        case Campaign::cascaded:
            return {"m-omp", "m-laomp", "d-m-omp", "d-m-laomp", "ris-laomp", "ris-laomp-offgrid"};
        case Campaign::beamforming:
            return {"digital", "hybrid", "decoupled", "ideal-fd", "ideal-hd"};
    }
    return {};
}

namespace {

struct MethodSpec {
    std::string name;
    bool has_power = false;
    double power_dbm = 0.0;
};

MethodSpec parse_method(const std::string& id) {
    MethodSpec m;
    const auto at = id.find('@');
    m.name = id.substr(0, at);
    if (at != std::string::npos) {
        try {
            std::size_t used = 0;
            m.power_dbm = std::stod(id.substr(at + 1), &used);
            if (used != id.size() - at - 1) throw ConfigError("bad power suffix");
        } catch (const std::exception&) {
            throw ConfigError("bad power suffix in method " + id);
        }
        m.has_power = true;
    }
    return m;
}

bool ends_with(const std::string& s, const std::string& tail) {
    return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

std::string strip(const std::string& s, const std::string& tail) {
    return ends_with(s, tail) ? s.substr(0, s.size() - tail.size()) : s;
}

}  // namespace

void ExperimentConfig::validate() const {
    scenario.validate();
    plan.validate();
    require(trials >= 1, "trials must be at least 1");
    require(threads >= 0, "threads must be non-negative");
    require(lookahead >= 1, "lookahead must be at least 1");
    require(si_trx == 0 || si_trx == 1, "si_trx must be 0 or 1");
    require(!methods.empty(), "no methods selected");
    const auto known = known_methods(campaign);
    for (const auto& id : methods) {
        require(id.find(',') == std::string::npos, "method names may not contain commas");
        const MethodSpec m = parse_method(id);
        if (std::find(known.begin(), known.end(), m.name) == known.end())
            throw ConfigError("method " + m.name + " is not available for campaign " + to_string(campaign));
    }
    if (!sweep.parameter.empty()) require(!sweep.values.empty(), "sweep has no values");
    require(beamforming.n_st >= 1 && beamforming.m_rf >= beamforming.n_st, "need m_rf >= n_st >= 1");
}

const ResultRow& ResultTable::find(double sweep, const std::string& method, const std::string& metric) const {
    for (const auto& r : rows)
        if (r.sweep == sweep && r.method == method && r.metric == metric) return r;
    throw DomainError("no result row for " + method + "/" + metric);
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t sweep, std::size_t trial) {
    return mix_seed(master, static_cast<std::uint64_t>(sweep) + 1, static_cast<std::uint64_t>(trial) + 1);
}

ExperimentConfig apply_sweep(const ExperimentConfig& config, double value) {
    ExperimentConfig c = config;
    const std::string& p = config.sweep.parameter;
    auto as_int = [&](const char* what) {
        const double r = std::round(value);
        require(std::abs(r - value) < 1e-9 && r >= 1.0, std::string("sweep value must be a positive integer for ") + what);
        return static_cast<int>(r);
    };
    if (p.empty()) return c;
    if (p == "n_s") c.plan.n_s = as_int("n_s");
    else if (p == "n_d") c.plan.n_d = as_int("n_d");
    else if (p == "n_c") c.plan.n_c = as_int("n_c");
    else if (p == "q") c.plan.q = as_int("q");
    else if (p == "pilot_dbm") c.plan.pilot_dbm = value;
    else if (p == "tx_dbm") c.beamforming.tx_dbm = value;
    else if (p == "power_dbm") {
        c.plan.pilot_dbm = value;
        c.beamforming.tx_dbm = value;
    } else if (p == "inr_db") c.scenario.inr_db = value;
    else if (p == "n_st") {
        c.beamforming.n_st = as_int("n_st");
        c.beamforming.m_rf = std::max(c.beamforming.m_rf, c.beamforming.n_st);
    } else throw ConfigError("unknown sweep parameter: " + p);
    return c;
}

LinkMatrices link_from_channels(const ChannelSet& cs, double tx_power) {
    const RisFactorization f0 = ris_factorization(cs.ris_links[0], cs.trx[0], cs.ris);
    const RisFactorization f1 = ris_factorization(cs.ris_links[1], cs.trx[1], cs.ris);
    const PassivePhases v = optimize_passive(angular_cascade(f0, f1, cs.ris), angular_cascade(f1, f0, cs.ris));
    LinkMatrices link;
    for (int i = 0; i < 2; ++i) {
        link.h_dc[i] = cs.h_d[i] + cs.cascaded(i, v.v);
        link.h_si[i] = cs.h_si(i);
    }
    link.power = {tx_power, tx_power};
    link.noise_power = cs.noise_power;
    return link;
}

std::vector<std::pair<std::string, double>> run_trial(const ExperimentConfig& config, std::uint64_t seed) {
    const Rng rng(seed);
    Rng scen = rng.child("scenario");
    const ChannelSet cs = generate_scenario(config.scenario, scen);
    std::vector<std::pair<std::string, double>> out;
    auto emit = [&](const std::string& method, const std::string& metric, double v) {
        out.emplace_back(method + "/" + metric, v);
    };

    if (config.campaign == Campaign::beamforming) {
        std::map<double, WmmseResult> digital_cache;
        std::optional<DictionarySet> dicts;
        const auto& bfs = config.beamforming;
        for (const auto& id : config.methods) {
            const MethodSpec m = parse_method(id);
            const double power = dbm_to_watt(m.has_power ? m.power_dbm : bfs.tx_dbm);
            const LinkMatrices link = link_from_channels(cs, power);
            const WmmseOptions wopt{bfs.n_st, bfs.wmmse_iterations, 1e-8};
            auto digital = [&]() -> const WmmseResult& {
                auto it = digital_cache.find(power);
                if (it == digital_cache.end()) {
                    Rng r = rng.child("digital");
                    it = digital_cache.emplace(power, wmmse_digital(link, wopt, r)).first;
                }
                return it->second;
            };
            double se = 0.0;
            if (m.name == "digital") {
                se = spectral_efficiency(link, digital().bf).sum;
            } else if (m.name == "hybrid") {
                Rng r = rng.child("hybrid");
                HybridOptions hopt;
                hopt.n_st = bfs.n_st;
                hopt.m_rf = bfs.m_rf;
                hopt.iterations = bfs.hybrid_iterations;
                hopt.cd_sweeps = bfs.cd_sweeps;
                se = spectral_efficiency(link, h_wmmse_sic(link, hopt, r).bf.digital()).sum;
            } else if (m.name == "decoupled") {
                if (!dicts) dicts = DictionarySet::build(cs, config.scenario);
                const HybridBeamformers hb = decoupled_baseline(
                    link, digital().bf, {&dicts->trx[0].tx, &dicts->trx[1].tx}, {&dicts->trx[0].rx, &dicts->trx[1].rx},
                    bfs.m_rf, config.lookahead);
                se = spectral_efficiency(link, hb.digital()).sum;
            } else if (m.name == "ideal-fd") {
                LinkMatrices clean = link;
                for (auto& h : clean.h_si) h.setZero();
                Rng r = rng.child("ideal-fd");
                se = spectral_efficiency(clean, wmmse_digital(clean, wopt, r).bf).sum;
            } else if (m.name == "ideal-hd") {
                // One direction at a time with twice the power, averaged over both directions.
                for (int i = 0; i < 2; ++i) {
                    LinkMatrices half = link;
                    for (auto& h : half.h_si) h.setZero();
                    half.power = {0.0, 0.0};
                    half.power[i] = 2.0 * power;
                    Rng r = rng.child(i == 0 ? "ideal-hd-dl" : "ideal-hd-ul");
                    se += 0.5 * spectral_efficiency(half, wmmse_digital(half, wopt, r).bf).sum;
                }
            }
            emit(id, "se", se);
        }
        return out;
    }

    const DictionarySet dicts = DictionarySet::build(cs, config.scenario);
    std::map<double, CascadedSupports> support_cache;
    for (const auto& id : config.methods) {
        const MethodSpec m = parse_method(id);
        PilotPlan plan = config.plan;
        if (m.has_power) plan.pilot_dbm = m.power_dbm;
        Rng meas = rng.child("measure");
        const bool offgrid = ends_with(m.name, "-offgrid");
        const std::string base = strip(m.name, "-offgrid");
        const int look = ends_with(base, "omp") && !ends_with(base, "laomp") ? 1 : config.lookahead;
        if (config.campaign == Campaign::si) {
            SiOptions opt;
            opt.framework = base.rfind("kr-", 0) == 0 ? SensingFramework::khatri_rao : SensingFramework::kronecker;
            opt.lookahead = look;
            opt.offgrid = offgrid;
            const EstimationReport rep = estimate_si(cs, config.si_trx, plan, dicts.trx[config.si_trx], opt, meas);
            emit(id, "nmse", rep.nmse("si_nlos"));
            emit(id, "nmse_total", rep.nmse("si"));
        } else if (config.campaign == Campaign::direct) {
            DirectOptions opt;
            opt.joint = base.rfind("d-", 0) == 0;
            opt.lookahead = look;
            opt.offgrid = offgrid;
            const EstimationReport rep = estimate_direct(cs, plan, dicts, opt, meas);
            emit(id, "nmse", 0.5 * (rep.nmse("direct_12") + rep.nmse("direct_21")));
        } else {
            if (base.rfind("ris-", 0) == 0) {
                auto it = support_cache.find(plan.pilot_dbm);
                if (it == support_cache.end()) {
                    CascadedSupports sup;
                    estimate_cascaded_stage12(cs, plan, dicts, {true, config.lookahead}, meas, &sup);
                    it = support_cache.emplace(plan.pilot_dbm, sup).first;
                }
                Rng ris_rng = rng.child("ris");
                RisOptions ropt;
                ropt.offgrid = offgrid;
                const EstimationReport rep = estimate_ris_angles(cs, it->second, plan, dicts, ropt, ris_rng);
                emit(id, "nmse", 0.5 * (rep.nmse("xi_dl") + rep.nmse("xi_ul")));
            } else {
                CascadedOptions opt{base.rfind("d-", 0) == 0, look};
                CascadedSupports sup;
                const EstimationReport rep = estimate_cascaded_stage12(cs, plan, dicts, opt, meas, &sup);
                if (opt.joint) support_cache.emplace(plan.pilot_dbm, sup);
                emit(id, "nmse", 0.5 * (rep.nmse("cascaded_dl") + rep.nmse("cascaded_ul")));
            }
        }
    }
    return out;
}

ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<double> points = config.sweep.values;
    if (config.sweep.parameter.empty()) points = {0.0};
    ResultTable table;
    table.sweep_parameter = config.sweep.parameter;
    const int threads = std::max(1, config.threads == 0 ? static_cast<int>(std::thread::hardware_concurrency())
                                                        : config.threads);
    for (std::size_t s = 0; s < points.size(); ++s) {
        const ExperimentConfig cfg = apply_sweep(config, points[s]);
        cfg.validate();
        const auto n = static_cast<std::size_t>(cfg.trials);
        std::vector<std::vector<std::pair<std::string, double>>> results(n);
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
        auto worker = [&](std::size_t first, std::size_t w) {
            try {
                for (std::size_t t = first; t < n; t += static_cast<std::size_t>(threads))
                    results[t] = run_trial(cfg, trial_seed(cfg.seed, s, t));
            } catch (...) {
                errors[w] = std::current_exception();
            }
        };
        if (threads == 1) {
            worker(0, 0);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < threads; ++w) pool.emplace_back(worker, static_cast<std::size_t>(w), static_cast<std::size_t>(w));
            for (auto& th : pool) th.join();
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        // Aggregate in trial order so results do not depend on scheduling.
        const auto& keys = results.front();
        for (std::size_t k = 0; k < keys.size(); ++k) {
            double sum = 0.0;
            for (const auto& r : results) sum += r[k].second;
            const double mean = sum / static_cast<double>(n);
            double sq = 0.0;
            for (const auto& r : results) sq += (r[k].second - mean) * (r[k].second - mean);
            const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
            const auto slash = keys[k].first.rfind('/');
            table.rows.push_back(
                {points[s], keys[k].first.substr(0, slash), keys[k].first.substr(slash + 1), mean, sd, cfg.trials});
        }
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const ResultRow& a, const ResultRow& b) {
        if (a.sweep != b.sweep) return a.sweep < b.sweep;
        if (a.method != b.method) return a.method < b.method;
        return a.metric < b.metric;
    });
    return table;
}

ExperimentConfig figure_preset(int figure) {
    ExperimentConfig c;
    c.trials = 100;
    switch (figure) {
        case 3:
            c.campaign = Campaign::si;
            c.sweep = {"n_s", {16, 32, 48, 64}};
            c.plan.pilot_dbm = 30.0;
            c.methods = {"kr-omp", "kr-laomp", "k-omp", "k-laomp", "kr-laomp-offgrid"};
            break;
        case 4:
            c.campaign = Campaign::direct;
            c.sweep = {"n_d", {16, 32, 48, 64}};
            c.methods = {"laomp@20", "d-laomp@20", "laomp@30", "d-laomp@30", "laomp-offgrid@30", "d-laomp-offgrid@30"};
            break;
        case 5:
            c.campaign = Campaign::cascaded;
            c.sweep = {"n_c", {16, 32, 48, 64}};
            c.methods = {"m-laomp@20", "d-m-laomp@20", "m-laomp@30", "d-m-laomp@30"};
            break;
        case 6:
            c.campaign = Campaign::cascaded;
            c.sweep = {"q", {32, 64, 128, 256}};
            c.methods = {"ris-laomp@20", "ris-laomp-offgrid@20", "ris-laomp@30", "ris-laomp-offgrid@30"};
            break;
        case 7:
        case 8:
            c.campaign = Campaign::beamforming;
            c.sweep = {"inr_db", {20, 25, 30, 35, 40, 45, 50, 55}};
            c.beamforming.tx_dbm = figure == 7 ? 10.0 : 20.0;
            c.methods = {"digital", "hybrid", "decoupled", "ideal-fd", "ideal-hd"};
            break;
        case 9:
            c.campaign = Campaign::beamforming;
            c.sweep = {"tx_dbm", {-5, 0, 5, 10, 15, 20, 25, 30}};
            c.scenario.inr_db = 35.0;
            c.methods = {"digital", "hybrid", "decoupled", "ideal-fd", "ideal-hd"};
            break;
        case 10:
            c.campaign = Campaign::beamforming;
            c.sweep = {"n_st", {1, 2, 3, 4, 5, 6, 7, 8}};
            c.scenario.inr_db = 35.0;
            c.beamforming.tx_dbm = 20.0;
            c.methods = {"digital", "hybrid", "decoupled", "ideal-fd", "ideal-hd"};
            break;
        default:
            throw ConfigError("figure presets exist for 3 to 10");
    }
    return c;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void emit_results(const ResultTable& table, std::ostream& out, OutputFormat format) {
    if (format == OutputFormat::csv) {
        out << "sweep,method,metric,mean,std,trials\n";
        for (const auto& r : table.rows)
            out << fmt17(r.sweep) << ',' << r.method << ',' << r.metric << ',' << fmt17(r.mean) << ','
                << fmt17(r.std) << ',' << r.trials << '\n';
        return;
    }
    out << to_json(table).dump(2) << '\n';
}

void write_results(const ResultTable& table, const std::string& path, OutputFormat format) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open output file " + path);
    emit_results(table, f, format);
}

}  // namespace fdris
