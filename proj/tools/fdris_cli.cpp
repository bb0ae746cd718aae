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

#include "fdris/serialization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

using namespace fdris;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> threads;
    std::string out;
    std::string format = "csv";
    std::string report_out;
    std::string trace_out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "ExperimentConfig JSON file");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--trials", f.trials, "Monte Carlo trials per sweep point")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", f.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", f.out, "output file (stdout when omitted)");
    cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
}

ExperimentConfig load_config(const CommonFlags& f, Campaign campaign, std::optional<int> figure) {
    ExperimentConfig c = figure ? figure_preset(*figure) : ExperimentConfig{};
    if (!figure) {
        c.campaign = campaign;
        c.methods = known_methods(campaign);
    }
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError("cannot open config file " + f.config);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ConfigError(f.config + ": " + e.what());
        }
        if (!figure && !j.contains("figure") && !j.contains("campaign")) j["campaign"] = to_string(campaign);
        if (!figure && !j.contains("figure") && !j.contains("methods")) j["methods"] = known_methods(campaign);
        if (figure && !j.contains("figure")) j["figure"] = *figure;
        c = experiment_from_json(j);
        if (!figure && c.campaign != campaign)
            throw ConfigError("config campaign " + to_string(c.campaign) + " does not match the subcommand");
    }
    if (f.seed) c.seed = *f.seed;
    if (f.trials) c.trials = *f.trials;
    if (f.threads) c.threads = *f.threads;
    return c;
}

void write_json(const Json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open output file " + path);
    f << j.dump(2) << '\n';
}

// One scenario at the first sweep point, written with its estimates.
void single_report(const ExperimentConfig& config, const std::string& path) {
    ExperimentConfig c = config.sweep.parameter.empty() ? config : apply_sweep(config, config.sweep.values.front());
    const Rng rng(trial_seed(c.seed, 0, 0));
    Rng scen = rng.child("scenario");
    const ChannelSet cs = generate_scenario(c.scenario, scen);
    Json doc{{"channels", to_json(cs)}};
    if (c.campaign != Campaign::beamforming) {
        const DictionarySet dicts = DictionarySet::build(cs, c.scenario);
        Rng meas = rng.child("measure");
        EstimationReport rep;
        if (c.campaign == Campaign::si) {
            SiOptions opt;
            opt.lookahead = c.lookahead;
            rep = estimate_si(cs, c.si_trx, c.plan, dicts.trx[c.si_trx], opt, meas);
        } else if (c.campaign == Campaign::direct) {
            rep = estimate_direct(cs, c.plan, dicts, {true, c.lookahead, false}, meas);
        } else {
            rep = estimate_cascaded_stage12(cs, c.plan, dicts, {true, c.lookahead}, meas, nullptr);
        }
        doc["report"] = to_json(rep);
    }
    write_json(doc, path);
}

// Convergence of both solvers on one scenario at the first sweep point.
void convergence_trace(const ExperimentConfig& config, const std::string& path) {
    ExperimentConfig c = config.sweep.parameter.empty() ? config : apply_sweep(config, config.sweep.values.front());
    const Rng rng(trial_seed(c.seed, 0, 0));
    Rng scen = rng.child("scenario");
    const ChannelSet cs = generate_scenario(c.scenario, scen);
    const auto& bfs = c.beamforming;
    const LinkMatrices link = link_from_channels(cs, dbm_to_watt(bfs.tx_dbm));
    Rng r_dig = rng.child("digital");
    const WmmseResult dig = wmmse_digital(link, {bfs.n_st, bfs.wmmse_iterations, 1e-8}, r_dig);
    HybridOptions hopt;
    hopt.n_st = bfs.n_st;
    hopt.m_rf = bfs.m_rf;
    hopt.iterations = bfs.hybrid_iterations;
    hopt.cd_sweeps = bfs.cd_sweeps;
    Rng r_hyb = rng.child("hybrid");
    const HybridResult hyb = h_wmmse_sic(link, hopt, r_hyb);
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open output file " + path);
    f.precision(17);
    f << "solver,iteration,objective,sum_se\n";
    for (const auto& p : dig.trace) f << "digital," << p.iteration << ',' << p.objective << ',' << p.sum_se << '\n';
    for (const auto& p : hyb.trace) f << "hybrid," << p.iteration << ',' << p.objective << ',' << p.sum_se << '\n';
}

int run(const CommonFlags& f, const ExperimentConfig& c) {
    const ResultTable table = run_experiment(c);
    const OutputFormat fmt = f.format == "json" ? OutputFormat::json : OutputFormat::csv;
    if (f.out.empty()) emit_results(table, std::cout, fmt);
    else write_results(table, f.out, fmt);
    if (!f.report_out.empty()) single_report(c, f.report_out);
    if (!f.trace_out.empty()) convergence_trace(c, f.trace_out);
    return 0;
}

// Fast sanity checks of closed forms and exact recovery.
int selftest() {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
        if (!ok) ++failures;
    };
    const double lambda = 3e-3;
    const UpaGeometry g{8, 8, lambda / 2, lambda};
    const DuplexLayout layout{g, g, 20 * lambda, 0.0};
    check("min scatter distance", std::abs(min_scatter_distance(layout, kPi / 4) - 9.6) < 1e-9);

    Rng rng(7);
    const CMat a = rng.complex_normal(5, 4, 1.0);
    const CMat b = rng.complex_normal(4, 6, 1.0);
    const CVec x = rng.complex_normal(4, 1, 1.0).col(0);
    const CMat lhs = a * x.asDiagonal() * b;
    check("khatri-rao vectorization", (vec(lhs) - kr_sensing(b, a) * x).norm() < 1e-12 * lhs.norm());

    const Dictionary dict = build_dictionary(g, {8, 8}, DictionaryKind::tx);
    const DenseSensing op(rng.complex_normal(40, 1, 1.0).col(0).asDiagonal() * dict.atoms.topRows(40));
    CVec truth = CVec::Zero(op.cols());
    truth(3) = {1.0, -0.5};
    truth(40) = {0.25, 2.0};
    const CVec y = op.materialize() * truth;
    const SparseSolution sol = laomp(y, op, {2, 0.0}, 3);
    CVec est = CVec::Zero(op.cols());
    for (std::size_t k = 0; k < sol.support.size(); ++k) est(sol.support[k]) = sol.coefficients(static_cast<Eigen::Index>(k));
    check("noiseless recovery", (est - truth).squaredNorm() < 1e-18 * truth.squaredNorm());
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Full-duplex RIS mmWave channel estimation and beamforming simulator"};
    app.require_subcommand(1);
    CommonFlags flags;
    int figure = 0;

    struct Entry {
        const char* name;
        const char* help;
        Campaign campaign;
    };
    const Entry entries[] = {
        {"estimate-si", "self-interference channel estimation campaign", Campaign::si},
        {"estimate-direct", "direct channel estimation campaign", Campaign::direct},
        {"estimate-cascaded", "cascaded and RIS-angle estimation campaign", Campaign::cascaded},
        {"beamform", "beamforming spectral efficiency campaign", Campaign::beamforming},
    };
    std::vector<std::pair<CLI::App*, Campaign>> campaigns;
    for (const auto& e : entries) {
        CLI::App* cmd = app.add_subcommand(e.name, e.help);
        add_common(cmd, flags);
        if (e.campaign != Campaign::beamforming)
            cmd->add_option("--report-out", flags.report_out, "write one scenario and its estimates as JSON");
        else
            cmd->add_option("--trace-out", flags.trace_out, "write solver convergence on one scenario as CSV");
        campaigns.emplace_back(cmd, e.campaign);
    }
    CLI::App* fig = app.add_subcommand("figure", "run a figure preset");
    fig->add_option("number", figure, "figure number")->required()->check(CLI::Range(3, 10));
    add_common(fig, flags);
    CLI::App* self = app.add_subcommand("selftest", "quick internal consistency checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (self->parsed()) return selftest();
        if (fig->parsed()) return run(flags, load_config(flags, Campaign::si, figure));
        for (const auto& [cmd, campaign] : campaigns)
            if (cmd->parsed()) return run(flags, load_config(flags, campaign, std::nullopt));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
