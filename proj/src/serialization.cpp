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

#include <istream>
#include <set>
#include <sstream>

namespace fdris {

namespace {

Json complex_to_json(cd v) { return Json::array({v.real(), v.imag()}); }

cd complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("complex values must be [re, im] pairs");
    return {j[0].get<double>(), j[1].get<double>()};
}

Json complex_list(const std::vector<cd>& v) {
    Json a = Json::array();
    for (cd x : v) a.push_back(complex_to_json(x));
    return a;
}

std::vector<cd> complex_list_from(const Json& j) {
    std::vector<cd> out;
    for (const auto& x : j) out.push_back(complex_from_json(x));
    return out;
}

Json cosine_list(const std::vector<DirCosines>& v) {
    Json a = Json::array();
    for (const auto& d : v) a.push_back(Json::array({d.ele, d.azi}));
    return a;
}

std::vector<DirCosines> cosine_list_from(const Json& j) {
    std::vector<DirCosines> out;
    for (const auto& x : j) out.push_back({x.at(0).get<double>(), x.at(1).get<double>()});
    return out;
}

Json geometry_to_json(const UpaGeometry& g) {
    return {{"n_z", g.n_z}, {"n_y", g.n_y}, {"spacing", g.spacing}, {"wavelength", g.wavelength}};
}

UpaGeometry geometry_from_json(const Json& j) {
    UpaGeometry g{j.at("n_z").get<int>(), j.at("n_y").get<int>(), j.at("spacing").get<double>(),
                  j.at("wavelength").get<double>()};
    g.validate();
    return g;
}

template <class F>
Json pair_json(const std::array<CMat, 2>& m, F&& f) {
    return Json::array({f(m[0]), f(m[1])});
}

void read_pair(const Json& j, std::array<CMat, 2>& out) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected a pair of matrices");
    out[0] = matrix_from_json(j[0]);
    out[1] = matrix_from_json(j[1]);
}

// Rejects keys outside `allowed` so typos in configs fail loudly.
void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void maybe(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Json dims_json(const ArrayDims& d) { return Json::array({d.n_z, d.n_y}); }

void maybe_dims(const Json& j, const char* key, ArrayDims& d) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [n_z, n_y]");
    d = {v[0].get<int>(), v[1].get<int>()};
}

}  // namespace

Json matrix_to_json(const CMat& m) {
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(complex_to_json(m(r, c)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

CMat matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const Json& data = j.at("data");
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ConfigError("matrix data length does not match its shape");
    CMat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(data[static_cast<std::size_t>(r * cols + c)]);
    return m;
}

Json to_json(const ChannelSet& cs) {
    Json trx = Json::array();
    for (const auto& t : cs.trx)
        trx.push_back({{"tx", geometry_to_json(t.tx)}, {"rx", geometry_to_json(t.rx)}, {"d0", t.d0}, {"tilt", t.tilt}});
    Json links = Json::array();
    for (const auto& l : cs.ris_links)
        links.push_back({{"trx", cosine_list(l.trx)},
                         {"ris", cosine_list(l.ris)},
                         {"to_ris", complex_list(l.to_ris)},
                         {"from_ris", complex_list(l.from_ris)}});
    Json si = Json::array();
    for (const auto& s : cs.si)
        si.push_back({{"nlos_angles", cosine_list(s.nlos.angles)},
                      {"nlos_gains", complex_list(s.nlos.gains)},
                      {"los_range", s.los_range},
                      {"los_gain", complex_to_json(s.los_gain)}});
    auto m = [](const CMat& x) { return matrix_to_json(x); };
    return {{"format", "fdris.channel_set.v1"},
            {"noise_power", cs.noise_power},
            {"ris", geometry_to_json(cs.ris)},
            {"transceivers", trx},
            {"paths",
             {{"direct",
               {{"side1", cosine_list(cs.direct.side1)},
                {"side2", cosine_list(cs.direct.side2)},
                {"gain_12", complex_list(cs.direct.gain_12)},
                {"gain_21", complex_list(cs.direct.gain_21)}}},
              {"ris_links", links},
              {"si", si}}},
            {"channels",
             {{"h_d", pair_json(cs.h_d, m)},
              {"h_t", pair_json(cs.h_t, m)},
              {"h_r", pair_json(cs.h_r, m)},
              {"h_si_los", pair_json(cs.h_si_los, m)},
              {"h_si_nlos", pair_json(cs.h_si_nlos, m)}}}};
}

ChannelSet channel_set_from_json(const Json& j) {
    if (j.value("format", std::string()) != "fdris.channel_set.v1") throw ConfigError("not a channel set document");
    ChannelSet cs;
    cs.noise_power = j.at("noise_power").get<double>();
    cs.ris = geometry_from_json(j.at("ris"));
    const Json& trx = j.at("transceivers");
    if (trx.size() != 2) throw ConfigError("expected two transceivers");
    for (int t = 0; t < 2; ++t) {
        const Json& e = trx[static_cast<std::size_t>(t)];
        cs.trx[t] = {geometry_from_json(e.at("tx")), geometry_from_json(e.at("rx")), e.at("d0").get<double>(),
                     e.at("tilt").get<double>()};
    }
    const Json& paths = j.at("paths");
    const Json& d = paths.at("direct");
    cs.direct = {cosine_list_from(d.at("side1")), cosine_list_from(d.at("side2")), complex_list_from(d.at("gain_12")),
                 complex_list_from(d.at("gain_21"))};
    for (int t = 0; t < 2; ++t) {
        const Json& l = paths.at("ris_links").at(static_cast<std::size_t>(t));
        cs.ris_links[t] = {cosine_list_from(l.at("trx")), cosine_list_from(l.at("ris")),
                           complex_list_from(l.at("to_ris")), complex_list_from(l.at("from_ris"))};
        const Json& s = paths.at("si").at(static_cast<std::size_t>(t));
        cs.si[t].nlos = {cosine_list_from(s.at("nlos_angles")), complex_list_from(s.at("nlos_gains"))};
        cs.si[t].los_range = s.at("los_range").get<double>();
        cs.si[t].los_gain = complex_from_json(s.at("los_gain"));
    }
    const Json& ch = j.at("channels");
    read_pair(ch.at("h_d"), cs.h_d);
    read_pair(ch.at("h_t"), cs.h_t);
    read_pair(ch.at("h_r"), cs.h_r);
    read_pair(ch.at("h_si_los"), cs.h_si_los);
    read_pair(ch.at("h_si_nlos"), cs.h_si_nlos);
    return cs;
}

Json to_json(const EstimationReport& report) {
    Json est = Json::array();
    for (const auto& e : report.estimates)
        est.push_back({{"name", e.name}, {"nmse", e.nmse}, {"estimate", matrix_to_json(e.estimate)}});
    Json ang = Json::array();
    for (const auto& a : report.angles) ang.push_back({{"role", a.role}, {"indices", a.indices}, {"cosines", cosine_list(a.cosines)}});
    return {{"pilot_slots", report.pilot_slots},
            {"refine_converged", report.refine_converged},
            {"estimates", est},
            {"angles", ang}};
}

Json to_json(const ResultTable& table) {
    Json rows = Json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"sweep", r.sweep},
                        {"method", r.method},
                        {"metric", r.metric},
                        {"mean", r.mean},
                        {"std", r.std},
                        {"trials", r.trials}});
    return {{"sweep_parameter", table.sweep_parameter}, {"rows", rows}};
}

ResultTable results_from_json(const Json& j) {
    ResultTable t;
    t.sweep_parameter = j.value("sweep_parameter", std::string());
    for (const auto& r : j.at("rows"))
        t.rows.push_back({r.at("sweep").get<double>(), r.at("method").get<std::string>(),
                          r.at("metric").get<std::string>(), r.at("mean").get<double>(), r.at("std").get<double>(),
                          r.at("trials").get<int>()});
    return t;
}

ResultTable read_results(std::istream& in, OutputFormat format) {
    if (format == OutputFormat::json) return results_from_json(Json::parse(in));
    ResultTable t;
    std::string line;
    if (!std::getline(in, line) || line != "sweep,method,metric,mean,std,trials")
        throw ConfigError("unexpected CSV header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw ConfigError("CSV row must have six fields");
        t.rows.push_back({std::stod(f[0]), f[1], f[2], std::stod(f[3]), std::stod(f[4]), std::stoi(f[5])});
    }
    return t;
}

Json to_json(const ExperimentConfig& c) {
    const ScenarioConfig& s = c.scenario;
    return {
        {"campaign", to_string(c.campaign)},
        {"seed", c.seed},
        {"trials", c.trials},
        {"threads", c.threads},
        {"lookahead", c.lookahead},
        {"si_trx", c.si_trx},
        {"methods", c.methods},
        {"sweep", {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}}},
        {"scenario",
         {{"bs_tx", dims_json(s.bs_tx)},
          {"bs_rx", dims_json(s.bs_rx)},
          {"ue_tx", dims_json(s.ue_tx)},
          {"ue_rx", dims_json(s.ue_rx)},
          {"ris", dims_json(s.ris)},
          {"wavelength", s.wavelength},
          {"spacing_wavelengths", s.spacing_wavelengths},
          {"d0_wavelengths", s.d0_wavelengths},
          {"bs_ris_distance", s.bs_ris_distance},
          {"bs_ue_range", s.bs_ue_range},
          {"ris_ue_range", s.ris_ue_range},
          {"si_scatter_range", s.si_scatter_range},
          {"path_range", s.path_range},
          {"noise_dbm", s.noise_dbm},
          {"inr_db", s.inr_db},
          {"on_grid", s.on_grid},
          {"grid_oversampling", s.grid_oversampling},
          {"ris_grid_oversampling", s.ris_grid_oversampling},
          {"los_first_path", s.los_first_path}}},
        {"pilots",
         {{"n_s", c.plan.n_s},
          {"n_d", c.plan.n_d},
          {"n_c", c.plan.n_c},
          {"q", c.plan.q},
          {"pilot_dbm", c.plan.pilot_dbm},
          {"rf_chains", c.plan.rf_chains}}},
        {"beamforming",
         {{"tx_dbm", c.beamforming.tx_dbm},
          {"n_st", c.beamforming.n_st},
          {"m_rf", c.beamforming.m_rf},
          {"hybrid_iterations", c.beamforming.hybrid_iterations},
          {"cd_sweeps", c.beamforming.cd_sweeps},
          {"wmmse_iterations", c.beamforming.wmmse_iterations}}},
    };
}

ExperimentConfig experiment_from_json(const Json& j) {
    try {
        check_keys(j, {"figure", "campaign", "seed", "trials", "threads", "lookahead", "si_trx", "methods", "sweep",
                       "scenario", "pilots", "beamforming"},
                   "config");
        ExperimentConfig c = j.contains("figure") ? figure_preset(j.at("figure").get<int>()) : ExperimentConfig{};
        if (j.contains("campaign")) c.campaign = campaign_from_string(j.at("campaign").get<std::string>());
        maybe(j, "seed", c.seed);
        maybe(j, "trials", c.trials);
        maybe(j, "threads", c.threads);
        maybe(j, "lookahead", c.lookahead);
        maybe(j, "si_trx", c.si_trx);
        maybe(j, "methods", c.methods);
        if (j.contains("sweep")) {
            const Json& s = j.at("sweep");
            check_keys(s, {"parameter", "values"}, "sweep");
            maybe(s, "parameter", c.sweep.parameter);
            maybe(s, "values", c.sweep.values);
        }
        if (j.contains("scenario")) {
            const Json& s = j.at("scenario");
            check_keys(s, {"bs_tx", "bs_rx", "ue_tx", "ue_rx", "ris", "wavelength", "spacing_wavelengths",
                           "d0_wavelengths", "bs_ris_distance", "bs_ue_range", "ris_ue_range", "si_scatter_range",
                           "path_range", "noise_dbm", "inr_db", "on_grid", "grid_oversampling",
                           "ris_grid_oversampling", "los_first_path"},
                       "scenario");
            ScenarioConfig& sc = c.scenario;
            maybe_dims(s, "bs_tx", sc.bs_tx);
            maybe_dims(s, "bs_rx", sc.bs_rx);
            maybe_dims(s, "ue_tx", sc.ue_tx);
            maybe_dims(s, "ue_rx", sc.ue_rx);
            maybe_dims(s, "ris", sc.ris);
            maybe(s, "wavelength", sc.wavelength);
            maybe(s, "spacing_wavelengths", sc.spacing_wavelengths);
            maybe(s, "d0_wavelengths", sc.d0_wavelengths);
            maybe(s, "bs_ris_distance", sc.bs_ris_distance);
            maybe(s, "bs_ue_range", sc.bs_ue_range);
            maybe(s, "ris_ue_range", sc.ris_ue_range);
            maybe(s, "si_scatter_range", sc.si_scatter_range);
            maybe(s, "path_range", sc.path_range);
            maybe(s, "noise_dbm", sc.noise_dbm);
            maybe(s, "inr_db", sc.inr_db);
            maybe(s, "on_grid", sc.on_grid);
            maybe(s, "grid_oversampling", sc.grid_oversampling);
            maybe(s, "ris_grid_oversampling", sc.ris_grid_oversampling);
            maybe(s, "los_first_path", sc.los_first_path);
        }
        if (j.contains("pilots")) {
            const Json& p = j.at("pilots");
            check_keys(p, {"n_s", "n_d", "n_c", "q", "pilot_dbm", "rf_chains"}, "pilots");
            maybe(p, "n_s", c.plan.n_s);
            maybe(p, "n_d", c.plan.n_d);
            maybe(p, "n_c", c.plan.n_c);
            maybe(p, "q", c.plan.q);
            maybe(p, "pilot_dbm", c.plan.pilot_dbm);
            maybe(p, "rf_chains", c.plan.rf_chains);
        }
        if (j.contains("beamforming")) {
            const Json& b = j.at("beamforming");
            check_keys(b, {"tx_dbm", "n_st", "m_rf", "hybrid_iterations", "cd_sweeps", "wmmse_iterations"},
                       "beamforming");
            maybe(b, "tx_dbm", c.beamforming.tx_dbm);
            maybe(b, "n_st", c.beamforming.n_st);
            maybe(b, "m_rf", c.beamforming.m_rf);
            maybe(b, "hybrid_iterations", c.beamforming.hybrid_iterations);
            maybe(b, "cd_sweeps", c.beamforming.cd_sweeps);
            maybe(b, "wmmse_iterations", c.beamforming.wmmse_iterations);
        }
        return c;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

}  // namespace fdris
