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

#include "fdris/channels.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fdris {

double path_gain_variance(const PathLossModel& model, double distance, Rng& rng) {
    require(distance > 0.0, "path distance must be positive");
    const double u = rng.uniform(0.0, 1.0);
    const double s = rng.normal(0.0, 4.0);
    const double aleph = std::pow(u, 1.8) * std::pow(10.0, 0.1 * s);
    const double pl = model.intercept + 10.0 * model.exponent * std::log10(distance) + rng.normal(0.0, model.shadow_db);
    return aleph * std::pow(10.0, -0.1 * pl);
}

cd sample_path_gain(const PathLossModel& model, double distance, Rng& rng) {
    const double var = path_gain_variance(model, distance, rng);
    return rng.complex_normal(var);
}

CMat ChannelSet::cascaded(int i, const CVec& v) const {
    const int j = 1 - i;
    require_dims(v.size() == h_t[i].rows(), "cascaded: phase vector length mismatch");
    return h_r[j] * v.asDiagonal() * h_t[i];
}

namespace {

void check_counts(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string("path set size mismatch: ") + what);
}

}  // namespace

std::pair<CMat, CMat> gen_direct(const DirectPaths& paths, const DuplexLayout& trx1, const DuplexLayout& trx2) {
    const std::size_t a = paths.count();
    check_counts(paths.side2.size(), a, "direct side2");
    check_counts(paths.gain_12.size(), a, "direct gain_12");
    check_counts(paths.gain_21.size(), a, "direct gain_21");
    CMat h12 = CMat::Zero(trx2.rx.size(), trx1.tx.size());
    CMat h21 = CMat::Zero(trx1.rx.size(), trx2.tx.size());
    if (a == 0) return {h12, h21};
    const double s12 = std::sqrt(static_cast<double>(trx1.tx.size() * trx2.rx.size()) / a);
    const double s21 = std::sqrt(static_cast<double>(trx2.tx.size() * trx1.rx.size()) / a);
    for (std::size_t p = 0; p < a; ++p) {
        h12 += s12 * paths.gain_12[p] * rx_planar_response(trx2, paths.side2[p]) *
               planar_response(trx1.tx, paths.side1[p]).adjoint();
        h21 += s21 * paths.gain_21[p] * rx_planar_response(trx1, paths.side1[p]) *
               planar_response(trx2.tx, paths.side2[p]).adjoint();
    }
    return {h12, h21};
}

RisFactorization ris_factorization(const RisLinkPaths& paths, const DuplexLayout& trx, const UpaGeometry& ris) {
    const std::size_t b = paths.count();
    check_counts(paths.ris.size(), b, "ris angles");
    check_counts(paths.to_ris.size(), b, "ris to_ris");
    check_counts(paths.from_ris.size(), b, "ris from_ris");
    const auto n = static_cast<Eigen::Index>(b);
    RisFactorization f{CMat(trx.tx.size(), n), CMat(trx.rx.size(), n), CMat(ris.size(), n), CVec(n), CVec(n)};
    if (b == 0) return f;
    const double st = std::sqrt(static_cast<double>(trx.tx.size() * ris.size()) / b);
    const double sr = std::sqrt(static_cast<double>(trx.rx.size() * ris.size()) / b);
    for (Eigen::Index p = 0; p < n; ++p) {
        const auto q = static_cast<std::size_t>(p);
        f.pi_tx.col(p) = planar_response(trx.tx, paths.trx[q]);
        f.pi_rx.col(p) = rx_planar_response(trx, paths.trx[q]);
        f.pi_ris.col(p) = planar_response(ris, paths.ris[q]);
        f.to_ris(p) = st * paths.to_ris[q];
        f.from_ris(p) = sr * paths.from_ris[q];
    }
    return f;
}

std::pair<CMat, CMat> gen_ris_link(const RisLinkPaths& paths, const DuplexLayout& trx, const UpaGeometry& ris) {
    const RisFactorization f = ris_factorization(paths, trx, ris);
    return {f.pi_ris * f.to_ris.asDiagonal() * f.pi_tx.adjoint(), f.pi_rx * f.from_ris.asDiagonal() * f.pi_ris.adjoint()};
}

std::pair<CMat, CMat> gen_si(const DuplexLayout& layout, const PathSet& nlos, double los_range, cd los_gain) {
    layout.validate();
    check_counts(nlos.gains.size(), nlos.count(), "si gains");
    const double nt = static_cast<double>(layout.tx.size());
    const double nr = static_cast<double>(layout.rx.size());
    CMat los = CMat::Zero(layout.rx.size(), layout.tx.size());
    if (los_gain != cd(0.0, 0.0)) {
        require(los_range > 0.0, "line-of-sight range must be positive");
        const CVec bt = spherical_response(layout, ArraySide::tx, {los_range, 0.0, 0.0});
        const CVec br = rx_response_from_tx_reference(layout);
        los = std::sqrt(nt * nr) * los_gain * br * bt.adjoint();
    }
    CMat scat = CMat::Zero(layout.rx.size(), layout.tx.size());
    const std::size_t p = nlos.count();
    for (std::size_t k = 0; k < p; ++k)
        scat += std::sqrt(nt * nr / p) * nlos.gains[k] * rx_planar_response(layout, nlos.angles[k]) *
                planar_response(layout.tx, nlos.angles[k]).adjoint();
    return {los, scat};
}

CMat effective_cascade(const RisFactorization& rx_side, const CVec& v, const RisFactorization& tx_side) {
    require_dims(v.size() == tx_side.pi_ris.rows() && v.size() == rx_side.pi_ris.rows(),
                 "effective_cascade: phase vector length mismatch");
    return rx_side.from_ris.asDiagonal() * (rx_side.pi_ris.adjoint() * v.asDiagonal() * tx_side.pi_ris) *
           tx_side.to_ris.asDiagonal();
}

CMat angular_cascade(const RisFactorization& tx_side, const RisFactorization& rx_side, const UpaGeometry& ris) {
    const Eigen::Index bi = tx_side.pi_ris.cols();
    const Eigen::Index bj = rx_side.pi_ris.cols();
    require_dims(tx_side.pi_ris.rows() == ris.size() && rx_side.pi_ris.rows() == ris.size(),
                 "angular_cascade: RIS size mismatch");
    CMat xi(ris.size(), bi * bj);
    for (Eigen::Index a = 0; a < bi; ++a)
        for (Eigen::Index b = 0; b < bj; ++b)
            xi.col(a * bj + b) = tx_side.pi_ris.col(a).cwiseProduct(rx_side.pi_ris.col(b).conjugate()) *
                                 (tx_side.to_ris(a) * rx_side.from_ris(b));
    return xi;
}

// ---- scenario sampling

void ScenarioConfig::validate() const {
    for (const ArrayDims& d : {bs_tx, bs_rx, ue_tx, ue_rx, ris})
        require(d.n_z >= 1 && d.n_y >= 1, "array dimensions must be positive");
    require(wavelength > 0.0 && spacing_wavelengths > 0.0 && d0_wavelengths >= 0.0, "invalid array spacing");
    require(bs_ris_distance > 0.0, "BS-RIS distance must be positive");
    for (const auto& r : {bs_ue_range, ris_ue_range, si_scatter_range})
        require(r[0] > 0.0 && r[1] >= r[0], "invalid distance range");
    require(path_range[0] >= 1 && path_range[1] >= path_range[0], "invalid path count range");
    require(grid_oversampling >= 1 && ris_grid_oversampling >= 1, "oversampling must be at least 1");
    if (on_grid) {
        for (int t = 0; t < 2; ++t) {
            const AngleGrid g = trx_grid(t);
            require(g.size() >= path_range[1], "grid too small for distinct on-grid paths");
        }
    }
}

DuplexLayout ScenarioConfig::layout(int trx) const {
    const ArrayDims& t = trx == 0 ? bs_tx : ue_tx;
    const ArrayDims& r = trx == 0 ? bs_rx : ue_rx;
    const double d = spacing_wavelengths * wavelength;
    return {UpaGeometry{t.n_z, t.n_y, d, wavelength}, UpaGeometry{r.n_z, r.n_y, d, wavelength},
            d0_wavelengths * wavelength, 0.0};
}

UpaGeometry ScenarioConfig::ris_geometry() const {
    return {ris.n_z, ris.n_y, spacing_wavelengths * wavelength, wavelength};
}

AngleGrid ScenarioConfig::trx_grid(int trx) const {
    const ArrayDims& t = trx == 0 ? bs_tx : ue_tx;
    const ArrayDims& r = trx == 0 ? bs_rx : ue_rx;
    return {std::max(t.n_z, r.n_z) * grid_oversampling, std::max(t.n_y, r.n_y) * grid_oversampling};
}

AngleGrid ScenarioConfig::ris_grid() const {
    return {ris.n_z * ris_grid_oversampling, ris.n_y * ris_grid_oversampling};
}

double inr_to_gain(double inr_db, double noise_power) {
    require(noise_power > 0.0, "noise power must be positive");
    return noise_power * db_to_linear(inr_db);
}

namespace {

// Continuous draws cover the visible region ele^2 + azi^2 <= 1.
std::vector<DirCosines> draw_directions(std::size_t n, const AngleGrid* grid, Rng& rng) {
    std::vector<DirCosines> out;
    std::set<Eigen::Index> used;
    while (out.size() < n) {
        if (grid) {
            const auto idx = static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(grid->size()) - 1));
            if (!used.insert(idx).second) continue;
            out.push_back(grid->point(idx));
        } else {
            const double ele = rng.uniform(-1.0, 1.0);
            const double azi = rng.uniform(-1.0, 1.0) * std::sqrt(1.0 - ele * ele);
            out.push_back({ele, azi});
        }
    }
    return out;
}

PathLossModel model_for(std::size_t path, bool los_first) {
    return (los_first && path == 0) ? PathLossModel::los() : PathLossModel::nlos();
}

}  // namespace

ChannelSet generate_scenario(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    ChannelSet cs;
    cs.trx = {cfg.layout(0), cfg.layout(1)};
    cs.ris = cfg.ris_geometry();
    cs.noise_power = dbm_to_watt(cfg.noise_dbm);
    const AngleGrid g0 = cfg.trx_grid(0), g1 = cfg.trx_grid(1), gl = cfg.ris_grid();
    const AngleGrid* grid0 = cfg.on_grid ? &g0 : nullptr;
    const AngleGrid* grid1 = cfg.on_grid ? &g1 : nullptr;
    const AngleGrid* gridl = cfg.on_grid ? &gl : nullptr;
    auto count = [&] { return static_cast<std::size_t>(rng.uniform_int(cfg.path_range[0], cfg.path_range[1])); };

    // Direct link: path loss is shared by both directions, small-scale gains are not.
    {
        const double dist = rng.uniform(cfg.bs_ue_range[0], cfg.bs_ue_range[1]);
        const std::size_t a = count();
        cs.direct.side1 = draw_directions(a, grid0, rng);
        cs.direct.side2 = draw_directions(a, grid1, rng);
        for (std::size_t p = 0; p < a; ++p) {
            const double var = path_gain_variance(model_for(p, cfg.los_first_path), dist, rng);
            cs.direct.gain_12.push_back(rng.complex_normal(var));
            cs.direct.gain_21.push_back(rng.complex_normal(var));
        }
        std::tie(cs.h_d[0], cs.h_d[1]) = gen_direct(cs.direct, cs.trx[0], cs.trx[1]);
    }
    for (int i = 0; i < 2; ++i) {
        const double dist = i == 0 ? cfg.bs_ris_distance : rng.uniform(cfg.ris_ue_range[0], cfg.ris_ue_range[1]);
        const std::size_t b = count();
        RisLinkPaths& link = cs.ris_links[i];
        link.trx = draw_directions(b, i == 0 ? grid0 : grid1, rng);
        link.ris = draw_directions(b, gridl, rng);
        for (std::size_t p = 0; p < b; ++p) {
            const double var = path_gain_variance(model_for(p, cfg.los_first_path), dist, rng);
            link.to_ris.push_back(rng.complex_normal(var));
            link.from_ris.push_back(rng.complex_normal(var));
        }
        std::tie(cs.h_t[i], cs.h_r[i]) = gen_ris_link(link, cs.trx[i], cs.ris);
    }
    for (int i = 0; i < 2; ++i) {
        SiPaths& si = cs.si[i];
        const std::size_t p = count();
        si.nlos.angles = draw_directions(p, i == 0 ? grid0 : grid1, rng);
        for (std::size_t k = 0; k < p; ++k) {
            const double two_way = 2.0 * rng.uniform(cfg.si_scatter_range[0], cfg.si_scatter_range[1]);
            si.nlos.gains.push_back(sample_path_gain(PathLossModel::nlos(), two_way, rng));
        }
        si.los_range = cs.trx[i].rx_offset();
        si.los_gain = std::polar(std::sqrt(inr_to_gain(cfg.inr_db, cs.noise_power)), rng.uniform(0.0, 2.0 * kPi));
        std::tie(cs.h_si_los[i], cs.h_si_nlos[i]) = gen_si(cs.trx[i], si.nlos, si.los_range, si.los_gain);
    }
    return cs;
}

}  // namespace fdris
