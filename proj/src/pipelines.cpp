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

#include "fdris/pipelines.hpp"

#include <algorithm>
#include <cmath>

namespace fdris {

void PilotPlan::validate() const {
    require(rf_chains >= 1, "rf_chains must be at least 1");
    for (int n : {n_s, n_d, n_c}) {
        require(n >= 1, "pilot length must be positive");
        require(n % rf_chains == 0, "pilot length must be a multiple of rf_chains");
    }
    require(q >= 1, "RIS pilot count must be positive");
}

DictionarySet DictionarySet::build(const ChannelSet& cs, const AngleGrid& grid0, const AngleGrid& grid1,
                                   const AngleGrid& ris_grid) {
    DictionarySet d;
    const AngleGrid* grids[2] = {&grid0, &grid1};
    for (int t = 0; t < 2; ++t) {
        d.trx[t].tx = build_dictionary(cs.trx[t].tx, *grids[t], DictionaryKind::tx);
        d.trx[t].rx = build_dictionary(cs.trx[t].rx, *grids[t], DictionaryKind::rx);
    }
    d.ris = build_dictionary(cs.ris, ris_grid, DictionaryKind::ris_cascaded);
    return d;
}

DictionarySet DictionarySet::build(const ChannelSet& cs, const ScenarioConfig& cfg) {
    return build(cs, cfg.trx_grid(0), cfg.trx_grid(1), cfg.ris_grid());
}

const NamedEstimate& EstimationReport::get(const std::string& name) const {
    for (const auto& e : estimates)
        if (e.name == name) return e;
    throw DomainError("no estimate named " + name);
}

CMat measure(const CMat& combiner, const CMat& channel, const CMat& pilots, double noise_power, int rf_chains,
             Rng& rng) {
    require_dims(combiner.rows() == channel.rows() && channel.cols() == pilots.rows(), "measure: shape mismatch");
    require(rf_chains >= 1, "measure: rf_chains must be positive");
    CMat y = combiner.adjoint() * channel * pilots;
    if (noise_power <= 0.0) return y;
    const Eigen::Index n_rx = combiner.rows();
    for (Eigen::Index c = 0; c < pilots.cols(); ++c) {
        for (Eigen::Index first = 0; first < combiner.cols(); first += rf_chains) {
            const Eigen::Index width = std::min<Eigen::Index>(rf_chains, combiner.cols() - first);
            const CMat noise = rng.complex_normal(n_rx, 1, noise_power);
            y.block(first, c, width, 1) += combiner.middleCols(first, width).adjoint() * noise;
        }
    }
    return y;
}

CMat random_pilots(Eigen::Index antennas, Eigen::Index count, double power, Rng& rng) {
    return rng.unit_modulus(antennas, count) * std::sqrt(power / static_cast<double>(antennas));
}

cd estimate_si_los_gain(const ChannelSet& cs, int trx, double pilot_power, Rng& rng) {
    const DuplexLayout& layout = cs.trx[trx];
    const CVec bt = spherical_response(layout, ArraySide::tx, {cs.si[trx].los_range, 0.0, 0.0});
    const CVec br = rx_response_from_tx_reference(layout);
    const CMat x = std::sqrt(pilot_power) * bt;
    const CMat y = measure(br, cs.h_si(trx), x, cs.noise_power, 1, rng);
    const double scale = std::sqrt(static_cast<double>(layout.tx.size() * layout.rx.size()) * pilot_power);
    return y(0, 0) / scale;
}

namespace {

CMat select_cols(const CMat& m, const std::vector<Eigen::Index>& idx) {
    CMat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    return out;
}

RVec cosines_vec(DirCosines d) { return (RVec(2) << d.ele, d.azi).finished(); }
DirCosines to_cosines(const RVec& p, Eigen::Index offset = 0) { return {p(offset), p(offset + 1)}; }

// Atom vec(left a(p) b(p')^H right) with p = params(0..1) for `ga` and
// p' = params(2..3) for `gb` (or p' = p when `shared`).
AtomFamily outer_family(const CMat& left, const UpaGeometry& ga, const UpaGeometry& gb, const CMat& right,
                        bool shared) {
    AtomFamily fam;
    fam.param_dim = shared ? 2 : 4;
    fam.column = [=](const RVec& p) -> CVec {
        const CVec a = planar_response(ga, to_cosines(p, 0));
        const CVec b = planar_response(gb, to_cosines(p, shared ? 0 : 2));
        const CMat m = (left * a) * (b.adjoint() * right);
        return vec(m);
    };
    fam.jacobian = [=](const RVec& p) -> CMat {
        const DirCosines da = to_cosines(p, 0);
        const DirCosines db = to_cosines(p, shared ? 0 : 2);
        const CVec la = left * planar_response(ga, da);
        const CMat lja = left * planar_response_jacobian(ga, da);
        const CVec rb = (planar_response(gb, db).adjoint() * right).transpose();
        const CMat rjb = (planar_response_jacobian(gb, db).adjoint() * right).transpose();
        CMat jac(left.rows() * right.cols(), fam.param_dim);
        for (int d = 0; d < 2; ++d) {
            const CMat da_term = lja.col(d) * rb.transpose();
            const CMat db_term = la * rjb.col(d).transpose();
            if (shared) {
                jac.col(d) = vec(da_term) + vec(db_term);
            } else {
                jac.col(d) = vec(da_term);
                jac.col(2 + d) = vec(db_term);
            }
        }
        return jac;
    };
    return fam;
}

std::size_t campaign_slots(int n, int rf) { return static_cast<std::size_t>(n) * n / rf; }

}  // namespace

EstimationReport estimate_si(const ChannelSet& cs, int trx, const PilotPlan& plan, const TrxDictionaries& dict,
                             const SiOptions& options, Rng& rng) {
    plan.validate();
    require(trx == 0 || trx == 1, "transceiver index must be 0 or 1");
    const DuplexLayout& layout = cs.trx[trx];
    const double power = plan.pilot_power();
    const auto k = static_cast<Eigen::Index>(cs.si[trx].nlos.count());

    const cd gamma = options.known_los ? cs.si[trx].los_gain : estimate_si_los_gain(cs, trx, power, rng);
    const CMat x = random_pilots(layout.tx.size(), plan.n_s, power, rng);
    const CMat w = rng.unit_modulus(layout.rx.size(), plan.n_s);
    const CMat y = measure(w, cs.h_si(trx), x, cs.noise_power, plan.rf_chains, rng);
    const CMat los_hat = gen_si(layout, PathSet{}, cs.si[trx].los_range, gamma).first;
    const CMat y_nlos = y - w.adjoint() * los_hat * x;

    const CMat& a_r = dict.rx.atoms;
    const CMat& a_t = dict.tx.atoms;
    const CMat phi_w = w.adjoint() * a_r;
    const CMat phi_f = a_t.adjoint() * x;
    CMat nlos_hat = CMat::Zero(layout.rx.size(), layout.tx.size());
    EstimationReport rep;

    if (options.framework == SensingFramework::khatri_rao) {
        const KhatriRaoSensing op(phi_f, phi_w);
        const SparseSolution sol = laomp(vec(y_nlos), op, {k, 0.0}, options.lookahead);
        if (options.offgrid && !sol.support.empty()) {
            const AtomFamily fam = outer_family(w.adjoint(), layout.rx, layout.tx, x, true);
            std::vector<RVec> init;
            for (Eigen::Index g : sol.support) init.push_back(cosines_vec(dict.tx.cosines(g)));
            const RefineResult ref = offgrid_refine({vec(y_nlos)}, {fam}, init);
            rep.refine_converged = ref.converged;
            for (std::size_t a = 0; a < ref.params.size(); ++a) {
                const DirCosines d = to_cosines(ref.params[a]);
                nlos_hat += ref.coefficients[0](static_cast<Eigen::Index>(a)) * planar_response(layout.rx, d) *
                            planar_response(layout.tx, d).adjoint();
            }
        } else {
            nlos_hat = select_cols(a_r, sol.support) * sol.coefficients.asDiagonal() *
                       select_cols(a_t, sol.support).adjoint();
        }
        AngleEstimate ang{"si", sol.support, {}};
        for (Eigen::Index g : sol.support) ang.cosines.push_back(dict.tx.cosines(g));
        rep.angles.push_back(std::move(ang));
    } else {
        const KroneckerSensing op(phi_w, phi_f);
        const SparseSolution sol = laomp(vec(y_nlos), op, {k, 0.0}, options.lookahead);
        const Eigen::Index g_count = a_r.cols();
        for (std::size_t a = 0; a < sol.support.size(); ++a) {
            const Eigen::Index g1 = sol.support[a] % g_count;
            const Eigen::Index g2 = sol.support[a] / g_count;
            nlos_hat += sol.coefficients(static_cast<Eigen::Index>(a)) * a_r.col(g1) * a_t.col(g2).adjoint();
        }
    }
    rep.estimates.push_back({"si_nlos", nlos_hat, nmse(cs.h_si_nlos[trx], nlos_hat)});
    const CMat total = los_hat + nlos_hat;
    rep.estimates.push_back({"si", total, nmse(cs.h_si(trx), total)});
    rep.pilot_slots = campaign_slots(plan.n_s, plan.rf_chains);
    return rep;
}

namespace {

CMat prior_or_truth(const std::optional<CMat>& prior, const CMat& truth) { return prior ? *prior : truth; }

}  // namespace

EstimationReport estimate_direct(const ChannelSet& cs, const PilotPlan& plan, const DictionarySet& dicts,
                                 const DirectOptions& options, Rng& rng, const PriorEstimates& priors) {
    plan.validate();
    const double power = plan.pilot_power();
    const auto k = static_cast<Eigen::Index>(cs.direct.count());
    const DuplexLayout& l1 = cs.trx[0];
    const DuplexLayout& l2 = cs.trx[1];

    const CMat x1 = random_pilots(l1.tx.size(), plan.n_d, power, rng);
    const CMat x2 = random_pilots(l2.tx.size(), plan.n_d, power, rng);
    const CMat w1 = rng.unit_modulus(l1.rx.size(), plan.n_d);
    const CMat w2 = rng.unit_modulus(l2.rx.size(), plan.n_d);
    // Both transceivers transmit at once; each hears its own pilots too.
    const CMat y1 = measure(w1, cs.h_d[1], x2, cs.noise_power, plan.rf_chains, rng) +
                    w1.adjoint() * cs.h_si(0) * x1 -
                    w1.adjoint() * prior_or_truth(priors.si[0], cs.h_si(0)) * x1;
    const CMat y2 = measure(w2, cs.h_d[0], x1, cs.noise_power, plan.rf_chains, rng) +
                    w2.adjoint() * cs.h_si(1) * x2 -
                    w2.adjoint() * prior_or_truth(priors.si[1], cs.h_si(1)) * x2;

    const CMat& ar1 = dicts.trx[0].rx.atoms;
    const CMat& at1 = dicts.trx[0].tx.atoms;
    const CMat& ar2 = dicts.trx[1].rx.atoms;
    const CMat& at2 = dicts.trx[1].tx.atoms;
    // Both branches address X(g1, g2) with g1 on transceiver 1's grid.
    const KroneckerSensing op_a(w1.adjoint() * ar1, at2.adjoint() * x2);  // vec(Y1)
    const KroneckerSensing op_b(x1.adjoint() * at1, ar2.adjoint() * w2);  // vec(Y2^H)
    const CVec ya = vec(y1);
    const CVec yb = vec(CMat(y2.adjoint()));

    std::vector<SparseSolution> sols;
    if (options.joint) {
        sols = d_laomp({ya, yb}, {&op_a, &op_b}, {k, 0.0}, options.lookahead);
    } else {
        sols.push_back(laomp(ya, op_a, {k, 0.0}, options.lookahead));
        sols.push_back(laomp(yb, op_b, {k, 0.0}, options.lookahead));
    }

    const Eigen::Index g1_count = op_a.left_atoms();
    auto params_of = [&](const std::vector<Eigen::Index>& support) {
        std::vector<RVec> out;
        for (Eigen::Index j : support) {
            const DirCosines c1 = dicts.trx[0].tx.cosines(j % g1_count);
            const DirCosines c2 = dicts.trx[1].tx.cosines(j / g1_count);
            out.push_back((RVec(4) << c1.ele, c1.azi, c2.ele, c2.azi).finished());
        }
        return out;
    };
    // h21 = sum c a_r1(p1) a_t2(p2)^H; h12 = sum conj(c) a_r2(p2) a_t1(p1)^H.
    auto assemble = [&](const std::vector<RVec>& params, const CVec& ca, const CVec& cb, CMat& h21, CMat& h12) {
        h21 = CMat::Zero(l1.rx.size(), l2.tx.size());
        h12 = CMat::Zero(l2.rx.size(), l1.tx.size());
        for (std::size_t a = 0; a < params.size(); ++a) {
            const DirCosines p1 = to_cosines(params[a], 0), p2 = to_cosines(params[a], 2);
            const auto ai = static_cast<Eigen::Index>(a);
            if (ca.size() > ai)
                h21 += ca(ai) * planar_response(l1.rx, p1) * planar_response(l2.tx, p2).adjoint();
            if (cb.size() > ai)
                h12 += std::conj(cb(ai)) * planar_response(l2.rx, p2) * planar_response(l1.tx, p1).adjoint();
        }
    };

    EstimationReport rep;
    CMat h21_hat, h12_hat;
    const AtomFamily fam_a = outer_family(w1.adjoint(), l1.rx, l2.tx, x2, false);
    const AtomFamily fam_b = outer_family(x1.adjoint(), l1.tx, l2.rx, w2, false);
    if (!options.offgrid) {
        CMat tmp;
        assemble(params_of(sols[0].support), sols[0].coefficients, CVec(0), h21_hat, tmp);
        assemble(params_of(sols[1].support), CVec(0), sols[1].coefficients, tmp, h12_hat);
    } else if (options.joint) {
        const RefineResult ref = offgrid_refine({ya, yb}, {fam_a, fam_b}, params_of(sols[0].support));
        rep.refine_converged = ref.converged;
        assemble(ref.params, ref.coefficients[0], ref.coefficients[1], h21_hat, h12_hat);
    } else {
        const RefineResult ra = offgrid_refine({ya}, {fam_a}, params_of(sols[0].support));
        const RefineResult rb = offgrid_refine({yb}, {fam_b}, params_of(sols[1].support));
        rep.refine_converged = ra.converged && rb.converged;
        CMat tmp;
        assemble(ra.params, ra.coefficients[0], CVec(0), h21_hat, tmp);
        assemble(rb.params, CVec(0), rb.coefficients[0], tmp, h12_hat);
    }
    rep.estimates.push_back({"direct_12", h12_hat, nmse(cs.h_d[0], h12_hat)});
    rep.estimates.push_back({"direct_21", h21_hat, nmse(cs.h_d[1], h21_hat)});
    for (int b = 0; b < 2; ++b) {
        AngleEstimate ang{b == 0 ? "direct_21" : "direct_12", sols[static_cast<std::size_t>(b)].support, {}};
        rep.angles.push_back(std::move(ang));
    }
    rep.pilot_slots = campaign_slots(plan.n_d, plan.rf_chains);
    return rep;
}

EstimationReport estimate_cascaded_stage12(const ChannelSet& cs, const PilotPlan& plan, const DictionarySet& dicts,
                                           const CascadedOptions& options, Rng& rng, CascadedSupports* supports,
                                           const PriorEstimates& priors) {
    plan.validate();
    const double power = plan.pilot_power();
    const DuplexLayout& l1 = cs.trx[0];
    const DuplexLayout& l2 = cs.trx[1];
    const CVec ones = CVec::Ones(cs.ris.size());
    const auto k_bs = static_cast<Eigen::Index>(cs.ris_links[0].count());
    const auto k_ue = static_cast<Eigen::Index>(cs.ris_links[1].count());

    const CMat x1 = random_pilots(l1.tx.size(), plan.n_c, power, rng);
    const CMat x2 = random_pilots(l2.tx.size(), plan.n_c, power, rng);
    const CMat w1 = rng.unit_modulus(l1.rx.size(), plan.n_c);
    const CMat w2 = rng.unit_modulus(l2.rx.size(), plan.n_c);
    const CMat casc_dl = cs.cascaded(0, ones);
    const CMat casc_ul = cs.cascaded(1, ones);
    const CMat residual1 = cs.h_d[1] - prior_or_truth(priors.direct[1], cs.h_d[1]);
    const CMat residual2 = cs.h_d[0] - prior_or_truth(priors.direct[0], cs.h_d[0]);
    const CMat y1 = measure(w1, casc_ul + residual1, x2, cs.noise_power, plan.rf_chains, rng) +
                    w1.adjoint() * (cs.h_si(0) - prior_or_truth(priors.si[0], cs.h_si(0))) * x1;
    const CMat y2 = measure(w2, casc_dl + residual2, x1, cs.noise_power, plan.rf_chains, rng) +
                    w2.adjoint() * (cs.h_si(1) - prior_or_truth(priors.si[1], cs.h_si(1))) * x2;

    const CMat& ar1 = dicts.trx[0].rx.atoms;
    const CMat& at1 = dicts.trx[0].tx.atoms;
    const CMat& ar2 = dicts.trx[1].rx.atoms;
    const CMat& at2 = dicts.trx[1].tx.atoms;

    // Stage 1: base-station angles, row-sparse in the BS grid.
    const DenseSensing s1a(w1.adjoint() * ar1);
    const DenseSensing s1b(x1.adjoint() * at1);
    const CMat y1b = y2.adjoint();
    JointSolution st1a, st1b;
    if (options.joint) {
        st1a = dm_laomp({y1, y1b}, {&s1a, &s1b}, {k_bs, 0.0}, options.lookahead);
        st1b = st1a;
        st1b.coefficients = {st1a.coefficients[1]};
        st1a.coefficients = {st1a.coefficients[0]};
    } else {
        st1a = joint_pursuit({Branch{&s1a, y1}}, {k_bs, 0.0}, options.lookahead);
        st1b = joint_pursuit({Branch{&s1b, y1b}}, {k_bs, 0.0}, options.lookahead);
    }

    // Stage 2: user angles from the stage-1 row estimates.
    const DenseSensing s2a(x2.adjoint() * at2);
    const DenseSensing s2b(w2.adjoint() * ar2);
    const CMat y2a = st1a.coefficients[0].adjoint();  // n_c x |S_bs|
    const CMat y2b = st1b.coefficients[0].adjoint();
    JointSolution st2a, st2b;
    const bool empty_a = y2a.size() == 0 || y2a.squaredNorm() == 0.0;
    const bool empty_b = y2b.size() == 0 || y2b.squaredNorm() == 0.0;
    if (options.joint && !empty_a && !empty_b) {
        st2a = dm_laomp({y2a, y2b}, {&s2a, &s2b}, {k_ue, 0.0}, options.lookahead);
        st2b = st2a;
        st2b.coefficients = {st2a.coefficients[1]};
        st2a.coefficients = {st2a.coefficients[0]};
    } else {
        auto run = [&](const DenseSensing& s, const CMat& y, bool empty) {
            if (empty) {
                JointSolution js;
                js.coefficients = {CMat(0, y.cols())};
                return js;
            }
            return joint_pursuit({Branch{&s, y}}, {k_ue, 0.0}, options.lookahead);
        };
        st2a = run(s2a, y2a, empty_a);
        st2b = run(s2b, y2b, empty_b);
    }

    // UL: A_R1[:, bs] * coeffs_a^H * A_T2[:, ue]^H; DL: A_R2[:, ue] * coeffs_b * A_T1[:, bs]^H.
    const CMat ul_hat = select_cols(ar1, st1a.support) * st2a.coefficients[0].adjoint() *
                        select_cols(at2, st2a.support).adjoint();
    const CMat dl_hat = select_cols(ar2, st2b.support) * st2b.coefficients[0] *
                        select_cols(at1, st1b.support).adjoint();

    EstimationReport rep;
    rep.estimates.push_back({"cascaded_dl", dl_hat, nmse(casc_dl, dl_hat)});
    rep.estimates.push_back({"cascaded_ul", ul_hat, nmse(casc_ul, ul_hat)});
    auto angles = [&](const char* role, const std::vector<Eigen::Index>& idx, const Dictionary& d) {
        AngleEstimate a{role, idx, {}};
        for (Eigen::Index g : idx) a.cosines.push_back(d.cosines(g));
        rep.angles.push_back(std::move(a));
    };
    angles("bs_dl", st1b.support, dicts.trx[0].tx);
    angles("ue_dl", st2b.support, dicts.trx[1].rx);
    angles("bs_ul", st1a.support, dicts.trx[0].rx);
    angles("ue_ul", st2a.support, dicts.trx[1].tx);
    if (supports) {
        supports->bs = {st1b.support, st1a.support};
        supports->ue = {st2b.support, st2a.support};
    }
    rep.pilot_slots = campaign_slots(plan.n_c, plan.rf_chains);
    return rep;
}

std::vector<Eigen::Index> match_columns(const CMat& truth, const CMat& estimate) {
    std::vector<Eigen::Index> assign(static_cast<std::size_t>(truth.cols()), -1);
    if (truth.cols() == 0 || estimate.cols() == 0) return assign;
    RMat score = (truth.adjoint() * estimate).cwiseAbs();
    const Eigen::Index rounds = std::min(truth.cols(), estimate.cols());
    for (Eigen::Index r = 0; r < rounds; ++r) {
        Eigen::Index ti = 0, ei = 0;
        score.maxCoeff(&ti, &ei);
        if (score(ti, ei) < 0.0) break;
        assign[static_cast<std::size_t>(ti)] = ei;
        score.row(ti).setConstant(-1.0);
        score.col(ei).setConstant(-1.0);
    }
    return assign;
}

EstimationReport estimate_ris_angles(const ChannelSet& cs, const CascadedSupports& supports, const PilotPlan& plan,
                                     const DictionarySet& dicts, const RisOptions& options, Rng& rng,
                                     const PriorEstimates& priors) {
    require(plan.q >= 1, "RIS pilot count must be positive");
    const double power = plan.pilot_power();
    const Eigen::Index l = cs.ris.size();
    const CMat phases = options.phases ? *options.phases : rng.unit_modulus(plan.q, l);
    require_dims(phases.cols() == l, "RIS phase matrix must have one column per element");
    const Eigen::Index q = phases.rows();
    const CMat& c_l = dicts.ris.atoms;
    const DenseSensing sensing(phases * c_l);

    EstimationReport rep;
    std::size_t slots = 0;
    for (int dir = 0; dir < 2; ++dir) {
        // dir 0: BS (i = 0) -> UE (j = 1); dir 1: UE -> BS.
        const int i = dir == 0 ? 0 : 1;
        const int j = 1 - i;
        const auto& tx_idx = dir == 0 ? supports.bs[0] : supports.ue[1];
        const auto& rx_idx = dir == 0 ? supports.ue[0] : supports.bs[1];
        const Dictionary& tx_dict = dicts.trx[i].tx;
        const Dictionary& rx_dict = dicts.trx[j].rx;
        const auto bi = static_cast<Eigen::Index>(tx_idx.size());
        const auto bj = static_cast<Eigen::Index>(rx_idx.size());
        CMat pi_t(cs.trx[i].tx.size(), bi), pi_r(cs.trx[j].rx.size(), bj);
        for (Eigen::Index a = 0; a < bi; ++a) pi_t.col(a) = planar_response(cs.trx[i].tx, tx_dict.cosines(tx_idx[static_cast<std::size_t>(a)]));
        for (Eigen::Index b = 0; b < bj; ++b) pi_r.col(b) = rx_planar_response(cs.trx[j], rx_dict.cosines(rx_idx[static_cast<std::size_t>(b)]));

        const CMat direct_left = cs.h_d[i] - prior_or_truth(priors.direct[i], cs.h_d[i]);
        CMat pairs(q, bi * bj);
        const CMat x = std::sqrt(power) * pi_t;
        for (Eigen::Index t = 0; t < q; ++t) {
            const CMat h = cs.h_r[j] * phases.row(t).transpose().asDiagonal() * cs.h_t[i] + direct_left;
            const CMat y = measure(pi_r, h, x, cs.noise_power, plan.rf_chains, rng) / std::sqrt(power);
            for (Eigen::Index a = 0; a < bi; ++a)
                for (Eigen::Index b = 0; b < bj; ++b) pairs(t, a * bj + b) = y(b, a);
        }
        slots += static_cast<std::size_t>(q * bi * ((bj + plan.rf_chains - 1) / plan.rf_chains));

        CMat xi_hat = CMat::Zero(l, bi * bj);
        if (bi * bj > 0) {
            const auto fits = one_sparse_batch(pairs, sensing);
            for (Eigen::Index c = 0; c < bi * bj; ++c) {
                const auto& f = fits[static_cast<std::size_t>(c)];
                if (!f.valid) continue;
                if (options.offgrid) {
                    AtomFamily fam;
                    fam.param_dim = 2;
                    fam.column = [&](const RVec& p) -> CVec { return phases * planar_response(cs.ris, to_cosines(p)); };
                    fam.jacobian = [&](const RVec& p) -> CMat {
                        return phases * planar_response_jacobian(cs.ris, to_cosines(p));
                    };
                    const RefineResult ref =
                        offgrid_refine({pairs.col(c)}, {fam}, {cosines_vec(dicts.ris.cosines(f.index))});
                    rep.refine_converged = rep.refine_converged && ref.converged;
                    xi_hat.col(c) = planar_response(cs.ris, to_cosines(ref.params[0])) * ref.coefficients[0](0);
                } else {
                    xi_hat.col(c) = c_l.col(f.index) * f.gain;
                }
            }
        }

        const RisFactorization ft = ris_factorization(cs.ris_links[i], cs.trx[i], cs.ris);
        const RisFactorization fr = ris_factorization(cs.ris_links[j], cs.trx[j], cs.ris);
        const CMat xi = angular_cascade(ft, fr, cs.ris);
        const auto mt = match_columns(ft.pi_tx, pi_t);
        const auto mr = match_columns(fr.pi_rx, pi_r);
        const Eigen::Index ti = ft.pi_tx.cols(), tj = fr.pi_rx.cols();
        CMat aligned = CMat::Zero(l, ti * tj);
        for (Eigen::Index a = 0; a < ti; ++a)
            for (Eigen::Index b = 0; b < tj; ++b) {
                const Eigen::Index ea = mt[static_cast<std::size_t>(a)], eb = mr[static_cast<std::size_t>(b)];
                if (ea >= 0 && eb >= 0) aligned.col(a * tj + b) = xi_hat.col(ea * bj + eb);
            }
        rep.estimates.push_back({dir == 0 ? "xi_dl" : "xi_ul", aligned, nmse(xi, aligned)});
    }
    rep.pilot_slots = slots;
    return rep;
}

}  // namespace fdris
