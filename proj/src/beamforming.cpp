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

#include "fdris/beamforming.hpp"
#include "fdris/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdris {

void LinkMatrices::validate() const {
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        require_dims(h_si[i].rows() == h_dc[j].rows() && h_si[i].cols() == h_dc[i].cols(),
                     "link matrices: inconsistent antenna counts");
        require(power[i] >= 0.0, "transmit power must be non-negative");
    }
    require(noise_power > 0.0, "noise power must be positive");
}

Beamformers HybridBeamformers::digital() const {
    Beamformers b;
    for (int i = 0; i < 2; ++i) {
        b.f[i] = f_rf[i] * f_bb[i];
        b.w[i] = w_rf[i] * w_bb[i];
    }
    return b;
}

namespace {

CMat hermitian(const CMat& m) { return 0.5 * (m + m.adjoint()); }

// ln det of a Hermitian positive definite matrix.
double logdet_hpd(const CMat& m) {
    Eigen::LLT<CMat> llt(hermitian(m));
    if (llt.info() == Eigen::Success) {
        double s = 0.0;
        for (Eigen::Index k = 0; k < m.rows(); ++k) s += 2.0 * std::log(std::real(llt.matrixLLT()(k, k)));
        return s;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitian(m));
    double s = 0.0;
    for (Eigen::Index k = 0; k < m.rows(); ++k) s += std::log(std::max(es.eigenvalues()(k), 1e-300));
    return s;
}

CMat inverse_hpd(const CMat& m) {
    const CMat h = hermitian(m);
    Eigen::LLT<CMat> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(CMat::Identity(m.rows(), m.cols()));
    return h.completeOrthogonalDecomposition().pseudoInverse();
}

CMat interference_cov(const LinkMatrices& link, const Beamformers& bf, int j) {
    const int i = 1 - j;
    const CMat& w = bf.w[j];
    const CMat si = w.adjoint() * link.h_si[j] * bf.f[j];
    (void)i;
    return link.noise_power * (w.adjoint() * w) + si * si.adjoint();
}

// Receive covariance U_j at RX j.
CMat receive_cov(const LinkMatrices& link, const Beamformers& bf, int j) {
    const int i = 1 - j;
    const CMat s = link.h_dc[i] * bf.f[i];
    const CMat si = link.h_si[j] * bf.f[j];
    CMat u = s * s.adjoint() + si * si.adjoint();
    u.diagonal().array() += link.noise_power;
    return u;
}

}  // namespace

SeBreakdown spectral_efficiency(const LinkMatrices& link, const Beamformers& bf) {
    link.validate();
    SeBreakdown out;
    for (int j = 0; j < 2; ++j) {
        const int i = 1 - j;
        const CMat& w = bf.w[j];
        require_dims(w.rows() == link.h_dc[i].rows() && bf.f[i].rows() == link.h_dc[i].cols(),
                     "spectral_efficiency: beamformer shape mismatch");
        const Eigen::Index n = w.cols();
        if (n == 0) continue;
        const CMat s = w.adjoint() * link.h_dc[i] * bf.f[i];
        CMat sigma = hermitian(interference_cov(link, bf, j));
        Eigen::SelfAdjointEigenSolver<CMat> es(sigma);
        const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
        if (es.eigenvalues().minCoeff() <= 1e-12 * top || top == 0.0) {
            sigma.diagonal().array() += std::max(1e-12 * top, 1e-300);
            out.regularized = true;
        }
        Eigen::LLT<CMat> llt(sigma);
        const CMat whitened = llt.matrixL().solve(s);
        CMat m = whitened * whitened.adjoint();
        m.diagonal().array() += 1.0;
        out.per_rx[j] = logdet_hpd(m) / std::log(2.0);
    }
    out.sum = out.per_rx[0] + out.per_rx[1];
    return out;
}

CMat mse_matrix(const LinkMatrices& link, const Beamformers& bf, int j) {
    require(j == 0 || j == 1, "receiver index must be 0 or 1");
    const int i = 1 - j;
    const CMat& w = bf.w[j];
    require_dims(w.cols() == bf.f[i].cols(), "mse_matrix: stream count mismatch");
    CMat gap = -(w.adjoint() * link.h_dc[i] * bf.f[i]);
    gap.diagonal().array() += 1.0;
    return gap * gap.adjoint() + interference_cov(link, bf, j);
}

double wmmse_objective(const LinkMatrices& link, const Beamformers& bf, const std::array<CMat, 2>& weights) {
    double total = 0.0;
    for (int j = 0; j < 2; ++j) {
        const CMat e = mse_matrix(link, bf, j);
        total += std::real((weights[j] * e).trace()) - logdet_hpd(weights[j]);
    }
    return total;
}

PowerSolve solve_power_constrained(const CMat& t, const CMat& g, const CMat& k, double power, double rel_tol) {
    require_dims(t.rows() == t.cols() && t.rows() == g.rows() && k.rows() == t.rows() && k.cols() == t.cols(),
                 "solve_power_constrained: shape mismatch");
    PowerSolve out{CMat::Zero(g.rows(), g.cols()), 0.0};
    if (power <= 0.0 || g.squaredNorm() == 0.0) return out;

    CMat kk = hermitian(k);
    Eigen::LLT<CMat> chol(kk);
    if (chol.info() != Eigen::Success) {
        kk.diagonal().array() += 1e-12 * std::max(std::real(kk.trace()) / kk.rows(), 1e-300);
        chol.compute(kk);
    }
    const CMat l = chol.matrixL();
    const CMat linv_t = l.triangularView<Eigen::Lower>().solve(hermitian(t));
    const CMat tw = hermitian(l.triangularView<Eigen::Lower>().solve(CMat(linv_t.adjoint())).adjoint());
    const CMat gw = l.triangularView<Eigen::Lower>().solve(g);
    Eigen::SelfAdjointEigenSolver<CMat> es(tw);
    const RVec lam = es.eigenvalues().cwiseMax(0.0);
    const CMat proj = es.eigenvectors().adjoint() * gw;
    const RVec energy = proj.cwiseAbs2().rowwise().sum();
    const double top = lam.maxCoeff();

    auto power_at = [&](double mu) {
        double p = 0.0;
        for (Eigen::Index n = 0; n < lam.size(); ++n) {
            const double den = lam(n) + mu;
            if (den <= 0.0) {
                if (energy(n) > 0.0) return std::numeric_limits<double>::infinity();
                continue;
            }
            p += energy(n) / (den * den);
        }
        return p;
    };
    // Directions with vanishing curvature make mu = 0 unbounded.
    bool zero_ok = true;
    for (Eigen::Index n = 0; n < lam.size(); ++n)
        if (lam(n) <= 1e-13 * top && energy(n) > 1e-26 * energy.sum()) zero_ok = false;
    double mu = 0.0;
    if (!(zero_ok && power_at(0.0) <= power)) {
        double hi = std::max(std::sqrt(energy.sum() / power), 1e-300);
        while (power_at(hi) > power) hi *= 2.0;
        double lo = 0.0;
        for (int it = 0; it < 400; ++it) {
            if ((power - power_at(hi)) <= rel_tol * power) break;
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (power_at(mid) > power) lo = mid; else hi = mid;
        }
        mu = hi;
    }
    RVec inv(lam.size());
    for (Eigen::Index n = 0; n < lam.size(); ++n) {
        const double den = lam(n) + mu;
        inv(n) = den > 0.0 ? 1.0 / den : 0.0;
    }
    const CMat xw = es.eigenvectors() * inv.asDiagonal() * proj;
    out.x = l.adjoint().triangularView<Eigen::Upper>().solve(xw);
    out.mu = mu;
    return out;
}

// ---- digital WMMSE

namespace {

std::array<CMat, 2> mmse_combiners(const LinkMatrices& link, const Beamformers& bf) {
    std::array<CMat, 2> w;
    for (int j = 0; j < 2; ++j) {
        const int i = 1 - j;
        const CMat u = receive_cov(link, bf, j);
        w[j] = hermitian(u).llt().solve(link.h_dc[i] * bf.f[i]);
    }
    return w;
}

std::array<CMat, 2> mse_weights(const LinkMatrices& link, const Beamformers& bf) {
    std::array<CMat, 2> q;
    for (int j = 0; j < 2; ++j) q[j] = hermitian(inverse_hpd(mse_matrix(link, bf, j)));
    return q;
}

// Quadratic and linear terms of the objective in F_i.
std::pair<CMat, CMat> precoder_terms(const LinkMatrices& link, const Beamformers& bf, const std::array<CMat, 2>& q,
                                     int i) {
    const int j = 1 - i;
    const CMat a = link.h_dc[i].adjoint() * bf.w[j];
    const CMat b = link.h_si[i].adjoint() * bf.w[i];
    return {hermitian(a * q[j] * a.adjoint() + b * q[i] * b.adjoint()), a * q[j]};
}

CMat random_precoder(Eigen::Index antennas, int n_st, double power, Rng& rng) {
    CMat f = rng.complex_normal(antennas, n_st, 1.0);
    if (power <= 0.0) return CMat::Zero(antennas, n_st);
    return f * std::sqrt(power / f.squaredNorm());
}

}  // namespace

WmmseResult wmmse_digital(const LinkMatrices& link, const WmmseOptions& options, Rng& rng) {
    link.validate();
    require(options.n_st >= 1, "stream count must be positive");
    WmmseResult res;
    Beamformers& bf = res.bf;
    for (int i = 0; i < 2; ++i) bf.f[i] = random_precoder(link.h_dc[i].cols(), options.n_st, link.power[i], rng);
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= options.max_iters; ++it) {
        bf.w = mmse_combiners(link, bf);
        const auto q = mse_weights(link, bf);
        for (int i = 0; i < 2; ++i) {
            const auto [t, g] = precoder_terms(link, bf, q, i);
            bf.f[i] = solve_power_constrained(t, g, CMat::Identity(t.rows(), t.cols()), link.power[i]).x;
        }
        const double obj = wmmse_objective(link, bf, q);
        res.trace.push_back({it, obj, spectral_efficiency(link, bf).sum});
        if (std::abs(prev - obj) <= options.tol * std::max(1.0, std::abs(obj))) {
            res.converged = true;
            break;
        }
        prev = obj;
    }
    // Report the receive filters matched to the final precoders.
    bf.w = mmse_combiners(link, bf);
    return res;
}

// ---- unit-modulus coordinate descent

double cd_objective(const CMat& r, const CMat& u, const CMat& c, const CMat& d) {
    return std::real((r.adjoint() * u * r * c).trace()) - 2.0 * std::real((r.adjoint() * d).trace());
}

CdResult cd_unit_modulus_gram(const CMat& r_init, const CMat& u, const CMat& c, const CMat& d, int sweeps,
                              bool record_entries) {
    require_dims(u.rows() == r_init.rows() && u.cols() == r_init.rows() && c.rows() == r_init.cols() &&
                     c.cols() == r_init.cols() && d.rows() == r_init.rows() && d.cols() == r_init.cols(),
                 "cd_unit_modulus: shape mismatch");
    require(sweeps >= 0, "sweep count must be non-negative");
    CdResult res{r_init, {}};
    CMat& r = res.r;
    for (int s = 0; s < sweeps; ++s) {
        CMat p = u * r * c;
        for (Eigen::Index k2 = 0; k2 < r.cols(); ++k2) {
            for (Eigen::Index k1 = 0; k1 < r.rows(); ++k1) {
                const cd kappa = u(k1, k1) * c(k2, k2);
                const cd nu = d(k1, k2) - (p(k1, k2) - kappa * r(k1, k2));
                const double mag = std::abs(nu);
                if (mag > 0.0) {
                    const cd next = nu / mag;
                    const cd delta = next - r(k1, k2);
                    if (delta != cd(0.0, 0.0)) {
                        r(k1, k2) = next;
                        for (Eigen::Index m = 0; m < p.cols(); ++m) p.col(m) += u.col(k1) * (delta * c(k2, m));
                    }
                }
                if (record_entries) res.objective.push_back(cd_objective(r, u, c, d));
            }
        }
        if (!record_entries) res.objective.push_back(cd_objective(r, u, c, d));
    }
    return res;
}

CdResult cd_unit_modulus(const CMat& r_init, const CMat& u, const CMat& b, const CMat& f, int sweeps,
                         bool record_entries) {
    return cd_unit_modulus_gram(r_init, u, b * b.adjoint(), f * b.adjoint(), sweeps, record_entries);
}

// ---- hybrid WMMSE with SI-aware updates

HybridResult h_wmmse_sic(const LinkMatrices& link, const HybridOptions& options, Rng& rng) {
    link.validate();
    require(options.n_st >= 1 && options.m_rf >= options.n_st, "need at least as many RF chains as streams");
    for (int i = 0; i < 2; ++i)
        require(options.m_rf <= link.h_dc[i].cols() && options.m_rf <= link.h_dc[i].rows(),
                "more RF chains than antennas");
    HybridResult res;
    HybridBeamformers& hb = res.bf;
    std::array<CMat, 2> q;
    for (int i = 0; i < 2; ++i) {
        const Eigen::Index nt = link.h_dc[i].cols();
        const Eigen::Index nr = link.h_si[i].rows();
        hb.f_rf[i] = rng.unit_modulus(nt, options.m_rf);
        CMat bb = rng.complex_normal(options.m_rf, options.n_st, 1.0);
        const double p = (hb.f_rf[i] * bb).squaredNorm();
        hb.f_bb[i] = link.power[i] > 0.0 ? CMat(bb * std::sqrt(link.power[i] / p)) : CMat::Zero(options.m_rf, options.n_st);
        hb.w_rf[i] = rng.unit_modulus(nr, options.m_rf);
        hb.w_bb[i] = CMat::Zero(options.m_rf, options.n_st);
        q[i] = CMat::Identity(options.n_st, options.n_st);
    }
    auto objective = [&] { return wmmse_objective(link, hb.digital(), q); };
    auto note = [&] {
        if (options.record_substeps) res.substep_objectives.push_back(objective());
    };

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= options.iterations; ++it) {
        for (int j = 0; j < 2; ++j) {
            const int i = 1 - j;
            const Beamformers cur = hb.digital();
            const CMat u = hermitian(receive_cov(link, cur, j));
            const CMat target = link.h_dc[i] * cur.f[i];
            for (int inner = 0; inner < options.inner_loops; ++inner) {
                // Baseband combiner: exact minimizer for the current analog combiner.
                const CMat& wr = hb.w_rf[j];
                const CMat gram = hermitian(wr.adjoint() * u * wr);
                hb.w_bb[j] = gram.ldlt().solve(wr.adjoint() * target);
                note();
                // Analog combiner with the MSE weight folded in.
                const CMat c = hermitian(hb.w_bb[j] * q[j] * hb.w_bb[j].adjoint());
                const CMat d = target * q[j] * hb.w_bb[j].adjoint();
                hb.w_rf[j] = cd_unit_modulus_gram(hb.w_rf[j], u, c, d, options.cd_sweeps).r;
                note();
            }
        }
        q = mse_weights(link, hb.digital());
        note();
        for (int i = 0; i < 2; ++i) {
            Beamformers cur = hb.digital();
            const auto [t, g] = precoder_terms(link, cur, q, i);
            for (int inner = 0; inner < options.inner_loops; ++inner) {
                const CMat& fr = hb.f_rf[i];
                const PowerSolve bb = solve_power_constrained(fr.adjoint() * t * fr, fr.adjoint() * g, fr.adjoint() * fr,
                                                              link.power[i]);
                hb.f_bb[i] = bb.x;
                note();
                if (link.power[i] <= 0.0) break;
                // Descend on the Lagrangian so the analog step respects the active power
                // budget, then rescale optimally and keep the step only if (39) does not rise.
                const CMat c = hermitian(hb.f_bb[i] * hb.f_bb[i].adjoint());
                const CMat d = g * hb.f_bb[i].adjoint();
                const CMat t_mu = t + bb.mu * CMat::Identity(t.rows(), t.cols());
                const CMat f_old = fr * hb.f_bb[i];
                const double before = std::real((f_old.adjoint() * t * f_old).trace()) -
                                      2.0 * std::real((f_old.adjoint() * g).trace());
                const CMat fr_new = cd_unit_modulus_gram(fr, t_mu, c, d, options.cd_sweeps).r;
                const CMat f_new = fr_new * hb.f_bb[i];
                const double p_new = f_new.squaredNorm();
                const double a = std::real((f_new.adjoint() * t * f_new).trace());
                const double b = std::real((f_new.adjoint() * g).trace());
                const double cap = std::sqrt(link.power[i] / p_new);
                const double scale = a > 0.0 ? std::clamp(b / a, 0.0, cap) : cap;
                const double after = scale * scale * a - 2.0 * scale * b;
                if (after <= before) {
                    hb.f_rf[i] = fr_new;
                    hb.f_bb[i] *= scale;
                } else {
                    ++res.rejected_rf_steps;
                }
                note();
            }
        }
        const double obj = objective();
        res.trace.push_back({it, obj, spectral_efficiency(link, hb.digital()).sum});
        if (options.tol > 0.0 && std::abs(prev - obj) <= options.tol * std::max(1.0, std::abs(obj))) {
            res.converged = true;
            break;
        }
        prev = obj;
    }
    // Final baseband combiners matched to the final precoders.
    for (int j = 0; j < 2; ++j) {
        const int i = 1 - j;
        const Beamformers cur = hb.digital();
        const CMat u = hermitian(receive_cov(link, cur, j));
        const CMat& wr = hb.w_rf[j];
        hb.w_bb[j] = hermitian(wr.adjoint() * u * wr).ldlt().solve(wr.adjoint() * link.h_dc[i] * cur.f[i]);
    }
    return res;
}

HybridBeamformers decoupled_baseline(const LinkMatrices& link, const Beamformers& digital,
                                     const std::array<const Dictionary*, 2>& tx_dicts,
                                     const std::array<const Dictionary*, 2>& rx_dicts, int m_rf, int lookahead) {
    link.validate();
    require(m_rf >= 1, "RF chain count must be positive");
    HybridBeamformers hb;
    auto approximate = [&](const CMat& target, const Dictionary& dict, CMat& rf, CMat& bb) {
        const double scale = std::sqrt(static_cast<double>(dict.atoms.rows()));
        rf = CMat::Zero(dict.atoms.rows(), m_rf);
        bb = CMat::Zero(m_rf, target.cols());
        if (target.squaredNorm() == 0.0) {
            for (Eigen::Index k = 0; k < m_rf; ++k) rf.col(k) = dict.atoms.col(k) * scale;
            return;
        }
        const DenseSensing op(dict.atoms);
        const JointSolution sol = joint_pursuit({Branch{&op, target}}, {m_rf, 0.0}, lookahead);
        for (std::size_t k = 0; k < sol.support.size(); ++k) {
            rf.col(static_cast<Eigen::Index>(k)) = dict.atoms.col(sol.support[k]) * scale;
            bb.row(static_cast<Eigen::Index>(k)) = sol.coefficients[0].row(static_cast<Eigen::Index>(k)) / scale;
        }
        // Unused chains keep a valid unit-modulus column with zero weight.
        for (auto k = static_cast<Eigen::Index>(sol.support.size()); k < m_rf; ++k) rf.col(k) = dict.atoms.col(k) * scale;
    };
    for (int i = 0; i < 2; ++i) {
        approximate(digital.f[i], *tx_dicts[i], hb.f_rf[i], hb.f_bb[i]);
        const double p = (hb.f_rf[i] * hb.f_bb[i]).squaredNorm();
        if (p > 0.0) hb.f_bb[i] *= std::sqrt(link.power[i] / p);
        approximate(digital.w[i], *rx_dicts[i], hb.w_rf[i], hb.w_bb[i]);
    }
    return hb;
}

PassivePhases optimize_passive(const CMat& xi_12, const CMat& xi_21) {
    require_dims(xi_12.rows() == xi_21.rows(), "optimize_passive: RIS sizes differ");
    const Eigen::Index l = xi_12.rows();
    PassivePhases out{CVec::Ones(l), false};
    const CMat m = hermitian(xi_12 * xi_12.adjoint() + xi_21 * xi_21.adjoint());
    if (std::real(m.trace()) <= 0.0) {
        out.degenerate = true;
        return out;
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(m);
    const RVec& ev = es.eigenvalues();
    if (l > 1 && ev(l - 1) - ev(l - 2) <= 1e-12 * ev(l - 1)) out.degenerate = true;
    const CVec u = es.eigenvectors().col(l - 1);
    for (Eigen::Index n = 0; n < l; ++n) out.v(n) = u(n) == cd(0.0, 0.0) ? cd(1.0, 0.0) : std::polar(1.0, -std::arg(u(n)));
    return out;
}

double passive_objective(const CVec& v, const CMat& xi) {
    require_dims(v.size() == xi.rows(), "passive_objective: length mismatch");
    return (v.transpose() * xi).squaredNorm();
}

CascadedBound cascaded_se_bound(const CMat& lambda, const CMat& pi_t, const CMat& pi_r, double tx_power,
                                double noise_power, int n_st) {
    require(n_st >= 1 && noise_power > 0.0 && tx_power >= 0.0, "invalid bound parameters");
    require_dims(pi_r.cols() == lambda.rows() && pi_t.cols() == lambda.cols(), "cascaded_se_bound: shape mismatch");
    CascadedBound out;
    const CMat h = pi_r * lambda * pi_t.adjoint();
    const RVec sv = Eigen::JacobiSVD<CMat>(h).singularValues();
    const double snr = tx_power / (n_st * noise_power);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(n_st, sv.size()); ++k)
        out.se += std::log2(1.0 + snr * sv(k) * sv(k));
    const double factor = tx_power / (static_cast<double>(n_st) * n_st * noise_power) *
                          std::real((pi_t.adjoint() * pi_t).trace()) * std::real((pi_r.adjoint() * pi_r).trace());
    out.bound = n_st * std::log2(1.0 + factor * lambda.squaredNorm());
    return out;
}

}  // namespace fdris
