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

#include "fdris/recovery.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace fdris {

CMat least_squares(const CMat& a, const CMat& y, bool* regularized) {
    require_dims(a.rows() == y.rows(), "least_squares: row mismatch");
    if (a.cols() == 0) return CMat(0, y.cols());
    Eigen::ColPivHouseholderQR<CMat> qr(a);
    if (qr.rank() == a.cols()) return qr.solve(y);
    if (regularized) *regularized = true;
    CMat gram = a.adjoint() * a;
    gram.diagonal().array() += 1e-12;
    return gram.ldlt().solve(a.adjoint() * y);
}

namespace {

struct BranchState {
    CMat coeffs;
    CMat residual;
};

struct Engine {
    const std::vector<Branch>& branches;
    StopRule rule;
    std::vector<RVec> norms;
    std::vector<double> y_energy;
    double total_energy = 0.0;
    Eigen::Index n_atoms = 0;

    Engine(const std::vector<Branch>& b, const StopRule& r) : branches(b), rule(r) {
        require(!branches.empty(), "pursuit needs at least one branch");
        n_atoms = branches.front().sensing->cols();
        for (const Branch& br : branches) {
            require(br.sensing != nullptr, "pursuit: null sensing operator");
            require(br.measurements.size() > 0, "pursuit: empty measurements");
            require_dims(br.sensing->rows() == br.measurements.rows(), "pursuit: measurement length mismatch");
            require_dims(br.sensing->cols() == n_atoms, "pursuit: branches disagree on atom count");
            norms.push_back(br.sensing->column_norms());
            y_energy.push_back(br.measurements.squaredNorm());
            total_energy += y_energy.back();
        }
        require(rule.max_atoms >= 0, "pursuit: negative atom budget");
    }

    std::vector<BranchState> fit(const std::vector<Eigen::Index>& support, bool& regularized) const {
        std::vector<BranchState> out;
        out.reserve(branches.size());
        for (const Branch& br : branches) {
            const CMat a = br.sensing->columns(support);
            CMat c = least_squares(a, br.measurements, &regularized);
            CMat r = br.measurements - a * c;
            out.push_back({std::move(c), std::move(r)});
        }
        return out;
    }

    double raw_residual(const std::vector<BranchState>& st) const {
        double s = 0.0;
        for (const auto& b : st) s += b.residual.squaredNorm();
        return s;
    }

    double normalized_residual(const std::vector<BranchState>& st) const {
        double s = 0.0;
        for (std::size_t b = 0; b < st.size(); ++b)
            if (y_energy[b] > 0.0) s += st[b].residual.squaredNorm() / y_energy[b];
        return s;
    }

    bool finished(const std::vector<Eigen::Index>& support, const std::vector<BranchState>& st) const {
        if (static_cast<Eigen::Index>(support.size()) >= std::min(rule.max_atoms, n_atoms)) return true;
        const double res = raw_residual(st);
        return res <= rule.residual_tol || res <= 1e-28 * total_energy;
    }

    RVec scores(const std::vector<Eigen::Index>& support, const std::vector<BranchState>& st) const {
        RVec sc = RVec::Zero(n_atoms);
        for (std::size_t b = 0; b < branches.size(); ++b) {
            const double e = st[b].residual.squaredNorm();
            if (e <= 0.0) continue;
            const CMat corr = branches[b].sensing->correlate(st[b].residual);
            const RVec energy = corr.cwiseAbs2().rowwise().sum();
            for (Eigen::Index j = 0; j < n_atoms; ++j) {
                const double nj = norms[b](j);
                if (nj > 0.0) sc(j) += energy(j) / (nj * nj * e);
            }
        }
        for (Eigen::Index j : support) sc(j) = -1.0;
        return sc;
    }

    // Highest scores first; lower index wins ties.
    std::vector<Eigen::Index> top(const RVec& sc, int count) const {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < sc.size(); ++j)
            if (sc(j) > 0.0) idx.push_back(j);
        const std::size_t keep = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(count));
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                          [&](Eigen::Index a, Eigen::Index b) { return sc(a) > sc(b) || (sc(a) == sc(b) && a < b); });
        idx.resize(keep);
        return idx;
    }

    // Greedy completion used by the look-ahead; returns normalized residual.
    double complete(std::vector<Eigen::Index> support, bool& regularized) const {
        auto st = fit(support, regularized);
        while (!finished(support, st)) {
            const auto best = top(scores(support, st), 1);
            if (best.empty()) break;
            support.push_back(best.front());
            st = fit(support, regularized);
        }
        return normalized_residual(st);
    }
};

}  // namespace

JointSolution joint_pursuit(const std::vector<Branch>& branches, const StopRule& rule, int lookahead) {
    require(lookahead >= 1, "look-ahead width must be at least 1");
    Engine eng(branches, rule);
    JointSolution sol;
    std::vector<Eigen::Index> support;
    auto st = eng.fit(support, sol.regularized);
    while (!eng.finished(support, st)) {
        const auto cands = eng.top(eng.scores(support, st), lookahead);
        if (cands.empty()) break;
        Eigen::Index chosen = cands.front();
        if (cands.size() > 1) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index c : cands) {
                auto trial = support;
                trial.push_back(c);
                const double res = eng.complete(trial, sol.regularized);
                if (res < best) {
                    best = res;
                    chosen = c;
                }
            }
        }
        support.push_back(chosen);
        st = eng.fit(support, sol.regularized);
        sol.residual_history.push_back(std::sqrt(eng.raw_residual(st)));
    }
    sol.support = support;
    for (auto& b : st) {
        sol.coefficients.push_back(std::move(b.coeffs));
        sol.residual_norms.push_back(b.residual.norm());
    }
    return sol;
}

namespace {

SparseSolution single(const JointSolution& j) {
    SparseSolution s;
    s.support = j.support;
    s.coefficients = j.coefficients.front().col(0);
    s.residual_norm = j.residual_norms.front();
    s.residual_history = j.residual_history;
    s.regularized = j.regularized;
    return s;
}

}  // namespace

SparseSolution omp(const CVec& y, const SensingOperator& sensing, const StopRule& rule) {
    return laomp(y, sensing, rule, 1);
}

SparseSolution laomp(const CVec& y, const SensingOperator& sensing, const StopRule& rule, int lookahead) {
    return single(joint_pursuit({Branch{&sensing, y}}, rule, lookahead));
}

SparseSolution kr_laomp(const CVec& y, const CMat& phi_f, const CMat& phi_w, const StopRule& rule, int lookahead) {
    const KhatriRaoSensing op(phi_f, phi_w);
    return laomp(y, op, rule, lookahead);
}

std::vector<SparseSolution> d_laomp(const std::vector<CVec>& ys, const std::vector<const SensingOperator*>& sensing,
                                    const StopRule& rule, int lookahead) {
    require_dims(ys.size() == sensing.size(), "d_laomp: branch count mismatch");
    std::vector<Branch> br;
    for (std::size_t b = 0; b < ys.size(); ++b) br.push_back({sensing[b], ys[b]});
    const JointSolution j = joint_pursuit(br, rule, lookahead);
    std::vector<SparseSolution> out;
    for (std::size_t b = 0; b < ys.size(); ++b) {
        SparseSolution s;
        s.support = j.support;
        s.coefficients = j.coefficients[b].col(0);
        s.residual_norm = j.residual_norms[b];
        s.residual_history = j.residual_history;
        s.regularized = j.regularized;
        out.push_back(std::move(s));
    }
    return out;
}

JointSolution dm_laomp(const std::vector<CMat>& ys, const std::vector<const SensingOperator*>& sensing,
                       const StopRule& rule, int lookahead) {
    require_dims(ys.size() == sensing.size(), "dm_laomp: branch count mismatch");
    std::vector<Branch> br;
    for (std::size_t b = 0; b < ys.size(); ++b) br.push_back({sensing[b], ys[b]});
    return joint_pursuit(br, rule, lookahead);
}

std::vector<OneSparseEstimate> one_sparse_batch(const CMat& y, const SensingOperator& sensing) {
    require(y.size() > 0, "one_sparse_batch: empty measurements");
    require_dims(y.rows() == sensing.rows(), "one_sparse_batch: measurement length mismatch");
    const CMat corr = sensing.correlate(y);
    const RVec norms = sensing.column_norms();
    std::vector<OneSparseEstimate> out(static_cast<std::size_t>(y.cols()));
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
        if (y.col(c).squaredNorm() == 0.0) continue;
        double best = -1.0;
        Eigen::Index arg = -1;
        for (Eigen::Index g = 0; g < corr.rows(); ++g) {
            if (norms(g) <= 0.0) continue;
            const double s = std::abs(corr(g, c)) / norms(g);
            if (s > best) {
                best = s;
                arg = g;
            }
        }
        if (arg < 0) continue;
        out[static_cast<std::size_t>(c)] = {arg, corr(arg, c) / (norms(arg) * norms(arg)), true};
    }
    return out;
}

// ---- refinement

namespace {

CMat atom_matrix(const AtomFamily& fam, const std::vector<RVec>& params, Eigen::Index rows) {
    CMat a(rows, static_cast<Eigen::Index>(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = fam.column(params[k]);
    return a;
}

std::vector<CVec> refit(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                        const std::vector<RVec>& params) {
    std::vector<CVec> out;
    for (std::size_t b = 0; b < ys.size(); ++b)
        out.push_back(least_squares(atom_matrix(families[b], params, ys[b].size()), ys[b]).col(0));
    return out;
}

}  // namespace

double refine_residual(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                       const std::vector<RVec>& params, const std::vector<CVec>& coefficients) {
    require_dims(ys.size() == families.size() && ys.size() == coefficients.size(), "refine: branch count mismatch");
    double s = 0.0;
    for (std::size_t b = 0; b < ys.size(); ++b)
        s += (ys[b] - atom_matrix(families[b], params, ys[b].size()) * coefficients[b]).squaredNorm();
    return s;
}

std::vector<RVec> refine_gradient(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                                  const std::vector<RVec>& params, const std::vector<CVec>& coefficients) {
    std::vector<RVec> grad;
    for (const RVec& p : params) grad.push_back(RVec::Zero(p.size()));
    for (std::size_t b = 0; b < ys.size(); ++b) {
        const CVec r = ys[b] - atom_matrix(families[b], params, ys[b].size()) * coefficients[b];
        for (std::size_t k = 0; k < params.size(); ++k) {
            const CMat jac = families[b].jacobian(params[k]);
            const cd c = coefficients[b](static_cast<Eigen::Index>(k));
            for (Eigen::Index p = 0; p < jac.cols(); ++p)
                grad[k](p) += -2.0 * std::real(r.dot(jac.col(p) * c));
        }
    }
    return grad;
}

RefineResult offgrid_refine(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                            std::vector<RVec> params, const RefineOptions& options) {
    require_dims(ys.size() == families.size(), "offgrid_refine: branch count mismatch");
    RefineResult res;
    const std::size_t n_atoms = params.size();
    if (n_atoms == 0) {
        for (const CVec& y : ys) {
            res.coefficients.push_back(CVec(0));
            res.residual_before += y.squaredNorm();
        }
        res.residual_after = res.residual_before;
        res.converged = true;
        return res;
    }
    const int dim = families.front().param_dim;
    const Eigen::Index n_par = static_cast<Eigen::Index>(n_atoms) * dim;

    std::vector<CVec> coeffs = refit(ys, families, params);
    double energy = refine_residual(ys, families, params, coeffs);
    res.residual_before = energy;
    double damping = 1e-3;

    for (int it = 0; it < options.max_iters; ++it) {
        res.iterations = it + 1;
        if (energy <= 0.0) {
            res.converged = true;
            break;
        }
        RMat normal = RMat::Zero(n_par, n_par);
        RVec rhs = RVec::Zero(n_par);
        for (std::size_t b = 0; b < ys.size(); ++b) {
            const Eigen::Index m = ys[b].size();
            const CVec r = ys[b] - atom_matrix(families[b], params, m) * coeffs[b];
            CMat jac(m, n_par);
            for (std::size_t k = 0; k < n_atoms; ++k)
                jac.middleCols(static_cast<Eigen::Index>(k) * dim, dim) =
                    -families[b].jacobian(params[k]) * coeffs[b](static_cast<Eigen::Index>(k));
            normal += (jac.adjoint() * jac).real();
            rhs -= (jac.adjoint() * r).real();
        }
        bool accepted = false;
        while (damping < 1e12) {
            RMat damped = normal;
            damped.diagonal() += damping * normal.diagonal().cwiseMax(1e-12 * normal.diagonal().maxCoeff() + 1e-300);
            const RVec step = damped.ldlt().solve(rhs);
            std::vector<RVec> trial = params;
            for (std::size_t k = 0; k < n_atoms; ++k)
                trial[k] = (trial[k] + step.segment(static_cast<Eigen::Index>(k) * dim, dim))
                               .cwiseMax(options.lower)
                               .cwiseMin(options.upper);
            auto trial_coeffs = refit(ys, families, trial);
            const double trial_energy = refine_residual(ys, families, trial, trial_coeffs);
            if (trial_energy < energy) {
                const double gain = energy - trial_energy;
                params = std::move(trial);
                coeffs = std::move(trial_coeffs);
                energy = trial_energy;
                damping = std::max(damping / 3.0, 1e-9);
                accepted = true;
                if (gain <= options.rel_tol * res.residual_before) res.converged = true;
                break;
            }
            damping *= 10.0;
        }
        // No descent direction left: a stationary point.
        if (!accepted) res.converged = true;
        if (res.converged) break;
    }
    res.params = std::move(params);
    res.coefficients = std::move(coeffs);
    res.residual_after = energy;
    return res;
}

}  // namespace fdris
