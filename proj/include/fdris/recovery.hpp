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

#include "fdris/dictionaries.hpp"

#include <functional>
#include <vector>

namespace fdris {

struct StopRule {
    Eigen::Index max_atoms = 1;
    // Stop once the summed squared residual drops to this level.
    double residual_tol = 0.0;
};

struct SparseSolution {
    std::vector<Eigen::Index> support;  // selection order
    CVec coefficients;                  // aligned with support
    double residual_norm = 0.0;
    std::vector<double> residual_history;  // after each selected atom
    bool regularized = false;              // ridge was needed for the refit
};

// One shared support across several measurement branches; each branch may
// carry several snapshots (columns).
struct JointSolution {
    std::vector<Eigen::Index> support;
    std::vector<CMat> coefficients;  // per branch, |support| x snapshots
    std::vector<double> residual_norms;
    std::vector<double> residual_history;  // aggregate, after each atom
    bool regularized = false;
};

struct Branch {
    const SensingOperator* sensing = nullptr;
    CMat measurements;
};

// Greedy pursuit over any number of branches. Atoms are ranked by the sum of
// normalized correlation energies; with lookahead > 1 the best few candidates
// are each completed greedily and the one with the lowest completed residual
// is kept. lookahead == 1 is plain (M)OMP.
JointSolution joint_pursuit(const std::vector<Branch>& branches, const StopRule& rule, int lookahead);

SparseSolution omp(const CVec& y, const SensingOperator& sensing, const StopRule& rule);
SparseSolution laomp(const CVec& y, const SensingOperator& sensing, const StopRule& rule, int lookahead = 5);
SparseSolution kr_laomp(const CVec& y, const CMat& phi_f, const CMat& phi_w, const StopRule& rule,
                        int lookahead = 5);
std::vector<SparseSolution> d_laomp(const std::vector<CVec>& ys, const std::vector<const SensingOperator*>& sensing,
                                    const StopRule& rule, int lookahead = 5);
JointSolution dm_laomp(const std::vector<CMat>& ys, const std::vector<const SensingOperator*>& sensing,
                       const StopRule& rule, int lookahead = 5);

struct OneSparseEstimate {
    Eigen::Index index = -1;
    cd gain{0.0, 0.0};
    bool valid = false;  // false for an all-zero column
};

// Independent single-atom fit of every column of y.
std::vector<OneSparseEstimate> one_sparse_batch(const CMat& y, const SensingOperator& sensing);

// Least-squares fit of y on the given columns; ridge 1e-12 on rank loss.
CMat least_squares(const CMat& a, const CMat& y, bool* regularized = nullptr);

// ---- continuous-parameter refinement

// Parametric atom: column(p) and its Jacobian d column / d p (one column per
// parameter).
struct AtomFamily {
    int param_dim = 2;
    std::function<CVec(const RVec&)> column;
    std::function<CMat(const RVec&)> jacobian;
};

struct RefineOptions {
    int max_iters = 60;
    double rel_tol = 1e-12;
    double lower = -1.0;
    double upper = 1.0;
};

struct RefineResult {
    std::vector<RVec> params;
    std::vector<CVec> coefficients;  // per branch, one entry per atom
    double residual_before = 0.0;    // squared
    double residual_after = 0.0;     // squared
    int iterations = 0;
    bool converged = false;
};

// Sum over branches of ||y_b - A_b(params) c_b||^2 for fixed coefficients.
double refine_residual(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                       const std::vector<RVec>& params, const std::vector<CVec>& coefficients);
// Gradient of refine_residual with respect to every parameter.
std::vector<RVec> refine_gradient(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                                  const std::vector<RVec>& params, const std::vector<CVec>& coefficients);

// Damped Gauss-Newton on the atom parameters with a least-squares refit of
// the coefficients after each step. Steps that raise the residual are
// rejected, so residual_after <= residual_before. Atoms keep their identity.
RefineResult offgrid_refine(const std::vector<CVec>& ys, const std::vector<AtomFamily>& families,
                            std::vector<RVec> params, const RefineOptions& options = {});

}  // namespace fdris
