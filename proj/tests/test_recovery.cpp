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
#include "fdris/random.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace fdris;
using namespace fdris::testing;

namespace {

// Line array dictionary: 16 elements, 32 grid points.
Dictionary line_dictionary() {
    const UpaGeometry g = half_wave(16, 1);
    return build_dictionary(g, {32, 1}, DictionaryKind::tx);
}

// k distinct atoms at least `gap` grid steps apart (circularly).
std::vector<Eigen::Index> separated_support(Rng& rng, int g, int k, int gap) {
    std::vector<Eigen::Index> out;
    while (static_cast<int>(out.size()) < k) {
        const Eigen::Index c = rng.uniform_int(0, g - 1);
        bool ok = true;
        for (Eigen::Index s : out) {
            const Eigen::Index d = std::abs(c - s);
            if (std::min<Eigen::Index>(d, g - d) < gap) ok = false;
        }
        if (ok) out.push_back(c);
    }
    return out;
}

CVec random_gains(Rng& rng, int k) {
    CVec c(k);
    for (int i = 0; i < k; ++i) c(i) = std::polar(rng.uniform(0.5, 2.0), rng.uniform(0.0, 2 * kPi));
    return c;
}

std::set<Eigen::Index> as_set(const std::vector<Eigen::Index>& v) { return {v.begin(), v.end()}; }

CVec synth(const CMat& a, const std::vector<Eigen::Index>& support, const CVec& gains) {
    CVec y = CVec::Zero(a.rows());
    for (std::size_t i = 0; i < support.size(); ++i) y += gains(static_cast<Eigen::Index>(i)) * a.col(support[i]);
    return y;
}

AtomFamily planar_family(const UpaGeometry& g, const CMat& sensing) {
    AtomFamily fam;
    fam.param_dim = 2;
    fam.column = [=](const RVec& p) -> CVec { return sensing * planar_response(g, {p(0), p(1)}); };
    fam.jacobian = [=](const RVec& p) -> CMat { return sensing * planar_response_jacobian(g, {p(0), p(1)}); };
    return fam;
}

}  // namespace

TEST_SUITE("recovery") {

TEST_CASE("single scaled column is recovered exactly") {
    Rng rng(1);
    const DenseSensing op(rng.complex_normal(12, 20, 1.0));
    const SparseSolution s = omp(3.0 * op.column(7), op, {1, 0.0});
    REQUIRE(s.support.size() == 1);
    CHECK(s.support[0] == 7);
    CHECK(std::abs(s.coefficients(0) - cd(3.0, 0.0)) < 1e-12);
}

TEST_CASE("zero measurement gives an empty support") {
    const DenseSensing op(CMat::Identity(4, 6));
    const SparseSolution s = omp(CVec::Zero(4), op, {3, 0.0});
    CHECK(s.support.empty());
    CHECK(s.residual_norm == 0.0);
}

TEST_CASE("three separated atoms match the exhaustive subset search") {
    Rng rng(2);
    const Dictionary d = line_dictionary();
    const DenseSensing op(d.atoms);
    for (int t = 0; t < 10; ++t) {
        const auto truth = separated_support(rng, 32, 3, 3);
        const CVec y = synth(d.atoms, truth, random_gains(rng, 3));
        // Exhaustive oracle: the unique zero-residual triple.
        std::vector<std::set<Eigen::Index>> exact;
        for (int a = 0; a < 32; ++a)
            for (int b = a + 1; b < 32; ++b)
                for (int c = b + 1; c < 32; ++c) {
                    const std::vector<Eigen::Index> sup{a, b, c};
                    const CMat cols = op.columns(sup);
                    const CVec r = y - cols * least_squares(cols, y);
                    if (r.norm() < 1e-10 * y.norm()) exact.push_back(as_set(sup));
                }
        REQUIRE(exact.size() == 1);
        CHECK(exact.front() == as_set(truth));
        const SparseSolution s = omp(y, op, {3, 0.0});
        CHECK(as_set(s.support) == exact.front());
        CHECK(s.residual_norm < 1e-10);
    }
}

TEST_CASE("residual history is non-increasing") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        const DenseSensing op(rng.complex_normal(10, 30, 1.0));
        const CVec y = rng.complex_normal(10, 1, 1.0);
        for (int look : {1, 3}) {
            const SparseSolution s = laomp(y, op, {6, 0.0}, look);
            double prev = y.norm();
            for (double r : s.residual_history) {
                CHECK(r <= prev * (1 + 1e-12));
                prev = r;
            }
            CHECK(as_set(s.support).size() == s.support.size());
            CHECK(s.support.size() == static_cast<std::size_t>(s.coefficients.size()));
        }
    }
}

TEST_CASE("look-ahead width one is plain OMP") {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        const DenseSensing op(rng.complex_normal(12, 40, 1.0));
        const CVec y = rng.complex_normal(12, 1, 1.0);
        const SparseSolution a = omp(y, op, {4, 0.0});
        const SparseSolution b = laomp(y, op, {4, 0.0}, 1);
        CHECK(a.support == b.support);
        CHECK((a.coefficients - b.coefficients).norm() == 0.0);
        // With a single atom the look-ahead has nothing to complete.
        CHECK(omp(y, op, {1, 0.0}).support == laomp(y, op, {1, 0.0}, 5).support);
    }
}

TEST_CASE("look-ahead never ends above OMP on noiseless problems") {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const DenseSensing op(rng.complex_normal(8, 40, 1.0));
        std::vector<Eigen::Index> truth;
        while (truth.size() < 3) {
            const Eigen::Index c = rng.uniform_int(0, 39);
            if (std::find(truth.begin(), truth.end(), c) == truth.end()) truth.push_back(c);
        }
        const CVec y = synth(op.matrix(), truth, random_gains(rng, 3));
        const double r_omp = omp(y, op, {3, 0.0}).residual_norm;
        const double r_la = laomp(y, op, {3, 0.0}, 5).residual_norm;
        CHECK(r_la <= r_omp * (1 + 1e-9) + 1e-12);
    }
}

TEST_CASE("residual tolerance stops early") {
    const DenseSensing op(CMat::Identity(5, 5));
    CVec y = CVec::Zero(5);
    y(1) = 10.0;
    y(3) = 1e-3;
    // Squared residual after the first atom is 1e-6.
    CHECK(omp(y, op, {5, 1e-5}).support == std::vector<Eigen::Index>{1});
    CHECK(omp(y, op, {5, 1e-7}).support == std::vector<Eigen::Index>{1, 3});
}

TEST_CASE("exact score ties go to the lower index") {
    CMat a = CMat::Zero(2, 3);
    a(0, 0) = 1.0;
    a(0, 2) = 1.0;
    a(1, 1) = 1.0;
    const SparseSolution s = omp((CVec(2) << 1.0, 0.0).finished(), DenseSensing(a), {1, 0.0});
    CHECK(s.support.front() == 0);
}

TEST_CASE("rank-deficient refits fall back to a ridge") {
    CMat a(3, 2);
    a << 1, 1, 0, 0, 0, 0;
    bool reg = false;
    const CMat x = least_squares(a, CMat::Ones(3, 1), &reg);
    CHECK(reg);
    CHECK(std::abs(x(0, 0) + x(1, 0) - cd(1.0, 0.0)) < 1e-9);
}

TEST_CASE("Khatri-Rao pursuit recovers one on-grid path with its gain") {
    Rng rng(6);
    const UpaGeometry g = half_wave(4, 4);
    const Dictionary d = build_dictionary(g, {8, 8}, DictionaryKind::tx);
    const CMat x = rng.unit_modulus(16, 12);
    const CMat w = rng.unit_modulus(16, 12);
    const Eigen::Index idx = 21;
    const cd gain(0.7, -1.1);
    const CMat h = gain * d.atoms.col(idx) * d.atoms.col(idx).adjoint();
    const CVec y = vec(CMat(w.adjoint() * h * x));
    const SparseSolution s = kr_laomp(y, d.atoms.adjoint() * x, w.adjoint() * d.atoms, {1, 0.0});
    REQUIRE(s.support.size() == 1);
    CHECK(s.support[0] == idx);
    CHECK(std::abs(s.coefficients(0) - gain) < 1e-10);
}

TEST_CASE("Khatri-Rao pursuit equals Kronecker pursuit restricted to the diagonal") {
    Rng rng(7);
    const UpaGeometry g = half_wave(4, 4);
    const Dictionary d = build_dictionary(g, {8, 8}, DictionaryKind::tx);
    for (int t = 0; t < 30; ++t) {
        const CMat x = rng.unit_modulus(16, 8);
        const CMat w = rng.unit_modulus(16, 8);
        const CMat phi_f = d.atoms.adjoint() * x;
        const CMat phi_w = w.adjoint() * d.atoms;
        const CVec y = rng.complex_normal(64, 1, 1.0);
        const CMat full = kron_sensing(phi_f.transpose(), phi_w);
        CMat diag(full.rows(), 64);
        for (Eigen::Index k = 0; k < 64; ++k) diag.col(k) = full.col(k + 64 * k);
        const SparseSolution a = kr_laomp(y, phi_f, phi_w, {3, 0.0});
        const SparseSolution b = laomp(y, DenseSensing(diag), {3, 0.0});
        CHECK(a.support == b.support);
    }
}

TEST_CASE("Khatri-Rao pursuit at 40 dB SNR") {
    Rng rng(8);
    const UpaGeometry g = half_wave(4, 4);
    const Dictionary d = build_dictionary(g, {8, 8}, DictionaryKind::tx);
    double total = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        std::vector<Eigen::Index> truth;
        while (truth.size() < 3) {
            const Eigen::Index c = rng.uniform_int(0, 63);
            if (std::find(truth.begin(), truth.end(), c) == truth.end()) truth.push_back(c);
        }
        const CVec gains = random_gains(rng, 3);
        CMat h = CMat::Zero(16, 16);
        for (int k = 0; k < 3; ++k) h += gains(k) * d.atoms.col(truth[k]) * d.atoms.col(truth[k]).adjoint();
        const CMat x = rng.unit_modulus(16, 16);
        const CMat w = rng.unit_modulus(16, 16);
        const CMat clean = w.adjoint() * h * x;
        const double noise = clean.squaredNorm() / static_cast<double>(clean.size()) * 1e-4;
        const CVec y = vec(clean) + rng.complex_normal(clean.size(), 1, noise);
        const SparseSolution s = kr_laomp(y, d.atoms.adjoint() * x, w.adjoint() * d.atoms, {3, 0.0});
        CMat est = CMat::Zero(16, 16);
        for (std::size_t k = 0; k < s.support.size(); ++k)
            est += s.coefficients(static_cast<Eigen::Index>(k)) * d.atoms.col(s.support[k]) * d.atoms.col(s.support[k]).adjoint();
        total += nmse(h, est);
    }
    CHECK(total / trials < 1e-3);
}

TEST_CASE("duplicated branch gives the single-branch support") {
    Rng rng(9);
    for (int t = 0; t < 30; ++t) {
        const DenseSensing op(rng.complex_normal(10, 30, 1.0));
        const CVec y = rng.complex_normal(10, 1, 1.0);
        const auto joint = d_laomp({y, y}, {&op, &op}, {3, 0.0});
        CHECK(joint[0].support == laomp(y, op, {3, 0.0}).support);
        CHECK(joint[1].support == joint[0].support);
    }
}

TEST_CASE("distributed pursuit rejects empty problems") {
    CHECK_THROWS_AS(d_laomp({}, {}, {1, 0.0}), DomainError);
    const DenseSensing op(CMat::Identity(3, 3));
    CHECK_THROWS_AS(d_laomp({CVec(0)}, {&op}, {1, 0.0}), DomainError);
}

TEST_CASE("a clean branch rescues a noisy one") {
    // Shared support, branch a at 30 dB and branch b at 0 dB.
    Rng rng(10);
    const int trials = 200;
    int joint_ok = 0, single_ok = 0;
    for (int t = 0; t < trials; ++t) {
        const DenseSensing op_a(rng.complex_normal(16, 64, 1.0));
        const DenseSensing op_b(rng.complex_normal(16, 64, 1.0));
        std::vector<Eigen::Index> truth;
        while (truth.size() < 3) {
            const Eigen::Index c = rng.uniform_int(0, 63);
            if (std::find(truth.begin(), truth.end(), c) == truth.end()) truth.push_back(c);
        }
        CVec ya = synth(op_a.matrix(), truth, random_gains(rng, 3));
        CVec yb = synth(op_b.matrix(), truth, random_gains(rng, 3));
        ya += rng.complex_normal(16, 1, ya.squaredNorm() / 16 * 1e-3);
        yb += rng.complex_normal(16, 1, yb.squaredNorm() / 16);
        const auto joint = d_laomp({ya, yb}, {&op_a, &op_b}, {3, 0.0});
        if (as_set(joint[1].support) == as_set(truth)) ++joint_ok;
        if (as_set(laomp(yb, op_b, {3, 0.0}).support) == as_set(truth)) ++single_ok;
    }
    MESSAGE("joint " << joint_ok << " single " << single_ok);
    CHECK(joint_ok > single_ok);
}

TEST_CASE("matrix pursuit with one column is vector pursuit") {
    Rng rng(11);
    for (int t = 0; t < 30; ++t) {
        const DenseSensing op(rng.complex_normal(10, 30, 1.0));
        const CVec y = rng.complex_normal(10, 1, 1.0);
        const JointSolution j = dm_laomp({CMat(y)}, {&op}, {3, 0.0});
        const SparseSolution s = laomp(y, op, {3, 0.0});
        CHECK(j.support == s.support);
        CHECK((j.coefficients[0].col(0) - s.coefficients).norm() < 1e-12);
    }
}

TEST_CASE("matrix pursuit finds a shared row support noiselessly") {
    Rng rng(12);
    const Dictionary d = build_dictionary(half_wave(8, 1), {16, 1}, DictionaryKind::tx);
    for (int t = 0; t < 50; ++t) {
        const auto truth = separated_support(rng, 16, 2, 2);
        const CMat meas_a = rng.unit_modulus(8, 8);
        const CMat meas_b = rng.unit_modulus(8, 8);
        const DenseSensing op_a(meas_a.adjoint() * d.atoms);
        const DenseSensing op_b(meas_b.adjoint() * d.atoms);
        CMat za = CMat::Zero(16, 5), zb = CMat::Zero(16, 4);
        for (Eigen::Index s : truth) {
            za.row(s) = rng.complex_normal(1, 5, 1.0);
            zb.row(s) = rng.complex_normal(1, 4, 1.0);
        }
        const JointSolution j = dm_laomp({op_a.matrix() * za, op_b.matrix() * zb}, {&op_a, &op_b}, {2, 0.0});
        CHECK(as_set(j.support) == as_set(truth));
        CHECK(j.coefficients.size() == 2);
        CHECK(j.residual_norms[0] < 1e-10);
        CHECK(j.residual_norms[1] < 1e-10);
    }
}

TEST_CASE("one-sparse fit of a scaled column") {
    Rng rng(13);
    const DenseSensing op(rng.complex_normal(10, 20, 1.0));
    CMat y(10, 2);
    y.col(0) = 2.5 * op.column(11);
    y.col(1).setZero();
    const auto fits = one_sparse_batch(y, op);
    CHECK(fits[0].valid);
    CHECK(fits[0].index == 11);
    CHECK(std::abs(fits[0].gain - cd(2.5, 0.0)) < 1e-12);
    CHECK_FALSE(fits[1].valid);
}

TEST_CASE("one-sparse fit equals the exhaustive single-atom search") {
    Rng rng(14);
    for (int t = 0; t < 50; ++t) {
        const DenseSensing op(rng.complex_normal(6, 24, 1.0));
        const CMat y = rng.complex_normal(6, 5, 1.0);
        const auto fits = one_sparse_batch(y, op);
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            double best = std::numeric_limits<double>::infinity();
            Eigen::Index arg = -1;
            for (Eigen::Index g = 0; g < 24; ++g) {
                const CVec a = op.column(g);
                const cd coef = a.dot(y.col(c)) / a.squaredNorm();
                const double r = (y.col(c) - coef * a).squaredNorm();
                if (r < best) {
                    best = r;
                    arg = g;
                }
            }
            CHECK(fits[static_cast<std::size_t>(c)].index == arg);
        }
    }
}

TEST_CASE("refinement gradient matches central differences") {
    Rng rng(15);
    const UpaGeometry g = half_wave(6, 6);
    for (int t = 0; t < 20; ++t) {
        const CMat sensing = rng.complex_normal(20, 36, 1.0);
        const AtomFamily fam = planar_family(g, sensing);
        std::vector<RVec> params;
        for (int k = 0; k < 2; ++k) {
            const DirCosines dc = random_cosines(rng);
            params.push_back((RVec(2) << 0.9 * dc.ele, 0.9 * dc.azi).finished());
        }
        const std::vector<CVec> ys{rng.complex_normal(20, 1, 1.0)};
        const std::vector<CVec> coef{rng.complex_normal(2, 1, 1.0)};
        const auto grad = refine_gradient(ys, {fam}, params, coef);
        const double h = 1e-6;
        for (std::size_t k = 0; k < params.size(); ++k) {
            for (int p = 0; p < 2; ++p) {
                auto up = params, dn = params;
                up[k](p) += h;
                dn[k](p) -= h;
                const double fd = (refine_residual(ys, {fam}, up, coef) - refine_residual(ys, {fam}, dn, coef)) / (2 * h);
                CHECK(std::abs(fd - grad[k](p)) <= 1e-5 * std::max(1.0, std::abs(grad[k](p))));
            }
        }
    }
}

TEST_CASE("refinement keeps on-grid truth in place") {
    Rng rng(16);
    const UpaGeometry g = half_wave(8, 8);
    const Dictionary d = build_dictionary(g, {16, 16}, DictionaryKind::tx);
    const CMat sensing = rng.complex_normal(40, 64, 1.0);
    const Eigen::Index idx = 5 + 16 * 9;
    const CVec y = sensing * d.atoms.col(idx) * cd(1.3, 0.4);
    const DirCosines c = d.cosines(idx);
    const RVec start = (RVec(2) << c.ele, c.azi).finished();
    const RefineResult r = offgrid_refine({y}, {planar_family(g, sensing)}, {start});
    CHECK((r.params[0] - start).norm() < 1e-10);
    CHECK(r.residual_after < 1e-20);
    CHECK(std::abs(r.residual_after - r.residual_before) < 1e-10);
}

TEST_CASE("refinement resolves a path between grid points") {
    Rng rng(17);
    const UpaGeometry g = half_wave(8, 8);
    const Dictionary d = build_dictionary(g, {16, 16}, DictionaryKind::tx);
    const CMat sensing = rng.complex_normal(40, 64, 1.0);
    // Midway between two grid points on both axes.
    const DirCosines truth{0.25 + 1.0 / 16, -0.5 + 1.0 / 16};
    const CVec y = sensing * planar_response(g, truth) * cd(-0.8, 0.6);
    const SparseSolution s = omp(y, DenseSensing(sensing * d.atoms), {1, 0.0});
    const DirCosines start = d.cosines(s.support[0]);
    CHECK(std::max(std::abs(start.ele - truth.ele), std::abs(start.azi - truth.azi)) >= 1.0 / 16 - 1e-12);
    const RefineResult r =
        offgrid_refine({y}, {planar_family(g, sensing)}, {(RVec(2) << start.ele, start.azi).finished()});
    CHECK(std::abs(r.params[0](0) - truth.ele) < 1e-4);
    CHECK(std::abs(r.params[0](1) - truth.azi) < 1e-4);
    CHECK(r.residual_after <= r.residual_before);
}

TEST_CASE("refinement never increases the residual") {
    Rng rng(18);
    const UpaGeometry g = half_wave(5, 5);
    for (int t = 0; t < 40; ++t) {
        const CMat sensing = rng.complex_normal(18, 25, 1.0);
        const AtomFamily fam = planar_family(g, sensing);
        std::vector<RVec> params;
        for (int k = 0; k < 3; ++k) {
            const DirCosines dc = random_cosines(rng);
            params.push_back((RVec(2) << dc.ele, dc.azi).finished());
        }
        const RefineResult r = offgrid_refine({rng.complex_normal(18, 1, 1.0)}, {fam}, params);
        CHECK(r.residual_after <= r.residual_before);
        for (const RVec& p : r.params) CHECK(p.cwiseAbs().maxCoeff() <= 1.0);
        CHECK(r.params.size() == 3);
    }
}

}
