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

#include "fdris/dictionaries.hpp"
#include "fdris/random.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace fdris;
using namespace fdris::testing;

TEST_SUITE("dictionaries") {

TEST_CASE("grid points and index mapping") {
    const AngleGrid grid{8, 4};
    CHECK(grid.size() == 32);
    CHECK(grid.point(0) == DirCosines{-1.0, -1.0});
    CHECK(grid.point(3 + 8 * 2) == DirCosines{-1.0 + 2.0 * 3 / 8, 0.0});
    for (Eigen::Index g = 0; g < grid.size(); ++g) CHECK(grid.nearest(grid.point(g)) == g);
    // +1 wraps to -1: both cosines give the same response at half-wavelength spacing.
    CHECK(grid.nearest({1.0, 1.0}) == 0);
    CHECK_THROWS_AS(grid.point(32), DomainError);
}

TEST_CASE("oversampled grid scales the array dimensions") {
    const AngleGrid g = AngleGrid::oversampled(half_wave(4, 3), 2);
    CHECK(g.g_z == 8);
    CHECK(g.g_y == 6);
}

TEST_CASE("critically sampled dictionary is orthonormal") {
    for (auto [nz, ny] : {std::pair{4, 3}, std::pair{8, 8}, std::pair{1, 5}}) {
        const Dictionary d = build_dictionary(half_wave(nz, ny), {nz, ny}, DictionaryKind::tx);
        const CMat gram = d.atoms.adjoint() * d.atoms;
        CHECK((gram - CMat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("dictionary columns have unit norm") {
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const UpaGeometry g = half_wave(rng.uniform_int(1, 6), rng.uniform_int(1, 6));
        const int f = rng.uniform_int(1, 3);
        for (auto kind : {DictionaryKind::tx, DictionaryKind::rx, DictionaryKind::ris_cascaded}) {
            const Dictionary d = build_dictionary(g, AngleGrid::oversampled(g, f), kind);
            CHECK((d.atoms.colwise().norm().array() - 1.0).abs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("broadside atom is flat and on-grid responses are columns") {
    const UpaGeometry g = half_wave(4, 4);
    const AngleGrid grid{8, 8};
    const Dictionary d = build_dictionary(g, grid, DictionaryKind::tx);
    const CVec flat = d.atoms.col(4 + 8 * 4);
    CHECK((flat.array() - flat(0)).abs().maxCoeff() < 1e-15);
    for (Eigen::Index idx : {0, 9, 37, 63}) CHECK(rel_diff(planar_response(g, grid.point(idx)), d.atoms.col(idx)) == 0.0);
}

TEST_CASE("receive dictionaries omit the global receive phase") {
    const UpaGeometry g = half_wave(4, 4);
    const Dictionary tx = build_dictionary(g, {8, 8}, DictionaryKind::tx);
    const Dictionary rx = build_dictionary(g, {8, 8}, DictionaryKind::rx);
    CHECK(rel_diff(tx.atoms, rx.atoms) == 0.0);
}

TEST_CASE("grids coarser than the array are rejected") {
    CHECK_THROWS_AS(build_dictionary(half_wave(4, 4), {3, 4}, DictionaryKind::tx), DomainError);
    CHECK_THROWS_AS(build_dictionary(half_wave(4, 4), {0, 0}, DictionaryKind::tx), DomainError);
}

TEST_CASE("Khatri-Rao vectorization identity") {
    Rng rng(9);
    const CMat a = rng.complex_normal(5, 4, 1.0);
    const CMat c = rng.complex_normal(4, 3, 1.0);
    const CMat kr = kr_sensing(c, a);
    CHECK(kr.rows() == 15);
    CHECK(kr.cols() == 4);
    for (int t = 0; t < 50; ++t) {
        const CVec b = rng.complex_normal(4, 1, 1.0);
        const CMat lhs = a * b.asDiagonal() * c;
        CHECK(rel_diff(vec(lhs), kr * b) < 1e-12);
    }
}

TEST_CASE("Khatri-Rao with one atom is an outer product") {
    Rng rng(10);
    const CMat w = rng.complex_normal(3, 1, 1.0);
    const CMat f = rng.complex_normal(1, 4, 1.0);
    CHECK(rel_diff(kr_sensing(f, w), vec(w * f)) < 1e-15);
}

TEST_CASE("Khatri-Rao columns are the diagonal columns of the Kronecker product") {
    Rng rng(12);
    const CMat a = rng.complex_normal(5, 4, 1.0);
    const CMat c = rng.complex_normal(4, 3, 1.0);
    const CMat kr = kr_sensing(c, a);
    const CMat full = kron_sensing(c.transpose(), a);
    CHECK(full.cols() == 16);
    for (Eigen::Index g = 0; g < 4; ++g) CHECK(rel_diff(kr.col(g), full.col(g + 4 * g)) == 0.0);
}

TEST_CASE("Kronecker vectorization identity") {
    Rng rng(13);
    const CMat a = rng.complex_normal(3, 2, 1.0);
    const CMat b = rng.complex_normal(2, 3, 1.0);
    const CMat k = kron_sensing(b.transpose(), a);
    CHECK(k.rows() == 9);
    CHECK(k.cols() == 4);
    for (int t = 0; t < 50; ++t) {
        const CMat x = rng.complex_normal(2, 2, 1.0);
        CHECK(rel_diff(vec(a * x * b), k * vec(x)) < 1e-12);
    }
    CHECK(rel_diff(kron_sensing(CMat::Identity(3, 3), CMat::Identity(2, 2)), CMat::Identity(6, 6)) == 0.0);
    CHECK(kron_sensing(CMat::Ones(2, 5), CMat::Ones(3, 7)).rows() == 6);
    CHECK(kron_sensing(CMat::Ones(2, 5), CMat::Ones(3, 7)).cols() == 35);
}

TEST_CASE("diagonal Khatri-Rao problems equal Kronecker problems on diag matrices") {
    Rng rng(14);
    const CMat phi_w = rng.complex_normal(6, 5, 1.0);
    const CMat phi_f = rng.complex_normal(5, 4, 1.0);
    const CVec diag = rng.complex_normal(5, 1, 1.0);
    const CMat x = diag.asDiagonal();
    CHECK(rel_diff(kr_sensing(phi_f, phi_w) * diag, kron_sensing(phi_f.transpose(), phi_w) * vec(x)) < 1e-12);
}

TEST_CASE("vec and unvec round trip column-major") {
    CMat m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    const CVec v = vec(m);
    CHECK(v(1) == cd(4.0, 0.0));
    CHECK(v(2) == cd(2.0, 0.0));
    CHECK(rel_diff(unvec(v, 2, 3), m) == 0.0);
    CHECK_THROWS_AS(unvec(v, 4, 2), DimensionError);
}

TEST_CASE("structured operators agree with their dense forms") {
    Rng rng(15);
    const CMat phi_f = rng.complex_normal(6, 4, 1.0);
    const CMat phi_w = rng.complex_normal(5, 6, 1.0);
    const KhatriRaoSensing kr(phi_f, phi_w);
    const CMat kr_dense = kr_sensing(phi_f, phi_w);
    CHECK(rel_diff(kr.materialize(), kr_dense) < 1e-14);

    const CMat left = rng.complex_normal(5, 7, 1.0);
    const CMat right = rng.complex_normal(3, 4, 1.0);
    const KroneckerSensing kron(left, right);
    const CMat kron_dense = kron_sensing(right.transpose(), left);
    CHECK(rel_diff(kron.materialize(), kron_dense) < 1e-14);
    CHECK(kron.left_atoms() == 7);

    for (const auto* op : {static_cast<const SensingOperator*>(&kr), static_cast<const SensingOperator*>(&kron)}) {
        const CMat dense = op->materialize();
        const DenseSensing ref(dense);
        const CMat resid = rng.complex_normal(op->rows(), 3, 1.0);
        CHECK(rel_diff(op->correlate(resid), dense.adjoint() * resid) < 1e-12);
        CHECK((op->column_norms() - dense.colwise().norm().transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(rel_diff(ref.correlate(resid), dense.adjoint() * resid) < 1e-14);
    }
}

TEST_CASE("Khatri-Rao sensing has G columns against G squared for Kronecker") {
    Rng rng(16);
    const CMat phi_f = rng.complex_normal(64, 8, 1.0);
    const CMat phi_w = rng.complex_normal(8, 64, 1.0);
    CHECK(KhatriRaoSensing(phi_f, phi_w).cols() == 64);
    CHECK(KroneckerSensing(phi_w, phi_f).cols() == 64 * 64);
}

TEST_CASE("mismatched operands are rejected") {
    CHECK_THROWS_AS(kr_sensing(CMat::Ones(3, 2), CMat::Ones(2, 4)), DimensionError);
}

}
