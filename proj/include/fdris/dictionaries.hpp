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

#include "fdris/geometry.hpp"

#include <memory>
#include <vector>

namespace fdris {

// Uniform grid of directional cosines -1 + 2g/G per axis. Column g of a
// dictionary maps to (g % g_z, g / g_z), matching the element ordering.
struct AngleGrid {
    int g_z = 16;
    int g_y = 16;

    Eigen::Index size() const { return static_cast<Eigen::Index>(g_z) * g_y; }
    DirCosines point(Eigen::Index index) const;
    // Nearest grid index, with wrap-around at the +1 edge.
    Eigen::Index nearest(DirCosines dir) const;

    static AngleGrid oversampled(const UpaGeometry& geom, int factor);
};

double grid_cosine(int index, int count);

enum class DictionaryKind { tx, rx, ris_cascaded };

struct Dictionary {
    DictionaryKind kind = DictionaryKind::tx;
    UpaGeometry geometry;
    AngleGrid grid;
    CMat atoms;  // N x G, unit-norm columns

    DirCosines cosines(Eigen::Index index) const { return grid.point(index); }
};

// Receive dictionaries omit the global receive phase; it is absorbed into
// the recovered coefficients.
Dictionary build_dictionary(const UpaGeometry& geom, const AngleGrid& grid, DictionaryKind kind);

// Column g equals kron(phi_f.row(g).transpose(), phi_w.col(g)).
CMat kr_sensing(const CMat& phi_f, const CMat& phi_w);
// Standard Kronecker product; vec(A X B) = kron(B^T, A) vec(X).
CMat kron_sensing(const CMat& lhs, const CMat& rhs);

// Column-major vectorization.
CVec vec(const CMat& m);
CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols);

// Abstract linear measurement operator y = A x. Recovery algorithms only use
// column access and adjoint products, so structured operators never need to
// be materialized.
class SensingOperator {
public:
    virtual ~SensingOperator() = default;
    virtual Eigen::Index rows() const = 0;
    virtual Eigen::Index cols() const = 0;
    virtual CVec column(Eigen::Index j) const = 0;
    // A^H R for a block of residual columns.
    virtual CMat correlate(const CMat& residual) const = 0;
    virtual RVec column_norms() const = 0;

    CMat columns(const std::vector<Eigen::Index>& idx) const;
    CMat materialize() const;
};

class DenseSensing final : public SensingOperator {
public:
    explicit DenseSensing(CMat matrix);
    Eigen::Index rows() const override { return matrix_.rows(); }
    Eigen::Index cols() const override { return matrix_.cols(); }
    CVec column(Eigen::Index j) const override { return matrix_.col(j); }
    CMat correlate(const CMat& residual) const override;
    RVec column_norms() const override { return norms_; }
    const CMat& matrix() const { return matrix_; }

private:
    CMat matrix_;
    RVec norms_;
};

// y = vec(phi_w diag(x) phi_f): columns are the Khatri-Rao product.
class KhatriRaoSensing final : public SensingOperator {
public:
    KhatriRaoSensing(CMat phi_f, CMat phi_w);
    Eigen::Index rows() const override { return phi_w_.rows() * phi_f_.cols(); }
    Eigen::Index cols() const override { return phi_w_.cols(); }
    CVec column(Eigen::Index j) const override;
    CMat correlate(const CMat& residual) const override;
    RVec column_norms() const override { return norms_; }

private:
    CMat phi_f_;  // G x n
    CMat phi_w_;  // m x G
    RVec norms_;
};

// y = vec(left X right) with X of size left.cols() x right.rows(); column
// index j = g1 + left.cols() * g2 addresses X(g1, g2).
class KroneckerSensing final : public SensingOperator {
public:
    KroneckerSensing(CMat left, CMat right);
    Eigen::Index rows() const override { return left_.rows() * right_.cols(); }
    Eigen::Index cols() const override { return left_.cols() * right_.rows(); }
    CVec column(Eigen::Index j) const override;
    CMat correlate(const CMat& residual) const override;
    RVec column_norms() const override { return norms_; }
    Eigen::Index left_atoms() const { return left_.cols(); }

private:
    CMat left_;   // m x G1
    CMat right_;  // G2 x n
    RVec norms_;
};

}  // namespace fdris
