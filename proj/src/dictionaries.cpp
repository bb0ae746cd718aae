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

#include <cmath>

namespace fdris {

double grid_cosine(int index, int count) { return -1.0 + 2.0 * index / count; }

DirCosines AngleGrid::point(Eigen::Index index) const {
    require(index >= 0 && index < size(), "grid index out of range");
    const int gz = static_cast<int>(index % g_z);
    const int gy = static_cast<int>(index / g_z);
    return {grid_cosine(gz, g_z), grid_cosine(gy, g_y)};
}

Eigen::Index AngleGrid::nearest(DirCosines dir) const {
    auto snap = [](double c, int count) {
        long idx = std::lround((c + 1.0) * count / 2.0);
        idx %= count;
        if (idx < 0) idx += count;
        return static_cast<Eigen::Index>(idx);
    };
    return snap(dir.ele, g_z) + g_z * snap(dir.azi, g_y);
}

AngleGrid AngleGrid::oversampled(const UpaGeometry& geom, int factor) {
    require(factor >= 1, "oversampling factor must be at least 1");
    return {geom.n_z * factor, geom.n_y * factor};
}

Dictionary build_dictionary(const UpaGeometry& geom, const AngleGrid& grid, DictionaryKind kind) {
    geom.validate();
    require(grid.g_z >= geom.n_z && grid.g_y >= geom.n_y, "grid is coarser than the array");
    Dictionary d{kind, geom, grid, CMat(geom.size(), grid.size())};
    for (Eigen::Index g = 0; g < grid.size(); ++g) d.atoms.col(g) = planar_response(geom, grid.point(g));
    return d;
}

CMat kr_sensing(const CMat& phi_f, const CMat& phi_w) {
    require_dims(phi_f.rows() == phi_w.cols(), "kr_sensing: atom counts differ");
    const Eigen::Index m = phi_w.rows();
    const Eigen::Index n = phi_f.cols();
    CMat out(m * n, phi_w.cols());
    for (Eigen::Index g = 0; g < phi_w.cols(); ++g)
        for (Eigen::Index c = 0; c < n; ++c) out.col(g).segment(c * m, m) = phi_f(g, c) * phi_w.col(g);
    return out;
}

CMat kron_sensing(const CMat& lhs, const CMat& rhs) {
    CMat out(lhs.rows() * rhs.rows(), lhs.cols() * rhs.cols());
    for (Eigen::Index i = 0; i < lhs.rows(); ++i)
        for (Eigen::Index j = 0; j < lhs.cols(); ++j)
            out.block(i * rhs.rows(), j * rhs.cols(), rhs.rows(), rhs.cols()) = lhs(i, j) * rhs;
    return out;
}

CVec vec(const CMat& m) { return Eigen::Map<const CVec>(m.data(), m.size()); }

CMat unvec(const CVec& v, Eigen::Index rows, Eigen::Index cols) {
    require_dims(v.size() == rows * cols, "unvec: size mismatch");
    return Eigen::Map<const CMat>(v.data(), rows, cols);
}

CMat SensingOperator::columns(const std::vector<Eigen::Index>& idx) const {
    CMat out(rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = column(idx[i]);
    return out;
}

CMat SensingOperator::materialize() const {
    CMat out(rows(), cols());
    for (Eigen::Index j = 0; j < cols(); ++j) out.col(j) = column(j);
    return out;
}

DenseSensing::DenseSensing(CMat matrix) : matrix_(std::move(matrix)) {
    norms_ = matrix_.colwise().norm().transpose();
}

CMat DenseSensing::correlate(const CMat& residual) const {
    require_dims(residual.rows() == matrix_.rows(), "correlate: residual length mismatch");
    return matrix_.adjoint() * residual;
}

KhatriRaoSensing::KhatriRaoSensing(CMat phi_f, CMat phi_w) : phi_f_(std::move(phi_f)), phi_w_(std::move(phi_w)) {
    require_dims(phi_f_.rows() == phi_w_.cols(), "KhatriRaoSensing: atom counts differ");
    norms_ = phi_w_.colwise().norm().transpose().cwiseProduct(phi_f_.rowwise().norm());
}

CVec KhatriRaoSensing::column(Eigen::Index j) const {
    const Eigen::Index m = phi_w_.rows();
    CVec out(rows());
    for (Eigen::Index c = 0; c < phi_f_.cols(); ++c) out.segment(c * m, m) = phi_f_(j, c) * phi_w_.col(j);
    return out;
}

CMat KhatriRaoSensing::correlate(const CMat& residual) const {
    require_dims(residual.rows() == rows(), "correlate: residual length mismatch");
    CMat out(cols(), residual.cols());
    for (Eigen::Index r = 0; r < residual.cols(); ++r) {
        const Eigen::Map<const CMat> res(residual.col(r).data(), phi_w_.rows(), phi_f_.cols());
        const CMat left = phi_w_.adjoint() * res;  // G x n
        out.col(r) = left.cwiseProduct(phi_f_.conjugate()).rowwise().sum();
    }
    return out;
}

KroneckerSensing::KroneckerSensing(CMat left, CMat right) : left_(std::move(left)), right_(std::move(right)) {
    const RVec ln = left_.colwise().norm().transpose();
    const RVec rn = right_.rowwise().norm();
    norms_.resize(ln.size() * rn.size());
    for (Eigen::Index g2 = 0; g2 < rn.size(); ++g2) norms_.segment(g2 * ln.size(), ln.size()) = ln * rn(g2);
}

CVec KroneckerSensing::column(Eigen::Index j) const {
    const Eigen::Index g1 = j % left_.cols();
    const Eigen::Index g2 = j / left_.cols();
    const CMat outer = left_.col(g1) * right_.row(g2);
    return vec(outer);
}

CMat KroneckerSensing::correlate(const CMat& residual) const {
    require_dims(residual.rows() == rows(), "correlate: residual length mismatch");
    CMat out(cols(), residual.cols());
    for (Eigen::Index r = 0; r < residual.cols(); ++r) {
        const Eigen::Map<const CMat> res(residual.col(r).data(), left_.rows(), right_.cols());
        const CMat corr = left_.adjoint() * res * right_.adjoint();  // G1 x G2
        out.col(r) = vec(corr);
    }
    return out;
}

}  // namespace fdris
