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

#include "fdris/geometry.hpp"

#include <cmath>

namespace fdris {

namespace {

void check_cosine(double c, const char* what) {
    if (!(c >= -1.0 && c <= 1.0)) throw DomainError(std::string("directional cosine out of range: ") + what);
}

// Entries exp(j k d (n_y azi + n_z ele)) / sqrt(N) with no range checks.
CVec raw_planar(const UpaGeometry& g, double ele, double azi) {
    CVec out(g.size());
    const double k = g.wavenumber() * g.spacing;
    const double scale = 1.0 / std::sqrt(static_cast<double>(g.size()));
    for (int ny = 0; ny < g.n_y; ++ny)
        for (int nz = 0; nz < g.n_z; ++nz)
            out(nz + g.n_z * ny) = std::polar(scale, k * (ny * azi + nz * ele));
    return out;
}

}  // namespace

void UpaGeometry::validate() const {
    require(n_z >= 1 && n_y >= 1, "array dimensions must be positive");
    require(spacing > 0.0 && std::isfinite(spacing), "element spacing must be positive");
    require(wavelength > 0.0 && std::isfinite(wavelength), "wavelength must be positive");
}

UpaGeometry UpaGeometry::half_wavelength(int n_z, int n_y, double wavelength) {
    UpaGeometry g{n_z, n_y, wavelength / 2.0, wavelength};
    g.validate();
    return g;
}

void DuplexLayout::validate() const {
    tx.validate();
    rx.validate();
    require(d0 >= 0.0 && std::isfinite(d0), "duplex spacing must be non-negative");
    require(tx.wavelength == rx.wavelength, "transmit and receive wavelengths differ");
}

double DuplexLayout::rx_offset() const { return d0 + (tx.n_z - 1) * tx.spacing; }

DirCosines DirCosines::from_angles(double elevation, double azimuth) {
    return {std::cos(elevation), std::sin(elevation) * std::sin(azimuth)};
}

CVec planar_response(const UpaGeometry& geom, DirCosines dir) {
    geom.validate();
    check_cosine(dir.ele, "elevation");
    check_cosine(dir.azi, "azimuth");
    return raw_planar(geom, dir.ele, dir.azi);
}

CMat planar_response_jacobian(const UpaGeometry& geom, DirCosines dir) {
    const CVec a = planar_response(geom, dir);
    const double k = geom.wavenumber() * geom.spacing;
    CMat jac(a.size(), 2);
    for (int ny = 0; ny < geom.n_y; ++ny) {
        for (int nz = 0; nz < geom.n_z; ++nz) {
            const Eigen::Index i = nz + geom.n_z * ny;
            jac(i, 0) = kJ * (k * nz) * a(i);
            jac(i, 1) = kJ * (k * ny) * a(i);
        }
    }
    return jac;
}

CVec rx_planar_response(const DuplexLayout& layout, DirCosines dir) {
    layout.validate();
    if (layout.tilt != 0.0) throw ConfigError("planar receive responses require an untilted receive array");
    CVec out = planar_response(layout.rx, dir);
    out *= std::polar(1.0, layout.rx.wavenumber() * layout.rx_offset() * dir.ele);
    return out;
}

RMat element_positions(const DuplexLayout& layout, ArraySide side) {
    layout.validate();
    const UpaGeometry& g = side == ArraySide::tx ? layout.tx : layout.rx;
    RMat pos(g.size(), 3);
    for (int ny = 0; ny < g.n_y; ++ny) {
        for (int nz = 0; nz < g.n_z; ++nz) {
            const Eigen::Index i = nz + g.n_z * ny;
            const double along = nz * g.spacing;
            if (side == ArraySide::tx) {
                pos.row(i) << 0.0, ny * g.spacing, along;
            } else {
                pos.row(i) << along * std::sin(layout.tilt), ny * g.spacing,
                    layout.rx_offset() + along * std::cos(layout.tilt);
            }
        }
    }
    return pos;
}

CVec spherical_response(const DuplexLayout& layout, ArraySide side, const SourcePosition& src) {
    require(src.range > 0.0 && std::isfinite(src.range), "source range must be positive");
    const RMat pos = element_positions(layout, side);
    const Eigen::Vector3d s(src.range * std::sin(src.elevation) * std::cos(src.azimuth),
                            src.range * std::sin(src.elevation) * std::sin(src.azimuth),
                            src.range * std::cos(src.elevation));
    const double k = layout.tx.wavenumber();
    const double scale = 1.0 / std::sqrt(static_cast<double>(pos.rows()));
    CVec out(pos.rows());
    for (Eigen::Index i = 0; i < pos.rows(); ++i) {
        const double dist = (s - pos.row(i).transpose()).norm();
        out(i) = std::polar(scale, k * (src.range - dist));
    }
    return out;
}

CVec rx_response_from_tx_reference(const DuplexLayout& layout) {
    const RMat pos = element_positions(layout, ArraySide::rx);
    const double k = layout.tx.wavenumber();
    const double ref = layout.rx_offset();
    const double scale = 1.0 / std::sqrt(static_cast<double>(pos.rows()));
    CVec out(pos.rows());
    for (Eigen::Index i = 0; i < pos.rows(); ++i) out(i) = std::polar(scale, k * (ref - pos.row(i).norm()));
    return out;
}

namespace {

double aperture_terms(const UpaGeometry& tx, const UpaGeometry& rx, double d0) {
    const double wide = rx.n_y * rx.spacing;
    const double along = d0 + tx.n_z * tx.spacing + rx.n_z * rx.spacing;
    return wide * wide + along * along;
}

}  // namespace

double min_scatter_distance(const DuplexLayout& layout, double max_phase_error) {
    layout.validate();
    require(max_phase_error > 0.0, "phase error tolerance must be positive");
    return kPi / (layout.rx.wavelength * max_phase_error) * aperture_terms(layout.tx, layout.rx, layout.d0);
}

double max_duplex_spacing(const UpaGeometry& tx, const UpaGeometry& rx, double min_range,
                          double max_phase_error) {
    tx.validate();
    rx.validate();
    require(min_range > 0.0 && max_phase_error > 0.0, "range and phase tolerance must be positive");
    const double wide = rx.n_y * rx.spacing;
    const double budget = rx.wavelength / kPi * min_range * max_phase_error - wide * wide;
    if (budget < 0.0) throw DomainError("no duplex spacing satisfies the phase error tolerance");
    // Negative results are returned as-is: no admissible spacing exists.
    return std::sqrt(budget) - tx.n_z * tx.spacing - rx.n_z * rx.spacing;
}

double phase_error_bound(const DuplexLayout& layout, double range) {
    layout.validate();
    require(range > 0.0, "range must be positive");
    return layout.rx.wavenumber() * aperture_terms(layout.tx, layout.rx, layout.d0) / (2.0 * range);
}

CVec cascaded_angle_response(const UpaGeometry& ris, DirCosines cascaded) {
    ris.validate();
    require(std::abs(cascaded.ele) <= 2.0 && std::abs(cascaded.azi) <= 2.0,
            "cascaded cosine out of [-2, 2]");
    return raw_planar(ris, cascaded.ele, cascaded.azi);
}

CVec cascaded_ris_response(const UpaGeometry& ris, DirCosines out, DirCosines in) {
    return planar_response(ris, out).cwiseProduct(planar_response(ris, in).conjugate());
}

}  // namespace fdris
