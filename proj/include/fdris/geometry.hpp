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

#include "fdris/common.hpp"

namespace fdris {

// Uniform planar array in the y-z plane. Element (n_z, n_y) is stored at
// flat index n_z + n_z_count * n_y, so the z index runs fastest. Every
// response vector and dictionary in the library uses this ordering.
struct UpaGeometry {
    int n_z = 8;
    int n_y = 8;
    double spacing = 1.5e-3;     // metres
    double wavelength = 3e-3;    // metres

    Eigen::Index size() const { return static_cast<Eigen::Index>(n_z) * n_y; }
    double wavenumber() const { return 2.0 * kPi / wavelength; }
    void validate() const;

    static UpaGeometry half_wavelength(int n_z, int n_y, double wavelength = 3e-3);
};

// Co-located transmit and receive arrays of one full-duplex transceiver.
// The receive array starts d0 beyond the last transmit element along z and
// may be tilted by `tilt` radians about the y axis.
struct DuplexLayout {
    UpaGeometry tx;
    UpaGeometry rx;
    double d0 = 0.06;
    double tilt = 0.0;

    void validate() const;
    // Distance from the transmit reference element to the first receive
    // element along z, used as the global phase offset of receive responses.
    double rx_offset() const;
};

// Directional cosines (cos of elevation, sin(ele)*sin(azi)).
struct DirCosines {
    double ele = 0.0;
    double azi = 0.0;

    static DirCosines from_angles(double elevation, double azimuth);
    bool operator==(const DirCosines&) const = default;
};

struct SourcePosition {
    double range = 1.0;
    double elevation = 0.0;
    double azimuth = 0.0;
};

enum class ArraySide { tx, rx };

// Far-field response, unit norm. Throws DomainError when a cosine is
// outside [-1, 1].
CVec planar_response(const UpaGeometry& geom, DirCosines dir);

// Derivatives of planar_response with respect to (ele, azi), N x 2.
CMat planar_response_jacobian(const UpaGeometry& geom, DirCosines dir);

// planar_response of the receive array times the phase picked up over
// rx_offset(): exp(j k rx_offset ele).
CVec rx_planar_response(const DuplexLayout& layout, DirCosines dir);

// Exact spherical-wavefront response exp(j k (R - R_n)) / sqrt(N) for a
// point source at `src` measured from the transmit reference element.
CVec spherical_response(const DuplexLayout& layout, ArraySide side, const SourcePosition& src);

// Element coordinates (x, y, z) in the transceiver frame, one row per element.
RMat element_positions(const DuplexLayout& layout, ArraySide side);

// Response of the receive array to a point source located at the transmit
// reference element; pairs with spherical_response(tx) toward the first
// receive element for the line-of-sight self-interference model.
CVec rx_response_from_tx_reference(const DuplexLayout& layout);

// Smallest scatterer range for which the planar approximation of the
// receive array keeps the worst-case phase error below `max_phase_error`.
double min_scatter_distance(const DuplexLayout& layout, double max_phase_error);

// Largest d0 for which scatterers at `min_range` still meet the phase error.
// A negative value means no spacing qualifies; throws DomainError only when
// the receive aperture alone already exceeds the budget.
double max_duplex_spacing(const UpaGeometry& tx, const UpaGeometry& rx, double min_range,
                          double max_phase_error);

// Second-order phase error bound for a scatterer at `range`.
double phase_error_bound(const DuplexLayout& layout, double range);

// Response of a RIS to a cascaded direction; accepts cosines in [-2, 2]
// because differences of two physical directions land there.
CVec cascaded_angle_response(const UpaGeometry& ris, DirCosines cascaded);

// a(out) .* conj(a(in)). Entries have modulus 1/N.
CVec cascaded_ris_response(const UpaGeometry& ris, DirCosines out, DirCosines in);

}  // namespace fdris
