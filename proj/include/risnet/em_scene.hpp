// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RISNET_EM_SCENE_HPP
#define RISNET_EM_SCENE_HPP

#include "risnet/network.hpp"

#include <vector>

namespace risnet
{
    // Thin-wire dipole, fed at its center
    struct DipoleElement
    {
        arma::vec3 position = {0.0, 0.0, 0.0}; // Center [m]
        double length = 0.0;                   // End-to-end [m]
        double radius = 0.0;                   // Wire radius [m]
        arma::vec3 orientation = {0.0, 0.0, 1.0};

        // Throws GeometryError on non-positive or non-thin dimensions
        void validate() const;
    };

    // Uniform grid in the yz plane
    struct RisGridSpec
    {
        arma::uword n_y = 1;
        arma::uword n_z = 1;
        double d_y = 0.0; // [m]
        double d_z = 0.0; // [m]
        arma::vec3 center = {0.0, 0.0, 0.0};
    };

    struct Scenario
    {
        double frequency = 28.0e9;      // [Hz]
        double reference_impedance = 50.0; // Z0 [ohm]
        std::vector<DipoleElement> tx_elements;
        std::vector<DipoleElement> rx_elements;
        std::vector<DipoleElement> ris_elements;
        std::vector<DipoleElement> cluster_elements;
        bool direct_link_blocked = true;

        Partition partition() const;

        // All elements in port order: T, S, R, O
        std::vector<DipoleElement> elements() const;

        // Copy of the scene with every element shifted by `offset`
        Scenario translated(const arma::vec3 &offset) const;
    };

    // Expands the grid into n_y * n_z copies of the template.
    // Ordering is row-major with z outer and y inner: index = iz * n_y + iy.
    std::vector<DipoleElement> expand_grid(const RisGridSpec &spec, const DipoleElement &element_template);

    // Induced-EMF impedances for sinusoidal current distributions on parallel z-oriented wires.
    // mutual_impedance is symmetric in its arguments bit for bit.
    cx mutual_impedance(const DipoleElement &a, const DipoleElement &b, double frequency);
    cx self_impedance(const DipoleElement &a, double frequency);

    // Absolute tolerance of the impedance quadrature [ohm]
    inline constexpr double impedance_tolerance = 1e-6;

    // Full Z matrix over all elements in port order. The parallel version distributes the
    // upper-triangle (i, j) pairs over OpenMP threads; both produce identical matrices.
    PartitionedNetworkMatrix assemble_z_matrix(const Scenario &scenario);
    PartitionedNetworkMatrix assemble_z_matrix_serial(const Scenario &scenario);

    // T-R impedance matrix of the transmitter and receiver alone (RIS and cluster removed)
    arma::cx_mat free_space_tr(const Scenario &scenario);

    // Subtracts the free-space T-R coupling from Z_RT and Z_TR. Not idempotent.
    // z_free is the (N_T + N_R) square matrix ordered T then R.
    PartitionedNetworkMatrix nullify_direct_link(const PartitionedNetworkMatrix &z_full, const arma::cx_mat &z_free);

    // Z matrix used by the channel models. When the direct link is blocked, the T-R entries are
    // set to zero without being evaluated, which equals assemble + nullify_direct_link because
    // the pairwise model makes Z_RT independent of the other elements. This also lets a
    // (virtual) receiver coincide with the transmitter position.
    PartitionedNetworkMatrix link_network(const Scenario &scenario);
}

#endif
