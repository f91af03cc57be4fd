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

#ifndef RISNET_MULTIPATH_HPP
#define RISNET_MULTIPATH_HPP

#include "risnet/em_scene.hpp"

#include <cstdint>

namespace risnet
{
    // Passive scatterers around a center point, all copies of one template
    struct ClusterSpec
    {
        arma::uword object_count = 0;
        arma::vec3 center = {0.0, 0.0, 0.0};
        double spread = 0.5; // Radius of the sphere the objects are drawn from [m]
        DipoleElement object_template;
        cx object_load = 0.0; // Z_US entry, zero for short-circuited objects
        std::uint64_t seed = 1;
    };

    // Uniform positions inside the sphere, drawn by rejection from a seeded mt19937_64.
    // Candidates that would overlap an earlier object or any element of `avoid` are redrawn.
    std::vector<DipoleElement> place_cluster(const ClusterSpec &spec, const std::vector<DipoleElement> &avoid = {});

    // Blocks of a T, S, R, O impedance matrix and the corrections the objects add.
    // B = (Z_US + Z_OO)^-1, Z_xOy = Z_xy - Z_xO B Z_Oy, Z_SOS = -Z_SO B Z_OS.
    struct AugmentedBlocks
    {
        double z0 = 50.0;
        Partition partition; // Of the reduced T, S, R network
        arma::cx_mat Z_TT, Z_RR, Z_RT, Z_TR, Z_RS, Z_SR, Z_ST, Z_TS, Z_SS;
        arma::cx_mat Z_RO, Z_OT, Z_SO, Z_OS, Z_OO, Z_TO, Z_OR, Z_US;
        arma::cx_mat B;
        arma::cx_mat Z_ROT, Z_ROS, Z_SOT, Z_SOS;

        // Z_SS + Z_SOS
        arma::cx_mat Z_SS_eff() const { return Z_SS + Z_SOS; }
    };

    AugmentedBlocks assemble_augmented(const PartitionedNetworkMatrix &z, const arma::cx_vec &object_loads);
    AugmentedBlocks assemble_augmented(const Scenario &scenario, cx object_load = 0.0);

    // T, S, R impedance network with the objects eliminated, usable by every channel model and optimizer
    PartitionedNetworkMatrix reduced_network(const AugmentedBlocks &blocks);

    // Z_ROT - Z_ROS (Z_S + Z_SS + Z_SOS)^-1 Z_SOT
    arma::cx_mat effective_z_rt_multipath(const AugmentedBlocks &blocks, const arma::cx_mat &load_impedance);

    struct SrotTerms
    {
        arma::cx_mat s_rot;      // Z_ROT / 2Z0 - Z_ROS (Z0 U + Z_SS + Z_SOS)^-1 Z_SOT / 2Z0
        arma::cx_mat direct;     // Z_RT / 2Z0
        arma::cx_mat cluster;    // -Z_RO B Z_OT / 2Z0
        arma::cx_mat structural; // -Z_RS (Z0 U + Z_SS + Z_SOS)^-1 Z_ST / 2Z0
        arma::cx_mat delta;      // Remainder: s_rot - direct - cluster - structural
    };

    SrotTerms s_rot_decompose(const AugmentedBlocks &blocks);
}

#endif
