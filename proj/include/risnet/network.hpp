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

#ifndef RISNET_NETWORK_HPP
#define RISNET_NETWORK_HPP

#include "risnet/common.hpp"

namespace risnet
{
    enum class MatrixKind
    {
        Z,
        S
    };

    // Port groups, always stored in this order: transmitter, RIS, receiver, scattering objects
    enum class Block
    {
        T,
        S,
        R,
        O
    };

    struct Partition
    {
        arma::uword n_t = 0;
        arma::uword k = 0;
        arma::uword n_r = 0;
        arma::uword n_o = 0;

        arma::uword size() const { return n_t + k + n_r + n_o; }
        arma::uword offset(Block b) const;
        arma::uword count(Block b) const;
        bool operator==(const Partition &) const = default;
    };

    class PartitionedNetworkMatrix
    {
    public:
        PartitionedNetworkMatrix() = default;
        PartitionedNetworkMatrix(MatrixKind kind, arma::cx_mat data, Partition partition, double z0 = 50.0);

        MatrixKind kind() const { return kind_; }
        const arma::cx_mat &data() const { return data_; }
        const Partition &partition() const { return partition_; }
        double reference_impedance() const { return z0_; }
        arma::uword size() const { return data_.n_rows; }

        // Sub-matrix with rows from group `row` and columns from group `col`, e.g. block(R, T) = S_RT
        arma::cx_mat block(Block row, Block col) const;

        // Returns a copy with one sub-matrix replaced
        PartitionedNetworkMatrix with_block(Block row, Block col, const arma::cx_mat &value) const;

    private:
        MatrixKind kind_ = MatrixKind::Z;
        arma::cx_mat data_;
        Partition partition_;
        double z0_ = 50.0;
    };

    // Conversion between impedance and scattering representations, both referenced to the same Z0
    PartitionedNetworkMatrix z_to_s(const PartitionedNetworkMatrix &z);
    PartitionedNetworkMatrix s_to_z(const PartitionedNetworkMatrix &s);

    // Tunable RIS loads Z_S,k = j X_k + r0
    struct LoadConfig
    {
        arma::vec reactance; // X_k [ohm], +/-inf encodes an open circuit
        double r0 = 0.0;     // Parasitic series resistance [ohm]
        double z0 = 50.0;    // Reference impedance [ohm]

        LoadConfig() = default;
        LoadConfig(arma::vec x, double r0, double z0);

        // Builds loads whose lossless reflection coefficient is exp(j phi), i.e. X = Z0 cot(phi / 2)
        static LoadConfig from_phases(const arma::vec &phases, double r0, double z0);

        arma::uword size() const { return reactance.n_elem; }
        double epsilon() const { return r0 / z0; }
        arma::vec normalized_reactance() const { return reactance / z0; }
        arma::cx_vec impedances() const;
        arma::cx_vec gammas() const;
    };

    // Reflection coefficient of a load with phase parameter phi and loss ratio eps = r0 / Z0.
    // Equal to (jX - Z0 + r0) / (jX + Z0 + r0) with X = Z0 cot(phi / 2), but finite at phi = 0.
    cx gamma_from_phase(double phi, double eps);
    arma::cx_vec gamma_from_phase(const arma::vec &phi, double eps);

    // (Z_k - Z0) / (Z_k + Z0)
    arma::cx_vec gamma_from_impedances(const arma::cx_vec &z, double z0);

    // Diagonal Gamma_S for the given loads
    arma::cx_mat gamma_from_loads(const LoadConfig &loads);

    // Generator and receiver terminations
    struct TerminationConfig
    {
        arma::cx_vec generator_impedance; // Z_g, one per transmit port
        arma::cx_vec receiver_load;       // Z_R, one per receive port

        static TerminationConfig matched(arma::uword n_t, arma::uword n_r, double z0);

        arma::cx_mat gamma_t(double z0) const;
        arma::cx_mat gamma_r(double z0) const;
    };

    // Generator voltages producing incident waves a_g: V_g = 2 sqrt(Z0) (U - Gamma_T)^-1 a_g
    arma::cx_vec drive_voltage(const arma::cx_vec &a_g, const arma::cx_mat &gamma_t, double z0);

    // End-to-end channels. The S-domain channels map a_g to b_R, the Z-domain channels map V_g to V_R.
    // gamma_s may be a full K x K matrix; load_impedance likewise for the Z domain.
    arma::cx_mat h_e2e_s_exact(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s,
                               const arma::cx_mat &gamma_t, const arma::cx_mat &gamma_r);
    arma::cx_mat h_e2e_s_exact(const PartitionedNetworkMatrix &s, const LoadConfig &loads, const TerminationConfig &term);

    arma::cx_mat h_e2e_s_matched(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s);
    arma::cx_mat h_e2e_s_matched(const PartitionedNetworkMatrix &s, const LoadConfig &loads);

    arma::cx_mat h_e2e_z_exact(const PartitionedNetworkMatrix &z, const arma::cx_mat &load_impedance,
                               const TerminationConfig &term);
    arma::cx_mat h_e2e_z_exact(const PartitionedNetworkMatrix &z, const LoadConfig &loads, const TerminationConfig &term);

    arma::cx_mat h_e2e_z_approx(const PartitionedNetworkMatrix &z, const arma::cx_mat &load_impedance,
                                const TerminationConfig &term);
    arma::cx_mat h_e2e_z_approx(const PartitionedNetworkMatrix &z, const LoadConfig &loads, const TerminationConfig &term);

    // Cascade model H_RT + H_RS Gamma_S H_ST built from S blocks, ignoring S_SS.
    // With a blocked direct link the H_RT term is dropped.
    arma::cx_mat h_ct_conventional(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s,
                                   bool direct_link_blocked = true);

    // Scattering of the RIS terminated in Z0: -Z_RS (Z_SS + Z0 U)^-1 Z_ST / (2 Z0)
    arma::cx_mat structural_scattering(const PartitionedNetworkMatrix &z);

    // Z_RT / (2 Z0) + structural_scattering(z). Equals S_RT when the receiver and transmitter
    // do not load the remaining ports (Z_TS = Z_TR = Z_SR = 0, Z_TT = Z_RR = Z0 U).
    arma::cx_mat s_rt_from_z(const PartitionedNetworkMatrix &z);
}

#endif
