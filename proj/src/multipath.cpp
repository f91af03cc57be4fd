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

#include "risnet/multipath.hpp"

#include <cmath>
#include <random>

namespace risnet
{
    namespace
    {
        bool overlaps(const DipoleElement &a, const DipoleElement &b)
        {
            const double rho = std::hypot(a.position[0] - b.position[0], a.position[1] - b.position[1]);
            const double dz = std::abs(a.position[2] - b.position[2]);
            return rho < 2.0 * (a.radius + b.radius) && dz < 0.5 * (a.length + b.length);
        }

        double unit_uniform(std::mt19937_64 &rng)
        {
            // 53 random mantissa bits, identical on every platform
            return double(rng() >> 11) * 0x1.0p-53;
        }
    }

    std::vector<DipoleElement> place_cluster(const ClusterSpec &spec, const std::vector<DipoleElement> &avoid)
    {
        if (spec.object_count == 0)
            return {};
        if (!(spec.spread >= 0.0))
            throw GeometryError("cluster spread must be non-negative");
        spec.object_template.validate();

        std::mt19937_64 rng(spec.seed);
        std::vector<DipoleElement> out;
        out.reserve(spec.object_count);
        std::size_t attempts = 0;
        while (out.size() < spec.object_count)
        {
            if (++attempts > 1000 * spec.object_count + 1000)
                throw GeometryError("cannot place the cluster objects without overlap; increase the spread");
            arma::vec3 u;
            for (int i = 0; i < 3; ++i)
                u[i] = 2.0 * unit_uniform(rng) - 1.0;
            if (arma::dot(u, u) > 1.0)
                continue;
            DipoleElement e = spec.object_template;
            e.position = spec.center + spec.spread * u;
            bool clash = false;
            for (const auto &o : out)
                clash = clash || overlaps(e, o);
            for (const auto &o : avoid)
                clash = clash || overlaps(e, o);
            if (!clash)
                out.push_back(e);
        }
        return out;
    }

    AugmentedBlocks assemble_augmented(const PartitionedNetworkMatrix &z, const arma::cx_vec &object_loads)
    {
        using enum Block;
        if (z.kind() != MatrixKind::Z)
            throw ConfigError("assemble_augmented expects an impedance matrix");
        const Partition &p = z.partition();
        if (object_loads.n_elem != p.n_o)
            throw ConfigError("object load count does not match the cluster size");

        AugmentedBlocks a;
        a.z0 = z.reference_impedance();
        a.partition = {p.n_t, p.k, p.n_r, 0};
        a.Z_TT = z.block(T, T);
        a.Z_RR = z.block(R, R);
        a.Z_RT = z.block(R, T);
        a.Z_TR = z.block(T, R);
        a.Z_RS = z.block(R, S);
        a.Z_SR = z.block(S, R);
        a.Z_ST = z.block(S, T);
        a.Z_TS = z.block(T, S);
        a.Z_SS = z.block(S, S);
        a.Z_RO = z.block(R, O);
        a.Z_OR = z.block(O, R);
        a.Z_OT = z.block(O, T);
        a.Z_TO = z.block(T, O);
        a.Z_SO = z.block(S, O);
        a.Z_OS = z.block(O, S);
        a.Z_OO = z.block(O, O);
        a.Z_US = arma::diagmat(object_loads);
        a.B = checked_inv(a.Z_US + a.Z_OO, "Z_US + Z_OO (cluster resonance)");

        a.Z_ROT = a.Z_RT - a.Z_RO * a.B * a.Z_OT;
        a.Z_ROS = a.Z_RS - a.Z_RO * a.B * a.Z_OS;
        a.Z_SOT = a.Z_ST - a.Z_SO * a.B * a.Z_OT;
        a.Z_SOS = -a.Z_SO * a.B * a.Z_OS;
        return a;
    }

    AugmentedBlocks assemble_augmented(const Scenario &scenario, cx object_load)
    {
        const PartitionedNetworkMatrix z = link_network(scenario);
        return assemble_augmented(z, arma::cx_vec(z.partition().n_o).fill(object_load));
    }

    PartitionedNetworkMatrix reduced_network(const AugmentedBlocks &a)
    {
        const Partition &p = a.partition;
        const arma::uword t = p.n_t, k = p.k;
        arma::cx_mat Z(p.size(), p.size(), arma::fill::zeros);
        auto put = [&](arma::uword r0, arma::uword c0, const arma::cx_mat &m)
        {
            if (m.n_elem > 0)
                Z.submat(r0, c0, r0 + m.n_rows - 1, c0 + m.n_cols - 1) = m;
        };
        const arma::cx_mat &Bm = a.B;
        put(0, 0, a.Z_TT - a.Z_TO * Bm * a.Z_OT);
        put(0, t, a.Z_TS - a.Z_TO * Bm * a.Z_OS);
        put(0, t + k, a.Z_TR - a.Z_TO * Bm * a.Z_OR);
        put(t, 0, a.Z_SOT);
        put(t, t, a.Z_SS_eff());
        put(t, t + k, a.Z_SR - a.Z_SO * Bm * a.Z_OR);
        put(t + k, 0, a.Z_ROT);
        put(t + k, t, a.Z_ROS);
        put(t + k, t + k, a.Z_RR - a.Z_RO * Bm * a.Z_OR);
        return {MatrixKind::Z, std::move(Z), p, a.z0};
    }

    arma::cx_mat effective_z_rt_multipath(const AugmentedBlocks &a, const arma::cx_mat &load_impedance)
    {
        if (load_impedance.n_rows != a.partition.k || load_impedance.n_cols != a.partition.k)
            throw ConfigError("load impedance matrix does not match the RIS size");
        return a.Z_ROT - a.Z_ROS * checked_solve(load_impedance + a.Z_SS_eff(), a.Z_SOT, "Z_S + Z_SS + Z_SOS");
    }

    SrotTerms s_rot_decompose(const AugmentedBlocks &a)
    {
        const double two_z0 = 2.0 * a.z0;
        arma::cx_mat Ap = a.Z_SS_eff();
        Ap.diag() += a.z0;
        SrotTerms t;
        t.s_rot = (a.Z_ROT - a.Z_ROS * checked_solve(Ap, a.Z_SOT, "Z0 U + Z_SS + Z_SOS")) / two_z0;
        t.direct = a.Z_RT / two_z0;
        t.cluster = -a.Z_RO * a.B * a.Z_OT / two_z0;
        t.structural = -a.Z_RS * checked_solve(Ap, a.Z_ST, "Z0 U + Z_SS + Z_SOS") / two_z0;
        t.delta = t.s_rot - t.direct - t.cluster - t.structural;
        return t;
    }
}
