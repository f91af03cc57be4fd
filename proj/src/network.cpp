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

#include "risnet/network.hpp"

#include <cmath>

namespace risnet
{
    arma::cx_mat checked_solve(const arma::cx_mat &A, const arma::cx_mat &B, const char *what)
    {
        if (A.n_rows != A.n_cols || A.n_rows != B.n_rows)
            throw ConfigError(std::string(what) + ": shape mismatch in linear solve");
        if (A.n_rows == 0)
            return arma::cx_mat(0, B.n_cols, arma::fill::zeros);

        const double rc = arma::rcond(A);
        if (!std::isfinite(rc) || rc < min_rcond)
            throw NumericalError(std::string(what) + " is singular or ill-conditioned",
                                 rc > 0.0 && std::isfinite(rc) ? 1.0 / rc : INFINITY);

        arma::cx_mat X;
        if (!arma::solve(X, A, B, arma::solve_opts::fast))
            throw NumericalError(std::string(what) + " is singular");
        return X;
    }

    arma::cx_mat checked_inv(const arma::cx_mat &A, const char *what)
    {
        return checked_solve(A, arma::eye<arma::cx_mat>(A.n_rows, A.n_rows), what);
    }

    double rel_diff(const arma::cx_mat &A, const arma::cx_mat &B)
    {
        const double nb = arma::norm(B, "fro");
        const double nd = arma::norm(A - B, "fro");
        return nb > 0.0 ? nd / nb : nd;
    }

    // --------------------------------------------------------------------------------------------

    arma::uword Partition::offset(Block b) const
    {
        switch (b)
        {
        case Block::T:
            return 0;
        case Block::S:
            return n_t;
        case Block::R:
            return n_t + k;
        case Block::O:
            return n_t + k + n_r;
        }
        return 0;
    }

    arma::uword Partition::count(Block b) const
    {
        switch (b)
        {
        case Block::T:
            return n_t;
        case Block::S:
            return k;
        case Block::R:
            return n_r;
        case Block::O:
            return n_o;
        }
        return 0;
    }

    PartitionedNetworkMatrix::PartitionedNetworkMatrix(MatrixKind kind, arma::cx_mat data, Partition partition, double z0)
        : kind_(kind), data_(std::move(data)), partition_(partition), z0_(z0)
    {
        if (data_.n_rows != data_.n_cols)
            throw ConfigError("network matrix must be square");
        if (data_.n_rows != partition_.size())
            throw ConfigError("network matrix size " + std::to_string(data_.n_rows) +
                              " does not match partition size " + std::to_string(partition_.size()));
        if (!(z0_ > 0.0))
            throw ConfigError("reference impedance must be positive");
    }

    arma::cx_mat PartitionedNetworkMatrix::block(Block row, Block col) const
    {
        const arma::uword nr = partition_.count(row), nc = partition_.count(col);
        if (nr == 0 || nc == 0)
            return arma::cx_mat(nr, nc, arma::fill::zeros);
        const arma::uword r0 = partition_.offset(row), c0 = partition_.offset(col);
        return data_.submat(r0, c0, r0 + nr - 1, c0 + nc - 1);
    }

    PartitionedNetworkMatrix PartitionedNetworkMatrix::with_block(Block row, Block col, const arma::cx_mat &value) const
    {
        const arma::uword nr = partition_.count(row), nc = partition_.count(col);
        if (value.n_rows != nr || value.n_cols != nc)
            throw ConfigError("block replacement has the wrong shape");
        PartitionedNetworkMatrix out = *this;
        if (nr > 0 && nc > 0)
        {
            const arma::uword r0 = partition_.offset(row), c0 = partition_.offset(col);
            out.data_.submat(r0, c0, r0 + nr - 1, c0 + nc - 1) = value;
        }
        return out;
    }

    // --------------------------------------------------------------------------------------------

    PartitionedNetworkMatrix z_to_s(const PartitionedNetworkMatrix &z)
    {
        if (z.kind() != MatrixKind::Z)
            throw ConfigError("z_to_s expects an impedance matrix");
        const double z0 = z.reference_impedance();
        const arma::cx_mat U = arma::eye<arma::cx_mat>(z.size(), z.size());
        arma::cx_mat S = checked_solve(z.data() + z0 * U, z.data() - z0 * U, "Z + Z0 U");
        return {MatrixKind::S, std::move(S), z.partition(), z0};
    }

    PartitionedNetworkMatrix s_to_z(const PartitionedNetworkMatrix &s)
    {
        if (s.kind() != MatrixKind::S)
            throw ConfigError("s_to_z expects a scattering matrix");
        const double z0 = s.reference_impedance();
        const arma::cx_mat U = arma::eye<arma::cx_mat>(s.size(), s.size());
        // (U + S) and (U - S)^-1 commute, so the order of the product is immaterial
        arma::cx_mat Z = z0 * checked_solve(U - s.data(), U + s.data(), "U - S");
        return {MatrixKind::Z, std::move(Z), s.partition(), z0};
    }

    // --------------------------------------------------------------------------------------------

    LoadConfig::LoadConfig(arma::vec x, double r0_, double z0_) : reactance(std::move(x)), r0(r0_), z0(z0_)
    {
        if (!(z0 > 0.0))
            throw ConfigError("reference impedance must be positive");
        if (!(r0 >= 0.0))
            throw ConfigError("parasitic resistance must be non-negative");
        if (r0 / z0 >= 0.1)
            throw ConfigError("parasitic resistance too large: r0 / Z0 must stay below 0.1");
    }

    LoadConfig LoadConfig::from_phases(const arma::vec &phases, double r0, double z0)
    {
        arma::vec x(phases.n_elem);
        for (arma::uword k = 0; k < phases.n_elem; ++k)
        {
            const double s = std::sin(0.5 * phases[k]);
            x[k] = s == 0.0 ? INFINITY : z0 * std::cos(0.5 * phases[k]) / s;
        }
        return {x, r0, z0};
    }

    arma::cx_vec LoadConfig::impedances() const
    {
        arma::cx_vec z(size());
        for (arma::uword k = 0; k < size(); ++k)
            z[k] = cx(r0, reactance[k]);
        return z;
    }

    arma::cx_vec LoadConfig::gammas() const
    {
        arma::cx_vec g(size());
        for (arma::uword k = 0; k < size(); ++k)
        {
            const double x = reactance[k];
            if (std::isinf(x))
                g[k] = 1.0;
            else
                g[k] = cx(r0 - z0, x) / cx(r0 + z0, x);
        }
        return g;
    }

    cx gamma_from_phase(double phi, double eps)
    {
        const double c = std::cos(0.5 * phi), s = std::sin(0.5 * phi);
        return cx(-(1.0 - eps) * s, c) / cx((1.0 + eps) * s, c);
    }

    arma::cx_vec gamma_from_phase(const arma::vec &phi, double eps)
    {
        arma::cx_vec g(phi.n_elem);
        for (arma::uword k = 0; k < phi.n_elem; ++k)
            g[k] = gamma_from_phase(phi[k], eps);
        return g;
    }

    arma::cx_vec gamma_from_impedances(const arma::cx_vec &z, double z0)
    {
        arma::cx_vec g(z.n_elem);
        for (arma::uword k = 0; k < z.n_elem; ++k)
            g[k] = (z[k] - z0) / (z[k] + z0);
        return g;
    }

    arma::cx_mat gamma_from_loads(const LoadConfig &loads)
    {
        return arma::diagmat(loads.gammas());
    }

    TerminationConfig TerminationConfig::matched(arma::uword n_t, arma::uword n_r, double z0)
    {
        TerminationConfig t;
        t.generator_impedance = arma::cx_vec(n_t).fill(z0);
        t.receiver_load = arma::cx_vec(n_r).fill(z0);
        return t;
    }

    arma::cx_mat TerminationConfig::gamma_t(double z0) const
    {
        return arma::diagmat(gamma_from_impedances(generator_impedance, z0));
    }

    arma::cx_mat TerminationConfig::gamma_r(double z0) const
    {
        return arma::diagmat(gamma_from_impedances(receiver_load, z0));
    }

    arma::cx_vec drive_voltage(const arma::cx_vec &a_g, const arma::cx_mat &gamma_t, double z0)
    {
        const arma::cx_mat U = arma::eye<arma::cx_mat>(gamma_t.n_rows, gamma_t.n_rows);
        return 2.0 * std::sqrt(z0) * checked_solve(U - gamma_t, arma::cx_mat(a_g), "U - Gamma_T");
    }

    // --------------------------------------------------------------------------------------------

    namespace
    {
        void require_channel_shape(const PartitionedNetworkMatrix &m, MatrixKind kind, arma::uword k, const char *what)
        {
            if (m.kind() != kind)
                throw ConfigError(std::string(what) + ": wrong matrix kind");
            if (m.partition().n_o != 0)
                throw ConfigError(std::string(what) + ": reduce the scattering objects before evaluating the channel");
            if (m.partition().k != k)
                throw ConfigError(std::string(what) + ": load count " + std::to_string(k) +
                                  " does not match RIS size " + std::to_string(m.partition().k));
        }
    }

    arma::cx_mat h_e2e_s_exact(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s,
                               const arma::cx_mat &gamma_t, const arma::cx_mat &gamma_r)
    {
        using enum Block;
        require_channel_shape(s, MatrixKind::S, gamma_s.n_rows, "h_e2e_s_exact");
        const Partition &p = s.partition();
        const arma::cx_mat Us = arma::eye<arma::cx_mat>(p.k, p.k);
        const arma::cx_mat Ut = arma::eye<arma::cx_mat>(p.n_t, p.n_t);
        const arma::cx_mat Ur = arma::eye<arma::cx_mat>(p.n_r, p.n_r);

        // F = (U - Gamma_S S_SS)^-1 Gamma_S
        const arma::cx_mat F = checked_solve(Us - gamma_s * s.block(S, S), gamma_s, "U - Gamma_S S_SS");
        const arma::cx_mat S_TS = s.block(T, S), S_RS = s.block(R, S);
        const arma::cx_mat S_ST = s.block(S, T), S_SR = s.block(S, R);

        const arma::cx_mat st_TT = s.block(T, T) + S_TS * F * S_ST;
        const arma::cx_mat st_TR = s.block(T, R) + S_TS * F * S_SR;
        const arma::cx_mat st_RT = s.block(R, T) + S_RS * F * S_ST;
        const arma::cx_mat st_RR = s.block(R, R) + S_RS * F * S_SR;

        const arma::cx_mat Arr = Ur - st_RR * gamma_r;
        const arma::cx_mat sb_TT = st_TT + st_TR * gamma_r * checked_solve(Arr, st_RT, "U - S_RR Gamma_R");
        const arma::cx_mat right = checked_inv(Ut - gamma_t * sb_TT, "U - Gamma_T S_TT");
        return checked_solve(Arr, st_RT * right, "U - S_RR Gamma_R");
    }

    arma::cx_mat h_e2e_s_exact(const PartitionedNetworkMatrix &s, const LoadConfig &loads, const TerminationConfig &term)
    {
        const double z0 = s.reference_impedance();
        return h_e2e_s_exact(s, gamma_from_loads(loads), term.gamma_t(z0), term.gamma_r(z0));
    }

    arma::cx_mat h_e2e_s_matched(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s)
    {
        using enum Block;
        require_channel_shape(s, MatrixKind::S, gamma_s.n_rows, "h_e2e_s_matched");
        const arma::uword k = s.partition().k;
        const arma::cx_mat Us = arma::eye<arma::cx_mat>(k, k);
        const arma::cx_mat F = checked_solve(Us - gamma_s * s.block(S, S), gamma_s * s.block(S, T), "U - Gamma_S S_SS");
        return s.block(R, T) + s.block(R, S) * F;
    }

    arma::cx_mat h_e2e_s_matched(const PartitionedNetworkMatrix &s, const LoadConfig &loads)
    {
        return h_e2e_s_matched(s, gamma_from_loads(loads));
    }

    arma::cx_mat h_e2e_z_exact(const PartitionedNetworkMatrix &z, const arma::cx_mat &load_impedance,
                               const TerminationConfig &term)
    {
        using enum Block;
        require_channel_shape(z, MatrixKind::Z, load_impedance.n_rows, "h_e2e_z_exact");
        const arma::cx_mat Zg = arma::diagmat(term.generator_impedance);
        const arma::cx_mat Zr = arma::diagmat(term.receiver_load);
        if (Zg.n_rows != z.partition().n_t || Zr.n_rows != z.partition().n_r)
            throw ConfigError("h_e2e_z_exact: termination count does not match the partition");

        const arma::cx_mat A = load_impedance + z.block(S, S);
        const arma::cx_mat Z_TS = z.block(T, S), Z_RS = z.block(R, S);
        const arma::cx_mat G_T = checked_solve(A, z.block(S, T), "Z_S + Z_SS");
        const arma::cx_mat G_R = checked_solve(A, z.block(S, R), "Z_S + Z_SS");

        const arma::cx_mat zt_TT = z.block(T, T) - Z_TS * G_T;
        const arma::cx_mat zt_TR = z.block(T, R) - Z_TS * G_R;
        const arma::cx_mat zt_RT = z.block(R, T) - Z_RS * G_T;
        const arma::cx_mat zt_RR = z.block(R, R) - Z_RS * G_R;

        const arma::cx_mat right = checked_inv(Zg + zt_TT, "Z_g + Z_TT");
        const arma::cx_mat zb_RR = zt_RR - zt_RT * right * zt_TR;
        return Zr * checked_solve(Zr + zb_RR, zt_RT * right, "Z_R + Z_RR");
    }

    arma::cx_mat h_e2e_z_exact(const PartitionedNetworkMatrix &z, const LoadConfig &loads, const TerminationConfig &term)
    {
        return h_e2e_z_exact(z, arma::cx_mat(arma::diagmat(loads.impedances())), term);
    }

    arma::cx_mat h_e2e_z_approx(const PartitionedNetworkMatrix &z, const arma::cx_mat &load_impedance,
                                const TerminationConfig &term)
    {
        using enum Block;
        require_channel_shape(z, MatrixKind::Z, load_impedance.n_rows, "h_e2e_z_approx");
        const arma::cx_mat Zg = arma::diagmat(term.generator_impedance);
        const arma::cx_mat Zr = arma::diagmat(term.receiver_load);
        if (Zg.n_rows != z.partition().n_t || Zr.n_rows != z.partition().n_r)
            throw ConfigError("h_e2e_z_approx: termination count does not match the partition");

        const arma::cx_mat zt_RT = z.block(R, T) -
                                   z.block(R, S) * checked_solve(load_impedance + z.block(S, S), z.block(S, T), "Z_S + Z_SS");
        const arma::cx_mat right = checked_inv(Zg + z.block(T, T), "Z_g + Z_TT");
        return Zr * checked_solve(Zr + z.block(R, R), zt_RT * right, "Z_R + Z_RR");
    }

    arma::cx_mat h_e2e_z_approx(const PartitionedNetworkMatrix &z, const LoadConfig &loads, const TerminationConfig &term)
    {
        return h_e2e_z_approx(z, arma::cx_mat(arma::diagmat(loads.impedances())), term);
    }

    arma::cx_mat h_ct_conventional(const PartitionedNetworkMatrix &s, const arma::cx_mat &gamma_s, bool direct_link_blocked)
    {
        using enum Block;
        require_channel_shape(s, MatrixKind::S, gamma_s.n_rows, "h_ct_conventional");
        arma::cx_mat h = s.block(R, S) * gamma_s * s.block(S, T);
        if (!direct_link_blocked)
            h += s.block(R, T);
        return h;
    }

    arma::cx_mat structural_scattering(const PartitionedNetworkMatrix &z)
    {
        using enum Block;
        if (z.kind() != MatrixKind::Z)
            throw ConfigError("structural_scattering expects an impedance matrix");
        const double z0 = z.reference_impedance();
        const arma::uword k = z.partition().k;
        const arma::cx_mat A = z.block(S, S) + z0 * arma::eye<arma::cx_mat>(k, k);
        return -z.block(R, S) * checked_solve(A, z.block(S, T), "Z_SS + Z0 U") / (2.0 * z0);
    }

    arma::cx_mat s_rt_from_z(const PartitionedNetworkMatrix &z)
    {
        return z.block(Block::R, Block::T) / (2.0 * z.reference_impedance()) + structural_scattering(z);
    }
}
