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

#include "risnet/em_scene.hpp"
#include "risnet/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <map>
#include <tuple>

namespace risnet
{
    void DipoleElement::validate() const
    {
        if (!(length > 0.0))
            throw GeometryError("dipole length must be positive");
        if (!(radius > 0.0))
            throw GeometryError("dipole radius must be positive");
        if (radius / length >= 0.05)
            throw GeometryError("dipole is not a thin wire (radius / length >= 0.05)");
        if (!position.is_finite())
            throw GeometryError("dipole position is not finite");
        const double n = arma::norm(orientation);
        if (!(n > 0.0) || std::abs(orientation[2] / n) < 1.0 - 1e-12)
            throw GeometryError("only z-oriented dipoles are supported");
    }

    Partition Scenario::partition() const
    {
        return {tx_elements.size(), ris_elements.size(), rx_elements.size(), cluster_elements.size()};
    }

    std::vector<DipoleElement> Scenario::elements() const
    {
        std::vector<DipoleElement> all;
        all.reserve(partition().size());
        all.insert(all.end(), tx_elements.begin(), tx_elements.end());
        all.insert(all.end(), ris_elements.begin(), ris_elements.end());
        all.insert(all.end(), rx_elements.begin(), rx_elements.end());
        all.insert(all.end(), cluster_elements.begin(), cluster_elements.end());
        return all;
    }

    Scenario Scenario::translated(const arma::vec3 &offset) const
    {
        Scenario out = *this;
        for (auto *list : {&out.tx_elements, &out.rx_elements, &out.ris_elements, &out.cluster_elements})
            for (auto &e : *list)
                e.position += offset;
        return out;
    }

    std::vector<DipoleElement> expand_grid(const RisGridSpec &spec, const DipoleElement &element_template)
    {
        if (spec.n_y < 1 || spec.n_z < 1)
            throw GeometryError("RIS grid needs at least one element per axis");
        if ((spec.n_y > 1 && !(spec.d_y > 0.0)) || (spec.n_z > 1 && !(spec.d_z > 0.0)))
            throw GeometryError("RIS grid spacing must be positive");
        element_template.validate();
        if (spec.n_y > 1 && spec.d_y <= 2.0 * element_template.radius)
            throw GeometryError("RIS spacing d_y is smaller than the wire diameter");
        if (spec.n_z > 1 && spec.d_z <= element_template.length)
            throw GeometryError("RIS spacing d_z is smaller than the dipole length");

        std::vector<DipoleElement> out;
        out.reserve(spec.n_y * spec.n_z);
        const double y0 = -0.5 * double(spec.n_y - 1) * spec.d_y;
        const double z0 = -0.5 * double(spec.n_z - 1) * spec.d_z;
        for (arma::uword iz = 0; iz < spec.n_z; ++iz)
            for (arma::uword iy = 0; iy < spec.n_y; ++iy)
            {
                DipoleElement e = element_template;
                e.position = spec.center + arma::vec3{0.0, y0 + double(iy) * spec.d_y, z0 + double(iz) * spec.d_z};
                out.push_back(e);
            }
        return out;
    }

    // --------------------------------------------------------------------------------------------

    namespace
    {
        // Geometry of a wire pair seen from the source wire: radial axis distance and the
        // axial offset of the observation wire center relative to the source center.
        struct PairKey
        {
            double rho, dz;
            double h_src, a_src, h_obs, a_obs;
            auto tie() const { return std::tie(rho, dz, h_src, a_src, h_obs, a_obs); }
            bool operator<(const PairKey &o) const { return tie() < o.tie(); }
        };

        // Order the pair so that swapping the arguments yields the same key
        PairKey make_key(const DipoleElement &a, const DipoleElement &b)
        {
            const DipoleElement *src = &a, *obs = &b;
            if (std::tie(b.length, b.radius) < std::tie(a.length, a.radius))
                std::swap(src, obs);
            const double dx = obs->position[0] - src->position[0];
            const double dy = obs->position[1] - src->position[1];
            double dz = obs->position[2] - src->position[2];
            // Both wires are symmetric about their centers, so equal wires only depend on |dz|
            if (src->length == obs->length && src->radius == obs->radius)
                dz = std::abs(dz);
            return {std::hypot(dx, dy), dz, 0.5 * src->length, src->radius, 0.5 * obs->length, obs->radius};
        }

        cx reaction_integral(const PairKey &g, double frequency)
        {
            const double k = 2.0 * pi / wavelength(frequency);
            const double s_src = std::sin(k * g.h_src), s_obs = std::sin(k * g.h_obs);
            if (std::abs(s_src) < 1e-6 || std::abs(s_obs) < 1e-6)
                throw GeometryError("dipole length is a multiple of the wavelength; the feed current vanishes");

            const double rho2 = g.rho * g.rho;
            const double cos_src = std::cos(k * g.h_src);
            const double h_src = g.h_src, h_obs = g.h_obs, zc = g.dz;

            // Tangential near field of the source (sans -j eta I0 / 4 pi) times the observation current
            auto integrand = [=](double z) -> cx
            {
                const double r1 = std::sqrt(rho2 + (z - h_src) * (z - h_src));
                const double r2 = std::sqrt(rho2 + (z + h_src) * (z + h_src));
                const double r0 = std::sqrt(rho2 + z * z);
                const cx e = std::polar(1.0 / r1, -k * r1) + std::polar(1.0 / r2, -k * r2) -
                             2.0 * cos_src * std::polar(1.0 / r0, -k * r0);
                return e * std::sin(k * (h_obs - std::abs(z - zc)));
            };

            std::vector<double> bp = {zc - h_obs, zc, zc + h_obs};
            for (double z : {-h_src, 0.0, h_src})
                if (z > zc - h_obs && z < zc + h_obs)
                    bp.push_back(z);
            std::sort(bp.begin(), bp.end());
            bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

            const cx prefactor = cx(0.0, free_space_impedance / (4.0 * pi * s_src * s_obs));
            const auto q = integrate_adaptive(integrand, bp, impedance_tolerance / std::abs(prefactor), 20000);
            return prefactor * q.value;
        }

        void check_pair(const DipoleElement &a, const DipoleElement &b)
        {
            a.validate();
            b.validate();
            const double dx = a.position[0] - b.position[0], dy = a.position[1] - b.position[1];
            const double dz = std::abs(a.position[2] - b.position[2]);
            if (std::hypot(dx, dy) < a.radius + b.radius && dz < 0.5 * (a.length + b.length))
                throw GeometryError("overlapping wires");
        }

        cx pair_value(const DipoleElement &a, const DipoleElement &b, PairKey key, double frequency)
        {
            check_pair(a, b);
            // Stacked collinear wires: evaluate on the observation wire surface
            key.rho = std::max(key.rho, key.a_obs);
            return reaction_integral(key, frequency);
        }

        struct Job
        {
            arma::uword i, j;
            std::size_t unique; // Index into the table of distinct pair geometries
        };

        PartitionedNetworkMatrix assemble(const Scenario &sc, bool skip_tr, bool parallel)
        {
            if (!(sc.frequency > 0.0))
                throw GeometryError("frequency must be positive");
            if (!(sc.reference_impedance > 0.0))
                throw GeometryError("reference impedance must be positive");

            const Partition p = sc.partition();
            const std::vector<DipoleElement> el = sc.elements();
            const arma::uword n = el.size();
            const arma::uword t_end = p.n_t, r_begin = p.n_t + p.k, r_end = p.n_t + p.k + p.n_r;
            auto is_tr = [&](arma::uword i, arma::uword j)
            { return (i < t_end && j >= r_begin && j < r_end) || (j < t_end && i >= r_begin && i < r_end); };

            // Distinct geometries are computed once; grids repeat the same offsets many times
            std::map<PairKey, std::size_t> index;
            std::vector<PairKey> keys;
            std::vector<std::pair<arma::uword, arma::uword>> representative;
            std::vector<Job> jobs;
            for (arma::uword i = 0; i < n; ++i)
                for (arma::uword j = i; j < n; ++j)
                {
                    if (skip_tr && is_tr(i, j))
                        continue;
                    if (i != j)
                        check_pair(el[i], el[j]);
                    PairKey key = i == j ? PairKey{el[i].radius, 0.0, 0.5 * el[i].length, el[i].radius,
                                                   0.5 * el[i].length, el[i].radius}
                                         : make_key(el[i], el[j]);
                    if (i != j)
                        key.rho = std::max(key.rho, key.a_obs);
                    auto [it, inserted] = index.emplace(key, keys.size());
                    if (inserted)
                    {
                        keys.push_back(key);
                        representative.emplace_back(i, j);
                    }
                    jobs.push_back({i, j, it->second});
                }

            std::vector<cx> values(keys.size());
            std::vector<std::exception_ptr> errors(keys.size());
            const long nk = long(keys.size());
            if (parallel)
            {
#pragma omp parallel for schedule(dynamic, 4)
                for (long u = 0; u < nk; ++u)
                {
                    try
                    {
                        values[u] = reaction_integral(keys[u], sc.frequency);
                    }
                    catch (...)
                    {
                        errors[u] = std::current_exception();
                    }
                }
            }
            else
            {
                for (long u = 0; u < nk; ++u)
                {
                    try
                    {
                        values[u] = reaction_integral(keys[u], sc.frequency);
                    }
                    catch (...)
                    {
                        errors[u] = std::current_exception();
                    }
                }
            }
            // Report the first failure in deterministic order
            for (const auto &e : errors)
                if (e)
                    std::rethrow_exception(e);

            arma::cx_mat Z(n, n, arma::fill::zeros);
            for (const Job &job : jobs)
            {
                Z(job.i, job.j) = values[job.unique];
                Z(job.j, job.i) = values[job.unique];
            }
            return {MatrixKind::Z, std::move(Z), p, sc.reference_impedance};
        }
    }

    cx mutual_impedance(const DipoleElement &a, const DipoleElement &b, double frequency)
    {
        if (!(frequency > 0.0))
            throw GeometryError("frequency must be positive");
        return pair_value(a, b, make_key(a, b), frequency);
    }

    cx self_impedance(const DipoleElement &a, double frequency)
    {
        if (!(frequency > 0.0))
            throw GeometryError("frequency must be positive");
        a.validate();
        const PairKey key{a.radius, 0.0, 0.5 * a.length, a.radius, 0.5 * a.length, a.radius};
        return reaction_integral(key, frequency);
    }

    PartitionedNetworkMatrix assemble_z_matrix(const Scenario &scenario)
    {
        return assemble(scenario, false, true);
    }

    PartitionedNetworkMatrix assemble_z_matrix_serial(const Scenario &scenario)
    {
        return assemble(scenario, false, false);
    }

    arma::cx_mat free_space_tr(const Scenario &scenario)
    {
        Scenario bare = scenario;
        bare.ris_elements.clear();
        bare.cluster_elements.clear();
        return assemble(bare, false, true).data();
    }

    PartitionedNetworkMatrix nullify_direct_link(const PartitionedNetworkMatrix &z_full, const arma::cx_mat &z_free)
    {
        using enum Block;
        const Partition &p = z_full.partition();
        if (z_full.kind() != MatrixKind::Z)
            throw ConfigError("nullify_direct_link expects an impedance matrix");
        if (z_free.n_rows != p.n_t + p.n_r || z_free.n_cols != p.n_t + p.n_r)
            throw ConfigError("free-space T-R matrix does not match the partition");
        if (p.n_t == 0 || p.n_r == 0)
            return z_full;
        const arma::cx_mat free_rt = z_free.submat(p.n_t, 0, p.n_t + p.n_r - 1, p.n_t - 1);
        const arma::cx_mat free_tr = z_free.submat(0, p.n_t, p.n_t - 1, p.n_t + p.n_r - 1);
        return z_full.with_block(R, T, z_full.block(R, T) - free_rt).with_block(T, R, z_full.block(T, R) - free_tr);
    }

    PartitionedNetworkMatrix link_network(const Scenario &scenario)
    {
        return assemble(scenario, scenario.direct_link_blocked, true);
    }
}
