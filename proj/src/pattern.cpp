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

#include "risnet/pattern.hpp"
#include "risnet/multipath.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace risnet
{
    void SweepSpec::validate() const
    {
        if (!(radius > 0.0))
            throw ConfigError("sweep radius must be positive");
        if (angles_deg.empty())
            throw ConfigError("sweep angle grid is empty");
        for (std::size_t i = 1; i < angles_deg.size(); ++i)
            if (!(angles_deg[i] > angles_deg[i - 1]))
                throw ConfigError("sweep angle grid must be strictly increasing");
        probe_template.validate();
    }

    arma::vec3 SweepSpec::position(double angle_deg) const
    {
        const double a = deg2rad(angle_deg);
        return arc_center + radius * arma::vec3{std::cos(a), std::sin(a), 0.0};
    }

    std::vector<double> angle_grid(double start_deg, double stop_deg, double step_deg)
    {
        if (!(step_deg > 0.0) || !(stop_deg >= start_deg))
            throw ConfigError("angle grid needs step > 0 and stop >= start");
        const auto n = std::lround(std::floor((stop_deg - start_deg) / step_deg + 1e-9));
        std::vector<double> g;
        g.reserve(std::size_t(n) + 1);
        for (long i = 0; i <= n; ++i)
            g.push_back(start_deg + double(i) * step_deg);
        return g;
    }

    double PatternResult::peak_power() const
    {
        double p = 0.0;
        for (const auto &s : samples)
            p = std::max(p, s.power_w);
        return p;
    }

    double PatternResult::peak_angle() const
    {
        double p = -1.0, a = 0.0;
        for (const auto &s : samples)
            if (s.power_w > p)
            {
                p = s.power_w;
                a = s.angle_deg;
            }
        return a;
    }

    namespace
    {
        PatternResult sweep_impl(const Scenario &scenario, const arma::cx_vec &gammas, const SweepSpec &sweep,
                                 cx object_load, bool parallel)
        {
            sweep.validate();
            if (gammas.n_elem != scenario.ris_elements.size())
                throw ConfigError("load count " + std::to_string(gammas.n_elem) + " does not match K = " +
                                  std::to_string(scenario.ris_elements.size()));
            if (scenario.tx_elements.size() != 1)
                throw ConfigError("pattern sweeps need exactly one transmitter");

            // Network without the receiver; only the probe row changes from angle to angle
            Scenario base = scenario;
            base.rx_elements.clear();
            const PartitionedNetworkMatrix zb = link_network(base);
            const Partition pb = zb.partition();
            const arma::uword nt = pb.n_t, k = pb.k, no = pb.n_o;
            const arma::uword n = pb.size() + 1, rp = nt + k;
            const std::vector<DipoleElement> others = base.elements();
            const cx z_self = self_impedance(sweep.probe_template, scenario.frequency);
            const arma::cx_mat gamma_s = arma::diagmat(gammas);

            // Index map from base ports to the full T, S, R, O ordering
            auto full_index = [&](arma::uword i) { return i < rp ? i : i + 1; };

            const std::size_t na = sweep.angles_deg.size();
            std::vector<PatternSample> samples(na);
            std::vector<std::exception_ptr> errors(na);

            auto evaluate = [&](std::size_t ia)
            {
                DipoleElement probe = sweep.probe_template;
                probe.position = sweep.position(sweep.angles_deg[ia]);

                arma::cx_mat Z(n, n);
                for (arma::uword i = 0; i < pb.size(); ++i)
                    for (arma::uword j = 0; j < pb.size(); ++j)
                        Z(full_index(i), full_index(j)) = zb.data()(i, j);
                for (arma::uword i = 0; i < others.size(); ++i)
                {
                    const bool is_tx = i < nt;
                    const cx v = (is_tx && scenario.direct_link_blocked)
                                     ? cx(0.0)
                                     : mutual_impedance(probe, others[i], scenario.frequency);
                    Z(rp, full_index(i)) = v;
                    Z(full_index(i), rp) = v;
                }
                Z(rp, rp) = z_self;

                PartitionedNetworkMatrix z(MatrixKind::Z, std::move(Z), {nt, k, 1, no}, scenario.reference_impedance);
                if (no > 0)
                    z = reduced_network(assemble_augmented(z, arma::cx_vec(no).fill(object_load)));
                const cx h = h_e2e_s_matched(z_to_s(z), gamma_s)(0, 0);
                PatternSample s;
                s.angle_deg = sweep.angles_deg[ia];
                s.power_w = std::norm(h);
                s.power_db = 10.0 * std::log10(s.power_w);
                samples[ia] = s;
            };

            const long nal = long(na);
            if (parallel)
            {
#pragma omp parallel for schedule(dynamic)
                for (long ia = 0; ia < nal; ++ia)
                {
                    try
                    {
                        evaluate(std::size_t(ia));
                    }
                    catch (...)
                    {
                        errors[std::size_t(ia)] = std::current_exception();
                    }
                }
            }
            else
            {
                for (long ia = 0; ia < nal; ++ia)
                {
                    try
                    {
                        evaluate(std::size_t(ia));
                    }
                    catch (...)
                    {
                        errors[std::size_t(ia)] = std::current_exception();
                    }
                }
            }
            for (const auto &e : errors)
                if (e)
                    std::rethrow_exception(e);

            PatternResult r;
            r.samples = std::move(samples);
            return r;
        }
    }

    PatternResult pattern_sweep(const Scenario &scenario, const arma::cx_vec &gammas, const SweepSpec &sweep,
                                cx object_load)
    {
        return sweep_impl(scenario, gammas, sweep, object_load, true);
    }

    PatternResult pattern_sweep_serial(const Scenario &scenario, const arma::cx_vec &gammas, const SweepSpec &sweep,
                                       cx object_load)
    {
        return sweep_impl(scenario, gammas, sweep, object_load, false);
    }

    std::vector<Lobe> lobe_metrics(const PatternResult &result, const std::vector<LobeWindow> &windows)
    {
        for (std::size_t i = 0; i < windows.size(); ++i)
        {
            if (!(windows[i].half_width_deg >= 0.0))
                throw ConfigError("lobe window half width must be non-negative");
            for (std::size_t j = i + 1; j < windows.size(); ++j)
                if (std::abs(windows[i].center_deg - windows[j].center_deg) <
                    windows[i].half_width_deg + windows[j].half_width_deg)
                    throw ConfigError("lobe windows '" + windows[i].name + "' and '" + windows[j].name + "' overlap");
        }

        std::vector<Lobe> out;
        for (const auto &w : windows)
        {
            Lobe best;
            best.name = w.name;
            bool found = false;
            for (const auto &s : result.samples)
            {
                if (std::abs(s.angle_deg - w.center_deg) > w.half_width_deg + 1e-9)
                    continue;
                if (!found || s.power_w > best.power_w)
                {
                    best.angle_deg = s.angle_deg;
                    best.power_w = s.power_w;
                    best.power_db = s.power_db;
                    found = true;
                }
            }
            if (!found)
                throw ConfigError("lobe window '" + w.name + "' contains no pattern samples");
            out.push_back(best);
        }
        return out;
    }

    std::vector<std::size_t> local_maxima(const std::vector<PatternSample> &s)
    {
        std::vector<std::size_t> out;
        const std::size_t n = s.size();
        std::size_t i = 0;
        while (i < n)
        {
            // Treat runs of equal values as one sample
            std::size_t j = i;
            while (j + 1 < n && s[j + 1].power_w == s[i].power_w)
                ++j;
            const bool left = i == 0 || s[i - 1].power_w < s[i].power_w;
            const bool right = j + 1 == n || s[j + 1].power_w < s[i].power_w;
            if (left && right && !(i == 0 && j + 1 == n))
                out.push_back(i);
            i = j + 1;
        }
        return out;
    }

    double psi_angle(int k)
    {
        if (k < 1 || k > 4)
            throw ConfigError("receiver index must be between 1 and 4");
        return rad2deg(std::asin(double(k) / 4.0));
    }

    arma::vec3 specular_position(const arma::vec3 &tx_position, const arma::vec3 &ris_center, double range)
    {
        const arma::vec3 d = tx_position - ris_center;
        const double n = arma::norm(d);
        if (!(n > 0.0))
            throw GeometryError("transmitter coincides with the RIS center");
        const arma::vec3 m = {d[0], -d[1], -d[2]};
        return ris_center + (range / n) * m;
    }

    double azimuth_deg(const arma::vec3 &point, const arma::vec3 &center)
    {
        return rad2deg(std::atan2(point[1] - center[1], point[0] - center[0]));
    }
}
