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

#ifndef RISNET_TEST_HELPERS_HPP
#define RISNET_TEST_HELPERS_HPP

#include "risnet/em_scene.hpp"
#include "risnet/network.hpp"

#include <cmath>
#include <random>

namespace testing
{
    using namespace risnet;

    // Z = R + jX with R symmetric positive definite and X symmetric, so Re(Z) > 0 (passive, reciprocal)
    inline arma::cx_mat random_passive_z(arma::uword n, std::mt19937_64 &rng, double z0 = 50.0)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        arma::mat a(n, n), b(n, n);
        a.imbue([&] { return g(rng); });
        b.imbue([&] { return g(rng); });
        arma::mat r = a * a.t() / double(n) + 0.1 * arma::eye(n, n);
        arma::mat x = 0.5 * (b + b.t());
        return z0 * arma::cx_mat(r, x);
    }

    inline arma::cx_mat random_complex(arma::uword r, arma::uword c, std::mt19937_64 &rng, double scale = 1.0)
    {
        std::normal_distribution<double> g(0.0, scale);
        arma::cx_mat m(r, c);
        m.imbue([&] { return cx(g(rng), g(rng)); });
        return m;
    }

    inline DipoleElement dipole(double length_wl = 0.46, double freq = 28e9)
    {
        const double lambda = wavelength(freq);
        DipoleElement e;
        e.length = length_wl * lambda;
        e.radius = lambda / 500.0;
        return e;
    }

    // Desk scene: TX at (4,0,0), receiver on the 4 m arc at asin(rx_k/4), RIS grid centered at the origin
    inline Scenario desk_scene(arma::uword n_y, arma::uword n_z, double d_y_wl, int rx_k = 3, double freq = 28e9)
    {
        const double lambda = wavelength(freq);
        Scenario s;
        s.frequency = freq;
        DipoleElement tx = dipole(0.46, freq), rx = tx;
        tx.position = {4.0, 0.0, 0.0};
        const double psi = std::asin(double(rx_k) / 4.0);
        rx.position = {4.0 * std::cos(psi), 4.0 * std::sin(psi), 0.0};
        s.tx_elements = {tx};
        s.rx_elements = {rx};
        s.ris_elements = expand_grid({n_y, n_z, d_y_wl * lambda, 0.75 * lambda, {0.0, 0.0, 0.0}}, dipole(0.46, freq));
        return s;
    }

    inline double db(double p) { return 10.0 * std::log10(p); }
}

#endif
