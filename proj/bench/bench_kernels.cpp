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

// Serial reference against the OpenMP version of each parallel kernel

#include "risnet/em_scene.hpp"
#include "risnet/optimizer.hpp"
#include "risnet/pattern.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace risnet;

namespace
{
    const double F = 28e9;

    DipoleElement element()
    {
        DipoleElement e;
        e.length = 0.46 * wavelength(F);
        e.radius = wavelength(F) / 500.0;
        return e;
    }

    // n_y = 4q, n_z = 8 over a 4 x 6 wavelength aperture
    Scenario scene(arma::uword q)
    {
        const double lambda = wavelength(F);
        Scenario s;
        DipoleElement tx = element(), rx = element();
        tx.position = {4.0, 0.0, 0.0};
        rx.position = {4.0 * std::cos(std::asin(0.75)), 3.0, 0.0};
        s.tx_elements = {tx};
        s.rx_elements = {rx};
        s.ris_elements = expand_grid({4 * q, 8, lambda / double(q), 0.75 * lambda, {0.0, 0.0, 0.0}}, element());
        return s;
    }

    void assembly(benchmark::State &state, bool parallel)
    {
        const Scenario s = scene(arma::uword(state.range(0)));
        for (auto _ : state)
            benchmark::DoNotOptimize(parallel ? assemble_z_matrix(s) : assemble_z_matrix_serial(s));
        state.counters["K"] = double(s.ris_elements.size());
    }

    void sweep(benchmark::State &state, bool parallel)
    {
        const Scenario s = scene(arma::uword(state.range(0)));
        SweepSpec sw;
        sw.angles_deg = angle_grid(-90.0, 90.0, 2.0);
        sw.probe_template = element();
        const arma::cx_vec g(s.ris_elements.size(), arma::fill::zeros);
        for (auto _ : state)
            benchmark::DoNotOptimize(parallel ? pattern_sweep(s, g, sw) : pattern_sweep_serial(s, g, sw));
    }

    void oracle(benchmark::State &state, bool parallel)
    {
        Scenario s = scene(1);
        s.ris_elements.resize(std::size_t(state.range(0)));
        const PartitionedNetworkMatrix sm = z_to_s(link_network(s));
        AlgoParams p;
        for (auto _ : state)
            benchmark::DoNotOptimize(parallel ? brute_force_oracle(sm, 10.0, p) : brute_force_oracle_serial(sm, 10.0, p));
    }
}

BENCHMARK_CAPTURE(assembly, serial, false)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assembly, openmp, true)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, serial, false)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(sweep, openmp, true)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(oracle, serial, false)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(oracle, openmp, true)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
