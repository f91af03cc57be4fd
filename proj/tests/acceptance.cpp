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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include "helpers.hpp"
#include "risnet/cli.hpp"
#include "risnet/matrix_io.hpp"
#include "risnet/multipath.hpp"
#include "risnet/pattern.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace risnet;
using namespace testing;
using enum Block;

namespace
{
    using Clock = std::chrono::steady_clock;
    const double Z0 = 50.0;

    double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

    double rel(const arma::cx_mat &a, const arma::cx_mat &b) { return arma::norm(a - b, "fro") / arma::norm(b, "fro"); }

    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    // Run configuration through the same path the command line tool uses
    RunConfig run_config(std::initializer_list<std::pair<const char *, std::string>> keys)
    {
        Config c;
        for (const auto &[k, v] : keys)
            c.set(k, v, "acceptance");
        return RunConfig::from(c);
    }

    RunConfig desk(const std::string &d_y_wl, int max_iterations)
    {
        return run_config({{"scenario.ris_n_y", "8"},
                           {"scenario.ris_n_z", "4"},
                           {"scenario.ris_d_y_wl", d_y_wl},
                           {"algorithm.max_iterations", std::to_string(max_iterations)}});
    }

    arma::vec random_phases(arma::uword k, std::mt19937_64 &rng)
    {
        std::uniform_real_distribution<double> u(-pi, pi);
        arma::vec p(k);
        p.imbue([&] { return u(rng); });
        return p;
    }

    std::string fmt(const char *f, auto... v)
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, f, v...);
        return buf;
    }

    Outcome roundtrip()
    {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(101);
        double worst = 0.0;
        for (int t = 0; t < 50; ++t)
        {
            const arma::uword n = 2 + rng() % 19;
            const arma::uword nt = 1, nr = 1 + rng() % 2, k = n - nt - nr;
            const PartitionedNetworkMatrix z(MatrixKind::Z, random_passive_z(n, rng), {nt, k, nr, 0}, Z0);
            worst = std::max(worst, rel(s_to_z(z_to_s(z)).data(), z.data()));
        }
        const PartitionedNetworkMatrix scene = assemble_z_matrix(desk_scene(32, 8, 0.125));
        const double scene_err = rel(s_to_z(z_to_s(scene)).data(), scene.data());
        const double wall = seconds_since(t0);
        return {worst < 1e-9 && scene_err < 1e-9 && wall < 1.0,
                fmt("random %.2e, scene %.2e, %.2f s", worst, scene_err, wall)};
    }

    Outcome domain_equivalence()
    {
        std::mt19937_64 rng(102);
        double worst_m = 0.0, worst_g = 0.0;
        for (int t = 0; t < 20; ++t)
        {
            const arma::uword nt = 1 + rng() % 2, k = 1 + rng() % 12, nr = 1 + rng() % 2;
            const PartitionedNetworkMatrix z(MatrixKind::Z, random_passive_z(nt + k + nr, rng), {nt, k, nr, 0}, Z0);
            const PartitionedNetworkMatrix s = z_to_s(z);
            const LoadConfig l = LoadConfig::from_phases(random_phases(k, rng), 0.2, Z0);
            const TerminationConfig m = TerminationConfig::matched(nt, nr, Z0);
            worst_m = std::max(worst_m, rel(h_e2e_z_exact(z, l, m), 0.5 * h_e2e_s_exact(s, l, m)));

            TerminationConfig g;
            g.generator_impedance = arma::cx_vec(random_complex(nt, 1, rng, 20.0)) + 50.0;
            g.receiver_load = arma::cx_vec(random_complex(nr, 1, rng, 20.0)) + 50.0;
            const arma::cx_mat ut = arma::eye<arma::cx_mat>(nt, nt), ur = arma::eye<arma::cx_mat>(nr, nr);
            const arma::cx_mat want = 0.5 * (ur + g.gamma_r(Z0)) * h_e2e_s_exact(s, l, g) * (ut - g.gamma_t(Z0));
            worst_g = std::max(worst_g, rel(h_e2e_z_exact(z, l, g), want));
        }
        const arma::cx_vec a = random_complex(3, 1, rng);
        const bool drive = arma::approx_equal(drive_voltage(a, arma::cx_mat(3, 3, arma::fill::zeros), Z0),
                                              2.0 * std::sqrt(Z0) * a, "absdiff", 0.0);
        return {worst_m < 1e-10 && worst_g < 1e-10 && drive,
                fmt("matched %.2e, general %.2e, drive %s", worst_m, worst_g, drive ? "exact" : "off")};
    }

    Outcome structural_identity()
    {
        // The identities hold under the receiver/transmitter premises, so the scene matrix is projected onto them
        PartitionedNetworkMatrix z = link_network(desk_scene(8, 4, 0.125));
        const Partition p = z.partition();
        z = z.with_block(T, S, arma::cx_mat(p.n_t, p.k, arma::fill::zeros))
                .with_block(T, R, arma::cx_mat(p.n_t, p.n_r, arma::fill::zeros))
                .with_block(S, R, arma::cx_mat(p.k, p.n_r, arma::fill::zeros))
                .with_block(T, T, arma::cx_mat(1, 1).fill(Z0))
                .with_block(R, R, arma::cx_mat(1, 1).fill(Z0))
                .with_block(R, T, arma::cx_mat(1, 1, arma::fill::zeros));
        const PartitionedNetworkMatrix s = z_to_s(z);
        const arma::cx_mat h = h_e2e_s_matched(s, arma::cx_mat(p.k, p.k, arma::fill::zeros));
        const double e1 = rel(h, structural_scattering(z));
        const double e2 = rel(s.block(R, T), s_rt_from_z(z));

        std::mt19937_64 rng(103);
        const PartitionedNetworkMatrix zr(MatrixKind::Z, random_passive_z(9, rng), {1, 7, 1, 0}, Z0);
        const PartitionedNetworkMatrix zu = zr.with_block(T, S, arma::cx_mat(1, 7, arma::fill::zeros))
                                                .with_block(T, R, arma::cx_mat(1, 1, arma::fill::zeros))
                                                .with_block(S, R, arma::cx_mat(7, 1, arma::fill::zeros))
                                                .with_block(T, T, arma::cx_mat(1, 1).fill(Z0))
                                                .with_block(R, R, arma::cx_mat(1, 1).fill(Z0));
        const double e3 = rel(z_to_s(zu).block(R, T), s_rt_from_z(zu));
        return {e1 < 1e-12 && e2 < 1e-12 && e3 < 1e-12,
                fmt("identity %.2e, closure scene %.2e, closure random %.2e", e1, e2, e3)};
    }

    Outcome specular_pattern()
    {
        const auto t0 = Clock::now();
        const RunConfig rc = desk("0.125", 1);
        const Scenario sc = build_scenario(rc.scene, rc.output.seed);
        SweepSpec sw;
        sw.radius = rc.pattern.radius;
        sw.angles_deg = angle_grid(rc.pattern.start_deg, rc.pattern.stop_deg, rc.pattern.step_deg);
        sw.probe_template = rc.scene.element();
        const PatternResult r = pattern_sweep(sc, arma::cx_vec(sc.ris_elements.size(), arma::fill::zeros), sw);
        const double peak = r.peak_power(), peak_angle = r.peak_angle();
        double worst_side = -INFINITY;
        for (std::size_t i : local_maxima(r.samples))
            if (std::abs(r.samples[i].angle_deg) > 10.0)
                worst_side = std::max(worst_side, 10.0 * std::log10(r.samples[i].power_w / peak));
        const double wall = seconds_since(t0);
        return {std::abs(peak_angle) <= 1.0 && worst_side < -10.0 && wall < 120.0,
                fmt("peak at %.2f deg, strongest outside lobe %.2f dB, %.1f s", peak_angle, worst_side, wall)};
    }

    Outcome monotonicity()
    {
        std::mt19937_64 rng(105);
        int bad_power = 0, bad_mse = 0, bad_flag = 0;
        for (int t = 0; t < 20; ++t)
        {
            const std::string n_y = std::to_string(1 + rng() % 8), n_z = std::to_string(1 + rng() % 4);
            std::uniform_real_distribution<double> d(0.1, 0.6);
            RunConfig rc = run_config({{"scenario.ris_n_y", n_y},
                                       {"scenario.ris_n_z", n_z},
                                       {"scenario.ris_d_y_wl", format_double(d(rng))},
                                       {"scenario.rx_k", std::to_string(1 + rng() % 3)},
                                       {"algorithm.init", "random"},
                                       {"algorithm.max_iterations", "200"},
                                       {"output.seed", std::to_string(t + 1)}});
            const RunNetwork net = scene_network(rc, false);
            const OptState init = initial_state(net, rc);
            const AlgoParams &p = rc.algorithm.params;
            const OptState u = s_uni_run(net.s, p, init), o = s_opt_run(net.s, p, init);
            for (std::size_t i = 1; i < u.trace.size(); ++i)
                bad_power += u.trace[i].power < u.trace[i - 1].power * (1.0 - 1e-6);
            for (std::size_t i = 1; i < o.trace.size(); ++i)
                bad_mse += o.trace[i].objective > o.trace[i - 1].objective * (1.0 + 1e-6);
            for (const OptState *st : {&u, &o})
            {
                const bool hit_cap = st->iteration >= p.max_iterations;
                bad_flag += st->converged == hit_cap && !(st->converged && st->delta_norm <= p.stop_threshold);
                bad_flag += st->trace.size() != std::size_t(st->iteration) + 1;
            }
        }
        return {bad_power == 0 && bad_mse == 0 && bad_flag == 0,
                fmt("power violations %d, mse violations %d, flag violations %d", bad_power, bad_mse, bad_flag)};
    }

    Outcome oracle_equivalence()
    {
        const auto t0 = Clock::now();
        const RunConfig rc = run_config({{"scenario.ris_n_y", "3"}, {"scenario.ris_n_z", "1"}, {"scenario.ris_d_y_wl", "0.125"}});
        const RunNetwork net = scene_network(rc, false);
        const OracleResult o = brute_force_oracle(net.s, 5.0, rc.algorithm.params);
        const OptState st = s_opt_run(net.s, rc.algorithm.params, initial_state(net, rc));
        const double gap = db(o.power) - db(st.final_power());
        const double wall = seconds_since(t0);
        return {gap <= 0.5 && wall < 300.0, fmt("oracle %.3f dB, s-opt %.3f dB, gap %.3f dB, %.1f s", db(o.power),
                                                 db(st.final_power()), gap, wall)};
    }

    Outcome convergence_rate()
    {
        const RunConfig rc = desk("0.125", 100000);
        const RunNetwork net = scene_network(rc, false);
        const OptState init = initial_state(net, rc);
        const OptState u = s_uni_run(net.s, rc.algorithm.params, init);
        const OptState z = z_ref_run(net.z, rc.algorithm.params, init);
        const int iu = iterations_to_within(u, 0.5), iz = iterations_to_within(z, 0.5);
        return {iu <= iz, fmt("s-uni %d (final %.2f dB, %d it), z-ref %d (final %.2f dB, %d it)", iu, db(u.final_power()),
                              u.iteration, iz, db(z.final_power()), z.iteration)};
    }

    Outcome coupling_gain()
    {
        auto gap = [](const std::string &d_y)
        {
            const RunConfig rc = desk(d_y, 500);
            const RunNetwork net = scene_network(rc, false);
            const OptState d = s_diag_run(net.s, rc.algorithm.params);
            const OptState o = s_opt_run(net.s, rc.algorithm.params, d);
            return std::pair{db(o.final_power()) - db(d.final_power()), o.final_power() > d.final_power()};
        };
        const auto [g8, strict8] = gap("0.125");
        const auto [g2, strict2] = gap("0.5");
        (void)strict2;
        return {strict8 && g8 > g2, fmt("gap lambda/8 %.3f dB, lambda/2 %.3f dB", g8, g2)};
    }

    Outcome omega_tradeoff()
    {
        std::vector<double> spec, want;
        std::string detail;
        for (double w : {0.0, 0.5, 1.0, 2.0})
        {
            RunConfig rc = desk("0.125", 2000);
            rc.algorithm.params.omega = w;
            const RunNetwork net = scene_network(rc, true);
            const OptState st = s_opt_omega_run(net.s, *net.s_virtual, rc.algorithm.params, initial_state(net, rc));

            const Scenario sc = build_scenario(rc.scene, rc.output.seed);
            SweepSpec sw;
            sw.radius = rc.pattern.radius;
            sw.angles_deg = angle_grid(rc.pattern.start_deg, rc.pattern.stop_deg, rc.pattern.step_deg);
            sw.probe_template = rc.scene.element();
            const PatternResult r = pattern_sweep(sc, st.gammas, sw);
            const double spec_center = azimuth_deg(rc.scene.specular_receiver_position(), rc.scene.ris_center);
            const double want_center = azimuth_deg(rc.scene.receiver_position(), rc.scene.ris_center);
            const auto lobes = lobe_metrics(r, {{"specular", spec_center, rc.pattern.window_deg},
                                                {"desired", want_center, rc.pattern.window_deg}});
            spec.push_back(lobes[0].power_db);
            want.push_back(lobes[1].power_db);
            detail += fmt("w=%g: %.2f/%.2f dB; ", w, lobes[0].power_db, lobes[1].power_db);
        }
        bool monotone = true;
        for (std::size_t i = 1; i < spec.size(); ++i)
            monotone = monotone && spec[i] <= spec[i - 1];
        const double ds = spec[0] - spec[3], dw = want[0] - want[3];
        detail += fmt("specular drop %.2f dB, desired drop %.2f dB", ds, dw);
        return {monotone && ds >= 2.0 * dw, detail};
    }

    Outcome mse_identity()
    {
        std::mt19937_64 rng(110);
        std::uniform_real_distribution<double> u(0.01, 10.0), g(-5.0, 5.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const cx h(g(rng), g(rng));
            const double ss = u(rng), sn = u(rng);
            const double snr = ss * std::norm(h) / sn;
            worst = std::max(worst, std::abs(mse(w_opt(h, ss, sn), h, ss, sn) - ss / (snr + 1.0)));
        }
        return {worst < 1e-12, fmt("worst %.2e", worst)};
    }

    Outcome constrained()
    {
        RunConfig rc = desk("0.125", 500);
        const RunNetwork net = scene_network(rc, false);
        const OptState free_run = s_opt_run(net.s, rc.algorithm.params, initial_state(net, rc));
        rc.algorithm.params.feasible = FeasibleSet::interval_deg(-36.0, 36.0);
        const OptState st = s_opt_run(net.s, rc.algorithm.params, initial_state(net, rc));
        std::size_t bad = 0;
        for (const arma::vec &phi : st.phase_history)
            for (double x : phi)
                bad += !rc.algorithm.params.feasible.contains(x, 1e-12);
        const double loss = db(free_run.final_power()) - db(st.final_power());
        return {bad == 0 && loss <= 3.0, fmt("infeasible phases %zu over %zu iterates, loss %.2f dB", bad,
                                             st.phase_history.size(), loss)};
    }

    Outcome multipath()
    {
        // Empty cluster against the free-space channel
        const Scenario sc = desk_scene(8, 4, 0.125);
        const AugmentedBlocks empty = assemble_augmented(sc);
        std::mt19937_64 rng(112);
        const arma::cx_mat gs = arma::diagmat(gamma_from_phase(random_phases(32, rng), 0.004));
        const PartitionedNetworkMatrix free_z = link_network(sc);
        const double e_empty = rel(h_e2e_s_matched(z_to_s(reduced_network(empty)), gs), h_e2e_s_matched(z_to_s(free_z), gs));

        // Four-term split with a cluster present
        RunConfig rc = desk("0.125", 500);
        rc.scene.cluster_count = 100;
        const Scenario cl = build_scenario(rc.scene, rc.output.seed);
        const AugmentedBlocks a = assemble_augmented(cl, rc.scene.cluster_load);
        const SrotTerms t = s_rot_decompose(a);
        const double e_sum = rel(t.direct + t.cluster + t.structural + t.delta, t.s_rot);
        arma::cx_mat ap = a.Z_SS_eff();
        ap.diag() += Z0;
        const arma::cx_mat srot = (a.Z_ROT - a.Z_ROS * arma::solve(ap, a.Z_SOT)) / (2.0 * Z0);
        const double e_srot = rel(t.s_rot, srot);

        const RunNetwork with = scene_network(rc, false);
        const OptState p_with = s_opt_run(with.s, rc.algorithm.params, initial_state(with, rc));
        const RunConfig rf = desk("0.125", 500);
        const RunNetwork without = scene_network(rf, false);
        const OptState p_free = s_opt_run(without.s, rf.algorithm.params, initial_state(without, rf));
        const double delta = db(p_with.final_power()) - db(p_free.final_power());
        return {e_empty < 1e-12 && e_sum < 1e-12 && e_srot < 1e-12 && delta >= -0.5,
                fmt("empty %.2e, sum %.2e, s_rot %.2e, cluster %.2f dB vs free %.2f dB", e_empty, e_sum, e_srot,
                    db(p_with.final_power()), db(p_free.final_power()))};
    }

    Outcome performance()
    {
        // Per-iteration cost over a few short runs, then one full run at K = 256
        const std::vector<std::pair<int, int>> grids = {{8, 4}, {16, 4}, {16, 8}, {32, 8}};
        std::vector<double> lk, lt;
        std::string detail;
        for (const auto &[ny, nz] : grids)
        {
            const RunConfig rc = run_config({{"scenario.ris_n_y", std::to_string(ny)},
                                             {"scenario.ris_n_z", std::to_string(nz)},
                                             {"scenario.ris_d_y_wl", format_double(4.0 / ny)},
                                             {"algorithm.max_iterations", "40"}});
            const RunNetwork net = scene_network(rc, false);
            const OptState init = initial_state(net, rc);
            double best = INFINITY;
            // Minimum over repetitions filters scheduler noise
            for (int rep = 0; rep < 5; ++rep)
            {
                const auto t0 = Clock::now();
                const OptState st = s_opt_run(net.s, rc.algorithm.params, init);
                best = std::min(best, seconds_since(t0) / std::max(1, st.iteration));
            }
            lk.push_back(std::log(double(ny * nz)));
            lt.push_back(std::log(best));
            detail += fmt("K=%d %.2f ms; ", ny * nz, 1e3 * best);
        }
        const arma::vec x(lk), y(lt);
        const double slope = arma::dot(x - arma::mean(x), y - arma::mean(y)) / arma::dot(x - arma::mean(x), x - arma::mean(x));

        const auto t0 = Clock::now();
        const RunConfig full = run_config({});
        const RunNetwork net = scene_network(full, false);
        const OptState st = s_opt_run(net.s, full.algorithm.params, initial_state(net, full));
        const double wall = seconds_since(t0);
        detail += fmt("slope %.2f, full K=256 run %.1f s (%d it)", slope, wall, st.iteration);
        return {slope >= 2.0 && slope <= 3.5 && wall < 600.0, detail};
    }
}

int main()
{
    const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
        {"01 Z/S roundtrip", roundtrip},
        {"02 Z/S channel equivalence", domain_equivalence},
        {"03 structural scattering identity", structural_identity},
        {"04 homogeneous specular pattern", specular_pattern},
        {"05 optimizer monotonicity", monotonicity},
        {"06 oracle equivalence", oracle_equivalence},
        {"07 convergence-rate ordering", convergence_rate},
        {"08 coupling gain", coupling_gain},
        {"09 omega tradeoff", omega_tradeoff},
        {"10 MSE/SNR identity", mse_identity},
        {"11 constrained feasibility", constrained},
        {"12 multipath reduction", multipath},
        {"13 performance envelope", performance},
    };
    int failed = 0;
    for (const auto &[name, fn] : criteria)
    {
        Outcome o;
        const auto t0 = Clock::now();
        try
        {
            o = fn();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << " | " << o.detail << fmt(" | %.1f s", seconds_since(t0))
                  << std::endl;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
}
