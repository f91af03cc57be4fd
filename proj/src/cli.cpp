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

#include "risnet/cli.hpp"
#include "risnet/matrix_io.hpp"
#include "risnet/multipath.hpp"
#include "risnet/pattern.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace risnet
{
    namespace fs = std::filesystem;
    using nlohmann::json;

    PartitionedNetworkMatrix reduce_objects(const PartitionedNetworkMatrix &m, cx object_load)
    {
        const arma::uword no = m.partition().n_o;
        if (no == 0)
            return m;
        const PartitionedNetworkMatrix z = m.kind() == MatrixKind::Z ? m : s_to_z(m);
        return reduced_network(assemble_augmented(z, arma::cx_vec(no).fill(object_load)));
    }

    RunNetwork scene_network(const RunConfig &rc, bool with_virtual)
    {
        const Scenario sc = build_scenario(rc.scene, rc.output.seed);
        PartitionedNetworkMatrix z = reduce_objects(link_network(sc), rc.scene.cluster_load);
        PartitionedNetworkMatrix s = z_to_s(z);
        RunNetwork net{std::move(z), std::move(s), std::nullopt};
        if (with_virtual)
        {
            const Scenario vs = virtual_receiver_scenario(rc.scene, rc.output.seed);
            net.s_virtual = z_to_s(reduce_objects(link_network(vs), rc.scene.cluster_load));
        }
        return net;
    }

    OptState initial_state(const RunNetwork &net, const RunConfig &rc)
    {
        const AlgoParams &p = rc.algorithm.params;
        const arma::uword k = net.s.partition().k;
        const double eps = p.r0 / net.s.reference_impedance();
        arma::vec phi(k, arma::fill::zeros);
        if (rc.algorithm.init == "s-diag")
            phi = s_diag_run(net.s, p).phases;
        else if (rc.algorithm.init == "random")
        {
            std::mt19937_64 rng(rc.output.seed);
            auto u = [&] { return double(rng() >> 11) * 0x1.0p-53; };
            const FeasibleSet &f = p.feasible;
            for (arma::uword i = 0; i < k; ++i)
            {
                if (f.kind == FeasibleSet::Kind::discrete)
                    phi[i] = f.points[std::min<std::size_t>(std::size_t(u() * double(f.points.size())), f.points.size() - 1)];
                else if (f.kind == FeasibleSet::Kind::interval)
                    phi[i] = f.lo + u() * (f.hi - f.lo);
                else
                    phi[i] = pi - 2.0 * pi * u();
            }
        }
        return OptState::from_phases(project_feasible(phi, p.feasible), eps);
    }

    OptState run_algorithm(const std::string &name, const RunNetwork &net, const RunConfig &rc, const OptState &init)
    {
        const AlgoParams &p = rc.algorithm.params;
        if (name == "s-uni")
            return s_uni_run(net.s, p, init);
        if (name == "s-opt")
            return s_opt_run(net.s, p, init);
        if (name == "s-opt-omega")
        {
            if (!net.s_virtual)
                throw ConfigError("s-opt-omega needs the specular receiver network");
            return s_opt_omega_run(net.s, *net.s_virtual, p, init);
        }
        if (name == "z-ref")
            return z_ref_run(net.z, p, init);
        if (name == "s-diag")
            return s_diag_run(net.s, p);
        if (name == "oracle")
        {
            const OracleResult o = brute_force_oracle(net.s, rc.algorithm.oracle_step_deg, p);
            OptState st = OptState::from_phases(o.phases, p.r0 / net.s.reference_impedance());
            st.iteration = 1;
            st.converged = true;
            st.phase_history.push_back(o.phases);
            st.trace.push_back({1, o.power, 0.0, o.power, 0.0});
            return st;
        }
        throw ConfigError("unknown algorithm '" + name + "'");
    }

    void OutputSet::add(std::string relative_path, std::string content)
    {
        files_.emplace_back(std::move(relative_path), std::move(content));
    }

    void OutputSet::commit(const std::string &directory) const
    {
        // Stage everything as .partial first so a failure leaves no finished-looking files
        std::vector<std::pair<fs::path, fs::path>> staged;
        try
        {
            for (const auto &[name, content] : files_)
            {
                const fs::path target = fs::path(directory) / name;
                fs::create_directories(target.parent_path());
                fs::path tmp = target;
                tmp += ".partial";
                std::ofstream f(tmp, std::ios::binary);
                f << content;
                f.close();
                if (!f)
                    throw ConfigError("failed writing '" + tmp.string() + "'");
                staged.emplace_back(tmp, target);
            }
            for (const auto &[tmp, target] : staged)
                fs::rename(tmp, target);
        }
        catch (const fs::filesystem_error &e)
        {
            for (const auto &[tmp, target] : staged)
                fs::remove(tmp);
            throw ConfigError(std::string("output: ") + e.what());
        }
        catch (...)
        {
            for (const auto &[tmp, target] : staged)
                fs::remove(tmp);
            throw;
        }
    }

    void run_pool(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn)
    {
        std::vector<std::exception_ptr> errors(n);
        std::atomic<std::size_t> next{0};
        auto worker = [&]
        {
            for (std::size_t i = next++; i < n; i = next++)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    errors[i] = std::current_exception();
                }
            }
        };
        const std::size_t nthreads = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n, 1));
        if (nthreads <= 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < nthreads; ++t)
                pool.emplace_back(worker);
        }
        for (const auto &e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    namespace
    {
        struct Context
        {
            RunConfig rc;
            std::string header; // "config_hash=... seed=..." tokens
            int jobs = 1;
        };

        double to_db(double p) { return 10.0 * std::log10(p); }

        std::string utc_now()
        {
            const std::time_t t = std::time(nullptr);
            char buf[32];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            return buf;
        }

        std::string trace_csv(const Context &ctx, const OptState &st, bool specular)
        {
            std::ostringstream os;
            os << "# " << ctx.header << '\n';
            os << "iteration,received_power_db" << (specular ? ",specular_power_db" : "") << ",rho\n";
            for (const auto &t : st.trace)
            {
                os << t.iteration << ',' << format_double(to_db(t.power));
                if (specular)
                    os << ',' << format_double(to_db(t.specular_power));
                os << ',' << format_double(t.rho) << '\n';
            }
            return os.str();
        }

        json summary_json(const Context &ctx, const std::string &algorithm, const OptState &st, double wall)
        {
            return {{"algorithm", algorithm},
                    {"config_hash", hex64(ctx.rc.config_hash)},
                    {"seed", ctx.rc.output.seed},
                    {"ris_elements", st.phases.n_elem},
                    {"final_power_db", to_db(st.final_power())},
                    {"iterations", st.iteration},
                    {"iterations_to_within_0p5db", iterations_to_within(st, 0.5)},
                    {"converged", st.converged},
                    {"wall_time_s", wall}};
        }

        std::string loads_csv(const Context &ctx, const OptState &st, const RunNetwork &net)
        {
            // Reuse the writer through a temporary file would be clumsy; format in memory instead
            const double z0 = net.s.reference_impedance(), r0 = ctx.rc.algorithm.params.r0;
            const LoadConfig loads = LoadConfig::from_phases(st.phases, r0, z0);
            std::ostringstream os;
            os << "# r0=" << format_double(r0) << " z0=" << format_double(z0) << ' ' << ctx.header << '\n';
            os << "k,phase_deg,reactance_ohm,gamma_re,gamma_im\n";
            for (arma::uword k = 0; k < st.phases.n_elem; ++k)
                os << k << ',' << format_double(rad2deg(st.phases[k])) << ',' << format_double(loads.reactance[k])
                   << ',' << format_double(st.gammas[k].real()) << ',' << format_double(st.gammas[k].imag()) << '\n';
            return os.str();
        }

        std::string matrix_text(const PartitionedNetworkMatrix &m, const std::string &header)
        {
            std::ostringstream os;
            write_matrix(os, m, header);
            return os.str();
        }

        std::string point_dir(std::size_t i, std::size_t n)
        {
            if (n <= 1)
                return "";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "point_%03zu/", i);
            return buf;
        }

        std::string point_columns(const RunConfig &r)
        {
            return format_double(r.algorithm.params.omega) + ',' + format_double(r.scene.ris_d_y_wl) + ',' +
                   (r.scene.rx_position ? std::string("explicit") : std::to_string(r.scene.rx_k));
        }

        RunNetwork load_network(const RunConfig &rc, const std::string &matrix, const std::string &virtual_matrix,
                                bool need_virtual)
        {
            if (matrix.empty())
                return scene_network(rc, need_virtual);
            const PartitionedNetworkMatrix m = reduce_objects(read_matrix(matrix), rc.scene.cluster_load);
            RunNetwork net{m.kind() == MatrixKind::Z ? m : s_to_z(m), m.kind() == MatrixKind::S ? m : z_to_s(m),
                           std::nullopt};
            if (need_virtual)
            {
                if (virtual_matrix.empty())
                    throw ConfigError("s-opt-omega with --matrix also needs --virtual-matrix");
                const PartitionedNetworkMatrix v = reduce_objects(read_matrix(virtual_matrix), rc.scene.cluster_load);
                net.s_virtual = v.kind() == MatrixKind::S ? v : z_to_s(v);
            }
            return net;
        }

        void cmd_scene(const Context &ctx)
        {
            const Scenario sc = build_scenario(ctx.rc.scene, ctx.rc.output.seed);
            const PartitionedNetworkMatrix z = link_network(sc);
            OutputSet out;
            out.add("z_matrix.txt", matrix_text(z, ctx.header));
            out.add("s_matrix.txt", matrix_text(z_to_s(z), ctx.header));
            out.commit(ctx.rc.output.directory);
        }

        void cmd_optimize(const Context &ctx, const std::string &matrix, const std::string &virtual_matrix,
                          std::ostream &os)
        {
            const auto points = ctx.rc.sweep_points();
            if (!matrix.empty() && points.size() > 1 &&
                (!ctx.rc.sweep.d_y_wl.empty() || !ctx.rc.sweep.rx_k.empty()))
                throw ConfigError("geometry sweeps need the scenario, not --matrix");
            const std::string &algo = ctx.rc.algorithm.name;

            struct Result
            {
                RunConfig rc;
                RunNetwork net;
                OptState state;
                double wall = 0.0;
            };
            std::vector<std::optional<Result>> results(points.size());
            run_pool(points.size(), ctx.jobs,
                     [&](std::size_t i)
                     {
                         const auto t0 = std::chrono::steady_clock::now();
                         RunConfig rc = ctx.rc.at(points[i]);
                         RunNetwork net = load_network(rc, matrix, virtual_matrix, algo == "s-opt-omega");
                         OptState st = run_algorithm(algo, net, rc, initial_state(net, rc));
                         const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                         results[i] = Result{std::move(rc), std::move(net), std::move(st), wall};
                     });

            OutputSet out;
            std::ostringstream sweep;
            sweep << "# " << ctx.header << "\npoint,omega,d_y_wl,rx_k,final_power_db,iterations,converged,"
                  << "iterations_to_within_0p5db\n";
            const bool specular = algo == "s-opt-omega";
            for (std::size_t i = 0; i < results.size(); ++i)
            {
                const Result &r = *results[i];
                const std::string dir = point_dir(i, results.size());
                out.add(dir + "loads.csv", loads_csv(ctx, r.state, r.net));
                out.add(dir + "trace.csv", trace_csv(ctx, r.state, specular));
                out.add(dir + "summary.json", summary_json(ctx, algo, r.state, r.wall).dump(2) + "\n");
                sweep << i << ',' << point_columns(r.rc) << ',' << format_double(to_db(r.state.final_power())) << ','
                      << r.state.iteration << ',' << (r.state.converged ? "true" : "false") << ','
                      << iterations_to_within(r.state, 0.5) << '\n';
                os << dir << algo << ": " << format_double(to_db(r.state.final_power())) << " dB after "
                   << r.state.iteration << " iterations" << (r.state.converged ? " (converged)" : "") << '\n';
            }
            if (results.size() > 1)
                out.add("sweep.csv", sweep.str());
            out.commit(ctx.rc.output.directory);
        }

        void cmd_pattern(const Context &ctx, const std::string &loads_path, bool homogeneous, std::ostream &os)
        {
            const RunConfig &rc = ctx.rc;
            if (homogeneous == !loads_path.empty())
                throw ConfigError("pattern needs exactly one of --loads FILE or --homogeneous");
            const Scenario sc = build_scenario(rc.scene, rc.output.seed);
            const arma::uword k = sc.ris_elements.size();
            arma::cx_vec gammas(k, arma::fill::zeros); // Z0 terminations
            if (!homogeneous)
            {
                const LoadsFile lf = read_loads(loads_path);
                if (lf.phases.n_elem != k)
                    throw ConfigError(loads_path + ": " + std::to_string(lf.phases.n_elem) +
                                      " loads for a RIS of K = " + std::to_string(k));
                if (std::abs(lf.z0 - rc.scene.z0) > 1e-12 * rc.scene.z0)
                    throw ConfigError(loads_path + ": reference impedance differs from the scenario");
                gammas = gamma_from_phase(lf.phases, lf.r0 / rc.scene.z0);
            }

            SweepSpec spec;
            spec.arc_center = rc.scene.ris_center;
            spec.radius = rc.pattern.radius;
            spec.angles_deg = angle_grid(rc.pattern.start_deg, rc.pattern.stop_deg, rc.pattern.step_deg);
            spec.probe_template = rc.scene.element();
            PatternResult res = pattern_sweep(sc, gammas, spec, rc.scene.cluster_load);

            std::vector<LobeWindow> windows = {
                {"specular", azimuth_deg(rc.scene.specular_receiver_position(), rc.scene.ris_center), rc.pattern.window_deg}};
            if (!homogeneous)
                windows.push_back({"desired", azimuth_deg(rc.scene.receiver_position(), rc.scene.ris_center),
                                   rc.pattern.window_deg});
            res.lobes = lobe_metrics(res, windows);

            const double ref = rc.output.normalize ? res.peak_power() : 1.0;
            std::ostringstream csv;
            csv << "# " << ctx.header << (rc.output.normalize ? " normalized=peak" : "") << '\n'
                << "angle_deg,power_w,power_db\n";
            for (const auto &s : res.samples)
                csv << format_double(s.angle_deg) << ',' << format_double(s.power_w / ref) << ','
                    << format_double(to_db(s.power_w / ref)) << '\n';

            json lobes = json::array();
            for (std::size_t i = 0; i < res.lobes.size(); ++i)
            {
                const Lobe &l = res.lobes[i];
                lobes.push_back({{"name", l.name},
                                 {"window_center_deg", windows[i].center_deg},
                                 {"window_half_width_deg", windows[i].half_width_deg},
                                 {"angle_deg", l.angle_deg},
                                 {"power_w", l.power_w / ref},
                                 {"power_db", to_db(l.power_w / ref)}});
            }
            const json summary = {{"config_hash", hex64(rc.config_hash)},
                                  {"seed", rc.output.seed},
                                  {"normalized", rc.output.normalize},
                                  {"homogeneous", homogeneous},
                                  {"peak_angle_deg", res.peak_angle()},
                                  {"peak_power_db", to_db(res.peak_power() / ref)},
                                  {"lobes", lobes}};

            OutputSet out;
            out.add("pattern.csv", csv.str());
            out.add("lobes.json", summary.dump(2) + "\n");
            out.commit(rc.output.directory);
            os << "pattern: peak " << format_double(to_db(res.peak_power())) << " dB at " << res.peak_angle() << " deg\n";
        }

        void cmd_compare(const Context &ctx, std::ostream &os)
        {
            const auto points = ctx.rc.sweep_points();
            const auto &algos = ctx.rc.compare_algorithms;
            const bool need_virtual = std::find(algos.begin(), algos.end(), "s-opt-omega") != algos.end();

            // One network and initial state per point, shared by every algorithm
            struct PointData
            {
                RunConfig rc;
                std::optional<RunNetwork> net;
                OptState init;
            };
            std::vector<PointData> pts(points.size());
            run_pool(points.size(), ctx.jobs,
                     [&](std::size_t i)
                     {
                         pts[i].rc = ctx.rc.at(points[i]);
                         pts[i].net = scene_network(pts[i].rc, need_virtual);
                         pts[i].init = initial_state(*pts[i].net, pts[i].rc);
                     });

            const std::size_t n = points.size() * algos.size();
            std::vector<OptState> states(n);
            std::vector<double> walls(n);
            run_pool(n, ctx.jobs,
                     [&](std::size_t j)
                     {
                         const PointData &p = pts[j / algos.size()];
                         const auto t0 = std::chrono::steady_clock::now();
                         states[j] = run_algorithm(algos[j % algos.size()], *p.net, p.rc, p.init);
                         walls[j] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                     });

            OutputSet out;
            std::ostringstream csv;
            csv << "# " << ctx.header << '\n'
                << "point,omega,d_y_wl,rx_k,algorithm,final_power_db,iterations,converged,iterations_to_within_0p5db\n";
            json runs = json::array();
            for (std::size_t j = 0; j < n; ++j)
            {
                const std::size_t i = j / algos.size();
                const std::string &a = algos[j % algos.size()];
                const OptState &st = states[j];
                csv << i << ',' << point_columns(pts[i].rc) << ',' << a << ',' << format_double(to_db(st.final_power()))
                    << ',' << st.iteration << ',' << (st.converged ? "true" : "false") << ','
                    << iterations_to_within(st, 0.5) << '\n';
                out.add(point_dir(i, points.size()) + "trace_" + a + ".csv", trace_csv(ctx, st, a == "s-opt-omega"));
                json s = summary_json(ctx, a, st, walls[j]);
                s["point"] = i;
                runs.push_back(s);
                os << point_dir(i, points.size()) << a << ": " << format_double(to_db(st.final_power())) << " dB, "
                   << iterations_to_within(st, 0.5) << " iterations to within 0.5 dB\n";
            }
            out.add("compare.csv", csv.str());
            out.add("summary.json",
                    json{{"config_hash", hex64(ctx.rc.config_hash)}, {"seed", ctx.rc.output.seed}, {"runs", runs}}.dump(2) +
                        "\n");
            out.commit(ctx.rc.output.directory);
        }
    }

    int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err)
    {
        CLI::App app{"Loaded multiport network models of RIS-aided links"};
        app.require_subcommand(1);
        app.fallthrough();
        std::string config_path, out_dir, matrix, virtual_matrix, loads;
        std::optional<long> seed;
        bool normalize = false, homogeneous = false;
        int jobs = 1;
        app.add_option("--config", config_path, "Configuration file (section.key = value)")->check(CLI::ExistingFile);
        app.add_option("--out", out_dir, "Output directory (overrides output.directory)");
        app.add_option("--seed", seed, "Seed (overrides output.seed)");
        app.add_flag("--normalize", normalize, "Normalize pattern power to its peak");
        app.add_option("--jobs", jobs, "Worker threads for sweep points; 0 uses every core")->check(CLI::NonNegativeNumber);

        auto *scene = app.add_subcommand("scene", "Assemble and export the Z and S matrices");
        auto *optimize = app.add_subcommand("optimize", "Optimize the RIS loads");
        optimize->add_option("--matrix", matrix, "Z or S matrix file to use instead of the scenario geometry")
            ->check(CLI::ExistingFile);
        optimize->add_option("--virtual-matrix", virtual_matrix, "Specular receiver matrix file for s-opt-omega")
            ->check(CLI::ExistingFile);
        auto *pattern = app.add_subcommand("pattern", "Sweep a probe receiver along the arc");
        pattern->add_option("--loads", loads, "Loads file written by optimize");
        pattern->add_flag("--homogeneous", homogeneous, "Terminate every element with the reference impedance");
        auto *compare = app.add_subcommand("compare", "Run the compare.algorithms set on one scene and initialization");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::ParseError &e)
        {
            const int rc = app.exit(e, out, err);
            return rc == 0 ? 0 : 2;
        }

        try
        {
            Config cfg;
            if (!config_path.empty())
                cfg.merge_file(config_path);
            cfg.merge_env();
            if (!out_dir.empty())
                cfg.set("output.directory", out_dir, "--out");
            if (seed)
                cfg.set("output.seed", std::to_string(*seed), "--seed");
            if (normalize)
                cfg.set("output.normalize", "true", "--normalize");

            Context ctx;
            ctx.rc = RunConfig::from(cfg);
            ctx.jobs = jobs == 0 ? int(std::max(1u, std::thread::hardware_concurrency())) : jobs;
            ctx.header = "config_hash=" + hex64(ctx.rc.config_hash) + " seed=" + std::to_string(ctx.rc.output.seed);
            if (ctx.rc.output.timestamps)
                ctx.header += " generated=" + utc_now();

            if (scene->parsed())
                cmd_scene(ctx);
            else if (optimize->parsed())
                cmd_optimize(ctx, matrix, virtual_matrix, out);
            else if (pattern->parsed())
                cmd_pattern(ctx, loads, homogeneous, out);
            else if (compare->parsed())
                cmd_compare(ctx, out);
            return 0;
        }
        catch (const Error &e)
        {
            err << "error: " << e.what() << '\n';
            return e.exit_code();
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }
}
