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

#include "doctest.h"
#include "helpers.hpp"
#include "risnet/cli.hpp"
#include "risnet/matrix_io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace risnet;
using namespace testing;
namespace fs = std::filesystem;

namespace
{
    // Fresh directory removed on scope exit
    struct TempDir
    {
        fs::path path;
        TempDir()
        {
            static int counter = 0;
            path = fs::temp_directory_path() / ("risnet-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            fs::remove_all(path);
            fs::create_directories(path);
        }
        ~TempDir() { fs::remove_all(path); }
        std::string operator/(const std::string &name) const { return (path / name).string(); }
    };

    std::string slurp(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void spit(const std::string &path, const std::string &text) { std::ofstream(path, std::ios::binary) << text; }

    int cli(std::vector<std::string> args, std::string *err_text = nullptr)
    {
        args.insert(args.begin(), "risnet-cli");
        std::vector<char *> argv;
        for (auto &a : args)
            argv.push_back(a.data());
        std::ostringstream out, err;
        const int rc = run_cli(int(argv.size()), argv.data(), out, err);
        if (err_text)
            *err_text = err.str();
        return rc;
    }

    const char *small_config = "scenario.ris_n_y = 4\n"
                               "scenario.ris_n_z = 2\n"
                               "scenario.ris_d_y_wl = 0.25\n"
                               "algorithm.max_iterations = 20\n"
                               "pattern.step_deg = 5\n";

    // Restores an environment variable on scope exit
    struct EnvGuard
    {
        std::string name;
        EnvGuard(std::string n, const std::string &value) : name(std::move(n)) { ::setenv(name.c_str(), value.c_str(), 1); }
        ~EnvGuard() { ::unsetenv(name.c_str()); }
    };
}

TEST_CASE("io: doubles round trip exactly")
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i)
    {
        double v;
        const std::uint64_t bits = rng();
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v))
            continue;
        CHECK(parse_double(format_double(v), "t") == v);
    }
    CHECK(std::isinf(parse_double(format_double(INFINITY), "t")));
    CHECK_THROWS_AS(parse_double("1.5x", "t"), ConfigError);
    CHECK_THROWS_AS(parse_double("", "t"), ConfigError);
}

TEST_CASE("io: matrix files round trip bit for bit")
{
    std::mt19937_64 rng(2);
    const PartitionedNetworkMatrix z(MatrixKind::Z, random_complex(9, 9, rng, 40.0), {1, 5, 1, 2}, 75.0);
    std::stringstream ss;
    write_matrix(ss, z, "config_hash=abc seed=1");
    const PartitionedNetworkMatrix back = read_matrix(ss);
    CHECK(back.kind() == MatrixKind::Z);
    CHECK(back.partition() == z.partition());
    CHECK(back.reference_impedance() == 75.0);
    CHECK(arma::approx_equal(back.data(), z.data(), "absdiff", 0.0));

    const PartitionedNetworkMatrix s = z_to_s(PartitionedNetworkMatrix(MatrixKind::Z, random_passive_z(4, rng), {1, 2, 1, 0}, 50.0));
    TempDir dir;
    write_matrix(dir / "s.txt", s);
    const PartitionedNetworkMatrix sb = read_matrix(dir / "s.txt");
    CHECK(sb.kind() == MatrixKind::S);
    CHECK(arma::approx_equal(sb.data(), s.data(), "absdiff", 0.0));
}

TEST_CASE("io: malformed matrix files")
{
    auto bad = [](const std::string &text)
    {
        std::istringstream is(text);
        CHECK_THROWS_AS(read_matrix(is), ConfigError);
    };
    bad("");
    bad("# kind=Q z0=50 partition=1,0,1\n1:0,0:0\n0:0,1:0\n");
    bad("# kind=Z z0=50 partition=1,1,1\n1:0,0:0\n0:0,1:0\n");            // Too few rows
    bad("# kind=Z z0=50 partition=1,0,1\n1:0,0:0\n0:0\n");                // Short row
    bad("# kind=Z z0=50 partition=1,0,1\n1:0,0:0\n0:0,1:0\n0:0,0:0\n");   // Trailing row
    bad("# kind=Z z0=-5 partition=1,0,1\n1:0,0:0\n0:0,1:0\n");
    bad("# kind=Z z0=50 partition=1,0,1\n1:0,0:zz\n0:0,1:0\n");
    bad("# kind=Z partition=1,0,1\n1:0,0:0\n0:0,1:0\n");
    CHECK_THROWS_AS(read_matrix("/nonexistent/matrix.txt"), ConfigError);
}

TEST_CASE("io: loads files")
{
    TempDir dir;
    const arma::vec phases = {0.0, 1.0, -2.5, pi};
    write_loads(dir / "loads.csv", phases, 0.2, 50.0, "config_hash=00 seed=3");
    const LoadsFile l = read_loads(dir / "loads.csv");
    CHECK(l.r0 == 0.2);
    CHECK(l.z0 == 50.0);
    REQUIRE(l.phases.n_elem == 4);
    for (arma::uword k = 0; k < 4; ++k)
        CHECK(std::abs(wrap_phase(l.phases[k] - phases[k])) < 1e-12);

    spit(dir / "bad.csv", "# r0=0.2 z0=50\nk,phase_deg,reactance_ohm,gamma_re,gamma_im\n1,10,0,0,0\n0,20,0,0,0\n");
    CHECK_THROWS_AS(read_loads(dir / "bad.csv"), ConfigError);
    spit(dir / "empty.csv", "# r0=0.2 z0=50\nk,phase_deg,reactance_ohm,gamma_re,gamma_im\n");
    CHECK_THROWS_AS(read_loads(dir / "empty.csv"), ConfigError);
}

TEST_CASE("config: parsing diagnostics")
{
    Config c;
    try
    {
        c.merge_text("scenario.rx_k = 2\n# comment\nscenario.bogus = 1\n", "f.cfg");
        FAIL("expected an error");
    }
    catch (const ConfigError &e)
    {
        const std::string m = e.what();
        CHECK(m.find("f.cfg:3") != std::string::npos);
        CHECK(m.find("scenario.bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(Config().merge_text("rx_k = 2\n", "f"), ConfigError);
    CHECK_THROWS_AS(Config().merge_text("scenario.rx_k\n", "f"), ConfigError);
    CHECK_THROWS_AS(Config().merge_text("scenario.rx_k = 1\nscenario.rx_k = 2\n", "f"), ConfigError);

    Config d;
    d.merge_text("  scenario.rx_k=2   # trailing\n\n", "f");
    CHECK(d.get_int("scenario.rx_k") == 2);
    CHECK(d.is_set("scenario.rx_k"));
    CHECK(!d.is_set("scenario.z0_ohm"));
    CHECK(d.source("scenario.rx_k").find('f') != std::string::npos);
    CHECK_THROWS_AS(d.set("nope.key", "1", "cli"), ConfigError);
    d.set("algorithm.feasible", "interval:-30,30", "cli");
    CHECK(d.get("algorithm.feasible") == "interval:-30,30");

    Config e;
    e.set("scenario.rx_k", "two", "t");
    CHECK_THROWS_AS((void)e.get_int("scenario.rx_k"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from(e), ConfigError);
}

TEST_CASE("config: every schema key has a parseable default")
{
    Config c;
    for (const auto &k : config_schema())
        CHECK_NOTHROW((void)c.get(k.key));
    const RunConfig rc = RunConfig::from(c);
    CHECK(rc.algorithm.name == "s-opt");
    CHECK(rc.algorithm.params.step_budget == 0.01);
    CHECK(rc.algorithm.params.max_iterations == 500);
    CHECK(rc.scene.ris_n_y * rc.scene.ris_n_z == 256);
    CHECK(rc.compare_algorithms.size() == 4);
    CHECK(rc.sweep_points().size() == 1);
}

TEST_CASE("config: environment overrides and precedence")
{
    CHECK(env_name("scenario.rx_k") == "RISNET_SCENARIO_RX_K");
    EnvGuard g("RISNET_SCENARIO_RX_K", "1");
    Config c;
    c.merge_text("scenario.rx_k = 2\n", "f");
    c.merge_env();
    CHECK(c.get_int("scenario.rx_k") == 1);
    c.set("scenario.rx_k", "4", "--flag");
    CHECK(c.get_int("scenario.rx_k") == 4);

    // Unrelated variables sharing the prefix are ignored
    EnvGuard other("RISNET_SCENARIO_NOT_A_KEY", "1");
    Config d;
    CHECK_NOTHROW(d.merge_env());
}

TEST_CASE("config: canonical form and hash")
{
    Config a, b;
    a.merge_text("scenario.rx_k = 2\nalgorithm.omega = 0.5\n", "a");
    b.merge_text("# different layout\nalgorithm.omega    =   0.5\n\n   scenario.rx_k = 2\n", "b");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    b.set("output.directory", "elsewhere", "t");
    CHECK(a.hash() == b.hash());
    b.set("algorithm.omega", "0.6", "t");
    CHECK(a.hash() != b.hash());
    CHECK(hex64(0x1f) == "000000000000001f");
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("config: sweeps and mutually exclusive keys")
{
    Config c;
    c.merge_text("sweep.omega = 0, 1\nsweep.rx_k = 1,2,3\n", "f");
    const RunConfig rc = RunConfig::from(c);
    const auto pts = rc.sweep_points();
    REQUIRE(pts.size() == 6);
    CHECK(*pts[0].omega == 0.0);
    CHECK(*pts[0].rx_k == 1);
    CHECK(*pts[1].rx_k == 2);
    CHECK(*pts[3].omega == 1.0);
    const RunConfig at = rc.at(pts[4]);
    CHECK(at.algorithm.params.omega == 1.0);
    CHECK(at.scene.rx_k == 2);

    Config x;
    x.merge_text("scenario.rx_position_m = 1,2,0\nscenario.rx_k = 1\n", "f");
    CHECK_THROWS_AS(RunConfig::from(x), ConfigError);
    Config q;
    q.merge_text("scenario.ris_q = 2\n", "f");
    const RunConfig rq = RunConfig::from(q);
    CHECK(rq.scene.ris_n_y == 8);
    CHECK(rq.scene.ris_d_y_wl == 0.5);
    q.set("scenario.ris_n_y", "4", "t");
    CHECK_THROWS_AS(RunConfig::from(q), ConfigError);
}

TEST_CASE("config: feasible sets")
{
    CHECK(parse_feasible("full", 28e9, 50.0).kind == FeasibleSet::Kind::full_circle);
    const FeasibleSet iv = parse_feasible("interval:-36,36", 28e9, 50.0);
    CHECK(iv.kind == FeasibleSet::Kind::interval);
    CHECK(rad2deg(iv.hi) == doctest::Approx(36.0));
    CHECK(parse_feasible("discrete:0,90,180,270", 28e9, 50.0).points.size() == 4);
    CHECK(parse_feasible("varactor-mavr011020", 28e9, 50.0).kind == FeasibleSet::Kind::interval);
    CHECK_THROWS_AS(parse_feasible("circle", 28e9, 50.0), ConfigError);
    CHECK_THROWS_AS(parse_feasible("interval:1", 28e9, 50.0), ConfigError);
}

TEST_CASE("cli: scene export shapes")
{
    TempDir dir;
    spit(dir / "min.cfg", "scenario.ris_n_y = 1\nscenario.ris_n_z = 1\n");
    REQUIRE(cli({"--config", dir / "min.cfg", "--out", dir / "a", "scene"}) == 0);
    const PartitionedNetworkMatrix z = read_matrix(dir / "a/z_matrix.txt");
    CHECK(z.size() == 3);
    CHECK(read_matrix(dir / "a/s_matrix.txt").kind() == MatrixKind::S);

    spit(dir / "q8.cfg", "scenario.ris_q = 8\n");
    REQUIRE(cli({"--config", dir / "q8.cfg", "--out", dir / "b", "scene"}) == 0);
    const PartitionedNetworkMatrix z8 = read_matrix(dir / "b/z_matrix.txt");
    CHECK(z8.partition() == Partition{1, 256, 1, 0});
    CHECK(slurp(dir / "b/z_matrix.txt").find("config_hash=") != std::string::npos);
}

TEST_CASE("cli: optimize, pattern and compare products")
{
    TempDir dir;
    spit(dir / "c.cfg", small_config);
    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "o1", "optimize"}) == 0);
    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "o2", "optimize"}) == 0);
    for (const char *f : {"loads.csv", "trace.csv"})
        CHECK(slurp(dir / (std::string("o1/") + f)) == slurp(dir / (std::string("o2/") + f)));
    const std::string summary = slurp(dir / "o1/summary.json");
    CHECK(summary.find("\"algorithm\"") != std::string::npos);
    CHECK(summary.find("\"converged\"") != std::string::npos);
    CHECK(slurp(dir / "o1/trace.csv").find("iteration,received_power_db") != std::string::npos);
    CHECK(read_loads(dir / "o1/loads.csv").phases.n_elem == 8);

    // Feeding an exported matrix back gives the same loads
    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "sc", "scene"}) == 0);
    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "o3", "optimize", "--matrix", dir / "sc/z_matrix.txt"}) == 0);
    CHECK(read_loads(dir / "o3/loads.csv").phases.n_elem == 8);

    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "p", "pattern", "--loads", dir / "o1/loads.csv"}) == 0);
    const std::string pat = slurp(dir / "p/pattern.csv");
    CHECK(pat.find("angle_deg,power_w,power_db") != std::string::npos);
    CHECK(slurp(dir / "p/lobes.json").find("specular") != std::string::npos);
    REQUIRE(cli({"--config", dir / "c.cfg", "--out", dir / "h", "--normalize", "pattern", "--homogeneous"}) == 0);

    spit(dir / "one.cfg", std::string(small_config) + "compare.algorithms = s-diag\n");
    REQUIRE(cli({"--config", dir / "one.cfg", "--out", dir / "cmp", "compare"}) == 0);
    const std::string cmp = slurp(dir / "cmp/compare.csv");
    CHECK(cmp.find(",s-diag,") != std::string::npos);
    CHECK(cmp.find(",1,true,") != std::string::npos); // iterations = 1, converged
    CHECK(fs::exists(dir / "cmp/trace_s-diag.csv"));
}

TEST_CASE("cli: failures exit nonzero and leave no files")
{
    TempDir dir;
    spit(dir / "bogus.cfg", "scenario.not_a_key = 1\n");
    std::string err;
    CHECK(cli({"--config", dir / "bogus.cfg", "--out", dir / "x", "scene"}, &err) == 2);
    CHECK(err.find("not_a_key") != std::string::npos);
    CHECK(!fs::exists(dir / "x"));

    spit(dir / "c.cfg", small_config);
    CHECK(cli({"--config", dir / "c.cfg", "--out", dir / "p", "pattern", "--loads", dir / "missing.csv"}) != 0);
    CHECK(cli({"--config", dir / "c.cfg", "--out", dir / "p", "pattern"}) == 2);
    CHECK(!fs::exists(dir / "p/pattern.csv"));
    CHECK(cli({"--config", dir / "c.cfg", "--out", dir / "p"}) == 2);

    spit(dir / "oracle.cfg", std::string(small_config) + "algorithm.name = oracle\n");
    CHECK(cli({"--config", dir / "oracle.cfg", "--out", dir / "or", "optimize"}) == 4);
    CHECK(!fs::exists(dir / "or/loads.csv"));

    // A loads file of the wrong size partway through an otherwise valid pattern run
    write_loads(dir / "short.csv", arma::vec{0.0, 1.0}, 0.2, 50.0);
    CHECK(cli({"--config", dir / "c.cfg", "--out", dir / "q", "pattern", "--loads", dir / "short.csv"}) == 2);
    CHECK(!fs::exists(dir / "q/pattern.csv"));
}

TEST_CASE("cli: output staging and worker pool")
{
    TempDir dir;
    OutputSet o;
    o.add("a/b.txt", "hello\n");
    o.add("c.txt", "x");
    o.commit(dir / "out");
    CHECK(slurp(dir / "out/a/b.txt") == "hello\n");
    for (const auto &e : fs::recursive_directory_iterator(dir.path))
        CHECK(e.path().extension() != ".partial");

    std::vector<int> hit(50, 0);
    run_pool(50, 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    try
    {
        run_pool(10, 3, [](std::size_t i) { if (i == 7 || i == 3) throw ConfigError("job " + std::to_string(i)); });
        FAIL("expected an error");
    }
    catch (const ConfigError &e)
    {
        CHECK(std::string(e.what()) == "job 3");
    }
}
