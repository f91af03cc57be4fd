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

#include "risnet/config.hpp"
#include "risnet/matrix_io.hpp"
#include "risnet/multipath.hpp"
#include "risnet/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace risnet
{
    const std::vector<KeySpec> &config_schema()
    {
        static const std::vector<KeySpec> schema = {
            {"scenario.frequency_hz", "28e9", "carrier frequency [Hz]"},
            {"scenario.z0_ohm", "50", "reference impedance [ohm]"},
            {"scenario.tx_position_m", "4,0,0", "transmitter dipole center [m]"},
            {"scenario.rx_k", "3", "receiver on the arc at asin(k/4), k = 1..4"},
            {"scenario.rx_position_m", "", "explicit receiver center [m], replaces rx_k"},
            {"scenario.rx_range_m", "4", "arc radius for rx_k and the specular receiver [m]"},
            {"scenario.element_length_wl", "0.46", "dipole length [wavelengths], all antennas and RIS elements"},
            {"scenario.element_radius_wl", "0.002", "dipole wire radius [wavelengths]"},
            {"scenario.ris_q", "", "shortcut: n_y = 4q, n_z = 8, d_y = 1/q wavelengths"},
            {"scenario.ris_n_y", "32", "RIS columns along y"},
            {"scenario.ris_n_z", "8", "RIS rows along z"},
            {"scenario.ris_d_y_wl", "0.125", "RIS spacing along y [wavelengths]"},
            {"scenario.ris_d_z_wl", "0.75", "RIS spacing along z [wavelengths]"},
            {"scenario.ris_center_m", "0,0,0", "RIS center [m]"},
            {"scenario.direct_link_blocked", "true", "remove the transmitter-receiver coupling"},
            {"cluster.count", "0", "number of scattering objects"},
            {"cluster.center_m", "2,2,0", "cluster center [m]"},
            {"cluster.spread_m", "0.5", "objects are drawn uniformly inside this radius [m]"},
            {"cluster.length_wl", "0.5", "object dipole length [wavelengths]"},
            {"cluster.radius_wl", "0.002", "object wire radius [wavelengths]"},
            {"cluster.load_ohm", "0", "object termination, re or re:im [ohm]"},
            {"algorithm.name", "s-opt", "s-uni | s-opt | s-opt-omega | z-ref | s-diag | oracle"},
            {"algorithm.init", "s-diag", "initial phases: s-diag | zero | random"},
            {"algorithm.step_budget", "0.01", "Neumann step budget"},
            {"algorithm.stop_threshold", "1e-6", "stop when the reflection coefficients move less than this"},
            {"algorithm.max_iterations", "500", "outer iteration cap"},
            {"algorithm.max_backtracks", "30", "budget halvings allowed when a step does not improve"},
            {"algorithm.r0_ohm", "0.2", "parasitic resistance of each RIS load [ohm]"},
            {"algorithm.omega", "0", "weight of the specular power"},
            {"algorithm.signal_power_w", "1", "transmit signal power [W]"},
            {"algorithm.noise_power_w", "1", "receiver noise power [W]"},
            {"algorithm.feasible", "full", "full | interval:lo,hi | discrete:p1,p2,... [deg] | varactor-mavr011020"},
            {"algorithm.oracle_step_deg", "5", "grid step of the exhaustive search [deg]"},
            {"compare.algorithms", "s-uni,s-opt,z-ref,s-diag", "algorithm set of the compare command"},
            {"sweep.omega", "", "list of omega values"},
            {"sweep.d_y_wl", "", "list of RIS y spacings [wavelengths]"},
            {"sweep.rx_k", "", "list of receiver indices"},
            {"pattern.start_deg", "-90", "first sweep angle [deg]"},
            {"pattern.stop_deg", "90", "last sweep angle [deg]"},
            {"pattern.step_deg", "0.5", "angle step [deg]"},
            {"pattern.radius_m", "4", "probe arc radius around the RIS center [m]"},
            {"pattern.window_deg", "5", "half width of the desired and specular lobe windows [deg]"},
            {"output.directory", "out", "output directory"},
            {"output.normalize", "false", "normalize pattern power to its peak"},
            {"output.seed", "1", "seed for cluster placement and random initialization"},
            {"output.timestamps", "false", "add a generation time to file headers"},
        };
        return schema;
    }

    std::string env_name(const std::string &key)
    {
        std::string out = env_prefix;
        for (char c : key)
            out += c == '.' ? '_' : char(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }

    namespace
    {
        std::string trim(std::string_view s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string_view::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return std::string(s.substr(b, e - b + 1));
        }

        // Whitespace around list separators does not change the meaning or the hash
        std::string normalize_value(std::string_view s)
        {
            std::string out;
            std::istringstream is{std::string(s)};
            std::string item;
            bool first = true;
            while (std::getline(is, item, ','))
            {
                if (!first)
                    out += ',';
                out += trim(item);
                first = false;
            }
            if (!s.empty() && s.back() == ',')
                out += ',';
            return trim(out);
        }

        std::vector<std::string> split_list(const std::string &s)
        {
            std::vector<std::string> out;
            if (s.empty())
                return out;
            std::istringstream is(s);
            std::string item;
            while (std::getline(is, item, ','))
                out.push_back(trim(item));
            return out;
        }
    }

    Config::Config()
    {
        for (const auto &k : config_schema())
            entries_[k.key] = Entry{k.default_value, "default", false};
    }

    void Config::fail(const std::string &key, const std::string &message) const
    {
        const auto it = entries_.find(key);
        const std::string where = it == entries_.end() ? "" : it->second.source + ": ";
        throw ConfigError(where + "key '" + key + "': " + message);
    }

    void Config::set(const std::string &key, const std::string &value, const std::string &source)
    {
        const auto it = entries_.find(key);
        if (it == entries_.end())
            throw ConfigError(source + ": unknown key '" + key + "'");
        it->second = Entry{normalize_value(value), source, true};
    }

    void Config::merge_text(const std::string &text, const std::string &origin)
    {
        std::istringstream is(text);
        std::string line;
        int lineno = 0;
        std::set<std::string> seen;
        while (std::getline(is, line))
        {
            ++lineno;
            const std::string where = origin + ":" + std::to_string(lineno);
            const auto hash_pos = line.find('#');
            const std::string body = trim(hash_pos == std::string::npos ? line : line.substr(0, hash_pos));
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError(where + ": expected 'section.key = value'");
            const std::string key = trim(body.substr(0, eq));
            if (key.find('.') == std::string::npos)
                throw ConfigError(where + ": key '" + key + "' has no section");
            if (!seen.insert(key).second)
                throw ConfigError(where + ": key '" + key + "' given twice");
            set(key, body.substr(eq + 1), where);
        }
    }

    void Config::merge_file(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        merge_text(ss.str(), path);
    }

    void Config::merge_env()
    {
        for (const auto &k : config_schema())
        {
            const std::string name = env_name(k.key);
            if (const char *v = std::getenv(name.c_str()))
                set(k.key, v, "environment " + name);
        }
    }

    const std::string &Config::get(const std::string &key) const
    {
        const auto it = entries_.find(key);
        if (it == entries_.end())
            throw ConfigError("unknown key '" + key + "'");
        return it->second.value;
    }

    bool Config::is_set(const std::string &key) const
    {
        const auto it = entries_.find(key);
        return it != entries_.end() && it->second.explicit_set;
    }

    const std::string &Config::source(const std::string &key) const
    {
        get(key);
        return entries_.at(key).source;
    }

    double Config::get_double(const std::string &key) const
    {
        try
        {
            return parse_double(get(key), "value");
        }
        catch (const ConfigError &)
        {
            fail(key, "expected a number, got '" + get(key) + "'");
        }
    }

    long Config::get_int(const std::string &key) const
    {
        const double v = get_double(key);
        if (v != std::floor(v) || std::abs(v) > 9.0e15)
            fail(key, "expected an integer, got '" + get(key) + "'");
        return long(v);
    }

    bool Config::get_bool(const std::string &key) const
    {
        const std::string &v = get(key);
        if (v == "true" || v == "1" || v == "yes" || v == "on")
            return true;
        if (v == "false" || v == "0" || v == "no" || v == "off")
            return false;
        fail(key, "expected true or false, got '" + v + "'");
    }

    std::vector<double> Config::get_doubles(const std::string &key) const
    {
        std::vector<double> out;
        for (const auto &item : split_list(get(key)))
        {
            try
            {
                out.push_back(parse_double(item, "value"));
            }
            catch (const ConfigError &)
            {
                fail(key, "expected a list of numbers, got '" + get(key) + "'");
            }
        }
        return out;
    }

    std::vector<std::string> Config::get_strings(const std::string &key) const { return split_list(get(key)); }

    arma::vec3 Config::get_vec3(const std::string &key) const
    {
        const auto v = get_doubles(key);
        if (v.size() != 3)
            fail(key, "expected x,y,z, got '" + get(key) + "'");
        return {v[0], v[1], v[2]};
    }

    cx Config::get_complex(const std::string &key) const
    {
        const std::string &v = get(key);
        const auto c = v.find(':');
        try
        {
            if (c == std::string::npos)
                return parse_double(v, "value");
            return {parse_double(std::string_view(v).substr(0, c), "value"),
                    parse_double(std::string_view(v).substr(c + 1), "value")};
        }
        catch (const ConfigError &)
        {
            fail(key, "expected re or re:im, got '" + v + "'");
        }
    }

    std::string Config::canonical() const
    {
        std::string out;
        for (const auto &[k, e] : entries_)
            if (k != "output.directory")
                out += k + " = " + e.value + "\n";
        return out;
    }

    std::uint64_t fnv1a64(std::string_view data)
    {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : data)
        {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

    std::string hex64(std::uint64_t v)
    {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }

    FeasibleSet parse_feasible(const std::string &text, double frequency, double z0)
    {
        if (text == "full")
            return FeasibleSet::full_circle();
        if (text == "varactor-mavr011020")
            return FeasibleSet::varactor_mavr011020(frequency, z0);
        const auto colon = text.find(':');
        if (colon != std::string::npos)
        {
            const std::string kind = text.substr(0, colon);
            std::vector<double> v;
            for (const auto &item : split_list(text.substr(colon + 1)))
                v.push_back(parse_double(item, "feasible set"));
            if (kind == "interval")
            {
                if (v.size() != 2)
                    throw ConfigError("feasible set interval needs lo,hi");
                return FeasibleSet::interval_deg(v[0], v[1]);
            }
            if (kind == "discrete")
                return FeasibleSet::discrete_deg(v);
        }
        throw ConfigError("unknown feasible set '" + text + "'");
    }

    DipoleElement SceneConfig::element() const
    {
        const double lambda = wavelength(frequency);
        DipoleElement e;
        e.length = element_length_wl * lambda;
        e.radius = element_radius_wl * lambda;
        return e;
    }

    arma::vec3 SceneConfig::receiver_position() const
    {
        if (rx_position)
            return *rx_position;
        const double psi = deg2rad(psi_angle(rx_k));
        return ris_center + rx_range * arma::vec3{std::cos(psi), std::sin(psi), 0.0};
    }

    arma::vec3 SceneConfig::specular_receiver_position() const
    {
        return specular_position(tx_position, ris_center, rx_range);
    }

    namespace
    {
        const std::set<std::string> algorithm_names = {"s-uni", "s-opt", "s-opt-omega", "z-ref", "s-diag", "oracle"};
    }

    RunConfig RunConfig::from(const Config &c)
    {
        RunConfig r;
        SceneConfig &s = r.scene;
        s.frequency = c.get_double("scenario.frequency_hz");
        if (!(s.frequency > 0.0))
            throw ConfigError(c.source("scenario.frequency_hz") + ": key 'scenario.frequency_hz' must be positive");
        s.z0 = c.get_double("scenario.z0_ohm");
        if (!(s.z0 > 0.0))
            throw ConfigError(c.source("scenario.z0_ohm") + ": key 'scenario.z0_ohm' must be positive");
        s.tx_position = c.get_vec3("scenario.tx_position_m");
        s.rx_k = int(c.get_int("scenario.rx_k"));
        if (c.is_set("scenario.rx_position_m"))
        {
            if (c.is_set("scenario.rx_k"))
                throw ConfigError(c.source("scenario.rx_position_m") +
                                  ": scenario.rx_position_m and scenario.rx_k are mutually exclusive");
            s.rx_position = c.get_vec3("scenario.rx_position_m");
        }
        else if (s.rx_k < 1 || s.rx_k > 4)
            throw ConfigError(c.source("scenario.rx_k") + ": key 'scenario.rx_k' must be between 1 and 4");
        s.rx_range = c.get_double("scenario.rx_range_m");
        s.element_length_wl = c.get_double("scenario.element_length_wl");
        s.element_radius_wl = c.get_double("scenario.element_radius_wl");
        if (c.is_set("scenario.ris_q"))
        {
            for (const char *k : {"scenario.ris_n_y", "scenario.ris_n_z", "scenario.ris_d_y_wl"})
                if (c.is_set(k))
                    throw ConfigError(c.source(k) + ": key '" + k + "' conflicts with scenario.ris_q");
            const long q = c.get_int("scenario.ris_q");
            if (q < 1)
                throw ConfigError(c.source("scenario.ris_q") + ": key 'scenario.ris_q' must be >= 1");
            s.ris_n_y = arma::uword(4 * q);
            s.ris_n_z = 8;
            s.ris_d_y_wl = 1.0 / double(q);
        }
        else
        {
            const long ny = c.get_int("scenario.ris_n_y"), nz = c.get_int("scenario.ris_n_z");
            if (ny < 1 || nz < 1)
                throw ConfigError("scenario.ris_n_y and scenario.ris_n_z must be >= 1");
            s.ris_n_y = arma::uword(ny);
            s.ris_n_z = arma::uword(nz);
            s.ris_d_y_wl = c.get_double("scenario.ris_d_y_wl");
        }
        s.ris_d_z_wl = c.get_double("scenario.ris_d_z_wl");
        s.ris_center = c.get_vec3("scenario.ris_center_m");
        s.direct_link_blocked = c.get_bool("scenario.direct_link_blocked");

        const long nc = c.get_int("cluster.count");
        if (nc < 0)
            throw ConfigError(c.source("cluster.count") + ": key 'cluster.count' must be >= 0");
        s.cluster_count = arma::uword(nc);
        s.cluster_center = c.get_vec3("cluster.center_m");
        s.cluster_spread = c.get_double("cluster.spread_m");
        s.cluster_length_wl = c.get_double("cluster.length_wl");
        s.cluster_radius_wl = c.get_double("cluster.radius_wl");
        s.cluster_load = c.get_complex("cluster.load_ohm");

        AlgorithmConfig &a = r.algorithm;
        a.name = c.get("algorithm.name");
        if (!algorithm_names.contains(a.name))
            throw ConfigError(c.source("algorithm.name") + ": unknown algorithm '" + a.name + "'");
        a.init = c.get("algorithm.init");
        if (a.init != "s-diag" && a.init != "zero" && a.init != "random")
            throw ConfigError(c.source("algorithm.init") + ": key 'algorithm.init' must be s-diag, zero or random");
        AlgoParams &p = a.params;
        p.step_budget = c.get_double("algorithm.step_budget");
        p.stop_threshold = c.get_double("algorithm.stop_threshold");
        p.max_iterations = int(c.get_int("algorithm.max_iterations"));
        p.max_backtracks = int(c.get_int("algorithm.max_backtracks"));
        p.r0 = c.get_double("algorithm.r0_ohm");
        p.omega = c.get_double("algorithm.omega");
        p.signal_power = c.get_double("algorithm.signal_power_w");
        p.noise_power = c.get_double("algorithm.noise_power_w");
        try
        {
            p.feasible = parse_feasible(c.get("algorithm.feasible"), s.frequency, s.z0);
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(c.source("algorithm.feasible") + ": key 'algorithm.feasible': " + e.what());
        }
        a.oracle_step_deg = c.get_double("algorithm.oracle_step_deg");
        try
        {
            p.validate();
        }
        catch (const ConfigError &e)
        {
            throw ConfigError(std::string("algorithm section: ") + e.what());
        }

        r.compare_algorithms = c.get_strings("compare.algorithms");
        if (r.compare_algorithms.empty())
            throw ConfigError(c.source("compare.algorithms") + ": key 'compare.algorithms' is empty");
        for (const auto &n : r.compare_algorithms)
            if (!algorithm_names.contains(n))
                throw ConfigError(c.source("compare.algorithms") + ": unknown algorithm '" + n + "'");

        r.sweep.omega = c.get_doubles("sweep.omega");
        r.sweep.d_y_wl = c.get_doubles("sweep.d_y_wl");
        for (double k : c.get_doubles("sweep.rx_k"))
        {
            if (k != std::floor(k) || k < 1 || k > 4)
                throw ConfigError(c.source("sweep.rx_k") + ": key 'sweep.rx_k' entries must be integers 1..4");
            r.sweep.rx_k.push_back(int(k));
        }
        if (!r.sweep.rx_k.empty() && s.rx_position)
            throw ConfigError("sweep.rx_k cannot be combined with scenario.rx_position_m");
        if (!r.sweep.d_y_wl.empty() && c.is_set("scenario.ris_q"))
            throw ConfigError("sweep.d_y_wl cannot be combined with scenario.ris_q");

        r.pattern.start_deg = c.get_double("pattern.start_deg");
        r.pattern.stop_deg = c.get_double("pattern.stop_deg");
        r.pattern.step_deg = c.get_double("pattern.step_deg");
        r.pattern.radius = c.get_double("pattern.radius_m");
        r.pattern.window_deg = c.get_double("pattern.window_deg");

        r.output.directory = c.get("output.directory");
        r.output.normalize = c.get_bool("output.normalize");
        const long seed = c.get_int("output.seed");
        if (seed < 0)
            throw ConfigError(c.source("output.seed") + ": key 'output.seed' must be non-negative");
        r.output.seed = std::uint64_t(seed);
        r.output.timestamps = c.get_bool("output.timestamps");
        r.config_hash = c.hash();
        return r;
    }

    std::vector<SweepPoint> RunConfig::sweep_points() const
    {
        std::vector<std::optional<double>> om(sweep.omega.begin(), sweep.omega.end());
        std::vector<std::optional<double>> dy(sweep.d_y_wl.begin(), sweep.d_y_wl.end());
        std::vector<std::optional<int>> rk(sweep.rx_k.begin(), sweep.rx_k.end());
        if (om.empty())
            om.emplace_back();
        if (dy.empty())
            dy.emplace_back();
        if (rk.empty())
            rk.emplace_back();
        std::vector<SweepPoint> out;
        for (const auto &o : om)
            for (const auto &d : dy)
                for (const auto &k : rk)
                    out.push_back({o, d, k});
        return out;
    }

    RunConfig RunConfig::at(const SweepPoint &pt) const
    {
        RunConfig r = *this;
        if (pt.omega)
            r.algorithm.params.omega = *pt.omega;
        if (pt.d_y_wl)
            r.scene.ris_d_y_wl = *pt.d_y_wl;
        if (pt.rx_k)
            r.scene.rx_k = *pt.rx_k;
        r.algorithm.params.validate();
        return r;
    }

    Scenario build_scenario(const SceneConfig &sc, std::uint64_t seed)
    {
        const double lambda = wavelength(sc.frequency);
        const DipoleElement tmpl = sc.element();
        Scenario s;
        s.frequency = sc.frequency;
        s.reference_impedance = sc.z0;
        s.direct_link_blocked = sc.direct_link_blocked;

        DipoleElement tx = tmpl, rx = tmpl;
        tx.position = sc.tx_position;
        rx.position = sc.receiver_position();
        s.tx_elements = {tx};
        s.rx_elements = {rx};
        s.ris_elements = expand_grid({sc.ris_n_y, sc.ris_n_z, sc.ris_d_y_wl * lambda, sc.ris_d_z_wl * lambda, sc.ris_center},
                                     tmpl);

        if (sc.cluster_count > 0)
        {
            ClusterSpec cs;
            cs.object_count = sc.cluster_count;
            cs.center = sc.cluster_center;
            cs.spread = sc.cluster_spread;
            cs.object_template.length = sc.cluster_length_wl * lambda;
            cs.object_template.radius = sc.cluster_radius_wl * lambda;
            cs.object_load = sc.cluster_load;
            cs.seed = seed;
            std::vector<DipoleElement> avoid = s.ris_elements;
            avoid.push_back(tx);
            avoid.push_back(rx);
            s.cluster_elements = place_cluster(cs, avoid);
        }
        return s;
    }

    Scenario virtual_receiver_scenario(const SceneConfig &sc, std::uint64_t seed)
    {
        // Objects stay where the real scene put them
        Scenario s = build_scenario(sc, seed);
        s.rx_elements.front().position = sc.specular_receiver_position();
        return s;
    }
}
