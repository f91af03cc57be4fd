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

#ifndef RISNET_CONFIG_HPP
#define RISNET_CONFIG_HPP

#include "risnet/em_scene.hpp"
#include "risnet/optimizer.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace risnet
{
    struct KeySpec
    {
        const char *key;
        const char *default_value;
        const char *doc;
    };

    // Every recognized key with its default. Keys are "section.name".
    const std::vector<KeySpec> &config_schema();

    // Environment overrides use this prefix: scenario.rx_k -> RISNET_SCENARIO_RX_K
    inline constexpr const char *env_prefix = "RISNET_";
    std::string env_name(const std::string &key);

    // Flat key/value store. Precedence: defaults < file < environment < command line.
    class Config
    {
    public:
        Config(); // All defaults

        // Lines "section.key = value"; '#' starts a comment. Unknown keys, malformed lines and
        // keys given twice raise ConfigError naming origin, line and key.
        void merge_text(const std::string &text, const std::string &origin);
        void merge_file(const std::string &path);
        void merge_env();
        void set(const std::string &key, const std::string &value, const std::string &source);

        const std::string &get(const std::string &key) const;
        bool is_set(const std::string &key) const; // Set by anything other than the defaults
        const std::string &source(const std::string &key) const;

        double get_double(const std::string &key) const;
        long get_int(const std::string &key) const;
        bool get_bool(const std::string &key) const;
        arma::vec3 get_vec3(const std::string &key) const;
        cx get_complex(const std::string &key) const;
        std::vector<double> get_doubles(const std::string &key) const;
        std::vector<std::string> get_strings(const std::string &key) const;

        // Sorted "key = value" lines of the effective configuration, excluding output.directory
        std::string canonical() const;
        std::uint64_t hash() const;

    private:
        struct Entry
        {
            std::string value;
            std::string source = "default";
            bool explicit_set = false;
        };
        std::map<std::string, Entry> entries_;
        [[noreturn]] void fail(const std::string &key, const std::string &message) const;
    };

    std::uint64_t fnv1a64(std::string_view data);
    std::string hex64(std::uint64_t v);

    FeasibleSet parse_feasible(const std::string &text, double frequency, double z0);

    struct SceneConfig
    {
        double frequency = 28.0e9;
        double z0 = 50.0;
        arma::vec3 tx_position = {4.0, 0.0, 0.0};
        int rx_k = 3;
        std::optional<arma::vec3> rx_position;
        double rx_range = 4.0;
        double element_length_wl = 0.46;
        double element_radius_wl = 0.002;
        arma::uword ris_n_y = 32, ris_n_z = 8;
        double ris_d_y_wl = 0.125, ris_d_z_wl = 0.75;
        arma::vec3 ris_center = {0.0, 0.0, 0.0};
        bool direct_link_blocked = true;
        arma::uword cluster_count = 0;
        arma::vec3 cluster_center = {2.0, 2.0, 0.0};
        double cluster_spread = 0.5;
        double cluster_length_wl = 0.5;
        double cluster_radius_wl = 0.002;
        cx cluster_load = 0.0;

        DipoleElement element() const;
        arma::vec3 receiver_position() const;
        arma::vec3 specular_receiver_position() const;
    };

    struct AlgorithmConfig
    {
        std::string name = "s-opt";
        AlgoParams params;
        std::string init = "s-diag"; // s-diag | zero | random
        double oracle_step_deg = 5.0;
    };

    struct SweepConfig
    {
        std::vector<double> omega;
        std::vector<double> d_y_wl;
        std::vector<int> rx_k;

        bool empty() const { return omega.empty() && d_y_wl.empty() && rx_k.empty(); }
    };

    struct SweepPoint
    {
        std::optional<double> omega;
        std::optional<double> d_y_wl;
        std::optional<int> rx_k;
    };

    struct PatternConfig
    {
        double start_deg = -90.0, stop_deg = 90.0, step_deg = 0.5;
        double radius = 4.0;
        double window_deg = 5.0; // Lobe window half width
    };

    struct OutputConfig
    {
        std::string directory = "out";
        bool normalize = false;
        std::uint64_t seed = 1;
        bool timestamps = false;
    };

    struct RunConfig
    {
        SceneConfig scene;
        AlgorithmConfig algorithm;
        std::vector<std::string> compare_algorithms;
        SweepConfig sweep;
        PatternConfig pattern;
        OutputConfig output;
        std::uint64_t config_hash = 0;

        static RunConfig from(const Config &config);

        // Cartesian product of the sweep axes, ordered omega outer, rx_k inner; one empty point without sweeps
        std::vector<SweepPoint> sweep_points() const;
        RunConfig at(const SweepPoint &point) const;
    };

    // Scenario with the configured receiver; cluster objects are drawn with `seed`
    Scenario build_scenario(const SceneConfig &scene, std::uint64_t seed);

    // Same scene with the receiver moved to the specular direction
    Scenario virtual_receiver_scenario(const SceneConfig &scene, std::uint64_t seed);
}

#endif
