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

#ifndef RISNET_PATTERN_HPP
#define RISNET_PATTERN_HPP

#include "risnet/em_scene.hpp"

#include <string>
#include <vector>

namespace risnet
{
    // Probe positions on an arc in the z = 0 plane: center + radius (cos psi, sin psi, 0)
    struct SweepSpec
    {
        arma::vec3 arc_center = {0.0, 0.0, 0.0};
        double radius = 4.0;            // [m]
        std::vector<double> angles_deg; // Strictly increasing
        DipoleElement probe_template;   // Same element model as the receiver

        void validate() const;
        arma::vec3 position(double angle_deg) const;
    };

    // start, start + step, ... up to stop (inclusive within rounding)
    std::vector<double> angle_grid(double start_deg, double stop_deg, double step_deg);

    struct PatternSample
    {
        double angle_deg = 0.0;
        double power_w = 0.0;
        double power_db = 0.0; // 10 log10(power / 1 W)
    };

    struct LobeWindow
    {
        std::string name;
        double center_deg = 0.0;
        double half_width_deg = 10.0;
    };

    struct Lobe
    {
        std::string name;
        double angle_deg = 0.0;
        double power_w = 0.0;
        double power_db = 0.0;
    };

    struct PatternResult
    {
        std::vector<PatternSample> samples;
        std::vector<Lobe> lobes;

        double peak_power() const;
        double peak_angle() const;
    };

    // Received power |H|^2 (matched ends, direct link per scenario) with the receiver moved along the arc.
    // The scenario's own receivers are replaced by the probe. Scattering objects, if any, are
    // reduced out with object_load terminations.
    PatternResult pattern_sweep(const Scenario &scenario, const arma::cx_vec &gammas, const SweepSpec &sweep,
                                cx object_load = 0.0);
    PatternResult pattern_sweep_serial(const Scenario &scenario, const arma::cx_vec &gammas, const SweepSpec &sweep,
                                       cx object_load = 0.0);

    // Peak sample within each window. Windows must be disjoint and each must contain samples.
    std::vector<Lobe> lobe_metrics(const PatternResult &result, const std::vector<LobeWindow> &windows);

    // Indices of samples that are strict local maxima (plateaus count once, end points compare to one side)
    std::vector<std::size_t> local_maxima(const std::vector<PatternSample> &samples);

    // Receiver direction of the reference desk layout: asin(k / 4) in degrees for k = 1..4
    double psi_angle(int k);

    // Mirror of the transmitter direction about the RIS normal (x axis), at the given range from the RIS center
    arma::vec3 specular_position(const arma::vec3 &tx_position, const arma::vec3 &ris_center, double range);

    // Azimuth of a point seen from the arc center [deg]
    double azimuth_deg(const arma::vec3 &point, const arma::vec3 &center);
}

#endif
