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

#ifndef RISNET_OPTIMIZER_HPP
#define RISNET_OPTIMIZER_HPP

#include "risnet/network.hpp"

#include <optional>
#include <vector>

namespace risnet
{
    // Set of admissible load phases. Phases are wrapped to (-pi, pi].
    struct FeasibleSet
    {
        enum class Kind
        {
            full_circle,
            interval,
            discrete
        };

        Kind kind = Kind::full_circle;
        double lo = 0.0, hi = 0.0;  // Interval bounds [rad]
        std::vector<double> points; // Discrete phases [rad]

        static FeasibleSet full_circle();
        static FeasibleSet interval_deg(double lo_deg, double hi_deg);
        static FeasibleSet discrete_deg(const std::vector<double> &phases_deg);

        // Window reachable with a MAVR-011020 varactor (0.025 .. 0.19 pF) behind a fixed line
        // whose phase offset centers the window on 0
        static FeasibleSet varactor_mavr011020(double frequency, double z0 = 50.0);

        bool contains(double phi, double tol = 1e-12) const;
    };

    // Wraps an angle to (-pi, pi]
    double wrap_phase(double phi);

    // Closest feasible phase in angular distance
    double project_feasible(double phi, const FeasibleSet &set);
    arma::vec project_feasible(const arma::vec &phi, const FeasibleSet &set);

    struct AlgoParams
    {
        double step_budget = 0.01;     // delta_0, Neumann step budget
        double stop_threshold = 1e-6;  // eta, on ||Gamma(m+1) - Gamma(m)||
        int max_iterations = 500;
        double r0 = 0.2;               // Parasitic resistance [ohm]
        double omega = 0.0;            // Weight of the specular power
        double noise_power = 1.0;      // sigma_n^2 [W]
        double signal_power = 1.0;     // sigma_s^2 [W]
        FeasibleSet feasible;

        // Retries with a halved budget when a step fails to improve the exact objective
        int max_backtracks = 30;

        void validate() const;
    };

    struct TracePoint
    {
        int iteration = 0;
        double power = 0.0;          // Exact |H|^2 in the desired direction [W]
        double specular_power = 0.0; // Exact |H|^2 at the virtual specular receiver, 0 if absent
        double objective = 0.0;      // The algorithm's own objective (power, MSE or weighted MSE)
        double rho = 0.0;
    };

    struct OptState
    {
        arma::vec phases;    // phi_k [rad]
        arma::cx_vec gammas; // Gamma_k with the parasitic resistance applied
        int iteration = 0;
        std::vector<TracePoint> trace;
        std::vector<arma::vec> phase_history; // Phases after every iteration, starting with the initial point
        bool converged = false;
        double delta_norm = 0.0;

        // Load reactances X_k = Z0 cot(phi_k / 2)
        LoadConfig loads(double r0, double z0) const { return LoadConfig::from_phases(phases, r0, z0); }
        double final_power() const { return trace.empty() ? 0.0 : trace.back().power; }

        static OptState from_phases(const arma::vec &phases, double eps);
    };

    // SISO blocks of a matched S network: s_rt, s_rs (1 x K), s_st (K x 1), s_ss
    struct LinkBlocks
    {
        cx s_rt = 0.0;
        arma::cx_rowvec s_rs;
        arma::cx_vec s_st;
        arma::cx_mat s_ss;

        static LinkBlocks from(const PartitionedNetworkMatrix &s);
        arma::uword size() const { return s_st.n_elem; }

        // s_rt + s_rs (diag(Gamma)^-1 - S_SS)^-1 s_st
        cx channel(const arma::cx_vec &gammas) const;
    };

    struct LinearizedProblem
    {
        cx a = 0.0;
        arma::cx_vec b1, b2, c;
        arma::cx_mat Q, P;
        arma::vec D;         // diag(P P^H)
        double p_norm = 0.0; // Frobenius norm of P
        bool has_specular = false;
        cx a_s = 0.0;
        arma::cx_vec c_s;
    };

    // First-order model h(phi + x) ~ a + c^T x around the current phases
    LinearizedProblem linearize(const LinkBlocks &s, const OptState &state, const LinkBlocks *virtual_rx = nullptr);
    LinearizedProblem linearize(const PartitionedNetworkMatrix &s, const OptState &state,
                                const PartitionedNetworkMatrix *virtual_rx = nullptr);

    // Sign steps of size delta_0 / ||P||
    arma::vec s_uni_step(const LinearizedProblem &problem, const AlgoParams &params);

    // MMSE receiver and its error
    cx w_opt(cx h, double signal_power, double noise_power);
    double mse(cx w, cx h, double signal_power, double noise_power);

    struct InnerResult
    {
        arma::vec x;
        cx w = 0.0;
        double mu = 0.0;
        int iterations = 0;
        bool interior = false; // The unconstrained minimizer already meets the budget
    };

    // Alternating minimization of the (weighted) MSE over w and the increments x, subject to
    // sum_k D_k x_k^2 = delta_0^2
    InnerResult s_opt_inner(const LinearizedProblem &problem, const AlgoParams &params, const arma::vec &x_init);

    // Iterative optimizers. Each starts from `init`, records one trace point per accepted step and
    // never accepts a step that worsens its exact objective.
    OptState s_uni_run(const PartitionedNetworkMatrix &s, const AlgoParams &params, const OptState &init);
    OptState s_opt_run(const PartitionedNetworkMatrix &s, const AlgoParams &params, const OptState &init);
    OptState s_opt_omega_run(const PartitionedNetworkMatrix &s, const PartitionedNetworkMatrix &s_virtual,
                             const AlgoParams &params, const OptState &init);

    // Z-domain baseline: steps in the normalized reactances, objective 4 |H_approx(Z)|^2 with matched ends
    OptState z_ref_run(const PartitionedNetworkMatrix &z, const AlgoParams &params, const OptState &init);

    // Closed-form phases ignoring the off-diagonal coupling; the result is evaluated on the full network
    OptState s_diag_run(const PartitionedNetworkMatrix &s, const AlgoParams &params);

    struct OracleResult
    {
        arma::vec phases;
        double power = 0.0;
        std::size_t evaluations = 0;
    };

    // Exhaustive search over a phase grid with the exact channel. Refuses K > 4 or grids above 1e8 points.
    OracleResult brute_force_oracle(const PartitionedNetworkMatrix &s, double phase_step_deg, const AlgoParams &params);
    OracleResult brute_force_oracle_serial(const PartitionedNetworkMatrix &s, double phase_step_deg,
                                           const AlgoParams &params);

    // Number of trace points needed to come within `tol_db` of the final power
    int iterations_to_within(const OptState &state, double tol_db = 0.5);
}

#endif
