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

#include "risnet/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>

namespace risnet
{
    FeasibleSet FeasibleSet::full_circle()
    {
        return {};
    }

    FeasibleSet FeasibleSet::interval_deg(double lo_deg, double hi_deg)
    {
        if (!(lo_deg < hi_deg) || hi_deg - lo_deg >= 360.0)
            throw ConfigError("feasible interval needs lo < hi and a width below 360 degrees");
        FeasibleSet f;
        f.kind = Kind::interval;
        f.lo = deg2rad(lo_deg);
        f.hi = deg2rad(hi_deg);
        return f;
    }

    FeasibleSet FeasibleSet::discrete_deg(const std::vector<double> &phases_deg)
    {
        if (phases_deg.empty())
            throw ConfigError("discrete feasible set is empty");
        FeasibleSet f;
        f.kind = Kind::discrete;
        for (double p : phases_deg)
            f.points.push_back(wrap_phase(deg2rad(p)));
        return f;
    }

    FeasibleSet FeasibleSet::varactor_mavr011020(double frequency, double z0)
    {
        const double w = 2.0 * pi * frequency;
        const double c_min = 0.025e-12, c_max = 0.19e-12;
        // Series capacitance: X = -1 / (w C), phase from X = Z0 cot(phi / 2)
        const double phi_a = 2.0 * std::atan(z0 / (-1.0 / (w * c_min)));
        const double phi_b = 2.0 * std::atan(z0 / (-1.0 / (w * c_max)));
        const double lo = std::min(phi_a, phi_b), hi = std::max(phi_a, phi_b);
        const double offset = -0.5 * (lo + hi);
        return interval_deg(rad2deg(lo + offset), rad2deg(hi + offset));
    }

    double wrap_phase(double phi)
    {
        double r = std::remainder(phi, 2.0 * pi);
        if (r <= -pi)
            r += 2.0 * pi;
        return r;
    }

    bool FeasibleSet::contains(double phi, double tol) const
    {
        return std::abs(wrap_phase(project_feasible(phi, *this) - phi)) <= tol;
    }

    double project_feasible(double phi, const FeasibleSet &set)
    {
        switch (set.kind)
        {
        case FeasibleSet::Kind::full_circle:
            return phi;
        case FeasibleSet::Kind::interval:
        {
            // Measure from the interval midpoint so that the wrap happens opposite to the window
            const double mid = 0.5 * (set.lo + set.hi), half = 0.5 * (set.hi - set.lo);
            const double d = wrap_phase(phi - mid);
            if (std::abs(d) <= half)
                return mid + d;
            return d > 0.0 ? set.hi : set.lo;
        }
        case FeasibleSet::Kind::discrete:
        {
            double best = set.points.front(), best_d = INFINITY;
            for (double p : set.points)
            {
                const double d = std::abs(wrap_phase(phi - p));
                if (d < best_d)
                {
                    best_d = d;
                    best = p;
                }
            }
            return best;
        }
        }
        return phi;
    }

    arma::vec project_feasible(const arma::vec &phi, const FeasibleSet &set)
    {
        arma::vec out(phi.n_elem);
        for (arma::uword k = 0; k < phi.n_elem; ++k)
            out[k] = project_feasible(phi[k], set);
        return out;
    }

    void AlgoParams::validate() const
    {
        if (!(step_budget > 0.0) || step_budget > 0.1)
            throw ConfigError("step_budget must lie in (0, 0.1]");
        if (!(stop_threshold > 0.0))
            throw ConfigError("stop_threshold must be positive");
        if (max_iterations < 0)
            throw ConfigError("max_iterations must be non-negative");
        if (!(r0 >= 0.0))
            throw ConfigError("r0 must be non-negative");
        if (!(omega >= 0.0))
            throw ConfigError("omega must be non-negative");
        if (!(noise_power > 0.0) || !(signal_power > 0.0))
            throw ConfigError("noise_power and signal_power must be positive");
        if (max_backtracks < 0)
            throw ConfigError("max_backtracks must be non-negative");
    }

    OptState OptState::from_phases(const arma::vec &phases, double eps)
    {
        OptState s;
        s.phases = phases;
        s.gammas = gamma_from_phase(phases, eps);
        return s;
    }

    // --------------------------------------------------------------------------------------------

    LinkBlocks LinkBlocks::from(const PartitionedNetworkMatrix &s)
    {
        using enum Block;
        const Partition &p = s.partition();
        if (s.kind() != MatrixKind::S)
            throw ConfigError("optimizers expect a scattering matrix");
        if (p.n_t != 1 || p.n_r != 1 || p.n_o != 0)
            throw ConfigError("optimizers support one transmit and one receive port without scattering objects");
        LinkBlocks b;
        b.s_rt = s.block(R, T)(0, 0);
        b.s_rs = s.block(R, S);
        b.s_st = s.block(S, T);
        b.s_ss = s.block(S, S);
        return b;
    }

    cx LinkBlocks::channel(const arma::cx_vec &gammas) const
    {
        const arma::uword k = size();
        if (gammas.n_elem != k)
            throw ConfigError("reflection coefficient count does not match the RIS size");
        if (k == 0)
            return s_rt;
        arma::cx_mat A = -arma::diagmat(gammas) * s_ss;
        A.diag() += 1.0;
        const arma::cx_mat f = checked_solve(A, arma::cx_mat(gammas % s_st), "U - Gamma_S S_SS");
        return s_rt + arma::as_scalar(s_rs * f);
    }

    namespace
    {
        struct Expansion
        {
            cx a;
            arma::cx_vec b1, b2, c;
            arma::cx_mat Q, P;
        };

        Expansion expand(const LinkBlocks &s, const arma::vec &phases, const arma::cx_vec &gammas)
        {
            Expansion e;
            const arma::uword k = s.size();
            e.Q = -s.s_ss;
            e.Q.diag() += 1.0 / gammas;
            const arma::cx_mat Qinv = checked_inv(e.Q, "Q = Gamma^-1 - S_SS");
            arma::cx_rowvec d(k);
            for (arma::uword i = 0; i < k; ++i)
                d[i] = cx(0.0, 1.0) * std::polar(1.0, phases[i]) / (gammas[i] * gammas[i]);
            e.P = Qinv.each_row() % d;
            e.b2 = Qinv * s.s_st;
            e.b1 = (s.s_rs * e.P).st();
            e.c = e.b1 % e.b2;
            e.a = s.s_rt + arma::as_scalar(s.s_rs * e.b2);
            return e;
        }
    }

    LinearizedProblem linearize(const LinkBlocks &s, const OptState &state, const LinkBlocks *virtual_rx)
    {
        if (state.phases.n_elem != s.size() || state.gammas.n_elem != s.size())
            throw ConfigError("state size does not match the RIS size");
        for (arma::uword k = 0; k < s.size(); ++k)
            if (state.gammas[k] == 0.0)
                throw NumericalError("linearization needs non-zero reflection coefficients");

        Expansion e = expand(s, state.phases, state.gammas);
        LinearizedProblem lp;
        lp.a = e.a;
        lp.b1 = std::move(e.b1);
        lp.b2 = std::move(e.b2);
        lp.c = std::move(e.c);
        lp.Q = std::move(e.Q);
        lp.P = std::move(e.P);
        lp.D = arma::sum(arma::square(arma::abs(lp.P)), 1);
        lp.p_norm = arma::norm(lp.P, "fro");
        if (virtual_rx)
        {
            if (virtual_rx->size() != s.size())
                throw ConfigError("virtual receiver network has a different RIS size");
            Expansion v = expand(*virtual_rx, state.phases, state.gammas);
            lp.has_specular = true;
            lp.a_s = v.a;
            lp.c_s = std::move(v.c);
        }
        return lp;
    }

    LinearizedProblem linearize(const PartitionedNetworkMatrix &s, const OptState &state,
                                const PartitionedNetworkMatrix *virtual_rx)
    {
        const LinkBlocks b = LinkBlocks::from(s);
        if (!virtual_rx)
            return linearize(b, state, nullptr);
        const LinkBlocks v = LinkBlocks::from(*virtual_rx);
        return linearize(b, state, &v);
    }

    arma::vec s_uni_step(const LinearizedProblem &problem, const AlgoParams &params)
    {
        const double d0 = problem.p_norm > 0.0 ? params.step_budget / problem.p_norm : 0.0;
        arma::vec delta(problem.c.n_elem);
        for (arma::uword k = 0; k < delta.n_elem; ++k)
            delta[k] = std::real(problem.a * std::conj(problem.c[k])) >= 0.0 ? d0 : -d0;
        return delta;
    }

    cx w_opt(cx h, double signal_power, double noise_power)
    {
        return signal_power * std::conj(h) / (signal_power * std::norm(h) + noise_power);
    }

    double mse(cx w, cx h, double signal_power, double noise_power)
    {
        return signal_power * std::norm(1.0 - w * h) + noise_power * std::norm(w);
    }

    // --------------------------------------------------------------------------------------------

    namespace
    {
        // Minimizes x^T M x - 2 r^T x subject to x^T D x = eps^2 where M = V W V^T and r = V beta.
        // With z = (mu I + W G)^-1 beta and G = V^T D^-1 V, the stationary point is x = D^-1 V z,
        // so every evaluation of the multiplier costs O(m^3) with m <= 4.
        struct LowRankSolve
        {
            arma::mat V;
            arma::vec W, beta, Dinv;
            arma::mat G;
            double eps2;

            arma::vec z(double mu) const
            {
                arma::mat A = arma::diagmat(W) * G;
                A.diag() += mu;
                return arma::solve(A, beta, arma::solve_opts::fast);
            }
            double g(double mu) const
            {
                const arma::vec zz = z(mu);
                return arma::dot(zz, G * zz) - eps2;
            }
        };

        arma::vec solve_increment(const LinearizedProblem &lp, const AlgoParams &p, cx w, double eps,
                                  double &mu_out, bool &interior)
        {
            const arma::uword K = lp.c.n_elem;
            const double sig = p.signal_power, w2 = std::norm(w);
            const bool spec = lp.has_specular && p.omega > 0.0;
            const arma::uword m = spec ? 4 : 2;

            LowRankSolve ls;
            ls.eps2 = eps * eps;
            ls.V.set_size(K, m);
            ls.V.col(0) = arma::real(lp.c);
            ls.V.col(1) = arma::imag(lp.c);
            ls.W = {sig * w2, sig * w2};
            // r_k = sig Re(w c_k) - sig |w|^2 Re(a^* c_k) - omega Re(a_s^* c_sk)
            ls.beta = {sig * (w.real() - w2 * lp.a.real()), -sig * (w.imag() + w2 * lp.a.imag())};
            if (spec)
            {
                ls.V.col(2) = arma::real(lp.c_s);
                ls.V.col(3) = arma::imag(lp.c_s);
                ls.W = {sig * w2, sig * w2, p.omega, p.omega};
                ls.beta = {ls.beta[0], ls.beta[1], -p.omega * lp.a_s.real(), -p.omega * lp.a_s.imag()};
            }
            for (arma::uword k = 0; k < K; ++k)
                if (!(lp.D[k] > 0.0))
                    throw NumericalError("step weights D must be positive");
            ls.Dinv = 1.0 / lp.D;
            ls.G = ls.V.t() * (ls.V.each_col() % ls.Dinv);

            interior = false;
            mu_out = 0.0;
            const arma::vec r = ls.V * ls.beta;
            if (arma::norm(r) == 0.0 || eps == 0.0)
                return arma::zeros<arma::vec>(K);

            // Bracket the multiplier: g is strictly decreasing in mu > 0
            const double wg = arma::norm(arma::diagmat(ls.W) * ls.G, "fro");
            double mu_hi = wg > 0.0 ? wg : std::sqrt(std::max(arma::dot(ls.beta, ls.G * ls.beta), 1e-300)) / eps;
            int guard = 0;
            while (ls.g(mu_hi) > 0.0)
            {
                mu_hi *= 2.0;
                if (++guard > 2000 || !std::isfinite(mu_hi))
                    throw NumericalError("Lagrange multiplier bracket could not be found");
            }
            double mu_lo = mu_hi;
            guard = 0;
            while (ls.g(mu_lo) < 0.0)
            {
                mu_lo *= 0.5;
                if (++guard > 200)
                {
                    // The budget is not binding: return the minimum-norm unconstrained minimizer
                    interior = true;
                    const arma::vec zz = ls.z(mu_lo);
                    return ls.Dinv % (ls.V * zz);
                }
            }

            double mu = mu_hi, best_res = std::abs(ls.g(mu_hi));
            if (std::abs(ls.g(mu_lo)) < best_res)
            {
                mu = mu_lo;
                best_res = std::abs(ls.g(mu_lo));
            }
            for (int it = 0; it < 200 && best_res > 1e-10 * ls.eps2; ++it)
            {
                const double mid = std::sqrt(mu_lo * mu_hi);
                if (!(mid > mu_lo && mid < mu_hi))
                    break;
                const double gm = ls.g(mid);
                if (std::abs(gm) < best_res)
                {
                    best_res = std::abs(gm);
                    mu = mid;
                }
                (gm > 0.0 ? mu_lo : mu_hi) = mid;
            }
            mu_out = mu;
            return ls.Dinv % (ls.V * ls.z(mu));
        }
    }

    InnerResult s_opt_inner(const LinearizedProblem &problem, const AlgoParams &params, const arma::vec &x_init)
    {
        const arma::uword K = problem.c.n_elem;
        if (x_init.n_elem != K)
            throw ConfigError("initial increment has the wrong size");
        const double eps = params.step_budget;
        InnerResult res;
        res.x = x_init;
        for (int l = 0; l < 100; ++l)
        {
            const cx h = problem.a + arma::dot(problem.c, arma::conv_to<arma::cx_vec>::from(res.x));
            res.w = w_opt(h, params.signal_power, params.noise_power);
            arma::vec x_new = solve_increment(problem, params, res.w, eps, res.mu, res.interior);
            const double change = arma::norm(x_new - res.x);
            res.x = std::move(x_new);
            res.iterations = l + 1;
            if (change < 1e-8 * eps)
                break;
        }
        return res;
    }

    // --------------------------------------------------------------------------------------------

    namespace
    {
        struct Score
        {
            double power = 0.0, specular = 0.0, objective = 0.0;
            double score = 0.0; // Larger is better
        };

        using Evaluate = std::function<Score(const arma::vec &phases)>;
        using Step = std::function<arma::vec(double budget)>;
        using Propose = std::function<Step(const OptState &)>;

        // Shared outer loop: propose, project, accept only non-worsening steps (halving the budget
        // otherwise), stop when ||Delta Gamma|| <= eta or the budget is exhausted.
        OptState iterate(const OptState &init, const AlgoParams &p, double eps, const Evaluate &eval,
                         const Propose &propose)
        {
            OptState st;
            st.phases = project_feasible(init.phases, p.feasible);
            st.gammas = gamma_from_phase(st.phases, eps);
            st.phase_history.push_back(st.phases);
            Score cur = eval(st.phases);
            st.trace.push_back({0, cur.power, cur.specular, cur.objective, 0.0});

            double budget = p.step_budget;
            while (st.iteration < p.max_iterations)
            {
                const Step step = propose(st);
                bool accepted = false;
                arma::vec next;
                Score ns;
                for (int b = 0; b <= p.max_backtracks; ++b)
                {
                    next = project_feasible(step(budget), p.feasible);
                    ns = eval(next);
                    if (ns.score >= cur.score)
                    {
                        accepted = true;
                        break;
                    }
                    budget *= 0.5;
                }
                if (!accepted)
                {
                    st.converged = true;
                    break;
                }
                const arma::cx_vec g = gamma_from_phase(next, eps);
                st.delta_norm = arma::norm(g - st.gammas);
                st.phases = std::move(next);
                st.gammas = g;
                cur = ns;
                ++st.iteration;
                st.trace.push_back({st.iteration, cur.power, cur.specular, cur.objective, st.delta_norm});
                st.phase_history.push_back(st.phases);
                if (st.delta_norm <= p.stop_threshold)
                {
                    st.converged = true;
                    break;
                }
            }
            return st;
        }

        void check_init(const OptState &init, arma::uword k)
        {
            if (init.phases.n_elem != k)
                throw ConfigError("initial phase vector length " + std::to_string(init.phases.n_elem) +
                                  " does not match K = " + std::to_string(k));
        }

        OptState s_opt_core(const PartitionedNetworkMatrix &s, const PartitionedNetworkMatrix *s_virtual,
                            const AlgoParams &params, const OptState &init)
        {
            params.validate();
            const LinkBlocks b = LinkBlocks::from(s);
            std::optional<LinkBlocks> v;
            if (s_virtual)
                v = LinkBlocks::from(*s_virtual);
            check_init(init, b.size());
            const double eps = params.r0 / s.reference_impedance();
            const double sig = params.signal_power, noise = params.noise_power, omega = params.omega;

            Evaluate eval = [&](const arma::vec &phi)
            {
                const arma::cx_vec g = gamma_from_phase(phi, eps);
                Score sc;
                const cx h = b.channel(g);
                sc.power = std::norm(h);
                sc.specular = v ? std::norm(v->channel(g)) : 0.0;
                sc.objective = sig * noise / (sig * sc.power + noise) + omega * sc.specular;
                sc.score = -sc.objective;
                return sc;
            };
            Propose propose = [&](const OptState &st) -> Step
            {
                auto lp = std::make_shared<LinearizedProblem>(linearize(b, st, v ? &*v : nullptr));
                const arma::vec phi = st.phases;
                return [lp, phi, params](double budget)
                {
                    AlgoParams q = params;
                    q.step_budget = budget;
                    const InnerResult r = s_opt_inner(*lp, q, arma::zeros<arma::vec>(phi.n_elem));
                    return arma::vec(phi + r.x);
                };
            };
            return iterate(init, params, eps, eval, propose);
        }
    }

    OptState s_uni_run(const PartitionedNetworkMatrix &s, const AlgoParams &params, const OptState &init)
    {
        params.validate();
        const LinkBlocks b = LinkBlocks::from(s);
        check_init(init, b.size());
        const double eps = params.r0 / s.reference_impedance();

        Evaluate eval = [&](const arma::vec &phi)
        {
            Score sc;
            sc.power = std::norm(b.channel(gamma_from_phase(phi, eps)));
            sc.objective = sc.score = sc.power;
            return sc;
        };
        Propose propose = [&](const OptState &st) -> Step
        {
            auto lp = std::make_shared<LinearizedProblem>(linearize(b, st, nullptr));
            const arma::vec phi = st.phases;
            return [lp, phi, params](double budget)
            {
                AlgoParams q = params;
                q.step_budget = budget;
                return arma::vec(phi + s_uni_step(*lp, q));
            };
        };
        return iterate(init, params, eps, eval, propose);
    }

    OptState s_opt_run(const PartitionedNetworkMatrix &s, const AlgoParams &params, const OptState &init)
    {
        return s_opt_core(s, nullptr, params, init);
    }

    OptState s_opt_omega_run(const PartitionedNetworkMatrix &s, const PartitionedNetworkMatrix &s_virtual,
                             const AlgoParams &params, const OptState &init)
    {
        return s_opt_core(s, &s_virtual, params, init);
    }

    OptState z_ref_run(const PartitionedNetworkMatrix &z, const AlgoParams &params, const OptState &init)
    {
        using enum Block;
        params.validate();
        if (z.kind() != MatrixKind::Z)
            throw ConfigError("z_ref_run expects an impedance matrix");
        const LinkBlocks sb = LinkBlocks::from(z_to_s(z));
        check_init(init, sb.size());
        const double z0 = z.reference_impedance(), r0 = params.r0, eps = r0 / z0;
        const arma::cx_rowvec Z_RS = z.block(R, S);
        const arma::cx_vec Z_ST = z.block(S, T);
        const arma::cx_mat Z_SS = z.block(S, S);
        const cx Z_RT = z.block(R, T)(0, 0);
        const cx scale = z0 / ((z0 + z.block(R, R)(0, 0)) * (z0 + z.block(T, T)(0, 0)));

        auto xt_of = [](double phi)
        {
            const double s = std::sin(0.5 * phi);
            return std::abs(s) < 1e-12 ? 1e12 : std::cos(0.5 * phi) / s;
        };
        auto matrix_a = [&](const arma::vec &xt)
        {
            arma::cx_mat A = Z_SS;
            for (arma::uword k = 0; k < xt.n_elem; ++k)
                A(k, k) += cx(r0, z0 * xt[k]);
            return A;
        };
        auto h_approx = [&](const arma::cx_mat &A)
        {
            return scale * (Z_RT - arma::as_scalar(Z_RS * checked_solve(A, arma::cx_mat(Z_ST), "Z_S + Z_SS")));
        };

        Evaluate eval = [&](const arma::vec &phi)
        {
            arma::vec xt(phi.n_elem);
            for (arma::uword k = 0; k < phi.n_elem; ++k)
                xt[k] = xt_of(phi[k]);
            Score sc;
            sc.power = std::norm(sb.channel(gamma_from_phase(phi, eps)));
            sc.objective = sc.score = 4.0 * std::norm(h_approx(matrix_a(xt)));
            return sc;
        };
        Propose propose = [&](const OptState &st) -> Step
        {
            const arma::uword K = st.phases.n_elem;
            arma::vec xt(K);
            for (arma::uword k = 0; k < K; ++k)
                xt[k] = xt_of(st.phases[k]);
            const arma::cx_mat A = matrix_a(xt);
            const arma::cx_mat Ainv = checked_inv(A, "Z_S + Z_SS");
            const arma::cx_rowvec u = Z_RS * Ainv;
            const arma::cx_vec v = Ainv * Z_ST;
            const cx a = scale * (Z_RT - arma::as_scalar(u * Z_ST));
            arma::vec sign(K);
            for (arma::uword k = 0; k < K; ++k)
            {
                const cx c = scale * cx(0.0, z0) * u[k] * v[k];
                sign[k] = std::real(a * std::conj(c)) >= 0.0 ? 1.0 : -1.0;
            }
            const double a_norm = z0 * arma::norm(Ainv, "fro");
            return [xt, sign, a_norm](double budget)
            {
                const arma::vec xn = xt + sign * (budget / a_norm);
                arma::vec phi(xn.n_elem);
                for (arma::uword k = 0; k < xn.n_elem; ++k)
                    phi[k] = 2.0 * std::atan(1.0 / xn[k]);
                return phi;
            };
        };
        return iterate(init, params, eps, eval, propose);
    }

    OptState s_diag_run(const PartitionedNetworkMatrix &s, const AlgoParams &params)
    {
        params.validate();
        const LinkBlocks b = LinkBlocks::from(s);
        const arma::uword K = b.size();
        const double eps = params.r0 / s.reference_impedance();

        // For |Gamma| = 1 the uncoupled contribution Gamma / (1 - s Gamma) runs over a circle with
        // center conj(s) / (1 - |s|^2) and radius 1 / (1 - |s|^2); pick the point that adds
        // best to the common reference phase.
        arma::cx_vec gk = b.s_rs.st() % b.s_st;
        arma::cx_vec sk = b.s_ss.diag();
        auto term = [&](arma::uword k, double phi)
        {
            const cx z = std::polar(1.0, phi);
            return z / (1.0 - sk[k] * z);
        };

        double ref = std::abs(b.s_rt) > 0.0 ? std::arg(b.s_rt) : (K > 0 ? std::arg(gk[0]) : 0.0);
        arma::vec phi(K, arma::fill::zeros);
        for (int pass = 0; pass < 20 && K > 0; ++pass)
        {
            const cx rot = std::polar(1.0, -ref);
            cx total = b.s_rt;
            for (arma::uword k = 0; k < K; ++k)
            {
                const cx A = rot * gk[k];
                const double m = 1.0 - std::norm(sk[k]);
                if (std::abs(A) == 0.0 || !(m > 0.0))
                {
                    phi[k] = 0.0;
                    continue;
                }
                const cx w = std::conj(sk[k]) / m + (1.0 / m) * std::conj(A) / std::abs(A);
                phi[k] = std::arg(w / (1.0 + sk[k] * w));

                if (params.feasible.kind == FeasibleSet::Kind::discrete)
                {
                    double best = -INFINITY;
                    for (double p : params.feasible.points)
                    {
                        const double val = std::real(A * term(k, p));
                        if (val > best)
                        {
                            best = val;
                            phi[k] = p;
                        }
                    }
                }
                else
                    phi[k] = project_feasible(phi[k], params.feasible);
                total += gk[k] * term(k, phi[k]);
            }
            if (std::abs(total) == 0.0)
                break;
            const double next = std::arg(total);
            if (std::abs(wrap_phase(next - ref)) < 1e-14)
                break;
            ref = next;
        }

        OptState st = OptState::from_phases(phi, eps);
        st.iteration = 1;
        st.converged = true;
        const double p = std::norm(b.channel(st.gammas));
        st.phase_history.push_back(phi);
        st.trace.push_back({1, p, 0.0, p, 0.0});
        return st;
    }

    // --------------------------------------------------------------------------------------------

    namespace
    {
        std::vector<double> oracle_grid(double step_deg, const FeasibleSet &set)
        {
            if (!(step_deg > 0.0))
                throw ConfigError("oracle phase step must be positive");
            std::vector<double> g;
            switch (set.kind)
            {
            case FeasibleSet::Kind::full_circle:
            {
                const auto n = std::max<long>(1, std::lround(360.0 / step_deg));
                for (long i = 0; i < n; ++i)
                    g.push_back(wrap_phase(deg2rad(-180.0 + 360.0 * double(i) / double(n))));
                break;
            }
            case FeasibleSet::Kind::interval:
            {
                const double step = deg2rad(step_deg);
                const auto n = std::lround(std::floor((set.hi - set.lo) / step + 1e-9));
                for (long i = 0; i <= n; ++i)
                    g.push_back(set.lo + double(i) * step);
                if (set.hi - g.back() > 1e-9)
                    g.push_back(set.hi);
                break;
            }
            case FeasibleSet::Kind::discrete:
                g = set.points;
                break;
            }
            return g;
        }

        OracleResult oracle_impl(const PartitionedNetworkMatrix &s, double step_deg, const AlgoParams &params,
                                 bool parallel)
        {
            params.validate();
            const LinkBlocks b = LinkBlocks::from(s);
            const arma::uword K = b.size();
            if (K > 4)
                throw GuardError("brute-force oracle refuses K = " + std::to_string(K) + " (limit 4)");
            const std::vector<double> grid = oracle_grid(step_deg, params.feasible);
            const std::size_t n = grid.size();
            double total = 1.0;
            for (arma::uword k = 0; k < K; ++k)
                total *= double(n);
            if (total > 1e8)
                throw GuardError("brute-force oracle grid of " + std::to_string(total) + " points exceeds 1e8");
            const long count = long(total);
            const double eps = params.r0 / s.reference_impedance();

            std::vector<cx> gam(n);
            for (std::size_t i = 0; i < n; ++i)
                gam[i] = gamma_from_phase(grid[i], eps);

            auto decode = [&](long idx, arma::cx_vec &g, arma::vec *phi)
            {
                for (arma::uword k = 0; k < K; ++k)
                {
                    const std::size_t d = std::size_t(idx % long(n));
                    idx /= long(n);
                    g[k] = gam[d];
                    if (phi)
                        (*phi)[k] = grid[d];
                }
            };

            double best = -1.0;
            long best_idx = 0;
            if (parallel)
            {
#pragma omp parallel
                {
                    arma::cx_vec g(K);
                    double lb = -1.0;
                    long li = 0;
#pragma omp for schedule(static)
                    for (long idx = 0; idx < count; ++idx)
                    {
                        decode(idx, g, nullptr);
                        const double p = std::norm(b.channel(g));
                        if (p > lb)
                        {
                            lb = p;
                            li = idx;
                        }
                    }
#pragma omp critical
                    {
                        if (lb > best || (lb == best && li < best_idx))
                        {
                            best = lb;
                            best_idx = li;
                        }
                    }
                }
            }
            else
            {
                arma::cx_vec g(K);
                for (long idx = 0; idx < count; ++idx)
                {
                    decode(idx, g, nullptr);
                    const double p = std::norm(b.channel(g));
                    if (p > best)
                    {
                        best = p;
                        best_idx = idx;
                    }
                }
            }

            OracleResult r;
            r.phases.set_size(K);
            arma::cx_vec g(K);
            decode(best_idx, g, &r.phases);
            r.power = best;
            r.evaluations = std::size_t(count);
            return r;
        }
    }

    OracleResult brute_force_oracle(const PartitionedNetworkMatrix &s, double phase_step_deg, const AlgoParams &params)
    {
        return oracle_impl(s, phase_step_deg, params, true);
    }

    OracleResult brute_force_oracle_serial(const PartitionedNetworkMatrix &s, double phase_step_deg,
                                           const AlgoParams &params)
    {
        return oracle_impl(s, phase_step_deg, params, false);
    }

    int iterations_to_within(const OptState &state, double tol_db)
    {
        if (state.trace.empty())
            return 0;
        const double target = 10.0 * std::log10(state.trace.back().power) - tol_db;
        for (const auto &t : state.trace)
            if (10.0 * std::log10(t.power) >= target)
                return t.iteration;
        return state.trace.back().iteration;
    }
}
