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

#include "risnet/quadrature.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <vector>

namespace risnet
{
    namespace
    {
        // Kronrod abscissae on [0, 1]; odd indices are shared with the 7-point Gauss rule.
        constexpr std::array<double, 8> xk = {
            0.991455371120812639206854697526329,
            0.949107912342758524526189684047851,
            0.864864423359769072789712788640926,
            0.741531185599394439863864773280788,
            0.586087235467691130294144845693013,
            0.405845151377397166906606412076961,
            0.207784955007898467600689403773245,
            0.000000000000000000000000000000000};
        constexpr std::array<double, 8> wk = {
            0.022935322010529224963732008058970,
            0.063092092629978553290700663189204,
            0.104790010322250183839876322541518,
            0.140653259715525918745189590510238,
            0.169004726639267902826583426598550,
            0.190350578064785409913256402421014,
            0.204432940075298892414161999234649,
            0.209482141084727828012999174891714};
        constexpr std::array<double, 4> wg = {
            0.129484966168869693270611432679082,
            0.279705391489276667901467771423780,
            0.381830050505118944950369775488975,
            0.417959183673469387755102040816327};

        struct Panel
        {
            double a, b;
            cx value;
            double error;
            bool operator<(const Panel &o) const { return error < o.error; }
        };

        Panel gauss_kronrod(const std::function<cx(double)> &f, double a, double b)
        {
            const double c = 0.5 * (a + b), h = 0.5 * (b - a);
            const cx fc = f(c);
            cx kronrod = fc * wk[7];
            cx gauss = fc * wg[3];
            for (int i = 0; i < 7; ++i)
            {
                const double dx = h * xk[i];
                const cx sum = f(c - dx) + f(c + dx);
                kronrod += wk[i] * sum;
                if (i % 2 == 1)
                    gauss += wg[i / 2] * sum;
            }
            return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
        }
    }

    QuadratureResult integrate_adaptive(const std::function<cx(double)> &f,
                                        std::span<const double> breakpoints,
                                        double abs_tol,
                                        int max_intervals)
    {
        if (breakpoints.size() < 2)
            throw std::invalid_argument("integrate_adaptive: need at least two breakpoints");

        std::priority_queue<Panel> heap;
        cx total = 0.0;
        double err = 0.0;
        int count = 0;
        for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        {
            if (breakpoints[i + 1] <= breakpoints[i])
                continue;
            Panel p = gauss_kronrod(f, breakpoints[i], breakpoints[i + 1]);
            total += p.value;
            err += p.error;
            heap.push(p);
            ++count;
        }

        while (err > abs_tol && !heap.empty())
        {
            if (count >= max_intervals)
                throw NumericalError("adaptive quadrature did not reach tolerance " + std::to_string(abs_tol) +
                                     " (estimate " + std::to_string(err) + ")");
            Panel p = heap.top();
            heap.pop();
            const double mid = 0.5 * (p.a + p.b);
            Panel left = gauss_kronrod(f, p.a, mid);
            Panel right = gauss_kronrod(f, mid, p.b);
            total += left.value + right.value - p.value;
            err += left.error + right.error - p.error;
            heap.push(left);
            heap.push(right);
            count += 2;
        }

        // Re-sum from the panels so rounding from the running updates does not accumulate.
        cx resummed = 0.0;
        double err_sum = 0.0;
        std::vector<Panel> panels;
        panels.reserve(heap.size());
        while (!heap.empty())
        {
            panels.push_back(heap.top());
            heap.pop();
        }
        std::sort(panels.begin(), panels.end(), [](const Panel &x, const Panel &y) { return x.a < y.a; });
        for (const auto &p : panels)
        {
            resummed += p.value;
            err_sum += p.error;
        }
        return {resummed, err_sum, count};
    }
}
