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

#ifndef RISNET_QUADRATURE_HPP
#define RISNET_QUADRATURE_HPP

#include "risnet/common.hpp"

#include <functional>
#include <span>

namespace risnet
{
    struct QuadratureResult
    {
        cx value;
        double error_estimate = 0.0;
        int intervals = 0; // Number of Gauss-Kronrod panels evaluated
    };

    // Globally adaptive 7/15-point Gauss-Kronrod quadrature of a complex integrand.
    // - The initial panels are bounded by `breakpoints` (sorted, including both ends)
    // - Panels are bisected, worst first, until the summed error estimate drops
    //   below `abs_tol` or `max_intervals` is reached
    // - Throws NumericalError if the tolerance is not met within the panel budget
    QuadratureResult integrate_adaptive(const std::function<cx(double)> &f,
                                        std::span<const double> breakpoints,
                                        double abs_tol,
                                        int max_intervals = 4000);
}

#endif
