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

#ifndef RISNET_MATRIX_IO_HPP
#define RISNET_MATRIX_IO_HPP

#include "risnet/network.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace risnet
{
    // Shortest round-tripping text with 17 significant digits, locale independent
    std::string format_double(double v);
    double parse_double(std::string_view text, const std::string &context);

    // Matrix file:
    //   # kind=Z|S z0=<ohm> partition=<N_T>,<K>,<N_R>[,<N_O>] [extra tokens]
    //   N rows of N entries "re:im" separated by commas
    void write_matrix(std::ostream &os, const PartitionedNetworkMatrix &m, const std::string &extra_tokens = "");
    void write_matrix(const std::string &path, const PartitionedNetworkMatrix &m, const std::string &extra_tokens = "");
    PartitionedNetworkMatrix read_matrix(std::istream &is, const std::string &origin = "<stream>");
    PartitionedNetworkMatrix read_matrix(const std::string &path);

    // Loads file: comment header with r0, z0 and provenance tokens, then
    // k,phase_deg,reactance_ohm,gamma_re,gamma_im. The phase column is authoritative on read.
    struct LoadsFile
    {
        arma::vec phases; // [rad]
        double r0 = 0.0;
        double z0 = 50.0;
    };

    void write_loads(const std::string &path, const arma::vec &phases, double r0, double z0,
                     const std::string &extra_tokens = "");
    LoadsFile read_loads(const std::string &path);
}

#endif
