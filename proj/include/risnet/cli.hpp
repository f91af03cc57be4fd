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

#ifndef RISNET_CLI_HPP
#define RISNET_CLI_HPP

#include "risnet/config.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace risnet
{
    // T, S, R network ready for the optimizers, with the cluster (if any) reduced out
    struct RunNetwork
    {
        PartitionedNetworkMatrix z;
        PartitionedNetworkMatrix s;
        std::optional<PartitionedNetworkMatrix> s_virtual; // Specular receiver, for s-opt-omega
    };

    PartitionedNetworkMatrix reduce_objects(const PartitionedNetworkMatrix &m, cx object_load);
    RunNetwork scene_network(const RunConfig &rc, bool with_virtual);

    OptState initial_state(const RunNetwork &net, const RunConfig &rc);
    OptState run_algorithm(const std::string &name, const RunNetwork &net, const RunConfig &rc, const OptState &init);

    // Output files are staged in memory and written only once everything succeeded
    class OutputSet
    {
    public:
        void add(std::string relative_path, std::string content);
        void commit(const std::string &directory) const;
        const std::vector<std::pair<std::string, std::string>> &files() const { return files_; }

    private:
        std::vector<std::pair<std::string, std::string>> files_;
    };

    // Runs fn(i) for i in [0, n) on `jobs` threads. Exceptions are rethrown in index order.
    void run_pool(std::size_t n, int jobs, const std::function<void(std::size_t)> &fn);

    // Entry point of the risnet-cli tool; returns the process exit code
    int run_cli(int argc, char **argv, std::ostream &out, std::ostream &err);
}

#endif
