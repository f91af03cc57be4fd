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

#include "risnet/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace risnet
{
    std::string format_double(double v)
    {
        if (std::isinf(v))
            return v > 0.0 ? "inf" : "-inf";
        char buf[64];
        const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
        return std::string(buf, r.ptr);
    }

    double parse_double(std::string_view t, const std::string &context)
    {
        while (!t.empty() && (t.front() == ' ' || t.front() == '\t'))
            t.remove_prefix(1);
        while (!t.empty() && (t.back() == ' ' || t.back() == '\t' || t.back() == '\r'))
            t.remove_suffix(1);
        if (t == "inf" || t == "+inf")
            return INFINITY;
        if (t == "-inf")
            return -INFINITY;
        if (!t.empty() && t.front() == '+')
            t.remove_prefix(1);
        double v = 0.0;
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty())
            throw ConfigError(context + ": cannot parse number '" + std::string(t) + "'");
        return v;
    }

    namespace
    {
        std::vector<std::string_view> split(std::string_view s, char sep)
        {
            std::vector<std::string_view> out;
            std::size_t start = 0;
            while (true)
            {
                const std::size_t p = s.find(sep, start);
                out.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
                if (p == std::string_view::npos)
                    break;
                start = p + 1;
            }
            return out;
        }

        std::ofstream open_out(const std::string &path)
        {
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw ConfigError("cannot open '" + path + "' for writing");
            return f;
        }
    }

    void write_matrix(std::ostream &os, const PartitionedNetworkMatrix &m, const std::string &extra_tokens)
    {
        const Partition &p = m.partition();
        os << "# kind=" << (m.kind() == MatrixKind::Z ? "Z" : "S") << " z0=" << format_double(m.reference_impedance())
           << " partition=" << p.n_t << ',' << p.k << ',' << p.n_r;
        if (p.n_o > 0)
            os << ',' << p.n_o;
        if (!extra_tokens.empty())
            os << ' ' << extra_tokens;
        os << '\n';
        const arma::cx_mat &d = m.data();
        for (arma::uword i = 0; i < d.n_rows; ++i)
        {
            for (arma::uword j = 0; j < d.n_cols; ++j)
            {
                if (j > 0)
                    os << ',';
                os << format_double(d(i, j).real()) << ':' << format_double(d(i, j).imag());
            }
            os << '\n';
        }
    }

    void write_matrix(const std::string &path, const PartitionedNetworkMatrix &m, const std::string &extra_tokens)
    {
        auto f = open_out(path);
        write_matrix(f, m, extra_tokens);
        if (!f)
            throw ConfigError("failed writing '" + path + "'");
    }

    PartitionedNetworkMatrix read_matrix(std::istream &is, const std::string &origin)
    {
        std::string line;
        if (!std::getline(is, line) || line.rfind("#", 0) != 0)
            throw ConfigError(origin + ": missing '# kind=...' header line");

        std::istringstream hs(line.substr(1));
        std::string tok;
        bool have_kind = false, have_part = false, have_z0 = false;
        MatrixKind kind = MatrixKind::Z;
        double z0 = 50.0;
        Partition part;
        while (hs >> tok)
        {
            const auto eq = tok.find('=');
            if (eq == std::string::npos)
                continue;
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "kind")
            {
                if (val != "Z" && val != "S")
                    throw ConfigError(origin + ": kind must be Z or S");
                kind = val == "Z" ? MatrixKind::Z : MatrixKind::S;
                have_kind = true;
            }
            else if (key == "z0")
            {
                z0 = parse_double(val, origin + ": z0");
                have_z0 = true;
            }
            else if (key == "partition")
            {
                const auto parts = split(val, ',');
                if (parts.size() < 3 || parts.size() > 4)
                    throw ConfigError(origin + ": partition needs 3 or 4 counts");
                arma::uword c[4] = {0, 0, 0, 0};
                for (std::size_t i = 0; i < parts.size(); ++i)
                {
                    const double v = parse_double(parts[i], origin + ": partition");
                    if (v < 0.0 || v != std::floor(v))
                        throw ConfigError(origin + ": partition counts must be non-negative integers");
                    c[i] = arma::uword(v);
                }
                part = {c[0], c[1], c[2], c[3]};
                have_part = true;
            }
        }
        if (!have_kind || !have_part || !have_z0)
            throw ConfigError(origin + ": header needs kind=, z0= and partition=");

        const arma::uword n = part.size();
        arma::cx_mat d(n, n);
        for (arma::uword i = 0; i < n; ++i)
        {
            if (!std::getline(is, line))
                throw ConfigError(origin + ": expected " + std::to_string(n) + " rows, found " + std::to_string(i));
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            const auto cells = split(line, ',');
            if (cells.size() != n)
                throw ConfigError(origin + ": row " + std::to_string(i + 1) + " has " + std::to_string(cells.size()) +
                                  " entries, expected " + std::to_string(n));
            for (arma::uword j = 0; j < n; ++j)
            {
                const auto c = cells[j].find(':');
                if (c == std::string_view::npos)
                    throw ConfigError(origin + ": entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                      ") is not re:im");
                const std::string ctx = origin + ": row " + std::to_string(i + 1);
                d(i, j) = cx(parse_double(cells[j].substr(0, c), ctx), parse_double(cells[j].substr(c + 1), ctx));
            }
        }
        while (std::getline(is, line))
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(origin + ": trailing data after " + std::to_string(n) + " rows");
        return {kind, std::move(d), part, z0};
    }

    PartitionedNetworkMatrix read_matrix(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw ConfigError("cannot open matrix file '" + path + "'");
        return read_matrix(f, path);
    }

    void write_loads(const std::string &path, const arma::vec &phases, double r0, double z0, const std::string &extra_tokens)
    {
        const LoadConfig loads = LoadConfig::from_phases(phases, r0, z0);
        const arma::cx_vec g = gamma_from_phase(phases, r0 / z0);
        auto f = open_out(path);
        f << "# r0=" << format_double(r0) << " z0=" << format_double(z0);
        if (!extra_tokens.empty())
            f << ' ' << extra_tokens;
        f << "\nk,phase_deg,reactance_ohm,gamma_re,gamma_im\n";
        for (arma::uword k = 0; k < phases.n_elem; ++k)
            f << k << ',' << format_double(rad2deg(phases[k])) << ',' << format_double(loads.reactance[k]) << ','
              << format_double(g[k].real()) << ',' << format_double(g[k].imag()) << '\n';
        if (!f)
            throw ConfigError("failed writing '" + path + "'");
    }

    LoadsFile read_loads(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw ConfigError("cannot open loads file '" + path + "'");
        LoadsFile out;
        std::vector<double> phases;
        std::string line;
        bool header = false;
        int lineno = 0;
        while (std::getline(f, line))
        {
            ++lineno;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            if (line[0] == '#')
            {
                std::istringstream hs(line.substr(1));
                std::string tok;
                while (hs >> tok)
                {
                    if (tok.rfind("r0=", 0) == 0)
                        out.r0 = parse_double(tok.substr(3), path + ": r0");
                    else if (tok.rfind("z0=", 0) == 0)
                        out.z0 = parse_double(tok.substr(3), path + ": z0");
                }
                continue;
            }
            if (!header)
            {
                if (line.rfind("k,phase_deg", 0) != 0)
                    throw ConfigError(path + ": missing 'k,phase_deg,...' column header");
                header = true;
                continue;
            }
            const auto cells = split(line, ',');
            if (cells.size() < 2)
                throw ConfigError(path + ": line " + std::to_string(lineno) + " has too few columns");
            const double k = parse_double(cells[0], path + ": line " + std::to_string(lineno));
            if (k != double(phases.size()))
                throw ConfigError(path + ": line " + std::to_string(lineno) + " is out of order");
            phases.push_back(deg2rad(parse_double(cells[1], path + ": line " + std::to_string(lineno))));
        }
        if (!header)
            throw ConfigError(path + ": no loads table");
        if (phases.empty())
            throw ConfigError(path + ": loads table has no rows");
        out.phases = arma::vec(phases);
        return out;
    }
}
