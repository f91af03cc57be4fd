// SPDX-License-Identifier: Apache-2.0
//
// risnet: multiport network modelling and load optimization for RIS-aided links
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

#ifndef RISNET_COMMON_HPP
#define RISNET_COMMON_HPP

#include <armadillo>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace risnet
{
    using cx = std::complex<double>;

    inline constexpr double pi = std::numbers::pi;
    inline constexpr double speed_of_light = 299792458.0;         // [m/s]
    inline constexpr double free_space_impedance = 376.730313668; // [ohm], mu0 * c

    inline double wavelength(double frequency) { return speed_of_light / frequency; }
    inline double deg2rad(double deg) { return deg * pi / 180.0; }
    inline double rad2deg(double rad) { return rad * 180.0 / pi; }

    // Error hierarchy. Each class maps to one CLI exit code.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
        virtual int exit_code() const { return 1; }
    };

    // Invalid geometry: overlapping wires, collisions, bad grid spacing
    class GeometryError : public Error
    {
    public:
        using Error::Error;
        int exit_code() const override { return 2; }
    };

    // Malformed configuration, matrix or loads file, or shape mismatch
    class ConfigError : public Error
    {
    public:
        using Error::Error;
        int exit_code() const override { return 2; }
    };

    // Singular or ill-conditioned systems, bracket failures
    class NumericalError : public Error
    {
    public:
        NumericalError(const std::string &what, double condition = 0.0)
            : Error(condition > 0.0 ? what + " (condition number ~ " + std::to_string(condition) + ")" : what),
              condition_(condition) {}
        int exit_code() const override { return 3; }
        double condition() const { return condition_; }

    private:
        double condition_;
    };

    // Requests refused by a guard (e.g. exhaustive search too large)
    class GuardError : public Error
    {
    public:
        using Error::Error;
        int exit_code() const override { return 4; }
    };

    // Systems whose reciprocal condition number drops below this are rejected.
    inline constexpr double min_rcond = 1e-12;

    // Solves A X = B with LU and partial pivoting. Throws NumericalError naming
    // `what` when A is singular or its condition number exceeds 1/min_rcond.
    arma::cx_mat checked_solve(const arma::cx_mat &A, const arma::cx_mat &B, const char *what);

    // Explicit inverse with the same conditioning contract as checked_solve.
    arma::cx_mat checked_inv(const arma::cx_mat &A, const char *what);

    // Relative Frobenius distance ||A - B|| / ||B||; returns ||A|| when B is zero.
    double rel_diff(const arma::cx_mat &A, const arma::cx_mat &B);
}

#endif
