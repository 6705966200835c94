#pragma once

// Independent verification machinery: adaptive quadrature and the
// steady-state elimination of the excited-state amplitudes.

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmore/errors.hpp"
#include "nmore/model.hpp"

namespace nmore::oracle {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

// Raised when subdivision runs out before the error target is met.
class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& what, QuadratureResult partial)
        : NumericalError(what), partial_(partial) {}
    [[nodiscard]] const QuadratureResult& partial() const { return partial_; }

private:
    QuadratureResult partial_;
};

constexpr double kAbsoluteToleranceFloor = 1e-14;

struct QuadratureOptions {
    double abs_tol = kAbsoluteToleranceFloor;
    std::size_t max_subdivisions = 2000;
};

// Globally adaptive Gauss-Kronrod (7/15). The error estimate is |K15 - G7|
// summed over intervals; converged when it is <= max(tol |value|, abs_tol).
[[nodiscard]] QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                                  double b, double tol, QuadratureOptions opts = {});

// Defining integrals of L+- evaluated by quadrature (independent of the
// closed form in analytic).
[[nodiscard]] double l_integrand(const Coefficients& c, double s0, double d_b, double eta, int sign);
[[nodiscard]] std::pair<QuadratureResult, QuadratureResult> l_pm_quadrature(const Coefficients& c,
                                                                             double s0, double d_b,
                                                                             double eta, double tol);

struct SteadyStateAmplitudes {
    std::complex<double> a2;
    std::complex<double> a4;
};

// Time derivatives of the excited amplitudes set to zero, Gamma-normalized
// units. omega_plus/omega_minus are Rabi frequencies over Gamma.
[[nodiscard]] SteadyStateAmplitudes steady_state(double d2, double delta0, double d42,
                                                 std::complex<double> omega_plus,
                                                 std::complex<double> omega_minus,
                                                 std::complex<double> a1, std::complex<double> a3);

struct LineshapeReport {
    double max_absorption_error = 0.0;  // per-state Re vs 1/(1+d^2)
    double max_dispersion_error = 0.0;  // per-state Im vs d/(1+d^2)
    double max_gamma0_error = 0.0;      // summed absorption vs Coefficients::gamma0
    double max_beta0_error = 0.0;       // summed dispersion vs Coefficients::beta0
    std::size_t points = 0;
};

[[nodiscard]] LineshapeReport lineshape_check(std::span<const double> d2_grid, double delta0 = 2.0,
                                              double d42 = 1.0);

struct Check {
    std::string name;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

[[nodiscard]] Check make_check(std::string name, double deviation, double tolerance);

struct Report {
    std::vector<Check> checks;
    [[nodiscard]] bool all_pass() const;
};

}  // namespace nmore::oracle
