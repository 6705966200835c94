#pragma once

// Closed-form approximate solution: saturations from the L+- integrals,
// the phase integrals (by quadrature, as the reference for the closed-form
// angle), the M-factor expression for the rotation angle and its
// weak-field simplification.

#include <complex>
#include <utility>

#include "nmore/model.hpp"
#include "nmore/oracle.hpp"

namespace nmore::analytic {

// 8/15 prefactor of the closed-form rotation angle.
inline constexpr double kAmplitudeNormalization = 8.0 / 15.0;

inline constexpr double kC0Min = 0.8;
inline constexpr double kC0Max = 1.3;

enum class BranchPolicy {
    principal,  // ln of the full product M1
    split,      // ln M1 as the sum of the logs of its two unimodular factors
};

struct AnalyticConfig {
    double c0 = 1.0;
    BranchPolicy branch = BranchPolicy::principal;
    bool apply_normalization = true;          // include the 8/15 factor
    bool neglect_power_broadening = false;    // Gamma0 S0/2 -> 0 inside M1..M4

    void validate() const;
};

// [atan(a/d) - atan(b/d)] / d for a, b > 0, continuous through d = 0.
[[nodiscard]] double atan_difference_over(double d, double a, double b);

struct LPair {
    double plus = 0.0;
    double minus = 0.0;
};

[[nodiscard]] LPair l_pm(const Coefficients& c, double s0, double d_b, double eta);

struct SPair {
    double plus = 0.0;
    double minus = 0.0;
};

// Logistic form, no overflow for large |S0 Gamma0 L|.
[[nodiscard]] SPair s_analytic(const Coefficients& c, double s0, double d_b, double eta);

struct ThetaQuadrature {
    oracle::QuadratureResult plus;
    oracle::QuadratureResult minus;
    [[nodiscard]] double rotation() const { return 0.5 * (minus.value - plus.value); }
};

// Phase integrals with S-+ taken from s_analytic. Throws
// oracle::QuadratureError on non-convergence.
[[nodiscard]] ThetaQuadrature theta_pm_quadrature(const Coefficients& c, double s0, double d_b, double eta,
                                                  double tol = 1e-11);

struct MFactors {
    std::complex<double> m1{1.0, 0.0};
    double m2 = 1.0;
    std::complex<double> m3{1.0, 0.0};
    double m4 = 1.0;
    // Logs kept separately so large alpha*eta never underflows m2.
    std::complex<double> log_m1{0.0, 0.0};
    double log_m2 = 0.0;
    double log_m4 = 0.0;
};

[[nodiscard]] MFactors m_factors(const Coefficients& c, double s0, double d_b, double eta,
                                 const AnalyticConfig& cfg = {});

struct Eq6Result {
    double value = 0.0;          // real part: the rotation angle
    double imag_residue = 0.0;   // |Im| of the complex expression
    bool near_branch_cut = false;  // ln M1 argument within 1e-9 of the negative real axis
    [[nodiscard]] bool branch_stable() const {
        return !near_branch_cut && imag_residue <= 1e-6 * std::abs(value) + 1e-12;
    }
};

[[nodiscard]] Eq6Result theta_eq6(const Coefficients& c, double s0, double d_b, double eta,
                                  const AnalyticConfig& cfg = {});

// Same, but throws NumericalError when the branch check fails.
[[nodiscard]] double theta_eq6_checked(const Coefficients& c, double s0, double d_b, double eta,
                                       const AnalyticConfig& cfg = {});

// Power broadening neglected, linear absorption kept.
[[nodiscard]] double theta_eq8(const Coefficients& c, double s0, double d_b, double eta);

}  // namespace nmore::analytic
