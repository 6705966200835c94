#pragma once

// Probe parameters and the propagation coefficients derived from them.
//
// All detunings are normalized: d2 = delta_p/Gamma, d4 = d2 - delta0,
// d_B = delta_B/gamma. Saturations are S = |Omega|^2/(gamma Gamma).

namespace nmore {

struct ProbeSpec {
    double s0 = 5.0;                 // total initial two-photon saturation
    double d2 = -5.0;                // probe detuning from |2>
    double delta0 = 2.0;             // excited-state splitting
    double kappa_ratio = 2.0;        // kappa4/kappa2 = d42^2
    double kappa2_over_gamma = 1.0;  // linear absorption scale, 1/length
    bool include_beta0 = false;      // light-shift terms in beta_+-
    bool four_state = true;          // false: three-state system

    // Throws ValidationError when any invariant is violated.
    void validate() const;

    // |4> participates only in the four-state model with non-zero coupling.
    [[nodiscard]] bool couples_state4() const { return four_state && kappa_ratio > 0.0; }
};

struct Coefficients {
    double d2 = 0.0;
    double d4 = 0.0;
    double alpha2 = 0.0;
    double alpha4 = 0.0;
    double alpha = 0.0;    // alpha2 + alpha4
    double alpha_d = 0.0;  // d2 alpha2 + d4 alpha4
    double gamma0 = 0.0;   // power-broadening weight
    double beta0 = 0.0;    // light-shift weight
};

// Absorptive and dispersive lineshape factors of a single excited state.
[[nodiscard]] double absorption_factor(double detuning);
[[nodiscard]] double dispersion_factor(double detuning);

[[nodiscard]] Coefficients derive_coefficients(const ProbeSpec& spec);

// Everything the intensity/phase equations need at one depth.
struct LocalRates {
    double beta_plus = 0.0;
    double beta_minus = 0.0;
    double gamma_plus = 0.0;
    double gamma_minus = 0.0;
    double g_plus = 0.0;   // gamma_+^2 + beta_+^2
    double g_minus = 0.0;
    double a_cal = 0.0;
    double b_cal = 0.0;
    double p_plus = 0.0;   // alpha A - alpha_d B
    double p_minus = 0.0;  // alpha A + alpha_d B
    double q_plus = 0.0;   // -alpha B + alpha_d A
    double q_minus = 0.0;  //  alpha B + alpha_d A
};

[[nodiscard]] LocalRates local_rates(const Coefficients& c, double s_plus, double s_minus, double d_b,
                                     bool include_beta0);

}  // namespace nmore
