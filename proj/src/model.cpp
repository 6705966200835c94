#include "nmore/model.hpp"

#include <cmath>
#include <string>

#include "nmore/errors.hpp"

namespace nmore {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite");
}

}  // namespace

void ProbeSpec::validate() const {
    require_finite(s0, "s0");
    require_finite(d2, "d2");
    require_finite(delta0, "delta0");
    require_finite(kappa_ratio, "kappa_ratio");
    require_finite(kappa2_over_gamma, "kappa2_over_gamma");
    if (s0 <= 0.0) throw ValidationError("s0 must be > 0");
    if (kappa_ratio < 0.0) throw ValidationError("kappa_ratio must be >= 0");
    if (kappa2_over_gamma <= 0.0) throw ValidationError("kappa2_over_gamma must be > 0");
}

double absorption_factor(double detuning) { return 1.0 / (1.0 + detuning * detuning); }

double dispersion_factor(double detuning) { return detuning / (1.0 + detuning * detuning); }

Coefficients derive_coefficients(const ProbeSpec& spec) {
    spec.validate();
    Coefficients c;
    c.d2 = spec.d2;
    c.d4 = spec.d2 - spec.delta0;
    c.alpha2 = spec.kappa2_over_gamma * absorption_factor(c.d2);
    c.gamma0 = absorption_factor(c.d2);
    c.beta0 = dispersion_factor(c.d2);
    if (spec.couples_state4()) {
        c.alpha4 = spec.kappa_ratio * spec.kappa2_over_gamma * absorption_factor(c.d4);
        c.gamma0 += absorption_factor(c.d4);
        c.beta0 += dispersion_factor(c.d4);
    }
    c.alpha = c.alpha2 + c.alpha4;
    c.alpha_d = c.d2 * c.alpha2 + c.d4 * c.alpha4;
    return c;
}

LocalRates local_rates(const Coefficients& c, double s_plus, double s_minus, double d_b,
                       bool include_beta0) {
    if (!std::isfinite(s_plus) || !std::isfinite(s_minus) || !std::isfinite(d_b))
        throw ValidationError("local_rates: non-finite input");

    LocalRates r;
    const double shift = include_beta0 ? c.beta0 : 0.0;
    r.beta_plus = -d_b - shift * s_plus;
    r.beta_minus = -d_b + shift * s_minus;
    r.gamma_plus = 1.0 + c.gamma0 * s_plus;
    r.gamma_minus = 1.0 + c.gamma0 * s_minus;
    r.g_plus = r.gamma_plus * r.gamma_plus + r.beta_plus * r.beta_plus;
    r.g_minus = r.gamma_minus * r.gamma_minus + r.beta_minus * r.beta_minus;

    r.a_cal = c.gamma0 * (r.gamma_minus / r.g_minus + r.gamma_plus / r.g_plus);
    r.b_cal = c.gamma0 * (r.beta_minus / r.g_minus + r.beta_plus / r.g_plus);

    r.p_plus = c.alpha * r.a_cal - c.alpha_d * r.b_cal;
    r.p_minus = c.alpha * r.a_cal + c.alpha_d * r.b_cal;
    r.q_plus = -c.alpha * r.b_cal + c.alpha_d * r.a_cal;
    r.q_minus = c.alpha * r.b_cal + c.alpha_d * r.a_cal;
    return r;
}

}  // namespace nmore
