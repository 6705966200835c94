#include "nmore/analytic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "nmore/errors.hpp"
#include "nmore/format.hpp"

namespace nmore::analytic {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

void check_eta(double eta) {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be finite and >= 0");
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Gamma0 S0 e^{-alpha eta} / 2 in the replacement S+- -> (S0/2) e^{-alpha eta}.
double broadening(const Coefficients& c, double s0, double eta) {
    return 0.5 * c.gamma0 * s0 * std::exp(-c.alpha * eta);
}

}  // namespace

void AnalyticConfig::validate() const {
    if (!std::isfinite(c0) || c0 < kC0Min || c0 > kC0Max)
        throw ValidationError("c0 = " + format_double(c0) + " outside sanity bounds [0.8, 1.3]");
}

double atan_difference_over(double d, double a, double b) {
    const double denom = d * d + a * b;
    const double x = d * (a - b) / denom;
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return (a - b) / denom * (1.0 - x2 * (1.0 / 3.0 - x2 * (1.0 / 5.0 - x2 / 7.0)));
    }
    return std::atan(x) / d;
}

LPair l_pm(const Coefficients& c, double s0, double d_b, double eta) {
    check_eta(eta);
    // Substituting u = e^{-alpha eta} splits the integrand into a 1/u pole,
    // a log-derivative of D(u) = d_B^2 + (1 + p u)^2 and an arctan term.
    const double p = 0.5 * c.gamma0 * s0;
    const double u = std::exp(-c.alpha * eta);
    const double db2 = d_b * d_b;
    const double d_top = db2 + (1.0 + p) * (1.0 + p);
    const double d_bottom = db2 + (1.0 + p * u) * (1.0 + p * u);
    const double log_ratio = std::log(d_top / d_bottom);
    const double arctan_term = atan_difference_over(d_b, 1.0 + p, 1.0 + p * u);
    const double scale = 2.0 * c.gamma0 / c.alpha;

    auto branch = [&](double sign) {
        const double k = (c.alpha - sign * c.alpha_d * d_b) / (1.0 + db2);
        return scale * (k * c.alpha * eta - 0.5 * k * log_ratio + (c.alpha - k) * arctan_term);
    };
    return {branch(+1.0), branch(-1.0)};
}

SPair s_analytic(const Coefficients& c, double s0, double d_b, double eta) {
    const LPair l = l_pm(c, s0, d_b, eta);
    const double absorb = std::exp(-c.alpha * eta);
    const double log_s0 = std::log(s0);
    return {logistic(log_s0 + s0 * c.gamma0 * l.plus) * absorb,
            logistic(log_s0 + s0 * c.gamma0 * l.minus) * absorb};
}

ThetaQuadrature theta_pm_quadrature(const Coefficients& c, double s0, double d_b, double eta, double tol) {
    check_eta(eta);
    auto integrand = [&](double x, double sign) {
        const double w = 1.0 + broadening(c, s0, x);
        const SPair s = s_analytic(c, s0, d_b, x);
        const double s_other = sign > 0.0 ? s.minus : s.plus;
        return c.gamma0 * s_other * (c.alpha_d * w + sign * c.alpha * d_b) / (d_b * d_b + w * w);
    };
    ThetaQuadrature out;
    out.plus = oracle::integrate_adaptive([&](double x) { return integrand(x, +1.0); }, 0.0, eta, tol);
    out.minus = oracle::integrate_adaptive([&](double x) { return integrand(x, -1.0); }, 0.0, eta, tol);
    return out;
}

MFactors m_factors(const Coefficients& c, double s0, double d_b, double eta, const AnalyticConfig& cfg) {
    check_eta(eta);
    const double p = cfg.neglect_power_broadening ? 0.0 : 0.5 * c.gamma0 * s0;
    const double u = std::exp(-c.alpha * eta);
    const double pu = p * u;
    const double db2 = d_b * d_b;
    const double base = 1.0 + db2;

    MFactors m;
    const cplx m1_entry = (base + (1.0 + kI * d_b) * p) / (base + (1.0 - kI * d_b) * p);
    const cplx m1_exit = (base + (1.0 - kI * d_b) * pu) / (base + (1.0 + kI * d_b) * pu);
    m.m1 = m1_entry * m1_exit;
    m.log_m1 = cfg.branch == BranchPolicy::split ? std::log(m1_entry) + std::log(m1_exit) : std::log(m.m1);

    const double d_top = db2 + (1.0 + p) * (1.0 + p);
    const double d_bottom = db2 + (1.0 + pu) * (1.0 + pu);
    m.log_m2 = std::log(d_top / d_bottom) - 2.0 * c.alpha * eta;
    m.m2 = std::exp(m.log_m2);

    m.m3 = ((d_b + kI * (1.0 + p)) * (d_b - kI * (1.0 + pu))) /
           ((d_b - kI * (1.0 + p)) * (d_b + kI * (1.0 + pu)));

    m.log_m4 = 2.0 * std::log(d_bottom / d_top);
    m.m4 = std::exp(m.log_m4);
    return m;
}

Eq6Result theta_eq6(const Coefficients& c, double s0, double d_b, double eta, const AnalyticConfig& cfg) {
    cfg.validate();
    const MFactors m = m_factors(c, s0, d_b, eta, cfg);

    // M4^{+-i 2 alpha_d/alpha} = exp(+-i (2 alpha_d/alpha) ln M4), M4 > 0.
    const double exponent = 2.0 * c.alpha_d / c.alpha * m.log_m4;
    const cplx denom_plus = 1.0 + m.m3 * std::exp(kI * exponent);
    const cplx denom_minus = 1.0 + m.m3 * std::exp(-kI * exponent);

    const double a = c.alpha;
    const double ad = c.alpha_d;
    const cplx phase_part = kI * ((a + ad * d_b) / denom_plus + (a - ad * d_b) / denom_minus) * m.log_m1;
    const cplx loss_part = ((a * d_b - ad) / denom_plus + (a * d_b + ad) / denom_minus) * m.log_m2;

    const double norm = cfg.apply_normalization ? kAmplitudeNormalization : 1.0;
    const double prefactor =
        -cfg.c0 * norm * std::exp(-a * eta) * c.gamma0 * s0 / (2.0 * a * (1.0 + d_b * d_b));
    const cplx theta = prefactor * (phase_part - loss_part);

    Eq6Result r;
    r.value = theta.real() + 0.0;  // no negative zero
    r.imag_residue = std::abs(theta.imag());
    r.near_branch_cut = cfg.branch == BranchPolicy::principal &&
                        std::abs(std::arg(m.m1)) > std::numbers::pi - 1e-9;
    return r;
}

double theta_eq6_checked(const Coefficients& c, double s0, double d_b, double eta, const AnalyticConfig& cfg) {
    const Eq6Result r = theta_eq6(c, s0, d_b, eta, cfg);
    if (!r.branch_stable())
        throw NumericalError("closed-form angle branch-unstable at d_b=" + format_double(d_b) +
                             ", eta=" + format_double(eta) + ": imaginary residue " +
                             format_double(r.imag_residue) + " vs real " + format_double(r.value));
    return r.value;
}

double theta_eq8(const Coefficients& c, double s0, double d_b, double eta) {
    check_eta(eta);
    return -c.alpha * d_b / (2.0 * (1.0 + d_b * d_b)) * c.gamma0 * s0 * std::exp(-c.alpha * eta) * eta;
}

}  // namespace nmore::analytic
