#include "nmore/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

#include "nmore/format.hpp"

namespace nmore::oracle {

namespace {

// Kronrod 15-point abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * pair;
        if (j % 2 == 1) gauss += kWg[j / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    if (!std::isfinite(kronrod)) throw NumericalError("quadrature: non-finite integrand");
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                                    QuadratureOptions opts) {
    if (!(a <= b)) throw ValidationError("integrate_adaptive: requires a <= b");
    if (!(tol > 0.0)) throw ValidationError("integrate_adaptive: tol must be > 0");
    if (a == b) return {0.0, 0.0, 0, true};

    std::priority_queue<Segment> heap;
    heap.push(gauss_kronrod(f, a, b));
    QuadratureResult res;
    res.evaluations = 15;
    double value = heap.top().value;
    double error = heap.top().error;
    const double abs_tol = std::max(opts.abs_tol, 0.0);

    std::size_t splits = 0;
    while (error > std::max(tol * std::abs(value), abs_tol)) {
        if (splits >= opts.max_subdivisions) {
            res.value = value;
            res.error_estimate = error;
            throw QuadratureError("quadrature did not converge: estimate " + format_double(value) +
                                      ", error " + format_double(error),
                                  res);
        }
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = gauss_kronrod(f, worst.a, mid);
        const Segment right = gauss_kronrod(f, mid, worst.b);
        res.evaluations += 30;
        ++splits;
        heap.push(left);
        heap.push(right);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        if (error < 0.0) error = 0.0;
    }
    // Final re-sum removes drift from the running updates.
    value = 0.0;
    error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    res.value = value;
    res.error_estimate = error;
    res.converged = true;
    return res;
}

double l_integrand(const Coefficients& c, double s0, double d_b, double eta, int sign) {
    const double w = 1.0 + 0.5 * c.gamma0 * s0 * std::exp(-c.alpha * eta);
    const double numerator = c.alpha * w - static_cast<double>(sign) * c.alpha_d * d_b;
    return 2.0 * c.gamma0 * numerator / (d_b * d_b + w * w);
}

std::pair<QuadratureResult, QuadratureResult> l_pm_quadrature(const Coefficients& c, double s0, double d_b,
                                                              double eta, double tol) {
    if (!(eta >= 0.0)) throw ValidationError("l_pm_quadrature: eta must be >= 0");
    auto plus = integrate_adaptive([&](double x) { return l_integrand(c, s0, d_b, x, +1); }, 0.0, eta, tol);
    auto minus = integrate_adaptive([&](double x) { return l_integrand(c, s0, d_b, x, -1); }, 0.0, eta, tol);
    return {plus, minus};
}

SteadyStateAmplitudes steady_state(double d2, double delta0, double d42, std::complex<double> omega_plus,
                                   std::complex<double> omega_minus, std::complex<double> a1,
                                   std::complex<double> a3) {
    constexpr std::complex<double> i{0.0, 1.0};
    const std::complex<double> drive = omega_plus * a1 + omega_minus * a3;
    const double d4 = d2 - delta0;
    return {i * drive / (1.0 - i * d2), i * d42 * drive / (1.0 - i * d4)};
}

LineshapeReport lineshape_check(std::span<const double> d2_grid, double delta0, double d42) {
    LineshapeReport rep;
    const bool with_state4 = d42 != 0.0;
    ProbeSpec spec;
    spec.delta0 = delta0;
    spec.kappa_ratio = d42 * d42;
    spec.four_state = with_state4;
    for (double d2 : d2_grid) {
        spec.d2 = d2;
        const Coefficients c = derive_coefficients(spec);
        // Unit drive: i (Omega+ A1 + Omega- A3) = i.
        const auto amp = steady_state(d2, delta0, d42, {1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0});
        constexpr std::complex<double> i{0.0, 1.0};
        const std::complex<double> response2 = amp.a2 / i;
        double absorption_sum = response2.real();
        double dispersion_sum = response2.imag();
        rep.max_absorption_error =
            std::max(rep.max_absorption_error, std::abs(response2.real() - absorption_factor(d2)));
        rep.max_dispersion_error =
            std::max(rep.max_dispersion_error, std::abs(response2.imag() - dispersion_factor(d2)));
        if (with_state4) {
            const std::complex<double> response4 = amp.a4 / (i * d42);
            absorption_sum += response4.real();
            dispersion_sum += response4.imag();
            rep.max_absorption_error =
                std::max(rep.max_absorption_error, std::abs(response4.real() - absorption_factor(c.d4)));
            rep.max_dispersion_error =
                std::max(rep.max_dispersion_error, std::abs(response4.imag() - dispersion_factor(c.d4)));
        }
        rep.max_gamma0_error = std::max(rep.max_gamma0_error, std::abs(absorption_sum - c.gamma0));
        rep.max_beta0_error = std::max(rep.max_beta0_error, std::abs(dispersion_sum - c.beta0));
        ++rep.points;
    }
    return rep;
}

Check make_check(std::string name, double deviation, double tolerance) {
    const bool pass = std::isfinite(deviation) && deviation <= tolerance;
    return {std::move(name), deviation, tolerance, pass};
}

bool Report::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

}  // namespace nmore::oracle
