#include "nmore/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "nmore/errors.hpp"
#include "nmore/format.hpp"

namespace nmore {

namespace {

constexpr double kNegativeTolerance = 1e-12;

FieldState advance(const FieldState& s, const FieldDerivative& k, double h) {
    return {s.eta + h, s.s_plus + h * k.ds_plus, s.s_minus + h * k.ds_minus,
            s.theta_plus + h * k.dtheta_plus, s.theta_minus + h * k.dtheta_minus};
}

FieldState rk4_step(const FieldState& s, const Coefficients& c, double d_b, bool beta0, double h) {
    const FieldDerivative k1 = rhs(s, c, d_b, beta0);
    const FieldDerivative k2 = rhs(advance(s, k1, 0.5 * h), c, d_b, beta0);
    const FieldDerivative k3 = rhs(advance(s, k2, 0.5 * h), c, d_b, beta0);
    const FieldDerivative k4 = rhs(advance(s, k3, h), c, d_b, beta0);
    const double w = h / 6.0;
    FieldState out;
    out.eta = s.eta + h;
    out.s_plus = s.s_plus + w * (k1.ds_plus + 2.0 * k2.ds_plus + 2.0 * k3.ds_plus + k4.ds_plus);
    out.s_minus = s.s_minus + w * (k1.ds_minus + 2.0 * k2.ds_minus + 2.0 * k3.ds_minus + k4.ds_minus);
    out.theta_plus = s.theta_plus +
                     w * (k1.dtheta_plus + 2.0 * k2.dtheta_plus + 2.0 * k3.dtheta_plus + k4.dtheta_plus);
    out.theta_minus = s.theta_minus + w * (k1.dtheta_minus + 2.0 * k2.dtheta_minus +
                                           2.0 * k3.dtheta_minus + k4.dtheta_minus);
    return out;
}

void guard(FieldState& s, double d_b) {
    if (!std::isfinite(s.s_plus) || !std::isfinite(s.s_minus) || !std::isfinite(s.theta_plus) ||
        !std::isfinite(s.theta_minus))
        throw NumericalError("RK4: non-finite state at eta=" + format_double(s.eta) +
                             " (d_b=" + format_double(d_b) + ")");
    for (double* v : {&s.s_plus, &s.s_minus}) {
        if (*v < -kNegativeTolerance)
            throw NumericalError("RK4: negative saturation " + format_double(*v) + " at eta=" +
                                 format_double(s.eta) + " (d_b=" + format_double(d_b) +
                                 "); reduce the step size");
        if (*v < 0.0) *v = 0.0;
    }
}

void check_arguments(double d_b, double eta_max, std::size_t n_steps) {
    if (!std::isfinite(d_b)) throw ValidationError("d_b must be finite");
    if (!(eta_max > 0.0) || !std::isfinite(eta_max)) throw ValidationError("eta_max must be > 0");
    if (n_steps < 2) throw ValidationError("n_steps must be >= 2");
}

}  // namespace

FieldDerivative rhs(const FieldState& state, const Coefficients& c, double d_b, bool include_beta0) {
    const LocalRates r = local_rates(c, state.s_plus, state.s_minus, d_b, include_beta0);
    const double product = state.s_plus * state.s_minus;
    return {-c.alpha * state.s_plus + product * r.p_plus,
            -c.alpha * state.s_minus + product * r.p_minus, 0.5 * state.s_minus * r.q_plus,
            0.5 * state.s_plus * r.q_minus};
}

Trajectory::Trajectory(ProbeSpec spec, double d_b, std::size_t n_steps, std::size_t stride,
                       std::vector<FieldState> states)
    : spec_(spec), d_b_(d_b), n_steps_(n_steps), stride_(stride), states_(std::move(states)) {
    if (states_.empty()) throw ValidationError("Trajectory: no states");
    for (std::size_t i = 1; i < states_.size(); ++i)
        if (!(states_[i].eta > states_[i - 1].eta))
            throw ValidationError("Trajectory: eta must be strictly increasing");
}

Trajectory integrate_rk4(const ProbeSpec& spec, double d_b, double eta_max, IntegrationOptions opts) {
    check_arguments(d_b, eta_max, opts.n_steps);
    if (opts.stride == 0) throw ValidationError("stride must be >= 1");
    const Coefficients c = derive_coefficients(spec);
    const double h = eta_max / static_cast<double>(opts.n_steps);

    std::vector<FieldState> states;
    states.reserve(opts.n_steps / opts.stride + 2);
    FieldState s{0.0, 0.5 * spec.s0, 0.5 * spec.s0, 0.0, 0.0};
    states.push_back(s);
    for (std::size_t i = 1; i <= opts.n_steps; ++i) {
        s = rk4_step(s, c, d_b, spec.include_beta0, h);
        // Index-based eta keeps the grid exactly uniform.
        s.eta = h * static_cast<double>(i);
        guard(s, d_b);
        if (i % opts.stride == 0 || i == opts.n_steps) states.push_back(s);
    }
    return Trajectory(spec, d_b, opts.n_steps, opts.stride, std::move(states));
}

FieldState integrate_rk4_final(const ProbeSpec& spec, double d_b, double eta_max, std::size_t n_steps) {
    check_arguments(d_b, eta_max, n_steps);
    const Coefficients c = derive_coefficients(spec);
    const double h = eta_max / static_cast<double>(n_steps);
    FieldState s{0.0, 0.5 * spec.s0, 0.5 * spec.s0, 0.0, 0.0};
    for (std::size_t i = 1; i <= n_steps; ++i) {
        s = rk4_step(s, c, d_b, spec.include_beta0, h);
        s.eta = h * static_cast<double>(i);
        guard(s, d_b);
    }
    return s;
}

double rotation_angle(const FieldState& s) { return 0.5 * (s.theta_minus - s.theta_plus); }

std::vector<double> rotation_angle(const Trajectory& t) {
    std::vector<double> out;
    out.reserve(t.states().size());
    for (const auto& s : t.states()) out.push_back(rotation_angle(s));
    return out;
}

BlockadeReport blockade_diagnostics(const Trajectory& t) {
    const Coefficients c = derive_coefficients(t.spec());
    const double s0 = t.spec().s0;
    BlockadeReport rep;
    for (const auto& s : t.states()) {
        const double total = s.s_plus + s.s_minus;
        const double reference = s0 * std::exp(-c.alpha * s.eta);
        if (total > 0.0) rep.max_imbalance = std::max(rep.max_imbalance, std::abs(s.s_plus - s.s_minus) / total);
        rep.max_energy_deviation = std::max(rep.max_energy_deviation, std::abs(total - reference) / reference);
        const double half = 0.5 * reference;
        rep.max_component_deviation =
            std::max({rep.max_component_deviation, std::abs(s.s_plus - half) / half,
                      std::abs(s.s_minus - half) / half});
    }
    return rep;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "eta,s_plus,s_minus,theta_plus,theta_minus,theta_rot\n";
    for (const auto& s : t.states()) {
        os << format_double(s.eta) << ',' << format_double(s.s_plus) << ',' << format_double(s.s_minus)
           << ',' << format_double(s.theta_plus) << ',' << format_double(s.theta_minus) << ','
           << format_double(rotation_angle(s)) << '\n';
    }
}

}  // namespace nmore
