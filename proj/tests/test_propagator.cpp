#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nmore/errors.hpp"
#include "nmore/propagator.hpp"

using namespace nmore;

namespace {

ProbeSpec surface_spec() {
    ProbeSpec s;
    s.s0 = 5.0;
    s.d2 = -5.0;
    s.delta0 = 2.0;
    s.kappa_ratio = 2.0;
    return s;
}

double max_state_error(const Trajectory& coarse, const Trajectory& fine) {
    const std::size_t ratio = fine.n_steps() / coarse.n_steps();
    double err = 0.0;
    for (std::size_t i = 0; i < coarse.states().size(); ++i) {
        const auto& a = coarse.states()[i];
        const auto& b = fine.states()[i * ratio];
        err = std::max({err, std::abs(a.s_plus - b.s_plus), std::abs(a.s_minus - b.s_minus),
                        std::abs(a.theta_plus - b.theta_plus), std::abs(a.theta_minus - b.theta_minus)});
    }
    return err;
}

}  // namespace

TEST_CASE("rhs vacuum fixed point") {
    const auto c = derive_coefficients(surface_spec());
    const auto d = rhs({0.0, 0.0, 0.0, 0.3, -0.1}, c, 1.5);
    CHECK(d.ds_plus == 0.0);
    CHECK(d.ds_minus == 0.0);
    CHECK(d.dtheta_plus == 0.0);
    CHECK(d.dtheta_minus == 0.0);
}

TEST_CASE("rhs symmetric at zero field") {
    const auto c = derive_coefficients(surface_spec());
    const auto d = rhs({2.0, 1.3, 1.3, 0.0, 0.0}, c, 0.0);
    CHECK(d.ds_plus == d.ds_minus);
    CHECK(d.dtheta_plus == d.dtheta_minus);
}

TEST_CASE("rhs against direct formula evaluation") {
    const auto c = derive_coefficients(surface_spec());
    const double s = 2.5, d_b = 1.0;
    // Re-evaluated by hand: beta_+- = -1, Gamma_+- = 1 + Gamma0 s, G = Gamma^2 + 1.
    const double big_gamma = 1.0 + c.gamma0 * s;
    const double g = big_gamma * big_gamma + 1.0;
    const double a = 2.0 * c.gamma0 * big_gamma / g;
    const double b = -2.0 * c.gamma0 / g;
    const auto d = rhs({0.0, s, s, 0.0, 0.0}, c, d_b);
    CHECK(d.ds_plus == doctest::Approx(-c.alpha * s + s * s * (c.alpha * a - c.alpha_d * b)).epsilon(1e-14));
    CHECK(d.ds_minus == doctest::Approx(-c.alpha * s + s * s * (c.alpha * a + c.alpha_d * b)).epsilon(1e-14));
    CHECK(d.dtheta_plus == doctest::Approx(0.5 * s * (-c.alpha * b + c.alpha_d * a)).epsilon(1e-14));
    CHECK(d.dtheta_minus == doctest::Approx(0.5 * s * (c.alpha * b + c.alpha_d * a)).epsilon(1e-14));
}

TEST_CASE("trajectory initial state and grid") {
    const auto t = integrate_rk4(surface_spec(), 0.7, 10.0, {400, 8});
    const auto& st = t.states();
    REQUIRE(st.size() == 51);
    CHECK(st.front().eta == 0.0);
    CHECK(st.front().s_plus == 2.5);
    CHECK(st.front().s_minus == 2.5);
    CHECK(st.front().theta_plus == 0.0);
    CHECK(st.back().eta == doctest::Approx(10.0).epsilon(1e-15));
    for (std::size_t i = 1; i < st.size(); ++i) CHECK(st[i].eta > st[i - 1].eta);
    for (const auto& s : st) {
        CHECK(s.s_plus >= 0.0);
        CHECK(s.s_minus >= 0.0);
    }
    // Non-divisible stride still records the final step.
    const auto odd = integrate_rk4(surface_spec(), 0.7, 10.0, {400, 7});
    CHECK(odd.back().eta == doctest::Approx(10.0));
    CHECK(odd.back().theta_minus == st.back().theta_minus);
}

TEST_CASE("final-state shortcut matches the recorded trajectory bit for bit") {
    const auto t = integrate_rk4(surface_spec(), -1.3, 10.0, {1000, 1});
    const auto f = integrate_rk4_final(surface_spec(), -1.3, 10.0, 1000);
    CHECK(f.s_plus == t.back().s_plus);
    CHECK(f.theta_minus == t.back().theta_minus);
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS((void)integrate_rk4(surface_spec(), 0.0, 10.0, {1, 1}), ValidationError);
    CHECK_THROWS_AS((void)integrate_rk4(surface_spec(), 0.0, 0.0, {}), ValidationError);
    CHECK_THROWS_AS((void)integrate_rk4(surface_spec(), 0.0, 10.0, {100, 0}), ValidationError);
    CHECK_THROWS_AS((void)integrate_rk4(surface_spec(), std::nan(""), 10.0, {}), ValidationError);
}

TEST_CASE("oversized steps are reported as a numerical failure") {
    ProbeSpec s = surface_spec();
    s.kappa2_over_gamma = 400.0;
    CHECK_THROWS_AS((void)integrate_rk4(s, 0.5, 10.0, {4, 1}), NumericalError);
}

TEST_CASE("weak probe follows linear absorption") {
    ProbeSpec s = surface_spec();
    s.s0 = 1e-6;
    const auto c = derive_coefficients(s);
    const auto t = integrate_rk4(s, 1.0, 10.0, {2000, 20});
    for (const auto& st : t.states()) {
        const double linear = 0.5 * s.s0 * std::exp(-c.alpha * st.eta);
        CHECK(std::abs(st.s_plus - linear) / linear < 1e-6);
        CHECK(std::abs(st.s_minus - linear) / linear < 1e-6);
    }
    // Phases are linear in S0 in this regime.
    ProbeSpec s2 = s;
    s2.s0 = 2e-6;
    const auto t2 = integrate_rk4(s2, 1.0, 10.0, {2000, 20});
    CHECK(t2.back().theta_plus / t.back().theta_plus == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(rotation_angle(t2.back()) / rotation_angle(t.back()) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("rotation angle definition") {
    CHECK(rotation_angle(FieldState{0, 1, 1, 0.4, 0.4}) == 0.0);
    CHECK(rotation_angle(FieldState{0, 1, 1, 0.0, 0.2}) == doctest::Approx(0.1));
    const auto t = integrate_rk4(surface_spec(), 0.0, 10.0, {400, 10});
    for (double theta : rotation_angle(t)) CHECK(theta == 0.0);
}

TEST_CASE("weak-field rotation sign and magnitude") {
    ProbeSpec s;
    s.s0 = 0.1;
    s.d2 = -10.0;
    s.kappa_ratio = 2.0;
    for (double k2 : {1.0, 0.1}) {
        s.kappa2_over_gamma = k2;
        const auto c = derive_coefficients(s);
        for (double d_b : {-2.0, -1.0, 0.5, 1.0, 3.0}) {
            const double eta = 10.0;
            const double rk = rotation_angle(integrate_rk4_final(s, d_b, eta, 4000));
            const double weak = -c.alpha * d_b / (2.0 * (1.0 + d_b * d_b)) * c.gamma0 * s.s0 *
                                std::exp(-c.alpha * eta) * eta;
            // Exact small-S0 limit: theta = -Gamma0 S0 d_B (1 - e^{-alpha eta}) / (2 (1 + d_B^2)).
            const double limit = -c.gamma0 * s.s0 * d_b * -std::expm1(-c.alpha * eta) / (2.0 * (1.0 + d_b * d_b));
            CHECK(std::signbit(rk) == std::signbit(weak));
            CHECK(rk == doctest::Approx(limit).epsilon(2e-3));
            if (c.alpha * eta < 0.05) CHECK(rk == doctest::Approx(weak).epsilon(0.05));
        }
    }
}

TEST_CASE("fourth-order self-convergence") {
    const auto spec = surface_spec();
    const auto ref = integrate_rk4(spec, 1.0, 10.0, {6400, 1});
    const auto e1 = max_state_error(integrate_rk4(spec, 1.0, 10.0, {100, 1}), ref);
    const auto e2 = max_state_error(integrate_rk4(spec, 1.0, 10.0, {200, 1}), ref);
    const double ratio = e1 / e2;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("antisymmetry and zero-field properties over random specs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> s0(0.5, 10.0), d2(-10.0, -2.0), ratio(0.0, 3.0), field(0.05, 5.0);
    for (int n = 0; n < 25; ++n) {
        ProbeSpec s;
        s.s0 = s0(rng);
        s.d2 = d2(rng);
        s.kappa_ratio = ratio(rng);
        const double d_b = field(rng);
        const double up = rotation_angle(integrate_rk4_final(s, d_b, 10.0, 1000));
        const double down = rotation_angle(integrate_rk4_final(s, -d_b, 10.0, 1000));
        CHECK(std::abs(up + down) <= 1e-9);
        CHECK(rotation_angle(integrate_rk4_final(s, 0.0, 10.0, 1000)) == 0.0);
    }
}

TEST_CASE("no net gain below the two-photon gain threshold") {
    // At zero field dS/deta = alpha S (2 Gamma0 S / (1 + Gamma0 S) - 1) with S = S0/2,
    // so the intensity equations amplify whenever Gamma0 S0 / 2 > 1.
    for (double s0 : {2.0, 5.0, 10.0}) {
        for (double d2 : {-2.0, -5.0, -10.0}) {
            for (double ratio : {1.0, 2.0}) {
                ProbeSpec s;
                s.s0 = s0;
                s.d2 = d2;
                s.kappa_ratio = ratio;
                const double threshold = 0.5 * derive_coefficients(s).gamma0 * s0;
                double peak_total = 0.0;
                for (double d_b : {-3.0, -1.0, 0.0, 0.4, 2.0}) {
                    const auto t = integrate_rk4(s, d_b, 10.0, {2000, 10});
                    for (const auto& st : t.states()) peak_total = std::max(peak_total, st.s_plus + st.s_minus);
                }
                CAPTURE(s0);
                CAPTURE(d2);
                CAPTURE(ratio);
                if (threshold < 1.0)
                    CHECK(peak_total <= s0 * (1.0 + 1e-12));
                else
                    CHECK(peak_total > s0);
            }
        }
    }
}

TEST_CASE("three-state run equals decoupled four-state run bit for bit") {
    ProbeSpec three = surface_spec();
    three.four_state = false;
    ProbeSpec zero = surface_spec();
    zero.kappa_ratio = 0.0;
    const auto a = integrate_rk4(three, 0.8, 10.0, {500, 1});
    const auto b = integrate_rk4(zero, 0.8, 10.0, {500, 1});
    for (std::size_t i = 0; i < a.states().size(); ++i) {
        CHECK(a.states()[i].s_plus == b.states()[i].s_plus);
        CHECK(a.states()[i].theta_minus == b.states()[i].theta_minus);
    }
}

TEST_CASE("blockade diagnostics") {
    // Symmetric zero-field run: no imbalance at all.
    const auto sym = blockade_diagnostics(integrate_rk4(surface_spec(), 0.0, 10.0, {1000, 1}));
    CHECK(sym.max_imbalance == 0.0);

    ProbeSpec weak = surface_spec();
    weak.s0 = 1e-7;
    const auto w = blockade_diagnostics(integrate_rk4(weak, 1.0, 10.0, {1000, 1}));
    CHECK(w.max_imbalance < 1e-7);
    CHECK(w.max_energy_deviation < 1e-7);
    CHECK(w.max_component_deviation < 1e-7);

    // Regression baseline recorded at d_B = 1 on the surface parameters.
    const auto r = blockade_diagnostics(integrate_rk4(surface_spec(), 1.0, 10.0, {4000, 1}));
    CHECK(std::isfinite(r.max_component_deviation));
    CHECK(r.max_imbalance <= r.max_component_deviation + 1e-15);
}

TEST_CASE("trajectory CSV layout") {
    const auto t = integrate_rk4(surface_spec(), 1.0, 10.0, {10, 5});
    std::ostringstream os;
    write_trajectory_csv(os, t);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "eta,s_plus,s_minus,theta_plus,theta_minus,theta_rot");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == 3);
    // Values round-trip exactly.
    std::istringstream again(os.str());
    std::getline(again, line);
    std::getline(again, line);
    std::getline(again, line);
    const double eta = std::stod(line.substr(0, line.find(',')));
    CHECK(eta == t.states()[1].eta);
}
