#pragma once

// Fixed-step RK4 solution of the coupled intensity/phase propagation
// equations for the two circular probe components.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "nmore/model.hpp"

namespace nmore {

struct FieldState {
    double eta = 0.0;
    double s_plus = 0.0;
    double s_minus = 0.0;
    double theta_plus = 0.0;
    double theta_minus = 0.0;
};

struct FieldDerivative {
    double ds_plus = 0.0;
    double ds_minus = 0.0;
    double dtheta_plus = 0.0;
    double dtheta_minus = 0.0;
};

// dS+-/deta = -alpha S+- + S+ S- P+-,  dtheta+-/deta = (S-+/2) Q+-
[[nodiscard]] FieldDerivative rhs(const FieldState& state, const Coefficients& c, double d_b,
                                  bool include_beta0 = false);

// Immutable after construction. States sit on a uniform eta grid with the
// initial condition first.
class Trajectory {
public:
    Trajectory(ProbeSpec spec, double d_b, std::size_t n_steps, std::size_t stride,
               std::vector<FieldState> states);

    [[nodiscard]] const ProbeSpec& spec() const { return spec_; }
    [[nodiscard]] double d_b() const { return d_b_; }
    [[nodiscard]] std::size_t n_steps() const { return n_steps_; }
    [[nodiscard]] std::size_t stride() const { return stride_; }
    [[nodiscard]] const std::vector<FieldState>& states() const { return states_; }
    [[nodiscard]] const FieldState& back() const { return states_.back(); }

private:
    ProbeSpec spec_;
    double d_b_;
    std::size_t n_steps_;
    std::size_t stride_;
    std::vector<FieldState> states_;
};

struct IntegrationOptions {
    std::size_t n_steps = 4000;
    std::size_t stride = 1;  // record every stride-th step (the final step is always recorded)
};

// Classic RK4 with h = eta_max / n_steps. Throws NumericalError when a
// saturation goes below -1e-12 or the state becomes non-finite; smaller
// negative excursions are clamped to zero.
[[nodiscard]] Trajectory integrate_rk4(const ProbeSpec& spec, double d_b, double eta_max,
                                       IntegrationOptions opts = {});

// Final-state shortcut used by scans; same arithmetic as integrate_rk4.
[[nodiscard]] FieldState integrate_rk4_final(const ProbeSpec& spec, double d_b, double eta_max,
                                             std::size_t n_steps = 4000);

// Theta = (theta_- - theta_+)/2 at each recorded state.
[[nodiscard]] double rotation_angle(const FieldState& s);
[[nodiscard]] std::vector<double> rotation_angle(const Trajectory& t);

struct BlockadeReport {
    double max_imbalance = 0.0;       // |S+ - S-| / (S+ + S-)
    double max_energy_deviation = 0.0;  // |S+ + S- - S0 e^{-alpha eta}| / (S0 e^{-alpha eta})
    double max_component_deviation = 0.0;  // |S+- - (S0/2) e^{-alpha eta}| / ((S0/2) e^{-alpha eta})
};

[[nodiscard]] BlockadeReport blockade_diagnostics(const Trajectory& t);

// CSV: eta,s_plus,s_minus,theta_plus,theta_minus,theta_rot with a header row.
void write_trajectory_csv(std::ostream& os, const Trajectory& t);

}  // namespace nmore
