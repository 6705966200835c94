#pragma once

// Experiment orchestration: d_B and (eta, d_B) scans comparing the RK4
// reference with the closed forms, C0 fitting and the figure datasets.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmore/analytic.hpp"
#include "nmore/model.hpp"
#include "nmore/oracle.hpp"

namespace nmore::harness {

inline constexpr double kDefaultDbMin = -5.0;
inline constexpr double kDefaultDbMax = 5.0;
inline constexpr std::size_t kDefaultDbPoints = 201;
inline constexpr std::size_t kDefaultSteps = 4000;
inline constexpr double kDefaultEta = 10.0;

// Worker count: NMORE_THREADS when set and positive, hardware concurrency otherwise.
[[nodiscard]] std::size_t worker_count();

[[nodiscard]] std::vector<double> uniform_grid(double lo, double hi, std::size_t n);

struct LineshapeRow {
    double d_b = 0.0;
    double theta_rk4 = 0.0;
    double theta_eq6 = 0.0;
    double theta_eq8 = 0.0;
    double s_plus = 0.0;
    double s_minus = 0.0;
    double eq6_imag_residue = 0.0;
    bool eq6_branch_stable = true;
};

struct LineshapeTable {
    ProbeSpec spec;
    double eta = kDefaultEta;
    double c0 = 1.0;
    std::size_t n_steps = kDefaultSteps;
    std::vector<LineshapeRow> rows;

    [[nodiscard]] std::size_t unstable_points() const;
    [[nodiscard]] std::vector<double> column_rk4() const;
    [[nodiscard]] std::vector<double> column_eq6() const;
    [[nodiscard]] std::vector<double> column_eq8() const;
};

struct ScanOptions {
    double c0 = 1.0;
    std::size_t n_steps = kDefaultSteps;
    analytic::AnalyticConfig analytic{};  // c0 overridden by ScanOptions::c0
};

// Runs RK4, the closed-form angle and the weak-field angle on every grid
// point. Rows are sorted by d_b regardless of scheduling.
[[nodiscard]] LineshapeTable scan_db(const ProbeSpec& spec, double eta, std::span<const double> d_b_grid,
                                     const ScanOptions& opts = {});
[[nodiscard]] LineshapeTable scan_db(const ProbeSpec& spec, double eta, double d_b_min, double d_b_max,
                                     std::size_t n_points, const ScanOptions& opts = {});

struct Surface {
    ProbeSpec spec;
    double c0 = 1.0;
    std::size_t n_steps = kDefaultSteps;
    std::vector<double> etas;
    std::vector<double> d_bs;
    std::vector<double> theta_rk4;  // row-major, [eta index][d_b index]
    std::vector<double> theta_eq6;
    std::size_t unstable_points = 0;

    [[nodiscard]] double rk4(std::size_t i_eta, std::size_t i_db) const { return theta_rk4[i_eta * d_bs.size() + i_db]; }
    [[nodiscard]] double eq6(std::size_t i_eta, std::size_t i_db) const { return theta_eq6[i_eta * d_bs.size() + i_db]; }
    // max |eq6 - rk4| / max |rk4|
    [[nodiscard]] double relative_difference() const;
};

// n_eta counts grid points including eta = 0; n_steps must be a multiple of n_eta - 1.
[[nodiscard]] Surface surface_scan(const ProbeSpec& spec, double eta_max, std::size_t n_eta, double d_b_min,
                                   double d_b_max, std::size_t n_db, double c0,
                                   std::size_t n_steps = kDefaultSteps);

struct FitReport {
    double c0_fit = 0.0;
    double residual_rms = 0.0;
    double peak_deviation_fraction = 0.0;  // max |C0 t6 - t_rk4| / max |t_rk4|, over all sets
    bool within_bounds = false;
    double eta = kDefaultEta;
    double d_b_min = 0.0;
    double d_b_max = 0.0;
    std::size_t n_points = 0;
    std::size_t n_steps = kDefaultSteps;
    std::vector<ProbeSpec> specs;
    std::vector<double> per_set_deviation;
};

// Closed-form least squares for the scale of `model` that best matches
// `target`. Throws NumericalError when the template is identically zero.
[[nodiscard]] double least_squares_scale(std::span<const double> model, std::span<const double> target);

[[nodiscard]] FitReport fit_c0(const ProbeSpec& spec, double eta, std::span<const double> d_b_grid,
                               std::size_t n_steps = kDefaultSteps);
// One C0 shared by every spec.
[[nodiscard]] FitReport fit_c0_joint(std::span<const ProbeSpec> specs, double eta,
                                     std::span<const double> d_b_grid, std::size_t n_steps = kDefaultSteps);
// Fit from already computed tables (their theta_eq6 columns are rescaled by 1/c0).
[[nodiscard]] FitReport fit_c0_tables(std::span<const LineshapeTable> tables);

struct LineshapeMetrics {
    double peak = 0.0;               // max |theta|
    double peak_position = 0.0;      // d_b of the positive-d_b extremum
    double zero_field_slope = 0.0;   // d theta / d d_B at 0, divided by peak
    std::optional<double> half_width;  // width of the d_b > 0 lobe at half extremum
};

// Grid must contain d_b = 0 or straddle it.
[[nodiscard]] LineshapeMetrics lineshape_metrics(std::span<const double> d_b, std::span<const double> theta);

// max |a - b| / max |reference|
[[nodiscard]] double normalized_deviation(std::span<const double> a, std::span<const double> b,
                                          std::span<const double> reference);

enum class FigureKind { surface, lineshape, three_method };

struct FigureSpec {
    std::string id;
    FigureKind kind = FigureKind::lineshape;
    ProbeSpec spec;
    double c0 = 1.0;
};

// Parameters of figures 2, 3a-3d, 4a, 4b. Throws ValidationError for unknown ids.
[[nodiscard]] FigureSpec figure_spec(const std::string& id);
[[nodiscard]] std::vector<std::string> figure_ids();

struct FigureDataset {
    FigureSpec figure;
    std::optional<LineshapeTable> table;
    std::optional<Surface> surface;
};

struct FigureOptions {
    double eta = kDefaultEta;
    std::size_t n_steps = kDefaultSteps;
    std::size_t n_eta = 101;
    double d_b_min = kDefaultDbMin;
    double d_b_max = kDefaultDbMax;
    std::size_t n_db = kDefaultDbPoints;
    std::optional<double> kappa2_over_gamma;
};

[[nodiscard]] FigureDataset figure_dataset(const std::string& id, const FigureOptions& opts = {});

// Quadrature sanity, L+- closed form vs quadrature and the steady-state
// lineshape checks. `tol` is the relative tolerance for quadrature-based checks.
[[nodiscard]] oracle::Report run_oracle_suite(double tol, const ProbeSpec& spec = {});

}  // namespace nmore::harness
