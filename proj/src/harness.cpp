#include "nmore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "nmore/errors.hpp"
#include "nmore/format.hpp"
#include "nmore/propagator.hpp"

namespace nmore::harness {

namespace {

// Runs body(i) for i in [0, n) on the worker pool. The first exception is
// rethrown after all workers finished.
template <class Body>
void parallel_for(std::size_t n, Body body) {
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

void check_grid(std::span<const double> grid, std::size_t min_points) {
    if (grid.size() < min_points)
        throw ValidationError("d_b grid needs at least " + std::to_string(min_points) + " points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ValidationError("d_b grid must be strictly increasing");
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Linear interpolation of the crossing of |theta| = level between i and i+1.
double crossing(std::span<const double> x, std::span<const double> y, std::size_t i, double level) {
    const double y0 = std::abs(y[i]);
    const double y1 = std::abs(y[i + 1]);
    if (y1 == y0) return x[i];
    return x[i] + (level - y0) * (x[i + 1] - x[i]) / (y1 - y0);
}

}  // namespace

std::size_t worker_count() {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NMORE_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(v));
    }
    return hw;
}

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
    if (n < 2) throw ValidationError("grid needs at least 2 points");
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ValidationError("grid requires lo < hi");
    // Centre/half-width form so grids symmetric about 0 are exactly antisymmetric.
    std::vector<double> g(n);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = 2.0 * static_cast<double>(i) - denom;
        g[i] = mid + half * (k / denom);
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::size_t LineshapeTable::unstable_points() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const LineshapeRow& r) { return !r.eq6_branch_stable; }));
}

std::vector<double> LineshapeTable::column_rk4() const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.theta_rk4);
    return v;
}

std::vector<double> LineshapeTable::column_eq6() const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.theta_eq6);
    return v;
}

std::vector<double> LineshapeTable::column_eq8() const {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.theta_eq8);
    return v;
}

LineshapeTable scan_db(const ProbeSpec& spec, double eta, std::span<const double> d_b_grid,
                       const ScanOptions& opts) {
    check_grid(d_b_grid, 3);
    if (!(eta > 0.0)) throw ValidationError("eta must be > 0");
    const Coefficients c = derive_coefficients(spec);
    analytic::AnalyticConfig cfg = opts.analytic;
    cfg.c0 = opts.c0;
    cfg.validate();

    LineshapeTable table;
    table.spec = spec;
    table.eta = eta;
    table.c0 = opts.c0;
    table.n_steps = opts.n_steps;
    table.rows.resize(d_b_grid.size());
    parallel_for(d_b_grid.size(), [&](std::size_t i) {
        const double d_b = d_b_grid[i];
        LineshapeRow row;
        row.d_b = d_b;
        try {
            const FieldState end = integrate_rk4_final(spec, d_b, eta, opts.n_steps);
            row.theta_rk4 = rotation_angle(end);
            row.s_plus = end.s_plus;
            row.s_minus = end.s_minus;
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " [scan point d_b=" + format_double(d_b) + "]");
        }
        const analytic::Eq6Result eq6 = analytic::theta_eq6(c, spec.s0, d_b, eta, cfg);
        row.theta_eq6 = eq6.value;
        row.eq6_imag_residue = eq6.imag_residue;
        row.eq6_branch_stable = eq6.branch_stable();
        row.theta_eq8 = analytic::theta_eq8(c, spec.s0, d_b, eta);
        table.rows[i] = row;
    });
    std::sort(table.rows.begin(), table.rows.end(),
              [](const LineshapeRow& a, const LineshapeRow& b) { return a.d_b < b.d_b; });
    return table;
}

LineshapeTable scan_db(const ProbeSpec& spec, double eta, double d_b_min, double d_b_max, std::size_t n_points,
                       const ScanOptions& opts) {
    if (n_points < 3) throw ValidationError("n_points must be >= 3");
    const auto grid = uniform_grid(d_b_min, d_b_max, n_points);
    return scan_db(spec, eta, grid, opts);
}

double Surface::relative_difference() const {
    double diff = 0.0;
    for (std::size_t i = 0; i < theta_rk4.size(); ++i) diff = std::max(diff, std::abs(theta_eq6[i] - theta_rk4[i]));
    const double scale = max_abs(theta_rk4);
    return scale > 0.0 ? diff / scale : diff;
}

Surface surface_scan(const ProbeSpec& spec, double eta_max, std::size_t n_eta, double d_b_min, double d_b_max,
                     std::size_t n_db, double c0, std::size_t n_steps) {
    if (n_eta < 2) throw ValidationError("n_eta must be >= 2");
    if (n_steps % (n_eta - 1) != 0) throw ValidationError("n_steps must be a multiple of n_eta - 1");
    const auto grid = uniform_grid(d_b_min, d_b_max, n_db);
    check_grid(grid, 3);
    const Coefficients c = derive_coefficients(spec);
    analytic::AnalyticConfig cfg;
    cfg.c0 = c0;
    cfg.validate();

    Surface s;
    s.spec = spec;
    s.c0 = c0;
    s.n_steps = n_steps;
    s.d_bs = grid;
    s.theta_rk4.assign(n_eta * n_db, 0.0);
    s.theta_eq6.assign(n_eta * n_db, 0.0);
    std::vector<std::size_t> unstable(n_db, 0);
    const std::size_t stride = n_steps / (n_eta - 1);
    std::vector<double> etas(n_eta);

    parallel_for(n_db, [&](std::size_t j) {
        const Trajectory t = integrate_rk4(spec, grid[j], eta_max, {n_steps, stride});
        const auto& states = t.states();
        for (std::size_t i = 0; i < n_eta; ++i) {
            const double eta = states[i].eta;
            if (j == 0) etas[i] = eta;
            s.theta_rk4[i * n_db + j] = rotation_angle(states[i]);
            const auto eq6 = analytic::theta_eq6(c, spec.s0, grid[j], eta, cfg);
            s.theta_eq6[i * n_db + j] = eq6.value;
            if (!eq6.branch_stable()) ++unstable[j];
        }
    });
    s.etas = std::move(etas);
    s.unstable_points = std::accumulate(unstable.begin(), unstable.end(), std::size_t{0});
    return s;
}

double least_squares_scale(std::span<const double> model, std::span<const double> target) {
    if (model.size() != target.size()) throw ValidationError("least_squares_scale: size mismatch");
    double cross = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        cross += model[i] * target[i];
        norm += model[i] * model[i];
    }
    if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("degenerate fit: all-zero template");
    return cross / norm;
}

FitReport fit_c0_tables(std::span<const LineshapeTable> tables) {
    if (tables.empty()) throw ValidationError("fit_c0: no data");
    std::vector<double> templ;
    std::vector<double> target;
    for (const auto& t : tables) {
        for (const auto& r : t.rows) {
            templ.push_back(r.theta_eq6 / t.c0);
            target.push_back(r.theta_rk4);
        }
    }
    FitReport rep;
    rep.c0_fit = least_squares_scale(templ, target);
    double sq = 0.0;
    for (std::size_t i = 0; i < templ.size(); ++i) {
        const double r = rep.c0_fit * templ[i] - target[i];
        sq += r * r;
    }
    rep.residual_rms = std::sqrt(sq / static_cast<double>(templ.size()));
    for (const auto& t : tables) {
        std::vector<double> scaled;
        for (const auto& r : t.rows) scaled.push_back(rep.c0_fit * r.theta_eq6 / t.c0);
        const auto rk = t.column_rk4();
        const double dev = normalized_deviation(scaled, rk, rk);
        rep.per_set_deviation.push_back(dev);
        rep.peak_deviation_fraction = std::max(rep.peak_deviation_fraction, dev);
        rep.specs.push_back(t.spec);
    }
    rep.within_bounds = rep.c0_fit >= analytic::kC0Min && rep.c0_fit <= analytic::kC0Max;
    rep.eta = tables.front().eta;
    rep.n_steps = tables.front().n_steps;
    rep.d_b_min = tables.front().rows.front().d_b;
    rep.d_b_max = tables.front().rows.back().d_b;
    rep.n_points = tables.front().rows.size();
    return rep;
}

FitReport fit_c0_joint(std::span<const ProbeSpec> specs, double eta, std::span<const double> d_b_grid,
                       std::size_t n_steps) {
    check_grid(d_b_grid, 3);
    if (!(d_b_grid.front() < 0.0 && d_b_grid.back() > 0.0))
        throw ValidationError("fit_c0: grid must span both lobes (d_b < 0 and d_b > 0)");
    std::vector<LineshapeTable> tables;
    ScanOptions opts;
    opts.n_steps = n_steps;
    for (const auto& spec : specs) tables.push_back(scan_db(spec, eta, d_b_grid, opts));
    return fit_c0_tables(tables);
}

FitReport fit_c0(const ProbeSpec& spec, double eta, std::span<const double> d_b_grid, std::size_t n_steps) {
    return fit_c0_joint(std::span<const ProbeSpec>(&spec, 1), eta, d_b_grid, n_steps);
}

double normalized_deviation(std::span<const double> a, std::span<const double> b,
                            std::span<const double> reference) {
    if (a.size() != b.size()) throw ValidationError("normalized_deviation: size mismatch");
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    const double scale = max_abs(reference);
    return scale > 0.0 ? diff / scale : diff;
}

LineshapeMetrics lineshape_metrics(std::span<const double> d_b, std::span<const double> theta) {
    if (d_b.size() != theta.size() || d_b.size() < 3) throw ValidationError("lineshape_metrics: bad input");
    LineshapeMetrics m;
    m.peak = max_abs(theta);

    // Zero-field slope from the two grid points bracketing d_b = 0.
    std::size_t right = 0;
    while (right < d_b.size() && d_b[right] <= 0.0) ++right;
    if (right == 0 || right == d_b.size()) throw ValidationError("lineshape_metrics: grid must straddle 0");
    std::size_t left = right - 1;
    if (d_b[left] == 0.0 && left > 0) --left;
    const double slope = (theta[right] - theta[left]) / (d_b[right] - d_b[left]);
    m.zero_field_slope = m.peak > 0.0 ? slope / m.peak : 0.0;

    std::size_t i_peak = right;
    for (std::size_t i = right; i < d_b.size(); ++i)
        if (std::abs(theta[i]) > std::abs(theta[i_peak])) i_peak = i;
    m.peak_position = d_b[i_peak];
    const double level = 0.5 * std::abs(theta[i_peak]);

    std::optional<double> inner;
    for (std::size_t i = i_peak; i > 0 && d_b[i - 1] >= 0.0; --i) {
        if (std::abs(theta[i - 1]) <= level) {
            inner = crossing(d_b, theta, i - 1, level);
            break;
        }
    }
    if (!inner && d_b[left] <= 0.0 && level > 0.0) inner = 0.0;
    std::optional<double> outer;
    for (std::size_t i = i_peak; i + 1 < d_b.size(); ++i) {
        if (std::abs(theta[i + 1]) <= level) {
            outer = crossing(d_b, theta, i, level);
            break;
        }
    }
    if (inner && outer) m.half_width = *outer - *inner;
    return m;
}

std::vector<std::string> figure_ids() { return {"2", "3a", "3b", "3c", "3d", "4a", "4b"}; }

FigureSpec figure_spec(const std::string& id) {
    FigureSpec f;
    f.id = id;
    f.spec.delta0 = 2.0;
    f.spec.kappa_ratio = 2.0;
    if (id == "2") {
        f.kind = FigureKind::surface;
        f.spec.s0 = 5.0;
        f.spec.d2 = -5.0;
        f.c0 = 1.06;
    } else if (id == "3a" || id == "3b") {
        f.spec.s0 = id == "3a" ? 2.0 : 10.0;
        f.spec.d2 = -2.0;
        f.c0 = 1.17;
    } else if (id == "3c" || id == "3d") {
        f.spec.s0 = 10.0;
        f.spec.d2 = id == "3c" ? -5.0 : -10.0;
        f.c0 = 1.15;
    } else if (id == "4a" || id == "4b") {
        f.kind = FigureKind::three_method;
        f.spec.s0 = 10.0;
        f.spec.d2 = id == "4a" ? -2.0 : -5.0;
        f.c0 = id == "4a" ? 1.17 : 1.15;
    } else {
        throw ValidationError("unknown figure id '" + id + "' (expected 2, 3a, 3b, 3c, 3d, 4a or 4b)");
    }
    return f;
}

FigureDataset figure_dataset(const std::string& id, const FigureOptions& opts) {
    FigureDataset ds;
    ds.figure = figure_spec(id);
    if (opts.kappa2_over_gamma) ds.figure.spec.kappa2_over_gamma = *opts.kappa2_over_gamma;
    if (ds.figure.kind == FigureKind::surface) {
        ds.surface = surface_scan(ds.figure.spec, opts.eta, opts.n_eta, opts.d_b_min, opts.d_b_max, opts.n_db,
                                  ds.figure.c0, opts.n_steps);
    } else {
        ScanOptions so;
        so.c0 = ds.figure.c0;
        so.n_steps = opts.n_steps;
        ds.table = scan_db(ds.figure.spec, opts.eta, opts.d_b_min, opts.d_b_max, opts.n_db, so);
    }
    return ds;
}

oracle::Report run_oracle_suite(double tol, const ProbeSpec& spec) {
    if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
    oracle::Report rep;
    constexpr double kExact = 1e-12;

    {
        const auto q = oracle::integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, tol);
        rep.checks.push_back(oracle::make_check("quadrature_polynomial", std::abs(q.value - 1.0 / 3.0) * 3.0, tol));
    }
    {
        const double exact = 1.0 - std::exp(-10.0);
        const auto q = oracle::integrate_adaptive([](double x) { return std::exp(-x); }, 0.0, 10.0, tol);
        rep.checks.push_back(oracle::make_check("quadrature_exponential", std::abs(q.value - exact) / exact, tol));
        rep.checks.push_back(oracle::make_check(
            "quadrature_error_certified", std::abs(q.value - exact) - q.error_estimate - oracle::kAbsoluteToleranceFloor, 0.0));
    }
    {
        const Coefficients c = derive_coefficients(spec);
        double worst = 0.0;
        for (double d_b : {-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0}) {
            const auto closed = analytic::l_pm(c, spec.s0, d_b, kDefaultEta);
            const auto [qp, qm] = oracle::l_pm_quadrature(c, spec.s0, d_b, kDefaultEta, tol * 0.01);
            worst = std::max({worst, std::abs(closed.plus - qp.value) / std::max(std::abs(qp.value), 1e-300),
                              std::abs(closed.minus - qm.value) / std::max(std::abs(qm.value), 1e-300)});
        }
        rep.checks.push_back(oracle::make_check("l_pm_closed_form_vs_quadrature", worst, tol));
    }
    {
        const auto grid = uniform_grid(-10.0, 10.0, 201);
        const auto ls = oracle::lineshape_check(grid, spec.delta0, std::sqrt(spec.kappa_ratio));
        rep.checks.push_back(oracle::make_check("lineshape_absorption", ls.max_absorption_error, kExact));
        rep.checks.push_back(oracle::make_check("lineshape_dispersion", ls.max_dispersion_error, kExact));
        rep.checks.push_back(oracle::make_check("lineshape_gamma0", ls.max_gamma0_error, kExact));
        rep.checks.push_back(oracle::make_check("lineshape_beta0", ls.max_beta0_error, kExact));
    }
    {
        const std::complex<double> wp{0.3, -0.2}, wm{0.1, 0.4}, a1{0.6, 0.1}, a3{-0.2, 0.5};
        const auto one = oracle::steady_state(spec.d2, spec.delta0, 1.3, wp, wm, a1, a3);
        const auto two = oracle::steady_state(spec.d2, spec.delta0, 1.3, 2.0 * wp, 2.0 * wm, a1, a3);
        const double dev = std::max(std::abs(two.a2 - 2.0 * one.a2), std::abs(two.a4 - 2.0 * one.a4));
        rep.checks.push_back(oracle::make_check("steady_state_linearity", dev, kExact));
    }
    {
        double worst = 0.0;
        for (double d2 : uniform_grid(-10.0, 0.0, 101)) {
            const auto amp = oracle::steady_state(d2, spec.delta0, 0.0, {1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0});
            worst = std::max(worst, std::abs(std::norm(amp.a2) - absorption_factor(d2)));
        }
        rep.checks.push_back(oracle::make_check("steady_state_population_lineshape", worst, kExact));
    }
    return rep;
}

}  // namespace nmore::harness
