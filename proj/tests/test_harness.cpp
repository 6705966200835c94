#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "nmore/errors.hpp"
#include "nmore/harness.hpp"
#include "nmore/propagator.hpp"

using namespace nmore;
using namespace nmore::harness;

namespace {

ProbeSpec spec_of(double s0, double d2, double kappa_ratio = 2.0, double k2 = 1.0) {
    ProbeSpec s;
    s.s0 = s0;
    s.d2 = d2;
    s.delta0 = 2.0;
    s.kappa_ratio = kappa_ratio;
    s.kappa2_over_gamma = k2;
    return s;
}

ScanOptions quick(double c0 = 1.0, std::size_t n_steps = 400) {
    ScanOptions o;
    o.c0 = c0;
    o.n_steps = n_steps;
    return o;
}

}  // namespace

TEST_CASE("uniform grid") {
    const auto g = uniform_grid(-5.0, 5.0, 201);
    CHECK(g.size() == 201);
    CHECK(g.front() == -5.0);
    CHECK(g.back() == 5.0);
    CHECK(g[100] == 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == -g[g.size() - 1 - i]);
    CHECK_THROWS_AS((void)uniform_grid(1.0, 1.0, 5), ValidationError);
    CHECK_THROWS_AS((void)uniform_grid(0.0, 1.0, 1), ValidationError);
}

TEST_CASE("scan rows are sorted, finite and antisymmetric") {
    const auto t = scan_db(spec_of(5.0, -5.0), 10.0, -5.0, 5.0, 41, quick(1.06));
    REQUIRE(t.rows.size() == 41);
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].d_b > t.rows[i - 1].d_b);
    for (const auto& r : t.rows) {
        CHECK(std::isfinite(r.theta_rk4));
        CHECK(std::isfinite(r.theta_eq6));
        CHECK(std::isfinite(r.theta_eq8));
    }
    const std::size_t n = t.rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = t.rows[i];
        const auto& b = t.rows[n - 1 - i];
        CHECK(std::abs(a.theta_rk4 + b.theta_rk4) <= 1e-9);
        CHECK(std::abs(a.theta_eq6 + b.theta_eq6) <= 1e-9);
        CHECK(std::abs(a.theta_eq8 + b.theta_eq8) <= 1e-9);
        CHECK(a.s_plus == doctest::Approx(b.s_minus).epsilon(1e-12));
    }
    CHECK(t.rows[20].theta_rk4 == 0.0);
    CHECK(t.rows[20].theta_eq6 == 0.0);
    CHECK(t.rows[20].theta_eq8 == 0.0);
}

TEST_CASE("scan validation") {
    const std::vector<double> two{-1.0, 1.0};
    CHECK_THROWS_AS((void)scan_db(ProbeSpec{}, 10.0, two), ValidationError);
    const std::vector<double> unsorted{-1.0, 1.0, 0.0};
    CHECK_THROWS_AS((void)scan_db(ProbeSpec{}, 10.0, unsorted), ValidationError);
    CHECK_THROWS_AS((void)scan_db(ProbeSpec{}, 10.0, 1.0, -1.0, 11), ValidationError);
    CHECK_THROWS_AS((void)scan_db(ProbeSpec{}, -1.0, -1.0, 1.0, 11), ValidationError);
}

TEST_CASE("scan reports integration failures with the offending d_b") {
    // Few steps with strong absorption drive S negative.
    ScanOptions o = quick(1.0, 4);
    try {
        (void)scan_db(spec_of(5.0, -5.0, 2.0, 400.0), 10.0, -1.0, 1.0, 3, o);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("d_b=") != std::string::npos);
    }
}

TEST_CASE("weak probe: RK4 matches the weak-field angle") {
    // alpha*eta small so the weak-field form coincides with the exact linear solution.
    const auto t = scan_db(spec_of(1e-4, -10.0, 2.0, 0.1), 10.0, -5.0, 5.0, 21, quick());
    const auto rk = t.column_rk4();
    const auto e8 = t.column_eq8();
    CHECK(normalized_deviation(rk, e8, rk) <= 0.05);
    for (std::size_t i = 0; i < rk.size(); ++i) {
        if (rk[i] != 0.0) CHECK(std::signbit(rk[i]) == std::signbit(e8[i]));
    }
}

TEST_CASE("surface has zero eta row and zero field column") {
    const auto s = surface_scan(spec_of(5.0, -5.0), 10.0, 11, -5.0, 5.0, 21, 1.06, 400);
    REQUIRE(s.etas.size() == 11);
    REQUIRE(s.d_bs.size() == 21);
    CHECK(s.etas.front() == 0.0);
    CHECK(s.etas.back() == doctest::Approx(10.0).epsilon(1e-15));
    for (std::size_t j = 0; j < s.d_bs.size(); ++j) {
        CHECK(s.rk4(0, j) == 0.0);
        CHECK(s.eq6(0, j) == 0.0);
    }
    for (std::size_t i = 0; i < s.etas.size(); ++i) {
        CHECK(s.rk4(i, 10) == 0.0);
        CHECK(s.eq6(i, 10) == 0.0);
    }
    // The last row agrees with an independent single-point integration.
    const auto fin = integrate_rk4_final(s.spec, s.d_bs[3], 10.0, 400);
    CHECK(s.rk4(10, 3) == doctest::Approx(rotation_angle(fin)).epsilon(1e-13));
    CHECK_THROWS_AS((void)surface_scan(spec_of(5.0, -5.0), 10.0, 7, -5.0, 5.0, 21, 1.0, 400), ValidationError);
}

TEST_CASE("least squares scale") {
    const std::vector<double> m{1.0, -2.0, 3.0};
    const std::vector<double> t{2.2, -4.4, 6.6};
    CHECK(least_squares_scale(m, t) == doctest::Approx(2.2).epsilon(1e-15));
    const std::vector<double> z{0.0, 0.0, 0.0};
    CHECK_THROWS_AS((void)least_squares_scale(z, t), NumericalError);
}

TEST_CASE("synthetic fit recovers C0 = 1.10") {
    auto t = scan_db(spec_of(10.0, -2.0), 10.0, -5.0, 5.0, 51, quick(1.0));
    for (auto& r : t.rows) r.theta_rk4 = 1.10 * r.theta_eq6;
    const std::vector<LineshapeTable> tables{t};
    const auto rep = fit_c0_tables(tables);
    CHECK(std::abs(rep.c0_fit - 1.10) <= 1e-12);
    CHECK(rep.residual_rms <= 1e-14);
    CHECK(rep.peak_deviation_fraction <= 1e-12);
    CHECK(rep.within_bounds);
    CHECK(rep.n_points == 51);
    CHECK(rep.d_b_min == -5.0);
    CHECK(rep.d_b_max == 5.0);

    // A table produced with a different c0 is normalised back to the template.
    auto scaled = scan_db(spec_of(10.0, -2.0), 10.0, -5.0, 5.0, 51, quick(1.2));
    for (std::size_t i = 0; i < scaled.rows.size(); ++i) scaled.rows[i].theta_rk4 = t.rows[i].theta_rk4;
    const std::vector<LineshapeTable> tables2{scaled};
    CHECK(std::abs(fit_c0_tables(tables2).c0_fit - 1.10) <= 1e-12);
}

TEST_CASE("degenerate fits are rejected") {
    const std::vector<double> one_sided = uniform_grid(0.5, 5.0, 11);
    CHECK_THROWS_AS((void)fit_c0(spec_of(5.0, -5.0), 10.0, one_sided, 100), ValidationError);
    auto t = scan_db(spec_of(5.0, -5.0), 10.0, -1.0, 1.0, 5, quick());
    for (auto& r : t.rows) r.theta_eq6 = 0.0;
    const std::vector<LineshapeTable> tables{t};
    CHECK_THROWS_AS((void)fit_c0_tables(tables), NumericalError);
    CHECK_THROWS_AS((void)fit_c0_tables({}), ValidationError);
}

TEST_CASE("fit report records grid metadata") {
    const auto grid = uniform_grid(-5.0, 5.0, 21);
    const auto rep = fit_c0(spec_of(5.0, -5.0), 10.0, grid, 200);
    CHECK(rep.eta == 10.0);
    CHECK(rep.n_steps == 200);
    CHECK(rep.n_points == 21);
    CHECK(rep.residual_rms >= 0.0);
    CHECK(rep.specs.size() == 1);
    CHECK(rep.per_set_deviation.size() == 1);
    CHECK(rep.within_bounds == (rep.c0_fit >= analytic::kC0Min && rep.c0_fit <= analytic::kC0Max));
}

TEST_CASE("lineshape metrics on a dispersive Lorentzian") {
    // theta = x / (1 + x^2): peak 1/2 at x = 1, slope 1 at 0, half-maximum at 2 -+ sqrt(3).
    const auto x = uniform_grid(-10.0, 10.0, 20001);
    std::vector<double> y;
    for (double v : x) y.push_back(v / (1.0 + v * v));
    const auto m = lineshape_metrics(x, y);
    CHECK(m.peak == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(m.peak_position == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.zero_field_slope == doctest::Approx(2.0).epsilon(1e-6));
    REQUIRE(m.half_width.has_value());
    CHECK(*m.half_width == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-6));

    const std::vector<double> pos{1.0, 2.0, 3.0};
    CHECK_THROWS_AS((void)lineshape_metrics(pos, pos), ValidationError);
}

TEST_CASE("figure specs") {
    CHECK(figure_ids().size() == 7);
    const auto f2 = figure_spec("2");
    CHECK(f2.kind == FigureKind::surface);
    CHECK(f2.spec.s0 == 5.0);
    CHECK(f2.spec.d2 == -5.0);
    CHECK(f2.spec.delta0 == 2.0);
    CHECK(f2.spec.kappa_ratio == 2.0);
    CHECK(f2.c0 == 1.06);
    const auto f3c = figure_spec("3c");
    CHECK(f3c.kind == FigureKind::lineshape);
    CHECK(f3c.spec.s0 == 10.0);
    CHECK(f3c.spec.d2 == -5.0);
    CHECK(f3c.c0 == 1.15);
    CHECK(figure_spec("3a").c0 == 1.17);
    CHECK(figure_spec("3b").spec.s0 == 10.0);
    CHECK(figure_spec("3d").spec.d2 == -10.0);
    CHECK(figure_spec("4a").kind == FigureKind::three_method);
    CHECK(figure_spec("4b").spec.d2 == -5.0);
    CHECK_THROWS_AS((void)figure_spec("5"), ValidationError);
}

TEST_CASE("figure datasets are deterministic") {
    FigureOptions o;
    o.n_steps = 200;
    o.n_db = 21;
    o.n_eta = 11;
    const auto a = figure_dataset("3b", o);
    const auto b = figure_dataset("3b", o);
    REQUIRE(a.table.has_value());
    CHECK_FALSE(a.surface.has_value());
    CHECK(a.table->c0 == 1.17);
    for (std::size_t i = 0; i < a.table->rows.size(); ++i) {
        CHECK(a.table->rows[i].theta_rk4 == b.table->rows[i].theta_rk4);
        CHECK(a.table->rows[i].theta_eq6 == b.table->rows[i].theta_eq6);
    }
    const auto s = figure_dataset("2", o);
    REQUIRE(s.surface.has_value());
    CHECK(s.surface->etas.size() == 11);
    CHECK(s.surface->theta_rk4 == figure_dataset("2", o).surface->theta_rk4);
}

TEST_CASE("worker count honours NMORE_THREADS") {
    ::setenv("NMORE_THREADS", "1", 1);
    CHECK(worker_count() == 1);
    const auto serial = scan_db(spec_of(10.0, -5.0), 10.0, -5.0, 5.0, 31, quick());
    ::setenv("NMORE_THREADS", "4", 1);
    CHECK(worker_count() >= 1);
    CHECK(worker_count() <= 4);
    const auto pooled = scan_db(spec_of(10.0, -5.0), 10.0, -5.0, 5.0, 31, quick());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].d_b == pooled.rows[i].d_b);
        CHECK(serial.rows[i].theta_rk4 == pooled.rows[i].theta_rk4);
    }
    ::setenv("NMORE_THREADS", "junk", 1);
    CHECK(worker_count() >= 1);
    ::unsetenv("NMORE_THREADS");
}

TEST_CASE("oracle suite report") {
    const auto rep = run_oracle_suite(1e-10);
    CHECK(rep.all_pass());
    CHECK(rep.checks.size() >= 10);
    CHECK_THROWS_AS((void)run_oracle_suite(0.0), ValidationError);
}
