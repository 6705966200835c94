#include "nmore/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "nmore/format.hpp"

namespace nmore::io {

namespace {

const char* flag(bool v) { return v ? "true" : "false"; }

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double px_lo = 0.0;
    double px_hi = 1.0;
    [[nodiscard]] double map(double v) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return px_lo + (v - lo) / span * (px_hi - px_lo);
    }
};

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void svg_open(std::ostream& os, int width, int height, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
}

void polyline(std::ostream& os, const std::vector<double>& x, const std::vector<double>& y, const Axis& ax,
              const Axis& ay, const char* color, const char* dash) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash[0] != '\0') os << " stroke-dasharray=\"" << dash << "\"";
    os << " points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) os << px(ax.map(x[i])) << ',' << px(ay.map(y[i])) << ' ';
    os << "\"/>\n";
}

void frame(std::ostream& os, const Axis& ax, const Axis& ay, const std::string& xlabel, const std::string& ylabel) {
    os << "<rect x=\"" << px(ax.px_lo) << "\" y=\"" << px(ay.px_hi) << "\" width=\"" << px(ax.px_hi - ax.px_lo)
       << "\" height=\"" << px(ay.px_lo - ay.px_hi) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << px(0.5 * (ax.px_lo + ax.px_hi)) << "\" y=\"" << px(ay.px_lo + 30)
       << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"" << px(ax.px_lo - 45) << "\" y=\"" << px(0.5 * (ay.px_lo + ay.px_hi)) << "\" transform=\"rotate(-90 "
       << px(ax.px_lo - 45) << ' ' << px(0.5 * (ay.px_lo + ay.px_hi)) << ")\" text-anchor=\"middle\">" << ylabel
       << "</text>\n";
    for (const auto& [v, anchor] : {std::pair{ax.lo, "start"}, std::pair{ax.hi, "end"}})
        os << "<text x=\"" << px(ax.map(v)) << "\" y=\"" << px(ay.px_lo + 15) << "\" text-anchor=\"" << anchor << "\">"
           << format_double(v).substr(0, 8) << "</text>\n";
    for (double v : {ay.lo, ay.hi})
        os << "<text x=\"" << px(ax.px_lo - 4) << "\" y=\"" << px(ay.map(v)) << "\" text-anchor=\"end\">"
           << format_double(v).substr(0, 9) << "</text>\n";
}

// Diverging blue-white-red map for v in [-1, 1].
std::string diverging(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r = 255, g = 255, b = 255;
    if (v > 0) {
        g = b = static_cast<int>(255 * (1.0 - v));
    } else {
        r = g = static_cast<int>(255 * (1.0 + v));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

Metadata spec_metadata(const ProbeSpec& spec) {
    return {{"s0", format_double(spec.s0)},
            {"d2", format_double(spec.d2)},
            {"delta0", format_double(spec.delta0)},
            {"kappa_ratio", format_double(spec.kappa_ratio)},
            {"kappa2_over_gamma", format_double(spec.kappa2_over_gamma)},
            {"include_beta0", flag(spec.include_beta0)},
            {"four_state", flag(spec.four_state)}};
}

nlohmann::ordered_json spec_json(const ProbeSpec& spec) {
    return {{"s0", spec.s0},
            {"d2", spec.d2},
            {"delta0", spec.delta0},
            {"kappa_ratio", spec.kappa_ratio},
            {"kappa2_over_gamma", spec.kappa2_over_gamma},
            {"include_beta0", spec.include_beta0},
            {"four_state", spec.four_state}};
}

nlohmann::ordered_json metadata_json(const Metadata& meta) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : meta) j[k] = v;
    return j;
}

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t, const Metadata& meta) {
    write_metadata(os, meta);
    nmore::write_trajectory_csv(os, t);
}

void write_lineshape_csv(std::ostream& os, const harness::LineshapeTable& table, const Metadata& meta) {
    write_metadata(os, meta);
    os << "d_b,theta_rk4,theta_eq6,theta_eq8,s_plus,s_minus\n";
    for (const auto& r : table.rows) {
        os << format_double(r.d_b) << ',' << format_double(r.theta_rk4) << ',' << format_double(r.theta_eq6) << ','
           << format_double(r.theta_eq8) << ',' << format_double(r.s_plus) << ',' << format_double(r.s_minus)
           << '\n';
    }
}

void write_surface_csv(std::ostream& os, const harness::Surface& surface, const Metadata& meta) {
    write_metadata(os, meta);
    os << "eta,d_b,theta_rk4,theta_eq6\n";
    for (std::size_t i = 0; i < surface.etas.size(); ++i) {
        for (std::size_t j = 0; j < surface.d_bs.size(); ++j) {
            os << format_double(surface.etas[i]) << ',' << format_double(surface.d_bs[j]) << ','
               << format_double(surface.rk4(i, j)) << ',' << format_double(surface.eq6(i, j)) << '\n';
        }
    }
}

nlohmann::ordered_json lineshape_json(const harness::LineshapeTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"d_b", r.d_b},
                        {"theta_rk4", r.theta_rk4},
                        {"theta_eq6", r.theta_eq6},
                        {"theta_eq8", r.theta_eq8},
                        {"s_plus", r.s_plus},
                        {"s_minus", r.s_minus}});
    return {{"eta", table.eta},
            {"c0", table.c0},
            {"n_steps", table.n_steps},
            {"eq6_unstable_points", table.unstable_points()},
            {"rows", rows}};
}

nlohmann::ordered_json surface_json(const harness::Surface& surface) {
    return {{"c0", surface.c0},
            {"n_steps", surface.n_steps},
            {"eta", surface.etas},
            {"d_b", surface.d_bs},
            {"theta_rk4", surface.theta_rk4},
            {"theta_eq6", surface.theta_eq6},
            {"relative_difference", surface.relative_difference()},
            {"eq6_unstable_points", surface.unstable_points}};
}

nlohmann::ordered_json trajectory_json(const Trajectory& t) {
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    for (const auto& s : t.states())
        states.push_back({{"eta", s.eta},
                          {"s_plus", s.s_plus},
                          {"s_minus", s.s_minus},
                          {"theta_plus", s.theta_plus},
                          {"theta_minus", s.theta_minus},
                          {"theta_rot", rotation_angle(s)}});
    const BlockadeReport b = blockade_diagnostics(t);
    return {{"d_b", t.d_b()},
            {"n_steps", t.n_steps()},
            {"stride", t.stride()},
            {"blockade",
             {{"max_imbalance", b.max_imbalance},
              {"max_energy_deviation", b.max_energy_deviation},
              {"max_component_deviation", b.max_component_deviation}}},
            {"states", states}};
}

nlohmann::ordered_json fit_report_json(const harness::FitReport& rep) {
    nlohmann::ordered_json specs = nlohmann::ordered_json::array();
    for (const auto& s : rep.specs) specs.push_back(spec_json(s));
    nlohmann::ordered_json j = {{"c0_fit", rep.c0_fit},
                                {"residual_rms", rep.residual_rms},
                                {"peak_deviation_fraction", rep.peak_deviation_fraction},
                                {"within_bounds", rep.within_bounds}};
    j["spec"] = rep.specs.empty() ? nlohmann::ordered_json::object() : spec_json(rep.specs.front());
    if (rep.specs.size() > 1) j["specs"] = specs;
    j["per_set_deviation"] = rep.per_set_deviation;
    j["grid"] = {{"eta", rep.eta},
                 {"d_b_min", rep.d_b_min},
                 {"d_b_max", rep.d_b_max},
                 {"n_points", rep.n_points},
                 {"n_steps", rep.n_steps}};
    return j;
}

nlohmann::ordered_json oracle_report_json(const oracle::Report& rep) {
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"deviation", c.deviation}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    return {{"checks", checks}, {"all_pass", rep.all_pass()}};
}

void render_lineshape_svg(std::ostream& os, const harness::LineshapeTable& table, const std::string& title) {
    constexpr int w = 720, h = 480;
    svg_open(os, w, h, title);
    std::vector<double> x, rk, e6, e8;
    for (const auto& r : table.rows) {
        x.push_back(r.d_b);
        rk.push_back(r.theta_rk4);
        e6.push_back(r.theta_eq6);
        e8.push_back(r.theta_eq8);
    }
    double ymax = 0.0;
    for (const auto* v : {&rk, &e6, &e8})
        for (double y : *v) ymax = std::max(ymax, std::abs(y));
    if (ymax == 0.0) ymax = 1.0;
    const Axis ax{x.front(), x.back(), 80.0, w - 20.0};
    const Axis ay{-ymax, ymax, h - 60.0, 40.0};
    frame(os, ax, ay, "d_B", "rotation angle (rad)");
    polyline(os, x, rk, ax, ay, "black", "");
    polyline(os, x, e6, ax, ay, "red", "6,3");
    polyline(os, x, e8, ax, ay, "blue", "2,3");
    os << "<text x=\"90\" y=\"55\">black: RK4  red: closed form  blue: weak field</text>\n</svg>\n";
}

void render_surface_svg(std::ostream& os, const harness::Surface& surface, const std::string& title) {
    constexpr int panel = 340, h = 420;
    const int w = 2 * panel + 120;
    svg_open(os, w, h, title);
    double zmax = 0.0;
    for (double v : surface.theta_rk4) zmax = std::max(zmax, std::abs(v));
    for (double v : surface.theta_eq6) zmax = std::max(zmax, std::abs(v));
    if (zmax == 0.0) zmax = 1.0;
    const std::size_t ne = surface.etas.size();
    const std::size_t nd = surface.d_bs.size();
    for (int p = 0; p < 2; ++p) {
        const double x0 = 70.0 + p * (panel + 40.0);
        const Axis ax{surface.d_bs.front(), surface.d_bs.back(), x0, x0 + panel};
        const Axis ay{surface.etas.front(), surface.etas.back(), h - 50.0, 40.0};
        const double cw = panel / static_cast<double>(nd);
        const double ch = (h - 90.0) / static_cast<double>(ne);
        for (std::size_t i = 0; i < ne; ++i) {
            for (std::size_t j = 0; j < nd; ++j) {
                const double v = p == 0 ? surface.rk4(i, j) : surface.eq6(i, j);
                os << "<rect x=\"" << px(x0 + j * cw) << "\" y=\"" << px(h - 50.0 - (i + 1) * ch) << "\" width=\""
                   << px(cw + 0.3) << "\" height=\"" << px(ch + 0.3) << "\" fill=\"" << diverging(v / zmax) << "\"/>\n";
            }
        }
        frame(os, ax, ay, p == 0 ? "d_B (RK4)" : "d_B (closed form)", "eta");
    }
    os << "</svg>\n";
}

void render_trajectory_svg(std::ostream& os, const Trajectory& t, const std::string& title) {
    constexpr int w = 720, h = 480;
    svg_open(os, w, h, title);
    std::vector<double> x, rot;
    for (const auto& s : t.states()) {
        x.push_back(s.eta);
        rot.push_back(rotation_angle(s));
    }
    double ymax = 0.0;
    for (double y : rot) ymax = std::max(ymax, std::abs(y));
    if (ymax == 0.0) ymax = 1.0;
    const Axis ax{x.front(), x.back(), 80.0, w - 20.0};
    const Axis ay{-ymax, ymax, h - 60.0, 40.0};
    frame(os, ax, ay, "eta", "rotation angle (rad)");
    polyline(os, x, rot, ax, ay, "black", "");
    os << "</svg>\n";
}

}  // namespace nmore::io
