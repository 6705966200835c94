// nmore: command-line front end for the propagation, scan, fitting and
// oracle machinery. Exit codes: 0 success, 1 invalid input, 2 numerical
// failure (including failed oracle checks and out-of-bounds fitted C0).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmore/errors.hpp"
#include "nmore/format.hpp"
#include "nmore/harness.hpp"
#include "nmore/io.hpp"
#include "nmore/propagator.hpp"

namespace {

using namespace nmore;
using Json = nlohmann::ordered_json;

enum class Format { csv, json, svg };

struct RunConfig {
    ProbeSpec spec;
    double eta = harness::kDefaultEta;
    std::size_t n_steps = harness::kDefaultSteps;
    double c0 = 1.0;
    double db_min = harness::kDefaultDbMin;
    double db_max = harness::kDefaultDbMax;
    std::size_t db_points = harness::kDefaultDbPoints;
    std::size_t n_eta = 101;
    std::string out;
    Format format = Format::csv;

    // propagate
    double d_b = 1.0;
    std::size_t stride = 1;
    // fit-c0
    std::vector<double> s0_set;
    // figure
    std::string figure_id;
    // oracle
    double tol = 1e-10;
};

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

const char* format_name(Format f) {
    switch (f) {
        case Format::csv: return "csv";
        case Format::json: return "json";
        case Format::svg: return "svg";
    }
    return "csv";
}

io::Metadata run_metadata(const std::string& command, const RunConfig& cfg) {
    io::Metadata m{{"command", command}};
    for (auto& kv : io::spec_metadata(cfg.spec)) m.push_back(std::move(kv));
    auto add = [&m](const char* k, double v) { m.emplace_back(k, format_double(v)); };
    auto add_n = [&m](const char* k, std::size_t v) { m.emplace_back(k, std::to_string(v)); };
    if (command == "oracle") {
        add("tol", cfg.tol);
    } else {
        add("eta", cfg.eta);
        add_n("n_steps", cfg.n_steps);
    }
    if (command == "propagate") {
        add("d_b", cfg.d_b);
        add_n("stride", cfg.stride);
    }
    if (command == "scan" || command == "surface" || command == "fit-c0" || command == "figure") {
        add("db_min", cfg.db_min);
        add("db_max", cfg.db_max);
        add_n("db_points", cfg.db_points);
    }
    if (command == "scan" || command == "surface") add("c0", cfg.c0);
    if (command == "surface" || command == "figure") add_n("n_eta", cfg.n_eta);
    if (command == "fit-c0" && !cfg.s0_set.empty()) {
        std::string s;
        for (double v : cfg.s0_set) s += (s.empty() ? "" : ",") + format_double(v);
        m.emplace_back("s0_set", s);
    }
    if (command == "figure") m.emplace_back("id", cfg.figure_id);
    m.emplace_back("format", format_name(cfg.format));
    return m;
}

// Opens --out, or stdout when empty or "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw ValidationError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void emit_json(std::ostream& os, Json body, const io::Metadata& meta) {
    Json j;
    j["config"] = io::metadata_json(meta);
    for (auto& [k, v] : body.items()) j[k] = v;
    os << j.dump(2) << '\n';
}

// SVG has no structured header; the resolved config goes into a comment.
void emit_svg_config(std::ostream& os, const io::Metadata& meta) {
    os << "<!--";
    for (const auto& [k, v] : meta) os << ' ' << k << '=' << v;
    os << " -->\n";
}

int run_propagate(const RunConfig& cfg) {
    IntegrationOptions opts;
    opts.n_steps = cfg.n_steps;
    opts.stride = cfg.stride;
    const auto traj = integrate_rk4(cfg.spec, cfg.d_b, cfg.eta, opts);
    const auto meta = run_metadata("propagate", cfg);
    Output out(cfg.out);
    switch (cfg.format) {
        case Format::csv: io::write_trajectory_csv(out.stream(), traj, meta); break;
        case Format::json: emit_json(out.stream(), io::trajectory_json(traj), meta); break;
        case Format::svg:
            emit_svg_config(out.stream(), meta);
            io::render_trajectory_svg(out.stream(), traj, "trajectory, d_B = " + format_double(cfg.d_b));
            break;
    }
    return kExitOk;
}

harness::ScanOptions scan_options(const RunConfig& cfg) {
    harness::ScanOptions o;
    o.c0 = cfg.c0;
    o.n_steps = cfg.n_steps;
    return o;
}

void write_table(const harness::LineshapeTable& t, const io::Metadata& meta, const RunConfig& cfg,
                 const std::string& title) {
    Output out(cfg.out);
    switch (cfg.format) {
        case Format::csv: io::write_lineshape_csv(out.stream(), t, meta); break;
        case Format::json: emit_json(out.stream(), io::lineshape_json(t), meta); break;
        case Format::svg:
            emit_svg_config(out.stream(), meta);
            io::render_lineshape_svg(out.stream(), t, title);
            break;
    }
}

void write_surface(const harness::Surface& s, const io::Metadata& meta, const RunConfig& cfg,
                   const std::string& title) {
    Output out(cfg.out);
    switch (cfg.format) {
        case Format::csv: io::write_surface_csv(out.stream(), s, meta); break;
        case Format::json: emit_json(out.stream(), io::surface_json(s), meta); break;
        case Format::svg:
            emit_svg_config(out.stream(), meta);
            io::render_surface_svg(out.stream(), s, title);
            break;
    }
}

void warn_unstable(std::size_t n) {
    if (n > 0) std::cerr << "warning: closed form failed the branch check at " << n << " grid points\n";
}

int run_scan(const RunConfig& cfg) {
    const auto t = harness::scan_db(cfg.spec, cfg.eta, cfg.db_min, cfg.db_max, cfg.db_points, scan_options(cfg));
    warn_unstable(t.unstable_points());
    write_table(t, run_metadata("scan", cfg), cfg, "rotation lineshape, eta = " + format_double(cfg.eta));
    return kExitOk;
}

int run_surface(const RunConfig& cfg) {
    const auto s = harness::surface_scan(cfg.spec, cfg.eta, cfg.n_eta, cfg.db_min, cfg.db_max, cfg.db_points,
                                         cfg.c0, cfg.n_steps);
    warn_unstable(s.unstable_points);
    write_surface(s, run_metadata("surface", cfg), cfg, "rotation surface");
    return kExitOk;
}

int run_fit(const RunConfig& cfg) {
    std::vector<ProbeSpec> specs;
    if (cfg.s0_set.empty()) {
        specs.push_back(cfg.spec);
    } else {
        for (double s0 : cfg.s0_set) {
            ProbeSpec s = cfg.spec;
            s.s0 = s0;
            specs.push_back(s);
        }
    }
    const auto grid = harness::uniform_grid(cfg.db_min, cfg.db_max, cfg.db_points);
    const auto rep = harness::fit_c0_joint(specs, cfg.eta, grid, cfg.n_steps);
    const auto meta = run_metadata("fit-c0", cfg);
    if (cfg.format == Format::svg) throw ValidationError("fit-c0 supports csv and json output");
    Output out(cfg.out);
    if (cfg.format == Format::json) {
        emit_json(out.stream(), io::fit_report_json(rep), meta);
    } else {
        io::write_metadata(out.stream(), meta);
        out.stream() << "c0_fit,residual_rms,peak_deviation_fraction,within_bounds\n"
                     << format_double(rep.c0_fit) << ',' << format_double(rep.residual_rms) << ','
                     << format_double(rep.peak_deviation_fraction) << ',' << (rep.within_bounds ? "true" : "false")
                     << '\n';
    }
    if (!rep.within_bounds) {
        std::cerr << "error: fitted C0 = " << format_double(rep.c0_fit) << " outside [" << analytic::kC0Min << ", "
                  << analytic::kC0Max << "]\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int run_figure(RunConfig cfg) {
    harness::FigureOptions o;
    o.eta = cfg.eta;
    o.n_steps = cfg.n_steps;
    o.n_eta = cfg.n_eta;
    o.d_b_min = cfg.db_min;
    o.d_b_max = cfg.db_max;
    o.n_db = cfg.db_points;
    o.kappa2_over_gamma = cfg.spec.kappa2_over_gamma;
    const auto ds = harness::figure_dataset(cfg.figure_id, o);
    cfg.spec = ds.figure.spec;
    cfg.c0 = ds.figure.c0;
    auto meta = run_metadata("figure", cfg);
    meta.emplace_back("c0", format_double(ds.figure.c0));
    const std::string title = "figure " + cfg.figure_id;
    if (ds.surface) {
        warn_unstable(ds.surface->unstable_points);
        write_surface(*ds.surface, meta, cfg, title);
    } else {
        warn_unstable(ds.table->unstable_points());
        write_table(*ds.table, meta, cfg, title);
    }
    return kExitOk;
}

int run_oracle(const RunConfig& cfg) {
    const auto rep = harness::run_oracle_suite(cfg.tol, cfg.spec);
    const auto meta = run_metadata("oracle", cfg);
    Output out(cfg.out);
    if (cfg.format == Format::csv) {
        io::write_metadata(out.stream(), meta);
        out.stream() << "name,deviation,tolerance,pass\n";
        for (const auto& c : rep.checks)
            out.stream() << c.name << ',' << format_double(c.deviation) << ',' << format_double(c.tolerance) << ','
                         << (c.pass ? "true" : "false") << '\n';
    } else if (cfg.format == Format::json) {
        emit_json(out.stream(), io::oracle_report_json(rep), meta);
    } else {
        throw ValidationError("oracle supports csv and json output");
    }
    return rep.all_pass() ? kExitOk : kExitNumerical;
}

void add_spec_options(CLI::App& app, RunConfig& cfg) {
    app.add_option("--s0", cfg.spec.s0, "Input saturation parameter S0")->capture_default_str();
    app.add_option("--d2", cfg.spec.d2, "Probe detuning from |2>, in units of Gamma")->capture_default_str();
    app.add_option("--delta0", cfg.spec.delta0, "Excited-state splitting Delta0 / Gamma")->capture_default_str();
    app.add_option("--kappa-ratio,--kappa_ratio", cfg.spec.kappa_ratio, "Coupling ratio kappa4 / kappa2")
        ->capture_default_str();
    app.add_option("--kappa2-over-gamma,--kappa2_over_gamma", cfg.spec.kappa2_over_gamma,
                   "Absorption scale kappa2 / Gamma")
        ->capture_default_str();
    app.add_flag("--include-beta0,--include_beta0,!--no-include-beta0", cfg.spec.include_beta0,
                 "Keep the light-shift term in beta+-");
    app.add_flag("--four-state,--four_state,!--three-state", cfg.spec.four_state,
                 "Include the |4> excited state (default on)");
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Nonlinear magneto-optical rotation: propagation, scans, C0 fits and oracle checks"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a TOML/INI key-value file (flags override it)");

    add_spec_options(app, cfg);
    app.add_option("--eta,--eta-max,--eta_max", cfg.eta, "Optical depth of the medium")->capture_default_str();
    app.add_option("--n-steps,--n_steps", cfg.n_steps, "RK4 steps over [0, eta]")->capture_default_str();
    app.add_option("--c0", cfg.c0, "Amplitude constant of the closed form")->capture_default_str();
    app.add_option("--db-min,--db_min", cfg.db_min, "Lower end of the d_B grid")->capture_default_str();
    app.add_option("--db-max,--db_max", cfg.db_max, "Upper end of the d_B grid")->capture_default_str();
    app.add_option("--db-points,--db_points", cfg.db_points, "Number of d_B grid points")->capture_default_str();
    app.add_option("--n-eta,--n_eta", cfg.n_eta, "Number of eta grid points for surfaces")->capture_default_str();
    app.add_option("--out,-o", cfg.out, "Output file (stdout when omitted)");
    std::optional<Format> format;
    const std::map<std::string, Format> formats{{"csv", Format::csv}, {"json", Format::json}, {"svg", Format::svg}};
    app.add_option("--format", format, "Output format: csv, json or svg (default inferred from --out, else csv)")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

    auto* propagate = app.add_subcommand("propagate", "Integrate one d_B trajectory");
    propagate->add_option("--d-b,--d_b,--db", cfg.d_b, "Magnetic detuning d_B")->capture_default_str();
    propagate->add_option("--stride", cfg.stride, "Record every stride-th step")->capture_default_str();

    app.add_subcommand("scan", "Lineshape table over a d_B grid");
    app.add_subcommand("surface", "Rotation over the (eta, d_B) plane");

    auto* fit = app.add_subcommand("fit-c0", "Least-squares fit of C0 against RK4");
    fit->add_option("--s0-set,--s0_set", cfg.s0_set, "Fit one C0 jointly over these S0 values")->delimiter(',');

    auto* figure = app.add_subcommand("figure", "Dataset for one of the reference figures");
    figure->add_option("--id", cfg.figure_id, "Figure id: 2, 3a, 3b, 3c, 3d, 4a, 4b")->required();

    auto* oracle_cmd = app.add_subcommand("oracle", "Run the oracle checks");
    oracle_cmd->add_option("--tol", cfg.tol, "Relative tolerance for quadrature checks")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return kExitValidation;
    }

    if (format) {
        cfg.format = *format;
    } else if (cfg.out.size() > 5 && cfg.out.ends_with(".json")) {
        cfg.format = Format::json;
    } else if (cfg.out.size() > 4 && cfg.out.ends_with(".svg")) {
        cfg.format = Format::svg;
    } else if (app.got_subcommand("oracle")) {
        cfg.format = Format::json;
    }

    try {
        cfg.spec.validate();
        if (app.got_subcommand("propagate")) return run_propagate(cfg);
        if (app.got_subcommand("scan")) return run_scan(cfg);
        if (app.got_subcommand("surface")) return run_surface(cfg);
        if (app.got_subcommand("fit-c0")) return run_fit(cfg);
        if (app.got_subcommand("figure")) return run_figure(cfg);
        if (app.got_subcommand("oracle")) return run_oracle(cfg);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitValidation;
}
