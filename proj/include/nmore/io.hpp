#pragma once

// CSV / JSON / SVG emission for the harness datasets. Every CSV starts
// with "# key=value" comment lines carrying the resolved configuration,
// followed by the header row.

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nmore/harness.hpp"
#include "nmore/oracle.hpp"
#include "nmore/propagator.hpp"

namespace nmore::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

[[nodiscard]] Metadata spec_metadata(const ProbeSpec& spec);
[[nodiscard]] nlohmann::ordered_json spec_json(const ProbeSpec& spec);
[[nodiscard]] nlohmann::ordered_json metadata_json(const Metadata& meta);

void write_metadata(std::ostream& os, const Metadata& meta);

void write_trajectory_csv(std::ostream& os, const Trajectory& t, const Metadata& meta);
// d_b,theta_rk4,theta_eq6,theta_eq8,s_plus,s_minus
void write_lineshape_csv(std::ostream& os, const harness::LineshapeTable& table, const Metadata& meta);
// Long form: eta,d_b,theta_rk4,theta_eq6
void write_surface_csv(std::ostream& os, const harness::Surface& surface, const Metadata& meta);

[[nodiscard]] nlohmann::ordered_json lineshape_json(const harness::LineshapeTable& table);
[[nodiscard]] nlohmann::ordered_json surface_json(const harness::Surface& surface);
[[nodiscard]] nlohmann::ordered_json trajectory_json(const Trajectory& t);
// {c0_fit, residual_rms, peak_deviation_fraction, spec{...}, ...}
[[nodiscard]] nlohmann::ordered_json fit_report_json(const harness::FitReport& rep);
[[nodiscard]] nlohmann::ordered_json oracle_report_json(const oracle::Report& rep);

void render_lineshape_svg(std::ostream& os, const harness::LineshapeTable& table, const std::string& title);
void render_surface_svg(std::ostream& os, const harness::Surface& surface, const std::string& title);
void render_trajectory_svg(std::ostream& os, const Trajectory& t, const std::string& title);

}  // namespace nmore::io
