#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "ofbm/diagnostics.hpp"
#include "ofbm/grid_path.hpp"

namespace ofbmtool {

// Write-to-temp-then-rename so a crash mid-write never leaves a torn file, and
// reruns replace outputs atomically. Creates parent directories.
void write_file_atomic(const std::string& path, const std::string& content);

std::string scheme_name(ofbm::diagnostics::Scheme s);

// replicate,t,x_1,...,x_d rows at 17 significant digits (exact double round trip).
std::string paths_csv(const std::vector<ofbm::GridPath>& paths);
std::vector<ofbm::GridPath> read_paths_csv(const std::string& path);

json report_json(const ofbm::diagnostics::ConvergenceReport& r, const json& config_echo);

// Line chart of the first `max_shown` replicates, one polyline per component.
std::string svg_paths(const std::vector<ofbm::GridPath>& paths, int max_shown = 20);

// log-log chart of per-level covariance error from a report document; empty
// string when there is nothing plottable (single pseudo-level).
std::string svg_errors(const json& report);

}  // namespace ofbmtool
