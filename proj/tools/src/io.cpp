#include "io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ofbm/version.hpp"

namespace ofbmtool {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* f, ...) {
  char buf[128];
  va_list args;
  va_start(args, f);
  vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

// Plot box shared by both charts.
struct Frame {
  double width = 860, height = 520;
  double left = 72, right = 24, top = 36, bottom = 54;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;  // data ranges

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }

  std::string open(const std::string& title) const {
    std::string s =
        fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
            "viewBox=\"0 0 %.0f %.0f\" font-family=\"monospace\" font-size=\"12\">\n",
            width, height, width, height);
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += fmt("<text x=\"%.1f\" y=\"20\" font-size=\"14\">", left) + title + "</text>\n";
    s += fmt("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
             "stroke=\"#333\"/>\n",
             left, top, width - left - right, height - top - bottom);
    return s;
  }

  std::string xtick(double x, const std::string& label) const {
    std::string s = fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ccc\"/>\n",
                        px(x), top, px(x), height - bottom);
    s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", px(x), height - bottom + 18) +
         label + "</text>\n";
    return s;
  }

  std::string ytick(double y, const std::string& label) const {
    std::string s = fmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ccc\"/>\n",
                        left, py(y), width - right, py(y));
    s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">", left - 6, py(y) + 4) + label +
         "</text>\n";
    return s;
  }
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

double safe_json_double(const json& v) {
  return v.is_number() ? v.get<double>() : std::nan("");
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string scheme_name(ofbm::diagnostics::Scheme s) {
  switch (s) {
    case ofbm::diagnostics::Scheme::kTelegraph: return "telegraph";
    case ofbm::diagnostics::Scheme::kPartialSums: return "partial-sums";
    default: return "exact";
  }
}

std::string paths_csv(const std::vector<ofbm::GridPath>& paths) {
  if (paths.empty()) throw ConfigError("no paths to write");
  const int d = paths.front().d;
  std::string out = "replicate,t";
  for (int k = 0; k < d; ++k) out += fmt(",x_%d", k + 1);
  out += "\n";
  char buf[64];
  for (const ofbm::GridPath& p : paths) {
    for (int i = 0; i < p.points(); ++i) {
      out += fmt("%llu", static_cast<unsigned long long>(p.replicate));
      snprintf(buf, sizeof buf, ",%.17g", p.grid[size_t(i)]);
      out += buf;
      for (int k = 0; k < d; ++k) {
        snprintf(buf, sizeof buf, ",%.17g", p.value(i, k));
        out += buf;
      }
      out += "\n";
    }
  }
  return out;
}

std::vector<ofbm::GridPath> read_paths_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  const std::vector<std::string> head = split_csv(line);
  if (head.size() < 3 || head[0] != "replicate" || head[1] != "t")
    throw ConfigError(path + ": expected header replicate,t,x_1,...");
  const int d = static_cast<int>(head.size()) - 2;

  std::vector<ofbm::GridPath> paths;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> tok = split_csv(line);
    if (static_cast<int>(tok.size()) != d + 2)
      throw ConfigError(fmt("%s:%ld: expected %d fields", path.c_str(), lineno, d + 2));
    char* end = nullptr;
    const unsigned long long rep = std::strtoull(tok[0].c_str(), &end, 10);
    if (end == tok[0].c_str() || *end) throw ConfigError(fmt("%s:%ld: bad replicate", path.c_str(), lineno));
    std::vector<double> vals(size_t(d) + 1);
    for (int k = 0; k <= d; ++k) {
      vals[size_t(k)] = std::strtod(tok[size_t(k) + 1].c_str(), &end);
      if (end == tok[size_t(k) + 1].c_str() || *end)
        throw ConfigError(fmt("%s:%ld: bad number", path.c_str(), lineno));
    }
    if (paths.empty() || paths.back().replicate != rep) {
      ofbm::GridPath p;
      p.d = d;
      p.replicate = rep;
      paths.push_back(std::move(p));
    }
    paths.back().grid.push_back(vals[0]);
    for (int k = 0; k < d; ++k) paths.back().values.push_back(vals[size_t(k) + 1]);
  }
  if (paths.empty()) throw ConfigError(path + ": no data rows");
  for (const ofbm::GridPath& p : paths)
    if (p.grid != paths.front().grid)
      throw ConfigError(path + ": replicates disagree on the time grid");
  return paths;
}

json report_json(const ofbm::diagnostics::ConvergenceReport& r, const json& config_echo) {
  json doc = json::object();
  doc["scheme"] = scheme_name(r.scheme);
  doc["z_threshold"] = r.z_threshold;
  json levels = json::array();
  for (const ofbm::diagnostics::LevelResult& lr : r.levels) {
    json l = json::object();
    l["level"] = lr.level;
    l["max_abs_err"] = lr.max_abs_err;
    l["max_se"] = lr.max_se;
    l["max_z"] = lr.max_z;
    l["pass"] = lr.pass;
    l["fitted_scale"] = lr.fitted_scale;
    l["limit_max_z"] = lr.limit_max_z;
    l["oracle_gap"] = lr.oracle_gap;
    levels.push_back(std::move(l));
  }
  doc["levels"] = std::move(levels);
  doc["structural"] = {{"self_similarity_z", r.structural.self_similarity_z},
                       {"reversibility_z", r.structural.reversibility_z},
                       {"holder_slope", r.structural.holder_slope},
                       {"gaussianity_z", r.structural.gaussianity_z}};
  doc["trend"] = {{"present", r.has_trend}, {"decreasing", r.trend_decreasing}};
  doc["all_pass"] = r.all_pass;
  doc["config_echo"] = config_echo;
  doc["tool_version"] = ofbm::kVersion;
  return doc;
}

std::string svg_paths(const std::vector<ofbm::GridPath>& paths, int max_shown) {
  if (paths.empty()) throw ConfigError("no paths to plot");
  const int shown = std::min<long>(max_shown, static_cast<long>(paths.size()));
  const int d = paths.front().d;

  Frame f;
  f.x0 = paths.front().grid.front();
  f.x1 = paths.front().grid.back();
  double lo = 0.0, hi = 0.0;
  for (int r = 0; r < shown; ++r)
    for (double v : paths[size_t(r)].values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  f.y0 = lo - pad;
  f.y1 = hi + pad;

  std::string s = f.open(fmt("paths: %d of %zu replicates, d=%d", shown, paths.size(), d));
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4;
    s += f.xtick(x, fmt("%.3g", x));
    s += f.ytick(y, fmt("%.3g", y));
  }
  s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">t</text>\n",
           (f.px(f.x0) + f.px(f.x1)) / 2, f.height - 12);
  for (int r = 0; r < shown; ++r) {
    const ofbm::GridPath& p = paths[size_t(r)];
    for (int k = 0; k < d; ++k) {
      s += fmt("<polyline fill=\"none\" stroke=\"%s\" stroke-opacity=\"0.65\" points=\"",
               kPalette[k % 8]);
      for (int i = 0; i < p.points(); ++i)
        s += fmt("%.2f,%.2f ", f.px(p.grid[size_t(i)]), f.py(p.value(i, k)));
      s += "\"/>\n";
    }
  }
  for (int k = 0; k < d; ++k)
    s += fmt("<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">x_%d</text>\n", f.width - 80.0,
             f.top + 16.0 + 16.0 * k, kPalette[k % 8], k + 1);
  s += "</svg>\n";
  return s;
}

std::string svg_errors(const json& report) {
  struct Pt {
    double lx, ly;
    long level;
  };
  std::vector<Pt> err, gap;
  try {
    for (const json& l : report.at("levels")) {
      const long level = l.at("level").get<long>();
      if (level < 1) continue;
      const double e = safe_json_double(l.at("max_abs_err"));
      const double g = l.contains("oracle_gap") ? safe_json_double(l.at("oracle_gap")) : 0.0;
      if (std::isfinite(e) && e > 0)
        err.push_back({std::log10(double(level)), std::log10(e), level});
      if (std::isfinite(g) && g > 0)
        gap.push_back({std::log10(double(level)), std::log10(g), level});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("report document: ") + e.what());
  }
  if (err.size() < 1) return "";

  Frame f;
  f.x0 = err.front().lx;
  f.x1 = err.back().lx;
  if (f.x1 - f.x0 < 1e-9) {
    f.x0 -= 0.5;
    f.x1 += 0.5;
  }
  double lo = err.front().ly, hi = err.front().ly;
  for (const Pt& p : err) {
    lo = std::min(lo, p.ly);
    hi = std::max(hi, p.ly);
  }
  for (const Pt& p : gap) {
    lo = std::min(lo, p.ly);
    hi = std::max(hi, p.ly);
  }
  f.y0 = lo - 0.5;
  f.y1 = hi + 0.5;

  std::string scheme = report.contains("scheme") && report.at("scheme").is_string()
                           ? report.at("scheme").get<std::string>()
                           : "";
  std::string s = f.open("covariance error vs level (log-log)" +
                         (scheme.empty() ? "" : ", scheme " + scheme));
  for (const Pt& p : err) s += f.xtick(p.lx, fmt("%ld", p.level));
  for (int k = static_cast<int>(std::ceil(f.y0)); k <= static_cast<int>(std::floor(f.y1)); ++k)
    s += f.ytick(double(k), fmt("1e%d", k));

  auto series = [&](const std::vector<Pt>& pts, const char* color, const char* label, int slot) {
    if (pts.empty()) return std::string();
    std::string out = fmt("<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.5\" points=\"",
                          color);
    for (const Pt& p : pts) out += fmt("%.2f,%.2f ", f.px(p.lx), f.py(p.ly));
    out += "\"/>\n";
    for (const Pt& p : pts)
      out += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", f.px(p.lx), f.py(p.ly),
                 color);
    out += fmt("<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", f.width - 200.0,
               f.top + 16.0 + 16.0 * slot, color, label);
    return out;
  };
  s += series(err, kPalette[0], "empirical max abs error", 0);
  s += series(gap, kPalette[1], "finite-level vs limit gap", 1);
  s += fmt("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">level</text>\n",
           (f.px(f.x0) + f.px(f.x1)) / 2, f.height - 12);
  s += "</svg>\n";
  return s;
}

}  // namespace ofbmtool
