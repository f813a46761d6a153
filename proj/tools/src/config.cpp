#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ofbm/error.hpp"
#include "ofbm/model.hpp"

namespace ofbmtool {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, const char* where, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(std::string("unknown key \"") + it.key() + "\" in " + where);
}

double get_double(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail("\"" + key + "\" must be a number");
  return v.get<double>();
}

long get_long(const json& obj, const std::string& key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail("\"" + key + "\" must be an integer");
  return v.get<long>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail("\"" + key + "\" must be a boolean");
  return v.get<bool>();
}

std::vector<double> get_vector(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) fail("\"" + key + "\" must be a nonempty array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) fail("\"" + key + "\" must contain numbers only");
    const double x = e.get<double>();
    if (!std::isfinite(x)) fail("\"" + key + "\" must be finite");
    out.push_back(x);
  }
  return out;
}

ofbm::Matrix get_matrix(const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) fail("\"" + key + "\" must be an array of rows");
  const int n = static_cast<int>(v.size());
  ofbm::Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = v.at(size_t(i));
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      fail("\"" + key + "\" must be square (row " + std::to_string(i) + ")");
    for (int j = 0; j < n; ++j) {
      const json& e = row.at(size_t(j));
      if (!e.is_number()) fail("\"" + key + "\" must contain numbers only");
      m(i, j) = e.get<double>();
      if (!std::isfinite(m(i, j))) fail("\"" + key + "\" must be finite");
    }
  }
  return m;
}

json matrix_json(const ofbm::Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

bool is_pow2(long v) { return v >= 1 && (v & (v - 1)) == 0; }

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
  if (!doc.is_object()) fail(path + ": top level must be a JSON object");
  return doc;
}

json default_doc(Mode mode, const std::string& scheme_flag) {
  std::string scheme = scheme_flag;
  if (scheme.empty()) {
    if (mode == Mode::kExact) scheme = "exact";
    if (mode == Mode::kTelegraph) scheme = "telegraph";
    if (mode == Mode::kPartialSums) scheme = "partial-sums";
  }
  json doc = json::object();
  if (mode == Mode::kModelValidate || mode == Mode::kModelGamma || scheme == "telegraph") {
    doc["D"] = {{0.5}};
    doc["A1"] = {{1.0}};
    doc["A2"] = {{0.0}};
  } else if (scheme == "exact") {
    doc["D"] = {{0.7, 0.0}, {0.0, 0.6}};
  } else if (scheme == "partial-sums") {
    doc["hurst"] = {0.7, 0.6};
  }
  return doc;
}

RunConfig parse_config(const json& doc, Mode mode, const Overrides& ov) {
  check_keys(doc, "config",
             {"scheme", "d", "D", "A1", "A2", "Gamma", "hurst", "scales", "grid", "levels",
              "replicates", "seed", "quadrature", "z_threshold", "self_similarity_c",
              "holder_moment"});

  RunConfig cfg;

  // Scheme resolution. Sampling subcommands imply theirs; verify takes the
  // config's or the flag's, which must agree when both are present.
  std::string doc_scheme;
  if (doc.contains("scheme")) {
    const json& v = doc.at("scheme");
    if (!v.is_string()) fail("\"scheme\" must be a string");
    doc_scheme = v.get<std::string>();
    require(doc_scheme == "telegraph" || doc_scheme == "partial-sums" || doc_scheme == "exact",
            "\"scheme\" must be one of telegraph, partial-sums, exact");
  }
  std::string implied;
  if (mode == Mode::kExact) implied = "exact";
  if (mode == Mode::kTelegraph) implied = "telegraph";
  if (mode == Mode::kPartialSums) implied = "partial-sums";
  if (mode == Mode::kVerify) implied = ov.scheme;
  if (!implied.empty() && !doc_scheme.empty() && implied != doc_scheme)
    fail("scheme \"" + doc_scheme + "\" in config conflicts with \"" + implied + "\"");
  cfg.scheme = implied.empty() ? doc_scheme : implied;
  const bool sampling = mode != Mode::kModelValidate && mode != Mode::kModelGamma;
  if (sampling && cfg.scheme.empty())
    fail("scheme required (set \"scheme\" in the config or pass --scheme)");

  // Model block.
  if (doc.contains("D")) cfg.dexp = get_matrix(doc.at("D"), "D");
  if (doc.contains("A1")) cfg.a1 = get_matrix(doc.at("A1"), "A1");
  if (doc.contains("A2")) cfg.a2 = get_matrix(doc.at("A2"), "A2");
  if (doc.contains("Gamma")) cfg.gamma = get_matrix(doc.at("Gamma"), "Gamma");
  if (doc.contains("hurst")) cfg.hurst = get_vector(doc.at("hurst"), "hurst");
  if (doc.contains("scales")) cfg.scales = get_vector(doc.at("scales"), "scales");

  if (mode == Mode::kModelValidate)
    require(cfg.dexp.rows() && cfg.a1.rows() && cfg.a2.rows(), "validate needs D, A1 and A2");
  if (mode == Mode::kModelGamma) require(cfg.dexp.rows() > 0, "gamma needs D");
  if (cfg.scheme == "telegraph" && sampling) {
    require(cfg.dexp.rows() && cfg.a1.rows() && cfg.a2.rows(),
            "telegraph scheme needs D, A1 and A2");
    require(cfg.hurst.empty() && cfg.scales.empty() && !cfg.gamma.rows(),
            "telegraph scheme takes no hurst/scales/Gamma");
  }
  if (cfg.scheme == "exact" && sampling) {
    require(cfg.dexp.rows() > 0, "exact scheme needs D");
    require(!cfg.a1.rows() && !cfg.a2.rows() && cfg.hurst.empty() && cfg.scales.empty(),
            "exact scheme takes only D (and optionally Gamma)");
    if (mode == Mode::kVerify)
      require(cfg.gamma.rows() == 0,
              "verify derives the exact-scheme covariance itself; drop \"Gamma\"");
  }
  if (cfg.scheme == "partial-sums" && sampling) {
    require(!cfg.hurst.empty(), "partial-sums scheme needs hurst");
    require(!cfg.dexp.rows() && !cfg.a1.rows() && !cfg.a2.rows() && !cfg.gamma.rows(),
            "partial-sums scheme takes hurst/scales, not D/A1/A2/Gamma");
  }

  // Dimension: inferred, cross-checked against an explicit "d".
  int d = 0;
  if (cfg.dexp.rows()) d = cfg.dexp.rows();
  if (!cfg.hurst.empty()) d = static_cast<int>(cfg.hurst.size());
  const long d_key = get_long(doc, "d", d);
  require(d_key == d, "\"d\" disagrees with the model block");
  require(d >= 1, "model block missing (need D or hurst)");
  cfg.d = d;
  auto check_dim = [&](const ofbm::Matrix& m, const char* name) {
    if (m.rows() && m.rows() != d) fail(std::string(name) + " must be " + std::to_string(d) + "x" +
                                        std::to_string(d));
  };
  check_dim(cfg.a1, "A1");
  check_dim(cfg.a2, "A2");
  check_dim(cfg.gamma, "Gamma");
  if (!cfg.scales.empty() && static_cast<int>(cfg.scales.size()) != d)
    fail("scales must have one entry per component");
  if (!cfg.hurst.empty() && cfg.scales.empty()) cfg.scales.assign(size_t(d), 1.0);

  // Grid.
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    if (!g.is_object()) fail("\"grid\" must be an object");
    check_keys(g, "grid", {"t_max", "points", "dyadic"});
    cfg.grid.t_max = get_double(g, "t_max", cfg.grid.t_max);
    cfg.grid.points = static_cast<int>(get_long(g, "points", cfg.grid.points));
    cfg.grid.dyadic = get_bool(g, "dyadic", cfg.grid.dyadic);
  }
  require(cfg.grid.points >= 2 && cfg.grid.points <= 4097, "grid.points must lie in [2, 4097]");
  require(cfg.grid.t_max > 0.0 && cfg.grid.t_max <= 1.0, "grid.t_max must lie in (0, 1]");
  if (cfg.grid.dyadic)
    require(is_pow2(cfg.grid.points - 1), "dyadic grid needs points - 1 to be a power of two");

  // Quadrature; telegraph gets a smaller default frequency cutoff because the
  // cost of a replicate is linear in x_max.
  cfg.quad.x_max = (cfg.scheme == "telegraph") ? 64.0 : cfg.quad.x_max;
  if (doc.contains("quadrature")) {
    const json& q = doc.at("quadrature");
    if (!q.is_object()) fail("\"quadrature\" must be an object");
    check_keys(q, "quadrature", {"x_max", "rel_tol", "panels_near_zero", "grading_ratio"});
    cfg.quad.x_max = get_double(q, "x_max", cfg.quad.x_max);
    cfg.quad.rel_tol = get_double(q, "rel_tol", cfg.quad.rel_tol);
    cfg.quad.panels_near_zero =
        static_cast<int>(get_long(q, "panels_near_zero", cfg.quad.panels_near_zero));
    cfg.quad.grading_ratio = get_double(q, "grading_ratio", cfg.quad.grading_ratio);
  }
  try {
    cfg.quad.validate();
  } catch (const ofbm::Error& e) {
    fail(e.what());
  }

  // Study knobs.
  if (doc.contains("levels")) {
    const json& v = doc.at("levels");
    if (!v.is_array()) fail("\"levels\" must be an array of integers");
    for (const json& e : v) {
      if (!e.is_number_integer()) fail("\"levels\" must contain integers");
      cfg.levels.push_back(e.get<long>());
    }
  } else if (cfg.scheme == "telegraph") {
    cfg.levels = {10, 100};
  } else if (cfg.scheme == "partial-sums") {
    cfg.levels = {256, 1024, 4096};
  }
  for (size_t i = 0; i < cfg.levels.size(); ++i) {
    require(cfg.levels[i] >= 1, "levels must be >= 1");
    if (i) require(cfg.levels[i - 1] < cfg.levels[i], "levels must be strictly increasing");
  }

  cfg.replicates = get_long(doc, "replicates", cfg.scheme == "telegraph" ? 500 : 5000);
  require(cfg.replicates >= 2, "replicates must be >= 2");
  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail("\"seed\" must be a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.z_threshold = get_double(doc, "z_threshold", cfg.z_threshold);
  require(cfg.z_threshold > 0.0, "z_threshold must be positive");
  cfg.self_similarity_c = get_double(doc, "self_similarity_c", cfg.self_similarity_c);
  require(cfg.self_similarity_c > 0.0, "self_similarity_c must be positive");
  cfg.holder_moment = static_cast<int>(get_long(doc, "holder_moment", cfg.holder_moment));
  require(cfg.holder_moment == 2 || cfg.holder_moment == 4, "holder_moment must be 2 or 4");

  // Command-line overrides land last so they also override config values.
  if (ov.has_seed) cfg.seed = ov.seed;
  if (ov.has_replicates) {
    require(ov.replicates >= 2, "--replicates must be >= 2");
    cfg.replicates = ov.replicates;
  }
  if (ov.has_levels) {
    for (size_t i = 0; i < ov.levels.size(); ++i) {
      require(ov.levels[i] >= 1, "--levels must be >= 1");
      if (i) require(ov.levels[i - 1] < ov.levels[i], "--levels must be strictly increasing");
    }
    cfg.levels = ov.levels;
  }
  if (sampling && cfg.scheme != "exact")
    require(!cfg.levels.empty(), "at least one level required");

  return cfg;
}

std::vector<double> RunConfig::make_grid() const {
  std::vector<double> g(size_t(grid.points));
  for (int i = 0; i < grid.points; ++i) g[size_t(i)] = grid.t_max * i / (grid.points - 1);
  g[0] = 0.0;
  return g;
}

ofbm::model::OfbmSpec RunConfig::make_spec() const {
  const ofbm::Matrix one = ofbm::Matrix::identity(d);
  const ofbm::Matrix zero(d, d);
  return ofbm::model::make_spec(dexp.rows() ? dexp : ofbm::Matrix::diag(hurst),
                                a1.rows() ? a1 : one, a2.rows() ? a2 : zero, scheme);
}

ofbm::diagnostics::StudyConfig RunConfig::study() const {
  ofbm::diagnostics::StudyConfig s;
  if (scheme == "telegraph") {
    s.scheme = ofbm::diagnostics::Scheme::kTelegraph;
    s.spec = make_spec();
  } else if (scheme == "exact") {
    s.scheme = ofbm::diagnostics::Scheme::kExact;
    s.spec = make_spec();
  } else {
    s.scheme = ofbm::diagnostics::Scheme::kPartialSums;
    s.cov = ofbm::partial_sums::StationaryCovSeq::fgn_diagonal(hurst, scales);
  }
  s.levels = levels;
  s.grid = make_grid();
  s.replicates = replicates;
  s.seed = seed;
  s.quad = quad;
  s.z_threshold = z_threshold;
  s.self_similarity_c = self_similarity_c;
  s.holder_moment = holder_moment;
  return s;
}

json RunConfig::echo() const {
  json e = json::object();
  if (!scheme.empty()) e["scheme"] = scheme;
  e["d"] = d;
  if (dexp.rows()) e["D"] = matrix_json(dexp);
  if (a1.rows()) e["A1"] = matrix_json(a1);
  if (a2.rows()) e["A2"] = matrix_json(a2);
  if (gamma.rows()) e["Gamma"] = matrix_json(gamma);
  if (!hurst.empty()) e["hurst"] = hurst;
  if (!scales.empty()) e["scales"] = scales;
  e["grid"] = {{"t_max", grid.t_max}, {"points", grid.points}, {"dyadic", grid.dyadic}};
  if (!levels.empty()) e["levels"] = levels;
  e["replicates"] = replicates;
  e["seed"] = seed;
  e["quadrature"] = {{"x_max", quad.x_max},
                     {"rel_tol", quad.rel_tol},
                     {"panels_near_zero", quad.panels_near_zero},
                     {"grading_ratio", quad.grading_ratio}};
  e["z_threshold"] = z_threshold;
  e["self_similarity_c"] = self_similarity_c;
  e["holder_moment"] = holder_moment;
  return e;
}

}  // namespace ofbmtool
