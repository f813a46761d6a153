#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ofbm/diagnostics.hpp"
#include "ofbm/matrix.hpp"
#include "ofbm/quadrature.hpp"

namespace ofbmtool {

using json = nlohmann::ordered_json;

// Anything wrong with the configuration itself (file, JSON, keys, shapes,
// ranges, scheme mismatches). Maps to exit code 2; errors thrown by the core
// once a config has been accepted map to 3 or 4 instead.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// What the calling subcommand needs from the config. kModel* only require the
// model block; the sampling modes additionally pin the scheme and apply the
// scheme's required/forbidden key rules.
enum class Mode {
  kModelValidate,  // D, A1, A2
  kModelGamma,     // D
  kExact,
  kTelegraph,
  kPartialSums,
  kVerify,  // scheme from config or --scheme
};

struct GridSpec {
  double t_max = 1.0;
  int points = 9;
  bool dyadic = true;
};

// Fully resolved configuration: defaults applied, shapes checked. echo() is the
// canonical re-serialization embedded in reports, independent of the input key
// order.
struct RunConfig {
  std::string scheme;  // "telegraph" | "partial-sums" | "exact"; empty in model modes
  int d = 0;
  ofbm::Matrix dexp, a1, a2, gamma;  // gamma only when given explicitly
  std::vector<double> hurst, scales;
  GridSpec grid;
  std::vector<long> levels;
  long replicates = 0;
  std::uint64_t seed = 12345;
  ofbm::QuadratureConfig quad;
  double z_threshold = 5.0;
  double self_similarity_c = 2.0;
  int holder_moment = 2;

  std::vector<double> make_grid() const;
  ofbm::model::OfbmSpec make_spec() const;  // identity/zero coefficients when absent
  ofbm::diagnostics::StudyConfig study() const;
  json echo() const;
};

json load_json_file(const std::string& path);

// Built-in document used when no --config is given; holds just the model block,
// the usual defaulting fills the rest.
json default_doc(Mode mode, const std::string& scheme_flag);

struct Overrides {
  std::string scheme;  // --scheme (verify)
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_replicates = false;
  long replicates = 0;
  bool has_levels = false;
  std::vector<long> levels;
};

RunConfig parse_config(const json& doc, Mode mode, const Overrides& ov);

}  // namespace ofbmtool
