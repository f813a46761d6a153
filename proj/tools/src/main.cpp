// ofbm: sample operator-self-similar Gaussian paths and verify their laws.
//
//   ofbm validate      --config model.json        model parameter checks
//   ofbm gamma         --config model.json        print the time-1 covariance of the exact law
//   ofbm exact         --config c.json --out dir  sample from the closed-form covariance
//   ofbm telegraph     --config c.json --out dir  sample the random-sign approximation
//   ofbm partial-sums  --config c.json --out dir  sample normalized partial sums
//   ofbm verify        [--scheme s] [--config c]  convergence study -> report.json
//   ofbm plot          --paths p.csv --report r.json --out dir
//
// Exit codes: 0 ok, 1 verification failed, 2 bad config, 3 numerical failure,
// 4 invalid model. OFBM_THREADS caps worker threads (sampling is deterministic
// either way).

#include <cstdio>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "io.hpp"
#include "ofbm/diagnostics.hpp"
#include "ofbm/error.hpp"
#include "ofbm/exact_sampler.hpp"
#include "ofbm/model.hpp"
#include "ofbm/partial_sums.hpp"
#include "ofbm/telegraph.hpp"
#include "ofbm/version.hpp"

namespace {

using ofbmtool::ConfigError;
using ofbmtool::json;
using ofbmtool::Mode;
using ofbmtool::Overrides;
using ofbmtool::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  Overrides ov;
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_levels) {
  cmd->add_option("--config", args->config_path, "JSON configuration file");
  cmd->add_option("--out", args->out_dir, "output directory");
  cmd->add_option("--seed", args->ov.seed, "override the RNG seed")
      ->each([args](const std::string&) { args->ov.has_seed = true; });
  cmd->add_option("--replicates", args->ov.replicates, "override the replicate count")
      ->each([args](const std::string&) { args->ov.has_replicates = true; });
  if (with_levels)
    cmd->add_option("--levels", args->ov.levels, "override the level list")
        ->delimiter(',')
        ->each([args](const std::string&) { args->ov.has_levels = true; });
}

RunConfig load(const CommonArgs& args, Mode mode) {
  const json doc = args.config_path.empty()
                       ? ofbmtool::default_doc(mode, args.ov.scheme)
                       : ofbmtool::load_json_file(args.config_path);
  return ofbmtool::parse_config(doc, mode, args.ov);
}

std::string join_path(const std::string& dir, const char* name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

int run_validate(const CommonArgs& args) {
  const RunConfig cfg = load(args, Mode::kModelValidate);
  const ofbm::model::ValidationReport rep = ofbm::model::validate_spec(cfg.make_spec(), cfg.quad);
  for (const ofbm::model::ValidationCheck& c : rep.checks)
    std::printf("%-24s %s  %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL", c.detail.c_str());
  if (!rep.all_pass()) {
    std::fprintf(stderr, "error: model parameters rejected\n");
    return 4;
  }
  return 0;
}

int run_gamma(const CommonArgs& args) {
  const RunConfig cfg = load(args, Mode::kModelGamma);
  const ofbm::Matrix g = ofbm::model::gamma_mason_xiao(cfg.dexp, cfg.quad);
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) std::printf("%s%.6f", j ? "  " : "", g(i, j));
    std::printf("\n");
  }
  return 0;
}

int run_sample(const CommonArgs& args, Mode mode) {
  const RunConfig cfg = load(args, mode);
  const std::vector<double> grid = cfg.make_grid();

  std::function<ofbm::GridPath(std::uint64_t)> factory;
  if (mode == Mode::kExact) {
    auto sampler = std::make_shared<ofbm::exact_sampler::ExactSampler>(grid, cfg.dexp, cfg.gamma,
                                                                       cfg.quad);
    factory = [sampler, &cfg](std::uint64_t r) { return sampler->sample(cfg.seed, r); };
  } else if (mode == Mode::kTelegraph) {
    auto sampler = std::make_shared<ofbm::telegraph::TelegraphSampler>(cfg.make_spec(), grid,
                                                                       cfg.quad);
    const double n = double(cfg.levels.back());
    factory = [sampler, n, &cfg](std::uint64_t r) { return sampler->sample(n, cfg.seed, r); };
  } else {
    ofbm::partial_sums::PartialSumConfig pcfg;
    pcfg.n = cfg.levels.back();
    pcfg.dexp = ofbm::Matrix::diag(cfg.hurst);
    auto sampler = std::make_shared<ofbm::partial_sums::PartialSumSampler>(
        ofbm::partial_sums::StationaryCovSeq::fgn_diagonal(cfg.hurst, cfg.scales), pcfg, grid);
    factory = [sampler, &cfg](std::uint64_t r) { return sampler->sample(cfg.seed, r); };
  }

  const std::vector<ofbm::GridPath> paths = ofbm::diagnostics::generate_paths(factory,
                                                                              cfg.replicates);
  const std::string csv_path = join_path(args.out_dir, "paths.csv");
  ofbmtool::write_file_atomic(csv_path, ofbmtool::paths_csv(paths));
  std::printf("wrote %s (%ld replicates, %zu grid points, d=%d)\n", csv_path.c_str(),
              cfg.replicates, grid.size(), cfg.d);
  return 0;
}

int run_verify(const CommonArgs& args) {
  const RunConfig cfg = load(args, Mode::kVerify);
  const ofbm::diagnostics::ConvergenceReport rep =
      ofbm::diagnostics::run_convergence_study(cfg.study());

  const json doc = ofbmtool::report_json(rep, cfg.echo());
  const std::string report_path = join_path(args.out_dir, "report.json");
  ofbmtool::write_file_atomic(report_path, doc.dump(2) + "\n");
  const std::string svg = ofbmtool::svg_errors(doc);
  if (!svg.empty()) ofbmtool::write_file_atomic(join_path(args.out_dir, "errors.svg"), svg);

  std::printf("scheme: %s\n", ofbmtool::scheme_name(rep.scheme).c_str());
  for (const ofbm::diagnostics::LevelResult& l : rep.levels)
    std::printf("level %-8ld max_abs_err=%-12.4g max_z=%-8.3g limit_z=%-8.3g %s\n", l.level,
                l.max_abs_err, l.max_z, l.limit_max_z, l.pass ? "pass" : "FAIL");
  std::printf("structural: self_similarity_z=%.3g reversibility_z=%.3g holder_slope=%.4g "
              "gaussianity_z=%.3g\n",
              rep.structural.self_similarity_z, rep.structural.reversibility_z,
              rep.structural.holder_slope, rep.structural.gaussianity_z);
  if (rep.has_trend)
    std::printf("error trend decreasing: %s\n", rep.trend_decreasing ? "yes" : "NO");
  std::printf("all_pass: %s\nwrote %s\n", rep.all_pass ? "true" : "false", report_path.c_str());
  return rep.all_pass ? 0 : 1;
}

int run_plot(const std::string& paths_file, const std::string& report_file,
             const std::string& out_dir) {
  if (paths_file.empty() && report_file.empty())
    throw ConfigError("plot needs --paths and/or --report");
  if (!paths_file.empty()) {
    const std::vector<ofbm::GridPath> paths = ofbmtool::read_paths_csv(paths_file);
    const std::string out = join_path(out_dir, "paths.svg");
    ofbmtool::write_file_atomic(out, ofbmtool::svg_paths(paths));
    std::printf("wrote %s\n", out.c_str());
  }
  if (!report_file.empty()) {
    const json rep = ofbmtool::load_json_file(report_file);
    const std::string svg = ofbmtool::svg_errors(rep);
    if (svg.empty()) {
      std::fprintf(stderr, "error: report has no plottable levels\n");
      return 2;
    }
    const std::string out = join_path(out_dir, "errors.svg");
    ofbmtool::write_file_atomic(out, svg);
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operator fractional Brownian motion: samplers and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ofbm::kVersion));

  CommonArgs validate_args, gamma_args, exact_args, tele_args, psum_args, verify_args;
  std::string plot_paths, plot_report, plot_out = ".";

  CLI::App* c_validate = app.add_subcommand("validate", "check model parameters");
  add_common(c_validate, &validate_args, false);
  CLI::App* c_gamma = app.add_subcommand("gamma", "print the time-1 covariance of the exact law");
  add_common(c_gamma, &gamma_args, false);
  CLI::App* c_exact = app.add_subcommand("exact", "sample from the closed-form covariance");
  add_common(c_exact, &exact_args, false);
  CLI::App* c_tele = app.add_subcommand("telegraph", "sample the random-sign approximation");
  add_common(c_tele, &tele_args, true);
  CLI::App* c_psum = app.add_subcommand("partial-sums", "sample normalized partial sums");
  add_common(c_psum, &psum_args, true);
  CLI::App* c_verify = app.add_subcommand("verify", "convergence study against the target law");
  add_common(c_verify, &verify_args, true);
  c_verify->add_option("--scheme", verify_args.ov.scheme,
                       "telegraph | partial-sums | exact (defaults to the config's)");
  CLI::App* c_plot = app.add_subcommand("plot", "render SVG charts from outputs");
  c_plot->add_option("--paths", plot_paths, "paths.csv to draw");
  c_plot->add_option("--report", plot_report, "report.json to draw");
  c_plot->add_option("--out", plot_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (c_validate->parsed()) return run_validate(validate_args);
    if (c_gamma->parsed()) return run_gamma(gamma_args);
    if (c_exact->parsed()) return run_sample(exact_args, Mode::kExact);
    if (c_tele->parsed()) return run_sample(tele_args, Mode::kTelegraph);
    if (c_psum->parsed()) return run_sample(psum_args, Mode::kPartialSums);
    if (c_verify->parsed()) return run_verify(verify_args);
    if (c_plot->parsed()) return run_plot(plot_paths, plot_report, plot_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ofbm::NumericalFailureError& e) {
    std::fprintf(stderr, "error: numerical failure: %s\n", e.what());
    return 3;
  } catch (const ofbm::NotPositiveSemidefiniteError& e) {
    std::fprintf(stderr, "error: numerical failure: %s\n", e.what());
    return 3;
  } catch (const ofbm::Error& e) {
    std::fprintf(stderr, "error: invalid model: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
