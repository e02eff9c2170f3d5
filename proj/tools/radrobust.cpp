// radrobust: command-line front end of the pipeline.
//
//   radrobust <subcommand> --config <path> [--jobs N] [--seed S] [--out DIR]
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "radrobust/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON run configuration")->required();
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "override the config seed");
  sub->add_option("--out", c.out, "override the output directory");
  sub->add_flag("--verbose", c.verbose, "log progress and excluded patients");
  sub->add_flag("--quiet", c.quiet, "suppress warnings; errors still go to stderr");
}

radrobust::RunConfig load(const Common& c) {
  auto cfg = radrobust::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robustness-aware radiomics pipeline"};
  app.require_subcommand(1);
  Common common;
  std::vector<std::string> regime_names;

  auto* gen = app.add_subcommand("gen-synth", "write the synthetic train and test cohorts");
  auto* ext = app.add_subcommand("extract", "extract features (training cohort also on perturbed contours)");
  auto* prof = app.add_subcommand("profile", "per-feature ICC across perturbation replicates");
  auto* sel = app.add_subcommand("select", "feature selection on the whole training cohort");
  auto* eva = app.add_subcommand("evaluate", "cross-validated selection, model fit and test scoring");
  auto* rep = app.add_subcommand("report", "merge per-configuration rows into report.csv");
  auto* run = app.add_subcommand("run", "all stages in order");
  for (auto* s : {gen, ext, prof, sel, eva, rep, run}) add_common(s, common);
  sel->add_option("--regime", regime_names, "restrict to these regimes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  namespace rr = radrobust;
  if (common.verbose) rr::log::set_level(rr::log::Level::info);
  if (common.quiet) rr::log::set_sink([](rr::log::Level, const std::string&) {});
  try {
    const auto cfg = load(common);
    if (gen->parsed()) {
      rr::pipeline::gen_synth(cfg);
    } else if (ext->parsed()) {
      rr::pipeline::extract(cfg, common.jobs);
    } else if (prof->parsed()) {
      rr::pipeline::profile(cfg);
    } else if (sel->parsed()) {
      std::vector<rr::Regime> only;
      for (const auto& n : regime_names) {
        const auto r = rr::parse_regime(n);
        if (!r) throw rr::ConfigError("unknown regime '" + n + "'");
        only.push_back(*r);
      }
      rr::pipeline::select(cfg, common.jobs, only);
    } else if (eva->parsed()) {
      rr::pipeline::evaluate(cfg, common.jobs);
    } else if (rep->parsed()) {
      std::cout << rr::pipeline::report(cfg).string() << '\n';
    } else if (run->parsed()) {
      std::cout << rr::pipeline::run(cfg, common.jobs).string() << '\n';
    }
  } catch (const rr::ConfigError& e) {
    std::cerr << "radrobust: config error: " << e.what() << '\n';
    return 2;
  } catch (const rr::Error& e) {
    std::cerr << "radrobust: " << e.kind() << " error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "radrobust: io error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
