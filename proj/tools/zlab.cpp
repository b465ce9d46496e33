// Command-line driver: run a canned preset or a JSON-configured experiment,
// write its error curve as CSV, or run the acceptance selftest.

#include "zlab/harness.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <string>

namespace {

struct RunArgs {
  std::string config_path;
  std::string preset_name;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_run_options(CLI::App* sub, RunArgs& args) {
  sub->add_option("--config", args.config_path,
                  "JSON experiment description");
  sub->add_option("--preset", args.preset_name, "canned experiment name");
  sub->add_option("--out", args.out_path,
                  "output CSV path (default: <name>.csv)");
  sub->add_option("--seed", args.seed, "override the experiment seed")
      ->each([&args](const std::string&) { args.seed_given = true; });
}

int run_kind(zlab::ExperimentKind kind, const RunArgs& args) {
  if (!args.config_path.empty() && !args.preset_name.empty())
    throw zlab::config_error("pass either --config or --preset, not both");
  if (args.config_path.empty() && args.preset_name.empty())
    throw zlab::config_error("one of --config or --preset is required");

  zlab::ExperimentConfig cfg = args.config_path.empty()
                                   ? zlab::preset(args.preset_name)
                                   : zlab::load_config_file(args.config_path);
  if (cfg.kind != kind)
    throw zlab::config_error("config kind '" + zlab::kind_name(cfg.kind) +
                             "' does not match the '" +
                             zlab::kind_name(kind) + "' subcommand");
  if (args.seed_given) cfg.seed = args.seed;

  const zlab::ExperimentResult result = zlab::run_experiment(cfg);
  const std::string out =
      args.out_path.empty() ? cfg.name + ".csv" : args.out_path;
  zlab::write_csv_file(result, out);
  std::cout << "experiment " << cfg.name << ": " << result.curve.size()
            << " rows -> " << out
            << (result.bound_ok ? "" : "  [bound violated]") << "\n";
  return result.bound_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for interleaved products, ergodic "
               "means, and adiabatic limits of contractions"};
  app.require_subcommand(1);

  RunArgs zeno_args, adiabatic_args, ergodic_args, bounds_args;
  CLI::App* zeno = app.add_subcommand("zeno", "interleaved product curves");
  add_run_options(zeno, zeno_args);
  CLI::App* adiabatic =
      app.add_subcommand("adiabatic", "large-gamma convergence curves");
  add_run_options(adiabatic, adiabatic_args);
  CLI::App* ergodic =
      app.add_subcommand("ergodic", "discrete ergodic mean curves");
  add_run_options(ergodic, ergodic_args);
  CLI::App* bounds =
      app.add_subcommand("bounds", "averaging-kernel bound checks");
  add_run_options(bounds, bounds_args);
  CLI::App* selftest =
      app.add_subcommand("selftest", "run the acceptance criteria");

  try {
    app.parse(argc, argv);
    if (selftest->parsed())
      return zlab::run_selftest(std::cout) == 0 ? 0 : 1;
    if (zeno->parsed())
      return run_kind(zlab::ExperimentKind::zeno, zeno_args);
    if (adiabatic->parsed())
      return run_kind(zlab::ExperimentKind::adiabatic, adiabatic_args);
    if (ergodic->parsed())
      return run_kind(zlab::ExperimentKind::ergodic, ergodic_args);
    return run_kind(zlab::ExperimentKind::bounds, bounds_args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const zlab::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const zlab::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
