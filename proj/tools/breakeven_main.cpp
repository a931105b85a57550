// breakeven: quadratic break-even model and spectral training diagnostics.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "breakeven/commands.hpp"
#include "breakeven/config.hpp"
#include "breakeven/error.hpp"

using namespace breakeven;

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta;
  std::optional<std::size_t> batch_size;
  std::optional<double> momentum;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> eval_every;
};

void add_common(CLI::App* sub, Flags& f, bool run_overrides) {
  sub->add_option("--config", f.config, "JSON config file")->required();
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--seed", f.seed, "override the base seed (u64)");
  sub->add_flag("--quiet", f.quiet, "suppress progress messages");
  sub->add_option("--eta", f.eta, run_overrides ? "learning rate" : "single learning rate");
  sub->add_option("--batch-size", f.batch_size, "batch size");
  if (run_overrides) {
    sub->add_option("--momentum", f.momentum, "momentum beta in [0, 1)");
    sub->add_option("--epochs", f.epochs, "number of epochs");
    sub->add_option("--eval-every", f.eval_every, "instrumentation cadence in steps");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"breakeven: SGD break-even model and training spectra"};
  app.footer(output_columns_help());
  app.require_subcommand(1);

  Flags flags;
  auto* simulate = app.add_subcommand("simulate", "quadratic model: phase diagram, break-even table, Monte-Carlo check");
  auto* train = app.add_subcommand("train", "train one MLP with spectral instrumentation");
  auto* sweep = app.add_subcommand("sweep", "run a hyperparameter axis over seeds and emit verdicts");
  auto* report = app.add_subcommand("report", "SVG panels and a Markdown summary from JSONL logs");
  add_common(simulate, flags, false);
  add_common(train, flags, true);
  add_common(sweep, flags, true);
  add_common(report, flags, false);
  for (auto* sub : {simulate, train, sweep, report}) sub->footer(output_columns_help());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  FlagOverrides overrides;
  overrides.eta = flags.eta;
  overrides.batch_size = flags.batch_size;
  overrides.momentum = flags.momentum;
  overrides.epochs = flags.epochs;
  overrides.eval_every = flags.eval_every;
  overrides.seed = flags.seed;

  try {
    const ResolvedConfig config = parse_config(flags.config, overrides, sub);
    return run_command(config, {flags.out, flags.quiet});
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
