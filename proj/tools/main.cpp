#include <CLI11.hpp>

#include "finsdet/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "finsdet - Randers geometry, deterministic flows, indicatrix "
      "averaging, and a toy spectral model on a periodic grid"};
  app.require_subcommand(1);

  finsdet::CliOptions opt;
  long seed = 0, samples = 0;

  const char* verbs[] = {"validate", "eval",     "tensors", "connections",
                         "average",  "flow",     "spectrum", "compose",
                         "report"};
  for (const char* verb : verbs) {
    CLI::App* sub = app.add_subcommand(verb);
    if (std::string(verb) != "report")
      sub->add_option("--config", opt.config_path, "experiment config file")
          ->required();
    sub->add_option("--out", opt.out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override every seed in the config");
    sub->add_option("--samples", samples, "override sample counts");
    sub->callback([&opt, verb, sub, &seed, &samples] {
      opt.verb = verb;
      if (sub->count("--seed")) opt.seed = seed;
      if (sub->count("--samples")) opt.samples = samples;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : finsdet::kUsage;
  }
  return finsdet::run_experiment(opt);
}
