// Command-line driver: prepare | search | run | equivariance.

#include <CLI11.hpp>

#include <iostream>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/run_config.hpp"

namespace {

enum ExitCode { kSuccess = 0, kUsage = 1, kNumerical = 2 };

}  // namespace

int main(int argc, char** argv) {
  using namespace bohmchsh;

  CLI::App app{"Bohmian vs. quantum CHSH correlations for two free entangled particles"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> estimator;
  std::optional<std::size_t> samples;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides config)");
    sub->add_option("--threads", threads, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Run output directory (overrides config)");
  };
  auto* prepare = app.add_subcommand("prepare", "Build, normalize and save the initial state");
  auto* search = app.add_subcommand("search", "Scan measurement times for maximally violating states");
  auto* run = app.add_subcommand("run", "Estimate the CHSH correlations");
  auto* equivariance = app.add_subcommand("equivariance", "Check |psi|^2 equivariance of the trajectory flow");
  for (auto* sub : {prepare, search, run, equivariance}) add_common(sub);
  run->add_option("--estimator", estimator, "quantum | naive | collapse | all (overrides config)");
  run->add_option("--samples", samples, "Trajectories per cell (overrides config)");
  equivariance->add_option("--samples", samples, "Trajectory count (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kSuccess : kUsage;
  }

  try {
    auto config = cli::load_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    if (out_dir) config.output_dir = *out_dir;
    if (estimator) config.estimator = *estimator;
    if (samples) {
      if (app.get_subcommands().front() == equivariance) {
        config.equivariance_samples = *samples;
      } else {
        config.samples = *samples;
      }
    }
    config.validate();

    auto* chosen = app.get_subcommands().front();
    if (chosen == prepare) cli::cmd_prepare(config, std::cout);
    if (chosen == search) cli::cmd_search(config, std::cout);
    if (chosen == run) cli::cmd_run(config, std::cout);
    if (chosen == equivariance) cli::cmd_equivariance(config, std::cout);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kSuccess;
}
