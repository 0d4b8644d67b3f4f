#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "spdens/spde_simulator.hpp"

namespace cli = spdens::cli;

int main(int argc, char** argv) {
  CLI::App app{"spdens: spectral functionals, lattice SPDE simulation and density diagnostics"};
  app.require_subcommand(1);

  cli::RunOptions opts;
  std::string report_dir = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "base seed (overrides simulation.seed)");
    sub->add_option("--out", opts.out, "output directory (overrides output.dir)");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* verify = app.add_subcommand("verify-hypotheses", "finiteness checks and exponent fits");
  auto* fit = app.add_subcommand("fit-exponents", "fitted exponents and functional tables");
  auto* simulate = app.add_subcommand("simulate", "replica samples of u(t, 0)");
  auto* density = app.add_subcommand("density", "density estimate and Besov diagnostics");
  auto* report = app.add_subcommand("report", "summarise the reports in an output directory");
  for (auto* sub : {verify, fit, simulate, density}) add_common(sub);
  simulate->add_flag("--exact", opts.exact, "sample the Gaussian law of the linear solution");
  density->add_option("--samples", opts.samples, "samples CSV (default <out>/samples.csv)");
  report->add_option("--out", report_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsageError;
  }

  try {
    if (report->parsed()) return cli::cmd_report(report_dir);
    auto* sub = app.get_subcommands().front();
    cli::RunContext ctx(sub->get_name(), opts);
    int rc = cli::kSuccess;
    if (sub == verify) rc = cli::cmd_verify(ctx);
    else if (sub == fit) rc = cli::cmd_fit(ctx);
    else if (sub == simulate) rc = cli::cmd_simulate(ctx);
    else rc = cli::cmd_density(ctx);
    ctx.write_manifest(rc);
    return rc;
  } catch (const spdens::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kUsageError;
  } catch (const spdens::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return cli::kUsageError;
  } catch (const spdens::InstabilityError& e) {
    std::cerr << "instability: " << e.what() << '\n';
    return cli::kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kCheckFailed;
  }
}
