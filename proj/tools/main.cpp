#include "commands.hpp"

#include "blinkica/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace blinkica;
using namespace blinkica::cli;

namespace {

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option_function<std::string>("--config", [&](const std::string& p) { flags.config = p; },
                                        "run configuration (JSON)");
  sub->add_option_function<std::string>("--out", [&](const std::string& p) { flags.out = p; },
                                        "output directory");
  sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { flags.seed = s; }, "master seed");
  sub->add_option_function<unsigned>("--workers", [&](unsigned w) { flags.workers = w; },
                                     "worker threads (0 = all cores)");
  sub->add_flag("--quick", flags.quick, "desk-scale preset for smoke runs");
  sub->add_flag("--serial-timing,!--no-serial-timing", flags.serial_timing,
                "never overlap timed fits across workers (default on)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blink-artifact ICA benchmark: synthesis, SNR sweeps, reporting"};
  app.require_subcommand(1);

  CommonFlags synth_flags, sweep_flags;
  bool resume = false;
  std::string results_path, report_out, samples_path, json_out;
  bool json_stdout = false;
  bool print_config = false;

  auto* synth = app.add_subcommand("synth", "write synthetic recordings and ground-truth sidecars");
  add_common(synth, synth_flags);
  synth->add_flag("--print-config", print_config, "print the resolved configuration and exit");

  auto* sweep = app.add_subcommand("sweep", "run the trial sweep over existing datasets");
  add_common(sweep, sweep_flags);
  sweep->add_flag("--resume", resume, "keep completed rows of an interrupted run");

  auto* report = app.add_subcommand("report", "turn a results CSV into plot-ready tables");
  report->add_option("results", results_path, "results CSV")->required();
  report->add_option("--out", report_out, "output directory (default: next to the results file)");

  auto* characterize = app.add_subcommand("characterize", "Gaussianity statistics of a single-column file");
  characterize->add_option("samples", samples_path, "single-column numeric file")->required();
  characterize->add_option("--out", json_out, "also write the report as JSON to this path");
  characterize->add_flag("--json", json_stdout, "print JSON instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUserError;
  }

  try {
    if (*synth) {
      const RunConfig cfg = resolve_config(synth_flags);
      if (print_config) {
        std::cout << run_config_to_json(cfg).dump(2) << '\n';
        return kOk;
      }
      return cmd_synth(cfg, std::cout);
    }
    if (*sweep) {
      const RunConfig cfg = resolve_config(sweep_flags);
      return cmd_sweep(cfg, SweepFlags{resume, sweep_flags.serial_timing}, std::cout, std::cerr);
    }
    if (*report) {
      std::filesystem::path out = report_out.empty()
                                      ? std::filesystem::path(results_path).parent_path()
                                      : std::filesystem::path(report_out);
      if (out.empty()) out = ".";
      return cmd_report(results_path, out, std::cout, std::cerr);
    }
    if (*characterize) {
      std::optional<std::filesystem::path> jo;
      if (!json_out.empty()) jo = json_out;
      return cmd_characterize(samples_path, jo, json_stdout, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUserError;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kUserError;
  } catch (const DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kOk;
}
