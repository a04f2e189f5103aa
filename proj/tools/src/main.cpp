// Copyright 2026 The snoopi-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>

#include "common.hpp"
#include "snoopi/error.hpp"
#include "snoopi/io/checkpoint.hpp"

namespace {

int fail(int code, const char* kind, const std::exception& e) {
  std::fprintf(stderr, "snoopi-lab: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace snoopi;
  CLI::App app{"Toy-scale one-step text-to-sample distillation lab", "snoopi-lab"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "print every configuration key with its default and exit");

  int exit_code = cli::kExitOk;
  cli::add_train_teacher(app, exit_code);
  cli::add_distill(app, exit_code);
  cli::add_ablate(app, exit_code);
  cli::add_sample(app, exit_code);
  cli::add_nasa_sweep(app, exit_code);
  cli::add_cfg_sweep(app, exit_code);
  cli::add_eval(app, exit_code);
  cli::add_gradcheck(app, exit_code);

  try {
    app.parse(argc, argv);
    if (print_defaults) {
      std::fputs(io::RunConfig::defaults_text().c_str(), stdout);
      return cli::kExitOk;
    }
    if (app.get_subcommands().empty()) {
      std::fputs(app.help().c_str(), stderr);
      return cli::kExitUsage;
    }
    return exit_code;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  } catch (const cli::ExitRequest& e) {
    std::fprintf(stderr, "snoopi-lab: %s\n", e.what());
    return e.code();
  } catch (const ConfigError& e) {
    return fail(cli::kExitUsage, "configuration error", e);
  } catch (const ContractViolation& e) {
    return fail(cli::kExitUsage, "invalid input", e);
  } catch (const io::FormatError& e) {
    return fail(cli::kExitUsage, "bad file", e);
  } catch (const TrainingAborted& e) {
    return fail(cli::kExitRuntime, "training aborted", e);
  } catch (const OverflowError& e) {
    return fail(cli::kExitRuntime, "numerical overflow", e);
  } catch (const DegenerateStepError& e) {
    return fail(cli::kExitRuntime, "degenerate sampler step", e);
  } catch (const std::exception& e) {
    return fail(cli::kExitRuntime, "error", e);
  }
}
