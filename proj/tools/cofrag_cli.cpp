// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
//
// cofrag <verb> --config FILE [--seed N] [--replicas N] [--out DIR]
//              [--format csv|json-lines] [--workers N]
//
// Exit codes: 0 ok, 2 invalid input, 3 numeric failure, 4 failed verdict.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cofrag/cofrag.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replicas;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::size_t workers = 0;
};

int execute(cofrag::Mode mode, const Flags& f) {
  try {
    auto spec = cofrag::load_spec_file(f.config, mode);
    if (f.seed) spec.sim.seed = *f.seed;
    if (f.replicas) {
      if (*f.replicas < 1) throw cofrag::ValidationError({"--replicas: must be >= 1"});
      spec.sim.replicas = *f.replicas;
    }
    if (f.out) spec.output.dir = *f.out;
    if (f.format) spec.output.format = *f.format;
    cofrag::normalize(spec);
    const std::size_t workers = f.workers > 0 ? f.workers : cofrag::default_workers();
    const auto outcome = cofrag::run(spec, workers);
    for (const auto& v : outcome.verdicts)
      std::cout << v.name << ": " << (v.pass ? "PASS" : "FAIL") << " (value " << v.value << ", bound " << v.bound
                << (v.gating ? "" : ", informative") << ")\n";
    std::cout << "wrote";
    for (const auto& file : outcome.files) std::cout << ' ' << spec.output.dir << '/' << file;
    std::cout << '\n';
    return outcome.exit_code;
  } catch (const cofrag::ValidationError& e) {
    std::cerr << "invalid configuration (" << e.issues().size() << " problem(s)):\n";
    for (const auto& issue : e.issues()) std::cerr << "  " << issue << '\n';
    return cofrag::kExitValidation;
  } catch (const cofrag::Error& e) {
    std::cerr << e.what() << '\n';
    return cofrag::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cofrag::kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact simulation and verification of coalescence-fragmentation particle systems"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, cofrag::Mode> verbs[] = {
      {"simulate", cofrag::Mode::kSimulate}, {"couple", cofrag::Mode::kCouple}, {"verify", cofrag::Mode::kVerify},
      {"oracle", cofrag::Mode::kOracle},     {"bounds", cofrag::Mode::kBounds},
  };
  std::optional<cofrag::Mode> chosen;
  for (const auto& [name, mode] : verbs) {
    auto* sub = app.add_subcommand(name, std::string("run the '") + name + "' experiment");
    sub->add_option("--config", flags.config, "experiment file (JSON)")->required();
    sub->add_option("--seed", flags.seed, "override the seed");
    sub->add_option("--replicas", flags.replicas, "override the replica count");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--format", flags.format, "event format")->check(CLI::IsMember({"csv", "json-lines"}));
    sub->add_option("--workers", flags.workers, "worker threads (default: all cores, capped by COFRAG_MAX_WORKERS)");
    sub->callback([&chosen, m = mode] { chosen = m; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cofrag::kExitValidation;
  }
  return execute(*chosen, flags);
}
