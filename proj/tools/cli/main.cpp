#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "deferkit/error.hpp"
#include "deferkit/version.hpp"

namespace {

using namespace deferkit;
using namespace deferkit::cli;

struct Command {
  const char* name;
  const char* help;
  nlohmann::json (*defaults)();
  int (*run)(const RunConfig&);
};

const Command kCommands[] = {
    {"gen", "generate a dataset and expert predictions", gen_defaults, run_gen},
    {"train-policy", "train the top-k policy", train_policy_defaults, run_train_policy},
    {"train-cardinality", "train the cardinality model against a frozen policy",
     train_cardinality_defaults, run_train_cardinality},
    {"eval", "evaluate a policy, optionally with a cardinality model", eval_defaults, run_eval},
    {"sweep", "fixed-k and lambda-grid frontiers", sweep_defaults, run_sweep},
    {"verify", "run the property suites", verify_defaults, run_verify},
};

int report(const char* kind, const std::exception& e, int code) {
  std::fprintf(stderr, "deferkit: %s: %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-k and adaptive top-k learning to defer"};
  app.set_version_flag("--version", std::string(deferkit::kVersion));
  app.require_subcommand(1);

  struct Parsed {
    std::string config_path;
    std::string out;
    std::string checks;
  };
  std::vector<Parsed> parsed(std::size(kCommands));
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(kCommands); ++i) {
    auto* sub = app.add_subcommand(kCommands[i].name, kCommands[i].help);
    sub->allow_extras();
    sub->add_option("--config", parsed[i].config_path, "JSON config or a previous manifest");
    sub->add_option("--out", parsed[i].out, "output directory");
    if (std::string(kCommands[i].name) == "verify") {
      sub->add_option("--checks", parsed[i].checks, "comma-separated suites");
    }
    sub->footer("Any default key can be set as key=value or --key=value.");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      RunConfig config(kCommands[i].name, kCommands[i].defaults());
      if (!parsed[i].config_path.empty()) config.merge_file(parsed[i].config_path);
      config.merge_env_seed();
      if (!parsed[i].out.empty()) config.set_from_text("out", parsed[i].out);
      if (!parsed[i].checks.empty()) config.set_from_text("checks", parsed[i].checks);
      for (const auto& extra : subs[i]->remaining()) config.apply_override(extra);
      return kCommands[i].run(config);
    }
  } catch (const ConfigError& e) {
    return report("config error", e, 2);
  } catch (const ArgumentError& e) {
    return report("invalid argument", e, 2);
  } catch (const LookupError& e) {
    return report("lookup error", e, 2);
  } catch (const OutputKindError& e) {
    return report("output kind mismatch", e, 2);
  } catch (const DomainError& e) {
    return report("domain error", e, 2);
  } catch (const NumericalError& e) {
    return report("numerical failure", e, 3);
  } catch (const std::exception& e) {
    return report("error", e, 1);
  }
  return 1;
}
