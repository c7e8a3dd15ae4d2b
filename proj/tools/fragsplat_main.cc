// Command-line driver: reconstruct, eval, synth, render.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "fragsplat/core/error.h"
#include "fragsplat/pipeline/pipeline.h"
#include "fragsplat/pipeline/run_config.h"

namespace {

struct Command {
  CLI::App* app = nullptr;
  std::string config_file;
  std::map<std::string, std::string> flags;
};

// Every config key becomes a --key flag; flags override the config file.
void AddConfigFlags(Command* command) {
  command->app->add_option("-c,--config", command->config_file, "key = value config file");
  for (const std::string& key : fragsplat::ConfigKeys()) {
    command->app->add_option("--" + key, command->flags[key]);
  }
}

fragsplat::RunConfig Resolve(const Command& command) {
  fragsplat::RunConfig config;
  if (!command.config_file.empty()) {
    fragsplat::ApplyConfigFile(command.config_file, &config);
  }
  for (const auto& [key, value] : command.flags) {
    if (command.app->count("--" + key) > 0) config.Set(key, value);
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-free video reconstruction with fragment-level Gaussian splats"};
  app.require_subcommand(1);
  std::map<std::string, Command> commands;
  for (const char* name : {"reconstruct", "eval", "synth", "render"}) {
    Command& command = commands[name];
    command.app = app.add_subcommand(name);
    AddConfigFlags(&command);
  }
  commands["reconstruct"].app->description("Registration, local Gaussians and merging");
  commands["eval"].app->description("Score holdout views and the trajectory of a run");
  commands["synth"].app->description("Write a synthetic scene: frames, prior bundle, poses");
  commands["render"].app->description("Render a saved Gaussian set from a pose");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& [name, command] : commands) {
      if (!command.app->parsed()) continue;
      const fragsplat::RunConfig config = Resolve(command);
      if (name == "reconstruct") {
        fragsplat::CommandReconstruct(config);
      } else if (name == "eval") {
        fragsplat::CommandEval(config);
      } else if (name == "synth") {
        fragsplat::CommandSynth(config);
      } else {
        fragsplat::CommandRender(config);
      }
    }
  } catch (const fragsplat::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fragsplat::ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
