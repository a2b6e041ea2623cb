// rjmc: simulate data, run the samplers, build simultaneous intervals, run
// the coverage experiment, check finite-chain bounds and emit plot data.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rjmc/commands.hpp"

namespace {

const char* describe(const std::string& cmd) {
  if (cmd == "simulate-ar") return "Simulate an autoregressive dataset with Laplace errors";
  if (cmd == "run") return "Run a sampler, write its trace and a simultaneous interval report";
  if (cmd == "coverage") return "Replicated coverage experiment on a toy AR dataset";
  if (cmd == "finite-verify") return "Check the spectral bounds on a finite chain or a random ensemble";
  return "Tab-separated plot data from a report or a trace";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reversible jump MCMC with simultaneous confidence intervals"};
  app.require_subcommand(1, 1);
  std::map<std::string, rjmc::Settings> settings;
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::string> config_path;
  for (const std::string& name : rjmc::command_names()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path[name], "key = value settings file; flags override it");
    rjmc::Settings& st = settings[name] = rjmc::default_settings(name);
    for (const rjmc::KeySpec& k : rjmc::command_keys(name)) {
      sub->add_option(std::string("--") + k.key, st[k.key], k.help)->capture_default_str();
    }
    subs[name] = sub;
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      rjmc::Settings& st = settings[name];
      if (!config_path[name].empty()) {
        std::vector<CLI::ConfigItem> items;
        try {
          items = CLI::ConfigINI().from_file(config_path[name]);
        } catch (const CLI::Error& e) {
          throw rjmc::ConfigError("cannot read config '" + config_path[name] + "': " + e.what());
        }
        for (const CLI::ConfigItem& item : items) {
          if (item.name == "++" || item.name == "--") continue;
          if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == name)) continue;
          CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
          if (opt == nullptr || item.name == "config") {
            throw rjmc::ConfigError("unknown key '" + item.name + "' in " + config_path[name]);
          }
          // Flags given on the command line win over the file.
          if (opt->count() == 0) st[item.name] = CLI::detail::join(item.inputs, ",");
        }
      }
      return rjmc::run_command(name, st, std::cout);
    } catch (const rjmc::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << '\n';
      return 2;
    } catch (const rjmc::ParseError& e) {
      std::cerr << "parse error: " << e.what() << '\n';
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
