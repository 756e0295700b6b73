// Command-line front end. One command per invocation; errors go to stderr as
// a single JSON object and the exit status is nonzero.

#include <CLI11.hpp>

#include <iostream>

#include "mclp/commands.hpp"

using namespace mclp;

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

RunConfig resolve(const Options& o) {
  Json doc = o.config_path.empty() ? to_json(smoke_config()) : [&] {
    if (!fs::exists(o.config_path)) throw Error(ErrorCode::kMissingInput, "missing config " + o.config_path);
    try {
      return Json::parse(read_text_file(o.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, o.config_path + ": " + e.what());
    }
  }();
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.threads) overrides.push_back("threads=" + std::to_string(*o.threads));
  return load_config(doc, overrides);
}

void error_record(const std::string& command, std::string_view code, const std::string& detail) {
  std::cerr << Json{{"error", code}, {"command", command}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCLP style-metric simulator, reward and GRPO toolkit"};
  app.require_subcommand(1);
  Options opt;

  using Fn = void (*)(const RunConfig&, RunDir&);
  const std::vector<std::tuple<std::string, std::string, Fn>> commands = {
      {"world-gen", "sample the style world", cmd_world_gen},
      {"data-curate", "draw the corpus and write the SFT / RL / test splits", cmd_data_curate},
      {"train-sft", "fit the SFT policy", cmd_train_sft},
      {"train-grpo", "GRPO from the SFT snapshot", cmd_train_grpo},
      {"eval", "evaluate SFT, GRPO and reference systems in both regimes", cmd_eval},
      {"winrate", "win rate vs |delta MCLP| and the trend test", cmd_winrate},
      {"ablate", "hybrid / style-only / content-only reward ablation", cmd_ablate},
      {"run-all", "every stage above in order", run_all},
  };
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "JSON config (default: built-in smoke config)");
    sub->add_option("--set", opt.overrides, "dotted.key=value override")->take_all();
    sub->add_option("--seed", opt.seed, "global seed");
    sub->add_option("--threads", opt.threads, "worker threads");
  }
  auto* print = app.add_subcommand("print-config", "write the effective config to stdout");
  print->add_option("--config", opt.config_path);
  print->add_option("--set", opt.overrides)->take_all();
  print->add_option("--seed", opt.seed);
  print->add_option("--threads", opt.threads);
  auto* where = app.add_subcommand("run-dir", "print the run directory for a config");
  where->add_option("--config", opt.config_path);
  where->add_option("--set", opt.overrides)->take_all();
  where->add_option("--seed", opt.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("", "UsageError", e.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig c = resolve(opt);
    if (command == "print-config") {
      std::cout << to_json(c).dump(2) << "\n";
      return 0;
    }
    if (command == "run-dir") {
      std::cout << run_directory(c).string() << "\n";
      return 0;
    }
    for (const auto& [name, help, fn] : commands) {
      if (name != command) continue;
      RunDir dir = open_run(c);
      fn(c, dir);
      std::cout << dir.root().string() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    error_record(command, to_string(e.code()), e.detail());
  } catch (const std::exception& e) {
    error_record(command, "Internal", e.what());
  }
  return 1;
}
