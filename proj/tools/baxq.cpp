#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "baxq/config.hpp"
#include "baxq/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Twisted spin-chain transfer and Q-operator verification engine"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify", "run the configured functional-relation checks"},
      {"sweep", "repeat verify over sweep_values applied to sweep_key"},
      {"limits", "large-label convergence studies"},
      {"spectrum", "joint eigenvalue tables of the commuting family"},
      {"bethe", "polynomial roots of the plus Q-family eigenvalue curves"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "flat key=value configuration file")
        ->required();
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--override", overrides,
                    "key=value applied after the file; repeatable");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    baxq::RunConfig cfg = baxq::load_config(config_path);
    for (const std::string& ov : overrides) {
      const size_t eq = ov.find('=');
      if (eq == std::string::npos)
        throw baxq::ModelError("override is not key=value: " + ov);
      baxq::apply_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
    }
    const baxq::RunOutcome out = baxq::run_command(command, cfg, out_dir);
    std::printf("%s: %s (report: %s)\n", command.c_str(),
                out.exit_code == 0 ? "pass" : "fail", out.report_path.c_str());
    return out.exit_code;
  } catch (const baxq::ModelError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 3;
  }
}
