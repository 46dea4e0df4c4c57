#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "tvflow/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tvflow: nonlocal total-variation flow experiments on the torus"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (default: <out-root>/<scenario>)");

  auto* list = app.add_subcommand("list", "list available scenarios");

  std::string tier = "quick";
  int criterion = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "run the acceptance battery");
  verify->add_option("--tier", tier, "quick|full (default quick)");
  verify->add_option("--criterion", criterion, "run a single criterion (1..12)");
  verify->add_option("--out", verify_out, "output root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      tvflow::ExperimentConfig cfg = tvflow::ExperimentConfig::parse_file(config_path);
      const std::string name = cfg.scenario_name();
      if (name.empty()) throw tvflow::ConfigError("config is missing [scenario] name");
      std::string out = out_dir;
      if (out.empty())
        out = cfg.get_string("scenario", "out",
                             tvflow::default_output_root() + "/" + name);
      std::printf("scenario %s -> %s\n", name.c_str(), out.c_str());
      const bool ok = tvflow::run_scenario(cfg, out);
      std::printf("%s: %s\n", name.c_str(), ok ? "PASS" : "FAIL");
      return ok ? 0 : 1;
    }
    if (*list) {
      for (const auto& info : tvflow::scenario_catalog())
        std::printf("%-24s [criterion %2d]  %s\n", info.name.c_str(), info.criterion,
                    info.description.c_str());
      return 0;
    }
    if (*verify) {
      const std::string root =
          verify_out.empty() ? tvflow::default_output_root() : verify_out;
      const int failures = tvflow::run_verification(tier, root, criterion);
      std::printf("verification (%s tier): %s\n", tier.c_str(),
                  failures == 0 ? "all criteria PASS"
                                : (std::to_string(failures) + " criteria FAIL").c_str());
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 0;
}
