// Scenario runner and sweep engine for the dipolar-crystal gate toolkit.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dipsim/scenarios.hpp"

namespace {

std::string join_names() {
  std::string s;
  for (const auto& n : dipsim::scenario_names()) {
    if (!s.empty()) s += ", ";
    s += n;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dipolar_sim - phonon-mediated gate design in dipolar crystals"};

  std::string config_path;
  std::string scenario_name;
  std::string out_prefix;
  std::vector<std::string> overrides;
  int workers = 0;

  app.add_option("--config", config_path,
                 "key = value config file or a previously written manifest");
  app.add_option("--scenario", scenario_name, "one of: " + join_names());
  app.add_option("--set", overrides, "override config entries, key=value")
      ->take_all();
  app.add_option("--out", out_prefix, "output path prefix");
  app.add_option("--workers", workers,
                 "worker threads (default: DIPOLAR_SIM_WORKERS or 1)");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    dipsim::KeyValues kv;
    if (!config_path.empty()) kv = dipsim::load_config_or_manifest(config_path);
    for (const std::string& ov : overrides) {
      const auto eq = ov.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--set expects key=value, got: " + ov);
      kv[ov.substr(0, eq)] = ov.substr(eq + 1);
    }
    if (!scenario_name.empty()) kv["scenario"] = scenario_name;
    if (!out_prefix.empty()) kv["out"] = out_prefix;

    dipsim::Scenario s = dipsim::scenario_from_config(kv);
    if (s.name.empty())
      throw std::invalid_argument("no scenario given (--scenario or config)");

    stage = s.name;
    const dipsim::RunOutput out =
        s.sweep ? dipsim::run_sweep(s, workers) : dipsim::run_scenario(s, workers);

    for (const auto& f : out.files) std::cout << "wrote " << f << "\n";
    if (out.rows_failed > 0)
      std::cout << out.rows_failed << "/" << out.rows_total
                << " grid points failed (see status column)\n";
    return out.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "error scenario=" << stage << " msg=" << msg << std::endl;
    return 1;
  }
}
