#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rydchiral/errors.hpp"
#include "rydchiral/runner.hpp"

namespace {

struct Options {
  std::string config;
  std::string atoms;
  std::string output_dir;
  int threads = -1;
};

void add_common(CLI::App* app, Options& opt) {
  app->add_option("config", opt.config, "JSON run configuration")->required();
  app->add_option("--atoms", opt.atoms, "Rydberg state table (CSV), default: bundled Rb nS table");
  app->add_option("--threads", opt.threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  app->add_option("-o,--output-dir", opt.output_dir, "output directory (RYDCHIRAL_OUTPUT_DIR takes precedence)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg-array chiral quantum optics runner"};
  app.set_version_flag("--version", std::string(RYDCHIRAL_VERSION));
  app.require_subcommand(1);

  Options opt;
  std::string forced;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "run the command named in the configuration"},
      {"spectrum", "linear reflection and transmission spectra"},
      {"g2", "equal-time photon correlations"},
      {"chiral-fit", "two-sided spectrum and effective emitter fit"},
      {"pulse", "weak pulse scattering, one- and two-photon outputs"},
      {"store-retrieve", "pi-pulse storage and EIT retrieval"},
      {"sort", "photon sorting with a cascaded emitter chain"},
      {"ns-gate", "nonlinear sign gate built from the sorter"},
      {"sweep", "parameter sweep over any scalar field"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, opt);
    sub->callback([&forced, n = std::string(name)] { forced = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    rydchiral::RunConfig config = rydchiral::load_config(opt.config);
    if (forced != "run" && forced != config.command)
      throw rydchiral::ConfigError("config command '" + config.command + "' does not match subcommand '" + forced + "'");
    if (!opt.atoms.empty()) config.atoms = opt.atoms;
    if (opt.threads >= 0) config.threads = static_cast<unsigned>(opt.threads);
    if (!opt.output_dir.empty() && !std::getenv("RYDCHIRAL_OUTPUT_DIR")) config.output_dir = opt.output_dir;
    const rydchiral::RunReport report = rydchiral::run(config);
    for (const auto& f : report.failures) std::cerr << "point failed: " << f.dump() << "\n";
    std::cout << config.output_dir.string() << "/manifest.json\n";
    return report.exit_code;
  } catch (const rydchiral::ResourceError& e) {
    std::cerr << "error: " << e.what() << " (reduce problem size)\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rydchiral::exit_code_for(e);
  }
}
