// eokfair command-line driver.
//
//   eokfair <generate|metrics|eok|bounds|concentration|train|sweep>
//           --config PATH [--seed N] [--out DIR] [--format json|table]
//
// Exit status: 0 on success, 1 when a bounds clause fails, 2 on any error.

#include "eokfair/cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw eokfair::Error(eokfair::ErrorKind::io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw eokfair::Error(eokfair::ErrorKind::io, "write failed for '" + path.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness certificates from kernel discrepancies"};
  app.set_version_flag("--version", std::string(eokfair::kLibraryVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
  app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed, overrides the config");
  app.add_option("--out", out_dir, "directory for the report and auxiliary files");
  app.add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "table"}));

  const std::map<std::string, std::string> help{
      {"generate", "sample the config's population and write data.csv (needs --out)"},
      {"metrics", "fairness metrics, balanced accuracy, sup DP and EO_k for a classifier"},
      {"eok", "EO_k estimates (plugin and bootstrap)"},
      {"bounds", "verify the discrepancy bounds; nonzero exit if a clause fails"},
      {"concentration", "deviation of the EO_k estimator against its high-probability bound"},
      {"train", "train a penalized linear encoder with a logistic head"},
      {"sweep", "trade-off frontier over a grid of penalty weights"}};
  for (const auto& name : eokfair::cli::command_names()) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = eokfair::cli::load_config(config_path, seed);
    if (command == "generate" && out_dir.empty())
      throw eokfair::Error(eokfair::ErrorKind::validation, "generate: --out is required");
    const auto result = eokfair::cli::run_command(command, cfg);
    const std::string report = result.report.dump(2) + "\n";
    if (!out_dir.empty()) {
      const std::filesystem::path dir(out_dir);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw eokfair::Error(eokfair::ErrorKind::io, "cannot create '" + out_dir + "': " + ec.message());
      write_file(dir / (command + ".json"), report);
      for (const auto& f : result.files) write_file(dir / f.name, f.content);
    }
    std::cout << (format == "json" ? report : eokfair::cli::render_table(result.report));
    return result.status;
  } catch (const eokfair::Error& e) {
    std::cerr << "eokfair: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "eokfair: internal error: " << e.what() << '\n';
    return 2;
  }
}
