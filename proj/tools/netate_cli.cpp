// netate command-line front end. Everything goes through the C API in
// netate.h; the config file plus flag overrides are assembled into one JSON
// object and handed to netate_run.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "netate.h"

namespace {

using nlohmann::json;

struct CliOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::uint32_t threads = 0;
  bool quiet = false;
};

int exit_code_for(netate_status status) {
  switch (status) {
    case NETATE_OK: return 0;
    case NETATE_ERR_CONFIG: return 2;
    case NETATE_ERR_INVALID: return 2;
    case NETATE_ERR_DATA: return 3;
    case NETATE_ERR_NUMERIC: return 4;
    case NETATE_ERR_INTERNAL: return 1;
  }
  return 1;
}

json load_config(const CliOptions& opt) {
  json cfg = json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) {
      std::cerr << "error: cannot open config file " << opt.config_path << "\n";
      std::exit(3);
    }
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      std::cerr << "error: " << opt.config_path << " is not valid JSON (" << e.what() << ")\n";
      std::exit(2);
    }
    if (!cfg.is_object()) {
      std::cerr << "error: " << opt.config_path << " must hold a JSON object\n";
      std::exit(2);
    }
  }
  for (const std::string& assignment : opt.sets) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "error: --set expects key.path=value, got \"" << assignment << "\"\n";
      std::exit(2);
    }
    std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    // Values that parse as JSON are taken as-is; anything else is a string.
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    for (auto& c : key)
      if (c == '.') c = '/';
    try {
      cfg[json::json_pointer("/" + key)] = value;
    } catch (const json::exception& e) {
      std::cerr << "error: cannot apply --set " << assignment << " (" << e.what() << ")\n";
      std::exit(2);
    }
  }
  if (opt.seed_given) cfg["seed"] = opt.seed;
  if (!opt.out_dir.empty()) cfg["out_dir"] = opt.out_dir;
  if (opt.threads != 0) cfg["threads"] = opt.threads;
  return cfg;
}

int run(const std::string& command, const CliOptions& opt) {
  const json cfg = load_config(opt);
  char* manifest_text = nullptr;
  const netate_status status = netate_run(command.c_str(), cfg.dump().c_str(), &manifest_text);
  if (status != NETATE_OK) {
    std::cerr << "error: " << netate_last_error() << "\n";
    return exit_code_for(status);
  }
  const json manifest = json::parse(manifest_text);
  netate_string_free(manifest_text);
  const auto graph_info = manifest.find("graph");
  if (graph_info != manifest.end()) {
    const auto isolated = graph_info->value("isolated_nodes", std::uint64_t{0});
    if (isolated > 0)
      std::cerr << "warning: " << isolated << " isolated node" << (isolated == 1 ? "" : "s")
                << "; their embeddings are trained only through negative pairs\n";
  }
  if (!opt.quiet) std::cout << manifest.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netate: network-adjusted treatment effect estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(netate_version()));

  CliOptions opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "JSON config file");
    sub->add_option("--set", opt.sets, "override a config key, e.g. --set train.step_count=2000")
        ->take_all();
    sub->add_option("--seed", opt.seed, "global seed override")->each([&](const std::string&) {
      opt.seed_given = true;
    });
    sub->add_option("-o,--out-dir", opt.out_dir, "output directory override");
    sub->add_option("--threads", opt.threads, "fold-training thread count override");
    sub->add_flag("-q,--quiet", opt.quiet, "suppress the manifest on stdout");
  };

  const char* commands[] = {"simulate", "embed", "crossfit", "estimate", "sweep", "diagnose"};
  const char* descriptions[] = {
      "draw treatments and outcomes over the confounder structure",
      "train one embedding model on the full graph",
      "train per-fold models and write out-of-fold nuisance estimates",
      "run the full pipeline and write estimator reports",
      "re-simulate and re-estimate across an exogeneity grid",
      "report the embedding dependence statistic for a checkpoint",
  };
  for (std::size_t i = 0; i < 6; ++i) add_common(app.add_subcommand(commands[i], descriptions[i]));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help/version exit clean; usage errors are config errors
  }

  return run(app.get_subcommands().front()->get_name(), opt);
}
