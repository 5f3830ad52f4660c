#include "fedcache/tools/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "fedcache/error.hpp"
#include "fedcache/format.hpp"
#include "fedcache/tools/config.hpp"
#include "fedcache/tools/outputs.hpp"
#include "fedcache/tools/presets.hpp"
#include "fedcache/tools/runner.hpp"

namespace fedcache::tools {
namespace {

struct SourceArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::string> overrides;
};

void add_source_options(CLI::App* cmd, SourceArgs& a) {
  cmd->add_option("config", a.config_path, "config file (key = value lines, # comments)");
  cmd->add_option("--preset", a.preset, "start from a built-in preset; the config file and --set apply on top");
  cmd->add_option("--set", a.overrides, "override one key, e.g. --set tau=0.3")->allow_extra_args(false);
}

Experiment load_experiment(const SourceArgs& a) {
  if (a.config_path.empty() && a.preset.empty()) {
    throw ConfigError("nothing to run: give a config file or --preset (see list-presets)");
  }
  ExperimentSpec spec;
  if (!a.preset.empty()) {
    const Preset& p = find_preset(a.preset);
    apply_entries(spec, parse_config_text(p.text, "preset " + std::string(p.name)));
  }
  if (!a.config_path.empty()) apply_entries(spec, read_config_file(a.config_path));
  ConfigEntries overrides;
  for (const std::string& o : a.overrides) overrides.push_back(parse_override(o));
  apply_entries(spec, overrides);
  return build_experiment(spec);
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "fedcache_out";
}

void print_rollup(std::ostream& out, const Experiment& e, const std::vector<CellResult>& cells) {
  for (const Variant& v : e.variants) {
    out << e.name << " / " << v.label << '\n';
    for (Algorithm a : e.algorithms) {
      double ua = 0.0, bytes = 0.0;
      std::size_t n = 0;
      for (const CellResult& c : cells) {
        if (c.variant != v.label || c.result.algorithm != a) continue;
        ua += final_average_ua(c.result);
        bytes += static_cast<double>(c.result.ledger.total(Direction::uplink) +
                                     c.result.ledger.total(Direction::downlink));
        ++n;
      }
      if (n == 0) continue;
      std::string name(to_string(a));
      name.resize(std::max<std::size_t>(name.size(), 14), ' ');
      out << "  " << name << " mean UA " << format_double(std::round(ua / n * 1e4) / 1e4) << "  mean bytes "
          << static_cast<std::uint64_t>(bytes / n) << '\n';
    }
  }
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated learning simulator with a distilled-data knowledge cache", "fedcache"};
  app.require_subcommand(1);

  SourceArgs run_args;
  std::string out_dir;
  std::size_t jobs = 1;
  bool dump_cache = false, dump_uploads = false, quiet = false;
  CLI::App* run = app.add_subcommand("run", "run every (variant, algorithm, seed) cell and write outputs");
  add_source_options(run, run_args);
  run->add_option("--out", out_dir, std::string("output directory (default: $") + kOutDirEnv + " or ./fedcache_out)");
  run->add_option("--jobs,-j", jobs, "cells to run concurrently")->check(CLI::PositiveNumber);
  run->add_flag("--dump-cache", dump_cache, "write the final cache of each fedcache2 run as CSV");
  run->add_flag("--dump-uploads", dump_uploads, "write every uploaded distilled record as CSV");
  run->add_flag("--quiet,-q", quiet, "no per-cell progress lines");

  SourceArgs show_args;
  CLI::App* show = app.add_subcommand("show-config", "print the resolved config without running");
  add_source_options(show, show_args);

  CLI::App* list = app.add_subcommand("list-presets", "list built-in experiments");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*list) {
      for (const Preset& p : presets()) out << p.name << "  " << p.description << '\n';
      return kExitOk;
    }
    if (*show) {
      const Experiment e = load_experiment(show_args);
      out << "name = " << e.name << '\n';
      out << "algorithms = ";
      for (std::size_t i = 0; i < e.algorithms.size(); ++i) out << (i ? "," : "") << to_string(e.algorithms[i]);
      out << "\nseeds = ";
      for (std::size_t i = 0; i < e.seeds.size(); ++i) out << (i ? "," : "") << e.seeds[i];
      out << '\n';
      for (const Variant& v : e.variants) out << "\n# variant " << v.label << '\n' << format_config(v.config);
      return kExitOk;
    }

    const Experiment e = load_experiment(run_args);
    const std::filesystem::path dir = out_dir.empty() ? default_out_dir() : std::filesystem::path(out_dir);
    ProgressFn progress;
    if (!quiet) {
      progress = [&out](const CellResult& c) {
        out << "done " << c.variant << " seed " << c.seed << ' ' << to_string(c.result.algorithm) << "  UA "
            << format_double(std::round(final_average_ua(c.result) * 1e4) / 1e4) << '\n';
      };
    }
    const std::vector<CellResult> cells = run_cells(e, jobs, progress);
    const auto files = emit_outputs(e, cells, dir, OutputOptions{dump_cache, dump_uploads});
    print_rollup(out, e, cells);
    out << "wrote " << files.size() << " files under " << (dir / e.name).string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace fedcache::tools
