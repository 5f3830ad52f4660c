#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fedcache/engine.hpp"
#include "fedcache/tools/config.hpp"

namespace fedcache::tools {

/// One finished (variant, algorithm, seed) run.
struct CellResult {
  std::string variant;
  std::uint64_t seed = 0;
  RunResult result;
};

struct OutputOptions {
  /// Also write the final cache contents per fedcache2 run.
  bool dump_cache = false;
  /// Also write every record uploaded during each fedcache2 run.
  bool dump_uploads = false;
};

/// One line of the UA-vs-bytes chart; x values are cumulative bytes (up + down) per round.
struct PlotSeries {
  std::string label;
  std::vector<std::uint64_t> bytes;
  std::vector<double> ua;
};

/// Final-round mean of best-so-far accuracy.
double final_average_ua(const RunResult& run);

/// round,client,accuracy,best_so_far,cum_bytes_up,cum_bytes_down; bytes are per client.
void write_metrics_csv(std::ostream& out, const RunResult& run);
nlohmann::ordered_json config_json(const RunConfig& config);
nlohmann::ordered_json summary_json(const CellResult& cell);
PlotSeries plot_series(const RunResult& run);
void write_ua_bytes_svg(std::ostream& out, std::span<const PlotSeries> series, std::string_view title);

/// Writes every file for the experiment under out_dir/<experiment name>/ and returns the
/// paths written, relative to out_dir, in write order. The manifest itself is the last entry.
std::vector<std::filesystem::path> emit_outputs(const Experiment& experiment,
                                                std::span<const CellResult> cells,
                                                const std::filesystem::path& out_dir,
                                                const OutputOptions& options = {});

}  // namespace fedcache::tools
