#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fedcache/tools/config.hpp"
#include "fedcache/tools/outputs.hpp"

namespace fedcache::tools {

using ProgressFn = std::function<void(const CellResult&)>;

/// Runs every variant × algorithm × seed cell, `jobs` at a time. Results come back in grid
/// order (variant, then seed, then algorithm) whatever the scheduling.
std::vector<CellResult> run_cells(const Experiment& experiment, std::size_t jobs = 1,
                                  const ProgressFn& progress = {});

}  // namespace fedcache::tools
