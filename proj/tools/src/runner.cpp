#include "fedcache/tools/runner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace fedcache::tools {

std::vector<CellResult> run_cells(const Experiment& experiment, std::size_t jobs, const ProgressFn& progress) {
  struct Task {
    const Variant* variant;
    std::uint64_t seed;
    Algorithm algorithm;
  };
  std::vector<Task> tasks;
  for (const Variant& v : experiment.variants) {
    for (std::uint64_t seed : experiment.seeds) {
      for (Algorithm a : experiment.algorithms) tasks.push_back({&v, seed, a});
    }
  }

  std::vector<CellResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        RunConfig cfg = tasks[i].variant->config;
        cfg.seed = tasks[i].seed;
        results[i] = CellResult{tasks[i].variant->label, tasks[i].seed, run_experiment(cfg, tasks[i].algorithm)};
        if (progress) {
          std::lock_guard lock(mu);
          progress(results[i]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace fedcache::tools
