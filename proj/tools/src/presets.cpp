#include "fedcache/tools/presets.hpp"

#include <array>
#include <string>

#include "fedcache/error.hpp"

namespace fedcache::tools {
namespace {

// Shared by every preset: ten clients on a four-class synthetic task, fifteen rounds.
#define FEDCACHE_DESK_BASE \
  "dataset = synthetic\n"  \
  "num_classes = 4\n"      \
  "dim = 16\n"             \
  "per_class = 100\n"      \
  "spread = 0.5\n"         \
  "test_fraction = 0.2\n"  \
  "clients = 10\n"         \
  "alpha = 0.5\n"          \
  "tau = 0.5\n"            \
  "rounds = 15\n"          \
  "local_epochs = 5\n"     \
  "arch = mlp-s\n"         \
  "seeds = 0,1,2\n"

constexpr std::array kPresets = {
    Preset{"desk-default", "all four algorithms on the default synthetic federation",
           "name = desk-default\n" FEDCACHE_DESK_BASE
           "algorithms = fedcache2,logits_cache,param_avg,local_only\n"},
    Preset{"alpha-sweep", "all four algorithms at Dirichlet alpha 0.5 and 2.0",
           "name = alpha-sweep\n" FEDCACHE_DESK_BASE
           "algorithms = fedcache2,logits_cache,param_avg,local_only\n"
           "sweep.alpha = 0.5,2.0\n"},
    Preset{"tau-sweep", "fedcache2 across the sampling floor tau",
           "name = tau-sweep\n" FEDCACHE_DESK_BASE
           "algorithms = fedcache2\n"
           "sweep.tau = 0,0.3,0.5,0.7,1.0\n"},
    Preset{"model-hetero", "clients cycle through mlp-s, mlp-m and mlp-l",
           "name = model-hetero\n" FEDCACHE_DESK_BASE
           "arch = cycle\n"
           "algorithms = fedcache2,logits_cache,local_only\n"},
    Preset{"availability", "each client is online with probability 0.6 per round",
           "name = availability\n" FEDCACHE_DESK_BASE
           "participation_rate = 0.6\n"
           "algorithms = fedcache2,logits_cache,param_avg,local_only\n"},
};

#undef FEDCACHE_DESK_BASE

}  // namespace

std::span<const Preset> presets() { return kPresets; }

const Preset& find_preset(std::string_view name) {
  for (const Preset& p : kPresets) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const Preset& p : kPresets) known += (known.empty() ? "" : ", ") + std::string(p.name);
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace fedcache::tools
