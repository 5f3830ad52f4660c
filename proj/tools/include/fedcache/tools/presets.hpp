#pragma once

#include <span>
#include <string>
#include <string_view>

#include "fedcache/tools/config.hpp"

namespace fedcache::tools {

struct Preset {
  std::string_view name;
  std::string_view description;
  /// Config text in the same format as config files.
  std::string_view text;
};

std::span<const Preset> presets();
/// Throws ConfigError for unknown names.
const Preset& find_preset(std::string_view name);

}  // namespace fedcache::tools
