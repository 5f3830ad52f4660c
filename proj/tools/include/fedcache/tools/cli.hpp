#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fedcache::tools {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "FEDCACHE_OUT_DIR";

/// Entry point of the `fedcache` command, with streams injectable for tests.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fedcache::tools
