#pragma once

#include <map>
#include <string>

#ifndef EOKFAIR_VERSION
#define EOKFAIR_VERSION "0.1.0"
#endif

namespace eokfair {

inline constexpr const char* kLibraryVersion = EOKFAIR_VERSION;

/// Per-module versions, bumped when a module's numerical output changes.
inline const std::map<std::string, std::string>& module_versions() {
  static const std::map<std::string, std::string> v{
      {"synth", "1.0.0"}, {"kernels", "1.0.0"}, {"mmd", "1.0.0"},        {"fairness", "1.0.0"}, {"eok", "1.0.0"},
      {"bounds", "1.0.0"}, {"complexity", "1.0.0"}, {"frl", "1.0.0"}, {"cli", "1.0.0"}};
  return v;
}

}  // namespace eokfair
