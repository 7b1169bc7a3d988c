#pragma once

#include "eokfair/dataset.hpp"

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>

namespace eokfair {

/// 64-bit FNV-1a over a byte string.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_hex(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

/// Digest of the dataset's canonical CSV text.
inline std::string dataset_digest(const LabeledDataset& data) {
  std::ostringstream os;
  write_csv(os, data);
  return digest_hex(os.str());
}

}  // namespace eokfair
