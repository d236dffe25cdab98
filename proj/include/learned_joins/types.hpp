#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ljoin {

using Key = std::uint64_t;
using Payload = std::uint64_t;
using KeyVector = std::vector<Key>;

/// Padding sentinel for bitonic buckets; never a data key.
inline constexpr Key kSentinelKey = std::numeric_limits<Key>::max();

enum class ErrorCode {
  invalid_spec,
  invalid_argument,
  generation_exhausted,
  corrupt_file,
  io_error,
  empty_input,
  model_mismatch,
  oracle_too_large,
  usage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Columnar key/payload store; payload i belongs to key i.
struct Relation {
  KeyVector keys;
  std::vector<Payload> payloads;

  std::size_t size() const noexcept { return keys.size(); }
  bool empty() const noexcept { return keys.empty(); }
};

struct KeyPayload {
  Key key;
  Payload payload;
};

/// SplitMix64 finalizer. Used as the counter-based PRF throughout.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ULL));
}

}  // namespace ljoin
