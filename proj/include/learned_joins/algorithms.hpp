#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "learned_joins/join_result.hpp"
#include "learned_joins/lsj.hpp"

namespace ljoin {

enum class Algorithm {
  buffered_grmi_inlj,
  grmi_inlj,
  rmi_inlj,
  hash_inlj,
  spline_hash_inlj,
  lsj,
  smj,
  npj,
  radix_join,
  sampled_hash_join,
};

inline constexpr std::array kAllAlgorithms = {
    Algorithm::buffered_grmi_inlj, Algorithm::grmi_inlj, Algorithm::rmi_inlj,
    Algorithm::hash_inlj,          Algorithm::spline_hash_inlj, Algorithm::lsj,
    Algorithm::smj,                Algorithm::npj,       Algorithm::radix_join,
    Algorithm::sampled_hash_join,
};

std::string_view to_string(Algorithm algo);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// INLJ variants build their index over R before the timed join.
constexpr bool is_inlj(Algorithm a) noexcept {
  return a == Algorithm::buffered_grmi_inlj || a == Algorithm::grmi_inlj || a == Algorithm::rmi_inlj ||
         a == Algorithm::hash_inlj || a == Algorithm::spline_hash_inlj;
}

/// Every knob any algorithm reads. Unused fields are ignored.
struct JoinConfig {
  std::size_t workers = 1;
  std::uint64_t seed = 42;
  bool materialize = true;
  // indexes
  double gap_factor = 4.0;
  std::size_t rmi_fanout = 0;  // 0 = ~100 keys per leaf
  std::size_t buffer_cap = 200;
  std::size_t spline_error = 32;
  std::size_t radix_bits = 18;  // RadixSpline table bits
  double table_factor = 4.0;
  // lsj and sampled hash
  double sample_rate = 0.01;
  std::size_t fanout = 10000;
  bool swwc = true;
  std::size_t swwc_buf_len = 64;
  double overalloc = 0.02;
  // radix join
  std::size_t radix_passes = 2;
  std::size_t radix_bits_per_pass = 0;  // 0 = sized from |R|

  LsjConfig lsj_config() const;
};

struct JoinRun {
  JoinOutput output;
  double runtime_s = 0.0;      // join only
  double index_build_s = 0.0;  // INLJ index build over R, excluded from runtime_s
};

JoinRun run_join(Algorithm algo, const Relation& r, const Relation& s, const JoinConfig& config);

}  // namespace ljoin
