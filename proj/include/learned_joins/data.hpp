#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

#include "learned_joins/types.hpp"

namespace ljoin {

enum class DatasetKind { seq_h, unif, lognorm };

std::string_view to_string(DatasetKind kind);
std::optional<DatasetKind> parse_dataset_kind(std::string_view name);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::seq_h;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double hole_frac = 0.10;  // seq_h only
  double mu = 0.0;          // lognorm only
  double sigma = 1.0;       // lognorm only

  /// Throws Error(invalid_spec) when an invariant is violated.
  void validate() const;
};

/// Synthetic keys, shuffled. Pure function of the spec.
///  - seq_h: {1..ceil(n/(1-h))} with a uniform random hole set removed.
///  - unif: round(U(0,1) * n), deduplicated by redraw.
///  - lognorm: round(LogNormal(mu, sigma) * n), deduplicated by redraw.
/// Throws Error(generation_exhausted) after 100*n rejected redraws.
KeyVector gen_dataset(const DatasetSpec& spec);

/// Overwrites exactly round(frac * n) seed-chosen positions with keys copied
/// from the surviving positions. Length is unchanged.
KeyVector inject_duplicates(std::span<const Key> keys, double frac, std::uint64_t seed);

/// Payload i is a nonzero PRF of (seed, i).
Relation make_relation(KeyVector keys, std::uint64_t seed);
Payload payload_for(std::uint64_t seed, std::size_t position) noexcept;

/// Key file: 8-byte little-endian count, then count little-endian u64 keys.
void write_keys_file(const std::filesystem::path& path, std::span<const Key> keys);
KeyVector load_keys_file(const std::filesystem::path& path);

/// Stratified positional sample: round(rate * n) strata of equal width, one
/// PRF-chosen position in each. The positions depend only on (n, rate, seed),
/// so any chunking of [0, n) over workers yields the same sample multiset.
/// Returned positions are ascending.
std::vector<std::size_t> stratified_sample_positions(std::size_t n, double rate,
                                                     std::uint64_t seed);

/// Positions of the stratified sample that fall in [begin, end).
std::vector<std::size_t> stratified_sample_positions(std::size_t n, double rate,
                                                     std::uint64_t seed, std::size_t begin,
                                                     std::size_t end);

}  // namespace ljoin
