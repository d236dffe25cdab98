#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "learned_joins/gapped_index.hpp"
#include "learned_joins/join_result.hpp"

namespace ljoin {

inline constexpr std::size_t kDefaultBufferCap = 200;

/// One layer of subtree roots below the RMI root.
struct BufferLevel {
  std::size_t depth = 0;
  std::uint64_t subtree_models = 0;
  std::uint64_t analytic_size = 0;  // subtree_models + S(subtree_models)
  std::size_t capacity = 0;         // working capacity in probe entries
};

/// Request-buffer sizing for an RMI of n_models models and fanout m.
/// S(n) = n + 2m * S(n/m) with S(n') = 0 for n' <= m; the root buffer is n + S(n).
/// cache_line_bytes / cache_capacity_bytes are analysis metadata only.
struct BufferPlan {
  std::uint64_t n_models = 0;
  std::uint64_t fanout = 0;
  std::size_t cap = kDefaultBufferCap;
  std::uint64_t child_buffers_total = 0;  // S(n)
  std::uint64_t root_buffer_size = 0;     // n + S(n)
  std::vector<BufferLevel> levels;
  std::size_t cache_line_bytes = 64;
  std::size_t cache_capacity_bytes = std::size_t{1} << 20;

  /// Capacity of the deepest layer, the one buffered_probe uses.
  std::size_t leaf_capacity() const noexcept { return levels.empty() ? cap : levels.back().capacity; }
};

/// S(n). Throws Error(invalid_argument) when fanout < 2 and n_models > fanout
/// (the recursion would not shrink).
std::uint64_t request_buffer_total(std::uint64_t n_models, std::uint64_t fanout);

BufferPlan plan_buffers(std::uint64_t n_models, std::uint64_t fanout,
                        std::size_t cap = kDefaultBufferCap);

/// Plan for the two-level GRMI: one buffer per leaf model.
BufferPlan plan_for_index(const GappedIndex& index, std::size_t cap = kDefaultBufferCap);

using ProbeSink = std::function<void(std::size_t tag, std::optional<Payload> payload)>;

/// Probes are routed by the root model to their leaf's buffer; a full buffer
/// is flushed by running leaf prediction and last-mile search for all its keys
/// back to back, and at end of stream every buffer flushes in leaf order. The
/// sink gets exactly one (stream position, payload-or-absent) per key.
LookupStats buffered_probe(const GappedIndex& index, std::span<const Key> keys,
                           const BufferPlan& plan, const ProbeSink& sink);

/// Same contract, one grmi lookup per key in stream order. Counts segment
/// switches the same way, for locality comparisons.
LookupStats unbuffered_probe(const GappedIndex& index, std::span<const Key> keys,
                             const ProbeSink& sink);

/// Buffered GRMI INLJ. Each worker owns one buffer set over its chunk of S.
JoinOutput buffered_grmi_inlj(const GappedIndex& index, const Relation& probe,
                              std::size_t workers, std::size_t cap = kDefaultBufferCap,
                              bool materialize = true);

}  // namespace ljoin
