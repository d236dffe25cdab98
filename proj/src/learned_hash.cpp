#include "learned_joins/learned_hash.hpp"

#include <algorithm>
#include <cmath>

#include "learned_joins/parallel.hpp"

namespace ljoin {

SplineHashIndex build_spline_hash(const Relation& relation, std::size_t max_error,
                                  std::size_t radix_bits, double table_factor) {
  if (!(table_factor >= 1.0) || !std::isfinite(table_factor))
    throw Error(ErrorCode::invalid_argument, "table_factor must be >= 1");
  SplineHashIndex index;
  const std::size_t n = relation.size();
  if (n == 0) return index;

  KeyVector sorted = relation.keys;
  std::sort(sorted.begin(), sorted.end());
  index.spline_ = train_radix_spline(sorted, max_error, radix_bits);

  const auto table_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(table_factor * static_cast<double>(n))));
  index.offsets_.assign(table_len + 1, 0);

  std::vector<std::size_t> bucket(n);
  for (std::size_t i = 0; i < n; ++i) {
    bucket[i] = index.bucket_of(relation.keys[i]);
    ++index.offsets_[bucket[i] + 1];
  }
  for (std::size_t b = 0; b < table_len; ++b) index.offsets_[b + 1] += index.offsets_[b];

  // Stable counting scatter keeps each chain in insertion order.
  std::vector<std::size_t> cursor(index.offsets_.begin(), index.offsets_.end() - 1);
  index.keys_.resize(n);
  index.payloads_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t at = cursor[bucket[i]]++;
    index.keys_[at] = relation.keys[i];
    index.payloads_[at] = relation.payloads[i];
  }
  return index;
}

double SplineHashIndex::collision_fraction() const noexcept {
  if (keys_.empty()) return 0.0;
  std::size_t shared = 0;
  for (std::size_t b = 0; b + 1 < offsets_.size(); ++b) {
    const std::size_t len = chain_length(b);
    if (len > 1) shared += len;
  }
  return static_cast<double>(shared) / static_cast<double>(keys_.size());
}

std::vector<Payload> spline_hash_probe(const SplineHashIndex& index, Key key) {
  std::vector<Payload> out;
  index.for_each_match(key, [&](Payload p) { out.push_back(p); });
  return out;
}

JoinOutput spline_hash_inlj(const SplineHashIndex& index, const Relation& probe,
                            std::size_t workers, bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  std::vector<double> seconds(workers, 0.0);
  parallel_for(workers, [&](std::size_t w) {
    Stopwatch sw;
    const ChunkRange chunk = chunk_range(probe.size(), workers, w);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const Payload s_payload = probe.payloads[i];
      index.for_each_match(probe.keys[i], [&](Payload r) { sinks[w].emit(r, s_payload); });
    }
    seconds[w] = sw.seconds();
  });
  JoinOutput out;
  out.result = merge_results(sinks, materialize);
  out.breakdown.pred = *std::max_element(seconds.begin(), seconds.end());
  out.breakdown.lookup.predictions = probe.size();
  return out;
}

}  // namespace ljoin
