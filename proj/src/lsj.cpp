#include "learned_joins/lsj.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "learned_joins/data.hpp"
#include "learned_joins/parallel.hpp"

namespace ljoin {

void LsjConfig::validate() const {
  if (workers < 1) throw Error(ErrorCode::invalid_argument, "workers must be >= 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0))
    throw Error(ErrorCode::invalid_argument, "sample_rate must be in (0, 1]");
  if (fanout < workers) throw Error(ErrorCode::invalid_argument, "fanout must be >= workers");
  if (swwc_buf_len < 1) throw Error(ErrorCode::invalid_argument, "swwc_buf_len must be >= 1");
  if (!(overalloc >= 0.0) || !std::isfinite(overalloc))
    throw Error(ErrorCode::invalid_argument, "overalloc must be >= 0");
}

CdfModel sample_train(const Relation& relation, double sample_rate, std::size_t workers,
                      std::uint64_t seed, std::size_t model_fanout) {
  const std::size_t n = relation.size();
  if (n == 0) throw Error(ErrorCode::empty_input, "cannot sample an empty relation");
  workers = std::max<std::size_t>(workers, 1);

  std::vector<KeyVector> parts(workers);
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange chunk = chunk_range(n, workers, w);
    for (std::size_t pos : stratified_sample_positions(n, sample_rate, seed, chunk.begin, chunk.end))
      parts[w].push_back(relation.keys[pos]);
  });
  KeyVector sample;
  for (const KeyVector& part : parts) sample.insert(sample.end(), part.begin(), part.end());

  if (sample.empty()) {
    const auto [lo, hi] = std::minmax_element(relation.keys.begin(), relation.keys.end());
    const Key ends[] = {*lo, *hi};
    return train_rmi(ends, 1);
  }
  std::sort(sample.begin(), sample.end());
  return train_rmi(sample, model_fanout == 0 ? default_rmi_fanout(sample.size()) : model_fanout);
}

PartitionedRelation range_partition(const Relation& relation, const CdfModel& model,
                                    const LsjConfig& config) {
  config.validate();
  const std::size_t n = relation.size();
  const std::size_t W = config.workers;

  PartitionedRelation out;
  out.workers = W;
  out.histogram.assign(W * W, 0);
  out.prefix_sums.assign(W * W, 0);
  out.target_capacity = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil((1.0 + config.overalloc) * static_cast<double>(n) /
                                            static_cast<double>(W))));

  // 1. local partition: target of every tuple plus a per-source histogram.
  //    The target is the sort-phase bucket scaled down to W, so no bucket is
  //    split between two workers.
  const std::size_t p = config.fanout;
  std::vector<std::uint32_t> target(n);
  parallel_for(W, [&](std::size_t src) {
    const ChunkRange chunk = chunk_range(n, W, src);
    std::size_t* hist = &out.histogram[src * W];
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const auto dst = static_cast<std::uint32_t>(partition_index(model, relation.keys[i], p) * W / p);
      target[i] = dst;
      ++hist[dst];
    }
  });

  // 2. prefix sums: source src writes run dst starting after all earlier sources.
  std::vector<std::size_t> totals(W, 0);
  for (std::size_t dst = 0; dst < W; ++dst) {
    for (std::size_t src = 0; src < W; ++src) {
      out.prefix_sums[src * W + dst] = totals[dst];
      totals[dst] += out.histogram[src * W + dst];
    }
  }

  // 3. sequential writes into over-allocated targets; spill goes to overflow
  //    lists kept per (src, dst) so no two workers share one.
  const std::size_t cap = out.target_capacity;
  std::vector<Relation> runs(W);
  for (Relation& run : runs) {
    run.keys.resize(std::min(cap, n));
    run.payloads.resize(std::min(cap, n));
  }
  std::vector<std::vector<KeyPayload>> overflow(W * W);

  parallel_for(W, [&](std::size_t src) {
    const ChunkRange chunk = chunk_range(n, W, src);
    std::vector<std::size_t> cursor(out.prefix_sums.begin() + static_cast<std::ptrdiff_t>(src * W),
                                    out.prefix_sums.begin() + static_cast<std::ptrdiff_t>(src * W + W));
    auto write = [&](std::size_t dst, Key k, Payload p) {
      const std::size_t pos = cursor[dst]++;
      if (pos < cap) {
        runs[dst].keys[pos] = k;
        runs[dst].payloads[pos] = p;
      } else {
        overflow[src * W + dst].push_back({k, p});
      }
    };

    if (!config.swwc) {
      for (std::size_t i = chunk.begin; i < chunk.end; ++i)
        write(target[i], relation.keys[i], relation.payloads[i]);
      return;
    }
    const std::size_t len = config.swwc_buf_len;
    std::vector<KeyPayload> staging(W * len);
    std::vector<std::size_t> fill(W, 0);
    auto flush = [&](std::size_t dst) {
      const KeyPayload* buf = &staging[dst * len];
      for (std::size_t j = 0; j < fill[dst]; ++j) write(dst, buf[j].key, buf[j].payload);
      fill[dst] = 0;
    };
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const std::size_t dst = target[i];
      staging[dst * len + fill[dst]] = {relation.keys[i], relation.payloads[i]};
      if (++fill[dst] == len) flush(dst);
    }
    for (std::size_t dst = 0; dst < W; ++dst) flush(dst);
  });

  // 4. merge: each run is its in-capacity prefix followed by the overflow
  //    lists in source order, which is exactly the prefix-sum order.
  out.range_offsets.assign(W + 1, 0);
  for (std::size_t dst = 0; dst < W; ++dst) out.range_offsets[dst + 1] = out.range_offsets[dst] + totals[dst];
  out.data.keys.resize(n);
  out.data.payloads.resize(n);
  std::vector<std::size_t> spilled(W, 0);
  parallel_for(W, [&](std::size_t dst) {
    std::size_t at = out.range_offsets[dst];
    const std::size_t direct = std::min(totals[dst], cap);
    std::copy_n(runs[dst].keys.begin(), direct, out.data.keys.begin() + static_cast<std::ptrdiff_t>(at));
    std::copy_n(runs[dst].payloads.begin(), direct,
                out.data.payloads.begin() + static_cast<std::ptrdiff_t>(at));
    at += direct;
    for (std::size_t src = 0; src < W; ++src) {
      for (const KeyPayload& kp : overflow[src * W + dst]) {
        out.data.keys[at] = kp.key;
        out.data.payloads[at] = kp.payload;
        ++at;
        ++spilled[dst];
      }
    }
  });
  for (std::size_t c : spilled) out.overflow_tuples += c;
  return out;
}

void bitonic_network(std::span<KeyPayload> items, SortStats& stats) {
  const std::size_t n = items.size();
  if (n != 0 && !std::has_single_bit(n))
    throw Error(ErrorCode::invalid_argument, "bitonic network needs a power-of-two size");
  auto less = [](const KeyPayload& a, const KeyPayload& b) {
    return a.key < b.key || (a.key == b.key && a.payload < b.payload);
  };
  std::uint64_t comparators = 0;
  for (std::size_t k = 2; k <= n; k <<= 1) {
    for (std::size_t j = k >> 1; j > 0; j >>= 1) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i ^ j;
        if (l <= i) continue;
        ++comparators;
        const bool ascending = (i & k) == 0;
        if (ascending == less(items[l], items[i])) std::swap(items[i], items[l]);
      }
    }
  }
  stats.comparator_count += comparators;
}

SortStats cdf_bitonic_sort(std::span<Key> keys, std::span<Payload> payloads, const CdfModel& model,
                           std::size_t p, std::span<std::size_t> bucket_counts) {
  SortStats stats;
  const std::size_t n = keys.size();
  if (payloads.size() != n) throw Error(ErrorCode::invalid_argument, "keys/payloads size mismatch");
  if (p < 1) throw Error(ErrorCode::invalid_argument, "p must be >= 1");
  if (!bucket_counts.empty() && bucket_counts.size() != p)
    throw Error(ErrorCode::invalid_argument, "bucket_counts must have p entries");
  if (n == 0) return stats;

  std::vector<std::size_t> bucket(n);
  std::size_t first = p;
  std::size_t last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bucket[i] = partition_index(model, keys[i], p);
    first = std::min(first, bucket[i]);
    last = std::max(last, bucket[i]);
  }
  const std::size_t span_len = last - first + 1;
  std::vector<std::size_t> offsets(span_len + 1, 0);
  for (std::size_t b : bucket) ++offsets[b - first + 1];
  for (std::size_t b = 0; b < span_len; ++b) offsets[b + 1] += offsets[b];

  std::vector<KeyPayload> grouped(n);
  {
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) grouped[cursor[bucket[i] - first]++] = {keys[i], payloads[i]};
  }

  std::vector<KeyPayload> scratch;
  for (std::size_t b = 0; b < span_len; ++b) {
    const std::size_t begin = offsets[b];
    const std::size_t size = offsets[b + 1] - begin;
    if (!bucket_counts.empty()) bucket_counts[first + b] += size;
    if (size == 0) continue;
    const std::size_t padded = std::bit_ceil(size);
    scratch.assign(padded, KeyPayload{kSentinelKey, kSentinelKey});
    std::copy_n(grouped.begin() + static_cast<std::ptrdiff_t>(begin), size, scratch.begin());
    bitonic_network(scratch, stats);
    // Sentinels compare >= every real tuple, so the first `size` are the bucket.
    for (std::size_t j = 0; j < size; ++j) {
      keys[begin + j] = scratch[j].key;
      payloads[begin + j] = scratch[j].payload;
    }
    ++stats.partitions_sorted;
  }
  return stats;
}

SortedRelation sort_phase(PartitionedRelation part, const CdfModel& model, std::size_t p) {
  const std::size_t W = std::max<std::size_t>(part.workers, 1);
  if (part.range_offsets.size() != W + 1)
    throw Error(ErrorCode::invalid_argument, "partitioned relation has no range layout");
  std::vector<std::vector<std::size_t>> counts(W, std::vector<std::size_t>(p, 0));
  std::vector<SortStats> stats(W);
  parallel_for(W, [&](std::size_t w) {
    const std::size_t begin = part.range_offsets[w];
    const std::size_t size = part.range_size(w);
    stats[w] = cdf_bitonic_sort(std::span(part.data.keys).subspan(begin, size),
                                std::span(part.data.payloads).subspan(begin, size), model, p, counts[w]);
  });

  SortedRelation out;
  out.data = std::move(part.data);
  out.range_offsets = std::move(part.range_offsets);
  out.buckets = p;
  out.model_fingerprint = model.fingerprint();
  out.bucket_offsets.assign(p + 1, 0);
  for (std::size_t b = 0; b < p; ++b) {
    std::size_t total = 0;
    for (std::size_t w = 0; w < W; ++w) total += counts[w][b];
    out.bucket_offsets[b + 1] = out.bucket_offsets[b] + total;
  }
  for (const SortStats& st : stats) out.stats += st;
  return out;
}

namespace {

void merge_join(std::span<const Key> rk, std::span<const Payload> rp, std::span<const Key> sk,
                std::span<const Payload> sp, ResultCollector& sink) {
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sk.size() && j < rk.size()) {
    if (sk[i] < rk[j]) {
      ++i;
    } else if (rk[j] < sk[i]) {
      ++j;
    } else {
      const Key k = sk[i];
      std::size_t i_end = i;
      while (i_end < sk.size() && sk[i_end] == k) ++i_end;
      std::size_t j_end = j;
      while (j_end < rk.size() && rk[j_end] == k) ++j_end;
      for (std::size_t a = i; a < i_end; ++a)
        for (std::size_t b = j; b < j_end; ++b) sink.emit(rp[b], sp[a]);
      i = i_end;
      j = j_end;
    }
  }
}

}  // namespace

JoinResult chunked_join(const SortedRelation& r, const SortedRelation& s, const CdfModel& model_r,
                        std::size_t p_r, std::size_t workers, bool materialize) {
  if (r.buckets != p_r || r.bucket_offsets.size() != p_r + 1 ||
      r.model_fingerprint != model_r.fingerprint())
    throw Error(ErrorCode::model_mismatch, "R was not bucketized with this model and scale");
  workers = std::max<std::size_t>(workers, 1);
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  if (r.data.empty() || s.data.empty()) return merge_results(sinks, materialize);

  const bool own_ranges = s.range_offsets.size() == workers + 1;
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange chunk = own_ranges ? ChunkRange{s.range_offsets[w], s.range_offsets[w + 1]}
                                        : chunk_range(s.data.size(), workers, w);
    std::size_t pos = chunk.begin;
    while (pos < chunk.end) {
      // The S bucket holding pos, cut at the worker boundary.
      const auto next = std::upper_bound(s.bucket_offsets.begin(), s.bucket_offsets.end(), pos);
      const std::size_t seg_end = next == s.bucket_offsets.end() ? chunk.end : std::min(chunk.end, *next);
      const std::size_t f = partition_index(model_r, s.data.keys[pos], p_r);
      const std::size_t l = partition_index(model_r, s.data.keys[seg_end - 1], p_r);
      const std::size_t rb = r.bucket_offsets[f];
      const std::size_t re = r.bucket_offsets[l + 1];
      merge_join(std::span(r.data.keys).subspan(rb, re - rb), std::span(r.data.payloads).subspan(rb, re - rb),
                 std::span(s.data.keys).subspan(pos, seg_end - pos),
                 std::span(s.data.payloads).subspan(pos, seg_end - pos), sinks[w]);
      pos = seg_end;
    }
  });
  return merge_results(sinks, materialize);
}

JoinOutput lsj_join(const Relation& r, const Relation& s, const LsjConfig& config) {
  config.validate();
  JoinOutput out;
  out.result.materialized = config.materialize;
  if (r.empty() || s.empty()) return out;
  const std::size_t W = config.workers;

  Stopwatch sw;
  const CdfModel model_r = sample_train(r, config.sample_rate, W, config.seed, config.model_fanout);
  const CdfModel model_s =
      sample_train(s, config.sample_rate, W, mix64(config.seed, 0x53), config.model_fanout);
  out.breakdown.smpl = sw.lap();

  PartitionedRelation part_r = range_partition(r, model_r, config);
  PartitionedRelation part_s = range_partition(s, model_s, config);
  out.breakdown.part = sw.lap();

  const SortedRelation sorted_r = sort_phase(std::move(part_r), model_r, config.fanout);
  const SortedRelation sorted_s = sort_phase(std::move(part_s), model_s, config.fanout);
  out.breakdown.sort = sw.lap();
  out.breakdown.sorting = sorted_r.stats;
  out.breakdown.sorting += sorted_s.stats;

  out.result = chunked_join(sorted_r, sorted_s, model_r, config.fanout, W, config.materialize);
  out.breakdown.join = sw.lap();
  return out;
}

void LsjCostParams::validate() const {
  const double counts[] = {n_r, n_s, s_r, s_s};
  for (double c : counts)
    if (!(c >= 0.0)) throw Error(ErrorCode::invalid_argument, "counts must be >= 0");
  if (!(workers >= 1.0)) throw Error(ErrorCode::invalid_argument, "W must be >= 1");
  if (!(p_r >= workers && p_s >= workers)) throw Error(ErrorCode::invalid_argument, "need P_R, P_S >= W");
  if (!(o_r >= 0.0 && o_r <= workers && o_s >= 0.0 && o_s <= workers))
    throw Error(ErrorCode::invalid_argument, "need 0 <= O_R, O_S <= W");
}

namespace {

double lg(double x) noexcept { return x <= 1.0 ? 0.0 : std::log2(x); }

}  // namespace

LsjCostTerms lsj_cost_terms(const LsjCostParams& c) {
  c.validate();
  const double W = c.workers;
  LsjCostTerms t;
  t.sampling = (c.s_r + c.s_s) / W + c.s_r * lg(c.s_r) + c.s_s * lg(c.s_s);
  t.partitioning = (c.n_r + c.n_s) / W;
  const double lr = lg(c.n_r / c.p_r);
  const double ls = lg(c.n_s / c.p_s);
  t.sorting = (c.n_r / W) * lr * lr + (c.n_s / W) * ls * ls;
  t.joining = (c.n_r / W) * c.o_s + (c.n_s / W) * c.o_r;
  return t;
}

double estimate_lsj_cost(const LsjCostParams& params) { return lsj_cost_terms(params).total(); }

}  // namespace ljoin
