#include "learned_joins/request_buffers.hpp"

#include <algorithm>
#include <limits>

#include "learned_joins/parallel.hpp"

namespace ljoin {

std::uint64_t request_buffer_total(std::uint64_t n_models, std::uint64_t fanout) {
  if (fanout == 0) throw Error(ErrorCode::invalid_argument, "fanout must be >= 1");
  if (n_models <= fanout) return 0;
  if (fanout < 2)
    throw Error(ErrorCode::invalid_argument, "fanout 1 cannot split an RMI of more than one model");
  const std::uint64_t child = request_buffer_total(n_models / fanout, fanout);
  return n_models + 2 * fanout * child;
}

BufferPlan plan_buffers(std::uint64_t n_models, std::uint64_t fanout, std::size_t cap) {
  if (n_models < 1) throw Error(ErrorCode::invalid_argument, "n_models must be >= 1");
  if (cap < 1) throw Error(ErrorCode::invalid_argument, "buffer cap must be >= 1");
  BufferPlan plan;
  plan.n_models = n_models;
  plan.fanout = fanout;
  plan.cap = cap;
  plan.child_buffers_total = request_buffer_total(n_models, fanout);
  plan.root_buffer_size = n_models + plan.child_buffers_total;

  std::uint64_t models = n_models;
  for (std::size_t depth = 1; models > 1 || depth == 1; ++depth) {
    models = std::max<std::uint64_t>(1, models / fanout);
    BufferLevel level;
    level.depth = depth;
    level.subtree_models = models;
    level.analytic_size = models + request_buffer_total(models, fanout);
    // Subtrees at the recurrence's base case only hold leaves: they take the
    // configured maximum. Larger subtrees take min(analytic, cap).
    level.capacity = models <= fanout
                         ? cap
                         : static_cast<std::size_t>(std::min<std::uint64_t>(level.analytic_size, cap));
    plan.levels.push_back(level);
    if (fanout < 2) break;
  }
  return plan;
}

BufferPlan plan_for_index(const GappedIndex& index, std::size_t cap) {
  const std::uint64_t leaves = std::max<std::size_t>(index.rmi().fanout(), 1);
  return plan_buffers(leaves, leaves, cap);
}

namespace {

struct Pending {
  Key key;
  std::size_t tag;
};

constexpr std::size_t kNoLeaf = std::numeric_limits<std::size_t>::max();

/// Per-worker buffer set over the leaf layer. `resolve(tag, key, slot, stats)`
/// runs the last-mile search from a predicted slot.
template <typename Resolve>
class LeafBuffers {
 public:
  LeafBuffers(const GappedIndex& index, std::size_t capacity, Resolve resolve)
      : index_(index),
        capacity_(std::max<std::size_t>(capacity, 1)),
        buffers_(index.rmi().fanout()),
        resolve_(std::move(resolve)) {}

  void push(Key key, std::size_t tag) {
    const std::size_t leaf = index_.rmi().leaf_for(key);
    std::vector<Pending>& buf = buffers_[leaf];
    buf.push_back({key, tag});
    if (buf.size() >= capacity_) flush(leaf);
  }

  void flush_all() {
    for (std::size_t leaf = 0; leaf < buffers_.size(); ++leaf) flush(leaf);
  }

  const LookupStats& stats() const noexcept { return stats_; }
  double pred_seconds() const noexcept { return pred_seconds_; }
  double srch_seconds() const noexcept { return srch_seconds_; }

 private:
  void flush(std::size_t leaf) {
    std::vector<Pending>& buf = buffers_[leaf];
    if (buf.empty()) return;
    ++stats_.flushes;
    if (leaf != last_leaf_) {
      ++stats_.segment_switches;
      last_leaf_ = leaf;
    }
    Stopwatch sw;
    slots_.resize(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i)
      slots_[i] = index_.predicted_slot_in_leaf(leaf, buf[i].key);
    stats_.predictions += buf.size();
    pred_seconds_ += sw.lap();
    for (std::size_t i = 0; i < buf.size(); ++i) resolve_(buf[i].tag, buf[i].key, slots_[i], stats_);
    srch_seconds_ += sw.lap();
    buf.clear();
  }

  const GappedIndex& index_;
  std::size_t capacity_;
  std::vector<std::vector<Pending>> buffers_;
  std::vector<std::size_t> slots_;
  Resolve resolve_;
  LookupStats stats_;
  std::size_t last_leaf_ = kNoLeaf;
  double pred_seconds_ = 0.0;
  double srch_seconds_ = 0.0;
};

}  // namespace

LookupStats buffered_probe(const GappedIndex& index, std::span<const Key> keys,
                           const BufferPlan& plan, const ProbeSink& sink) {
  if (index.size() == 0) {
    for (std::size_t i = 0; i < keys.size(); ++i) sink(i, std::nullopt);
    return {};
  }
  auto resolve = [&](std::size_t tag, Key key, std::size_t slot, LookupStats& stats) {
    std::optional<Payload> first;
    index.for_each_match_from(
        slot, key,
        [&](Payload p) {
          if (!first) first = p;
        },
        &stats);
    sink(tag, first);
  };
  LeafBuffers buffers(index, plan.leaf_capacity(), resolve);
  for (std::size_t i = 0; i < keys.size(); ++i) buffers.push(keys[i], i);
  buffers.flush_all();
  return buffers.stats();
}

LookupStats unbuffered_probe(const GappedIndex& index, std::span<const Key> keys,
                             const ProbeSink& sink) {
  LookupStats stats;
  std::size_t last_leaf = kNoLeaf;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (index.size() > 0) {
      const std::size_t leaf = index.rmi().leaf_for(keys[i]);
      if (leaf != last_leaf) {
        ++stats.segment_switches;
        last_leaf = leaf;
      }
    }
    sink(i, index.lookup(keys[i], &stats));
  }
  return stats;
}

JoinOutput buffered_grmi_inlj(const GappedIndex& index, const Relation& probe,
                              std::size_t workers, std::size_t cap, bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  std::vector<LookupStats> stats(workers);
  std::vector<double> pred_time(workers, 0.0);
  std::vector<double> srch_time(workers, 0.0);
  const std::size_t capacity = plan_for_index(index, cap).leaf_capacity();

  parallel_for(workers, [&](std::size_t w) {
    if (index.size() == 0) return;
    ResultCollector& sink = sinks[w];
    auto resolve = [&](std::size_t tag, Key key, std::size_t slot, LookupStats& st) {
      const Payload s_payload = probe.payloads[tag];
      index.for_each_match_from(slot, key, [&](Payload r) { sink.emit(r, s_payload); }, &st);
    };
    LeafBuffers buffers(index, capacity, resolve);
    const ChunkRange chunk = chunk_range(probe.size(), workers, w);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) buffers.push(probe.keys[i], i);
    buffers.flush_all();
    stats[w] = buffers.stats();
    pred_time[w] = buffers.pred_seconds();
    srch_time[w] = buffers.srch_seconds();
  });

  JoinOutput out;
  out.result = merge_results(sinks, materialize);
  for (std::size_t w = 0; w < workers; ++w) {
    out.breakdown.lookup += stats[w];
    out.breakdown.pred = std::max(out.breakdown.pred, pred_time[w]);
    out.breakdown.srch = std::max(out.breakdown.srch, srch_time[w]);
  }
  return out;
}

}  // namespace ljoin
