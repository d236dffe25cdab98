#include "learned_joins/join_result.hpp"

#include <algorithm>

namespace ljoin {

std::vector<JoinPair> JoinResult::sorted_pairs() const {
  std::vector<JoinPair> out = pairs;
  std::sort(out.begin(), out.end());
  return out;
}

JoinResult merge_results(std::span<ResultCollector> parts, bool materialize) {
  JoinResult result;
  result.materialized = materialize;
  std::size_t total = 0;
  for (const ResultCollector& p : parts) total += p.pairs_.size();
  if (materialize) result.pairs.reserve(total);
  for (ResultCollector& p : parts) {
    result.count += p.count_;
    result.checksum += p.checksum_;
    if (materialize) {
      result.pairs.insert(result.pairs.end(), p.pairs_.begin(), p.pairs_.end());
      p.pairs_ = {};
    }
  }
  return result;
}

}  // namespace ljoin
