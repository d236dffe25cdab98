#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "learned_joins/join_result.hpp"
#include "learned_joins/types.hpp"

namespace ljoin::check {

/// Independent join oracle: key -> payload lists, then the cross product.
inline std::vector<JoinPair> reference_join(const Relation& r, const Relation& s) {
  std::map<Key, std::vector<Payload>> by_key;
  for (std::size_t i = 0; i < r.size(); ++i) by_key[r.keys[i]].push_back(r.payloads[i]);
  std::vector<JoinPair> out;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const auto it = by_key.find(s.keys[j]);
    if (it == by_key.end()) continue;
    for (Payload p : it->second) out.push_back({p, s.payloads[j]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Relation relation_of(std::vector<Key> keys, Payload payload_base = 1) {
  Relation r;
  r.keys = std::move(keys);
  r.payloads.resize(r.keys.size());
  for (std::size_t i = 0; i < r.payloads.size(); ++i) r.payloads[i] = payload_base + i;
  return r;
}

inline std::vector<Key> iota_keys(std::size_t n, Key first = 0) {
  std::vector<Key> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = first + i;
  return k;
}

inline std::vector<Key> sorted_copy(std::vector<Key> k) {
  std::sort(k.begin(), k.end());
  return k;
}

}  // namespace ljoin::check
