#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "learned_joins/baselines.hpp"
#include "learned_joins/data.hpp"
#include "learned_joins/gapped_index.hpp"
#include "test_support.hpp"

using namespace ljoin;

namespace {

Relation dataset_relation(DatasetKind kind, std::size_t n, std::uint64_t seed, double dup = 0.0) {
  DatasetSpec s;
  s.kind = kind;
  s.n = n;
  s.seed = seed;
  KeyVector k = gen_dataset(s);
  if (dup > 0.0) k = inject_duplicates(k, dup, seed);
  return make_relation(std::move(k), seed);
}

void expect_layout_invariants(const GappedIndex& idx, const Relation& rel) {
  const auto keys = idx.gapped_keys();
  ASSERT_EQ(keys.size(), idx.slots());
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_EQ(idx.occupied_count(), rel.size());
  std::size_t set = 0;
  Key last_real = 0;
  bool seen_real = false;
  std::vector<std::pair<Key, Payload>> stored;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (idx.occupied(i)) {
      ++set;
      last_real = keys[i];
      seen_real = true;
      stored.emplace_back(keys[i], idx.gapped_payloads()[i]);
    } else if (seen_real) {
      ASSERT_EQ(keys[i], last_real) << "gap slot " << i;
    }
  }
  EXPECT_EQ(set, rel.size());
  std::vector<std::pair<Key, Payload>> expected;
  for (std::size_t i = 0; i < rel.size(); ++i) expected.emplace_back(rel.keys[i], rel.payloads[i]);
  std::sort(expected.begin(), expected.end());
  std::sort(stored.begin(), stored.end());
  EXPECT_EQ(stored, expected);
}

std::uint64_t probes_for(std::span<const Key> keys, std::size_t start, Key key, std::optional<std::size_t>* out = nullptr) {
  LookupStats st;
  const auto r = exponential_search(keys, start, key, &st);
  if (out) *out = r;
  return st.search_steps;
}

}  // namespace

TEST(BuildGrmi, GapFactorOneIsDense) {
  const Relation rel = dataset_relation(DatasetKind::unif, 5000, 1);
  const GappedIndex idx = build_grmi(rel, 1.0);
  ASSERT_EQ(idx.slots(), rel.size());
  const auto keys = idx.gapped_keys();
  EXPECT_EQ(std::vector<Key>(keys.begin(), keys.end()), check::sorted_copy(rel.keys));
  for (std::size_t i = 0; i < idx.slots(); ++i) EXPECT_TRUE(idx.occupied(i));
}

TEST(BuildGrmi, TenKeysGapTwo) {
  const Relation rel = check::relation_of(check::iota_keys(10));
  const GappedIndex idx = build_grmi(rel, 2.0);
  ASSERT_EQ(idx.slots(), 20u);
  for (std::size_t slot = 0; slot < idx.slots(); ++slot) {
    if (!idx.occupied(slot)) continue;
    const auto k = static_cast<std::int64_t>(idx.gapped_keys()[slot]);
    EXPECT_LE(std::abs(static_cast<std::int64_t>(slot) - 2 * k), 1) << "key " << k;
  }
  expect_layout_invariants(idx, rel);
}

TEST(BuildGrmi, DefaultGapFactor) {
  const Relation rel = check::relation_of(check::iota_keys(1000));
  const GappedIndex idx = build_grmi(rel);
  EXPECT_EQ(idx.gap_factor(), 4.0);
  EXPECT_EQ(idx.slots(), 4000u);
}

TEST(BuildGrmi, LayoutInvariantsAcrossDatasets) {
  for (auto kind : {DatasetKind::seq_h, DatasetKind::unif, DatasetKind::lognorm}) {
    for (double dup : {0.0, 0.25}) {
      for (double g : {1.0, 1.5, 4.0}) {
        const Relation rel = dataset_relation(kind, 20000, 3, dup);
        expect_layout_invariants(build_grmi(rel, g), rel);
      }
    }
  }
}

TEST(BuildGrmi, RejectsSmallGapFactor) {
  const Relation rel = check::relation_of({1, 2, 3});
  try {
    build_grmi(rel, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(GrmiLookup, CompleteAndSound) {
  for (auto kind : {DatasetKind::seq_h, DatasetKind::unif, DatasetKind::lognorm}) {
    const Relation rel = dataset_relation(kind, 10000, 5);
    const GappedIndex idx = build_grmi(rel, 4.0);
    for (std::size_t i = 0; i < rel.size(); ++i) {
      const auto p = grmi_lookup(idx, rel.keys[i]);
      ASSERT_TRUE(p.has_value());
      ASSERT_EQ(*p, rel.payloads[i]);
    }
  }
}

TEST(GrmiLookup, MidpointsAbsent) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<Key> d(1, 50000);
  std::set<Key> distinct;
  while (distinct.size() < 1000) distinct.insert(2 * d(rng));
  KeyVector keys(distinct.begin(), distinct.end());
  std::shuffle(keys.begin(), keys.end(), rng);
  const Relation rel = check::relation_of(keys);
  const GappedIndex idx = build_grmi(rel, 4.0);
  const KeyVector sorted = check::sorted_copy(keys);
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const Key mid = sorted[i] + 1;  // keys are all even
    EXPECT_FALSE(grmi_lookup(idx, mid).has_value()) << mid;
    EXPECT_TRUE(grmi_lookup_range(idx, mid).empty());
  }
  EXPECT_FALSE(grmi_lookup(idx, 0).has_value());
  EXPECT_FALSE(grmi_lookup(idx, sorted.back() + 1).has_value());
}

TEST(GrmiLookup, EmptyIndex) {
  const GappedIndex idx = build_grmi(Relation{}, 4.0);
  EXPECT_EQ(idx.size(), 0u);
  EXPECT_FALSE(grmi_lookup(idx, 7).has_value());
  EXPECT_TRUE(grmi_lookup_range(idx, 7).empty());
}

TEST(GrmiLookupRange, Duplicates) {
  const Relation rel = check::relation_of({5, 9, 9, 1, 9, 12}, 100);
  const GappedIndex idx = build_grmi(rel, 3.0);
  std::vector<Payload> nine = grmi_lookup_range(idx, 9);
  EXPECT_EQ(nine, (std::vector<Payload>{101, 102, 104}));
  EXPECT_EQ(grmi_lookup_range(idx, 5), (std::vector<Payload>{100}));
  EXPECT_EQ(grmi_lookup(idx, 12), std::optional<Payload>(105));
  EXPECT_TRUE(grmi_lookup_range(idx, 6).empty());
}

TEST(GrmiLookupRange, MatchesOracleWithManyDuplicates) {
  const Relation rel = dataset_relation(DatasetKind::lognorm, 20000, 8, 0.5);
  const GappedIndex idx = build_grmi(rel, 4.0);
  std::map<Key, std::vector<Payload>> expected;
  for (std::size_t i = 0; i < rel.size(); ++i) expected[rel.keys[i]].push_back(rel.payloads[i]);
  for (auto& [k, ps] : expected) {
    auto got = grmi_lookup_range(idx, k);
    std::sort(got.begin(), got.end());
    std::sort(ps.begin(), ps.end());
    ASSERT_EQ(got, ps) << k;
  }
}

TEST(ExponentialSearch, ProbeCounts) {
  const std::vector<Key> keys{1, 3, 5, 7, 9, 11, 13, 15};
  std::optional<std::size_t> hit;
  EXPECT_EQ(probes_for(keys, 3, 7, &hit), 1u);
  EXPECT_EQ(hit, std::optional<std::size_t>(3));
  EXPECT_LE(probes_for(keys, 3, 11, &hit), 4u);
  EXPECT_EQ(hit, std::optional<std::size_t>(5));
  EXPECT_LE(probes_for(keys, 5, 7, &hit), 4u);
  EXPECT_EQ(hit, std::optional<std::size_t>(3));
}

TEST(ExponentialSearch, AbsentKeyWorstCase) {
  for (std::size_t w : {1u, 2u, 3u, 8u, 100u, 1000u, 4096u}) {
    std::vector<Key> keys(w);
    for (std::size_t i = 0; i < w; ++i) keys[i] = 2 * i + 2;
    const auto bound = 2 * static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(w, 2))))) + 2;
    std::uint64_t worst = 0;
    for (std::size_t start = 0; start < w; start += std::max<std::size_t>(1, w / 64)) {
      for (Key probe = 1; probe <= 2 * w + 3; probe += 2) {
        std::optional<std::size_t> hit;
        worst = std::max(worst, probes_for(keys, start, probe, &hit));
        ASSERT_FALSE(hit.has_value());
      }
    }
    EXPECT_LE(worst, bound) << "w=" << w;
  }
}

TEST(ExponentialSearch, FindsEveryKeyFromEveryStart) {
  std::vector<Key> keys{2, 2, 4, 4, 4, 8, 9, 9, 20, 21};
  for (std::size_t start = 0; start < keys.size(); ++start) {
    for (Key k : keys) {
      std::optional<std::size_t> hit;
      probes_for(keys, start, k, &hit);
      ASSERT_TRUE(hit.has_value());
      EXPECT_EQ(keys[*hit], k);
    }
    std::optional<std::size_t> miss;
    probes_for(keys, start, 5, &miss);
    EXPECT_FALSE(miss.has_value());
  }
}

TEST(GrmiInlj, MatchesOracle) {
  const Relation r = dataset_relation(DatasetKind::unif, 20000, 1, 0.2);
  const Relation s = dataset_relation(DatasetKind::unif, 20000, 2, 0.2);
  const GappedIndex idx = build_grmi(r, 4.0);
  const auto expected = check::reference_join(r, s);
  for (std::size_t w : {1u, 3u, 8u}) {
    const JoinOutput out = grmi_inlj(idx, s, w);
    EXPECT_EQ(out.result.count, expected.size());
    EXPECT_EQ(out.result.sorted_pairs(), expected);
    EXPECT_EQ(out.breakdown.lookup.predictions, s.size());
  }
}

TEST(GrmiInlj, ProximityBeatsBinarySearch) {
  for (auto kind : {DatasetKind::seq_h, DatasetKind::unif}) {
    const Relation r = dataset_relation(kind, 100000, 7);
    const JoinOutput g = grmi_inlj(build_grmi(r, 4.0), r, 1, false);
    const JoinOutput b = rmi_inlj(build_rmi_index(r), r, 1, false);
    const double grmi_steps = static_cast<double>(g.breakdown.lookup.search_steps) / static_cast<double>(r.size());
    const double rmi_steps = static_cast<double>(b.breakdown.lookup.search_steps) / static_cast<double>(r.size());
    EXPECT_LE(grmi_steps, rmi_steps) << to_string(kind);
    EXPECT_EQ(g.result.count, r.size());
  }
}
