// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "bandit_env.hpp"
#include "json.hpp"
#include "learned_joins/algorithms.hpp"
#include "learned_joins/baselines.hpp"
#include "learned_joins/bench.hpp"
#include "learned_joins/data.hpp"
#include "learned_joins/gapped_index.hpp"
#include "learned_joins/learned_hash.hpp"
#include "learned_joins/lsj.hpp"
#include "learned_joins/request_buffers.hpp"

using namespace ljoin;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

KeyVector keys_of(DatasetKind kind, std::size_t n, std::uint64_t seed) {
  DatasetSpec s;
  s.kind = kind;
  s.n = n;
  s.seed = seed;
  return gen_dataset(s);
}

Relation relation_of(DatasetKind kind, std::size_t n, std::uint64_t seed) {
  return make_relation(keys_of(kind, n, seed), seed);
}

constexpr std::array kKinds{DatasetKind::seq_h, DatasetKind::unif, DatasetKind::lognorm};

// 1. Every algorithm against the nested-loop oracle over the full grid.
Outcome oracle_equivalence() {
  std::size_t runs = 0, mismatches = 0;
  std::string first_bad;
  for (DatasetKind kind : kKinds) {
    for (std::size_t n : {1000u, 10000u, 100000u}) {
      for (double dup : {0.0, 0.25, 0.5}) {
        DatasetConfig d;
        d.kind = kind;
        d.n = n;
        d.seed = 42;
        d.dup_frac = dup;
        const JoinInputs in = make_inputs(d);
        const std::vector<JoinPair> expected = nlj_oracle(in.r, in.s).sorted_pairs();
        for (Algorithm algo : kAllAlgorithms) {
          for (std::size_t w : {1u, 4u}) {
            JoinConfig cfg;
            cfg.workers = w;
            cfg.seed = 42;
            const JoinRun run = run_join(algo, in.r, in.s, cfg);
            ++runs;
            if (run.output.result.sorted_pairs() != expected) {
              ++mismatches;
              if (first_bad.empty())
                first_bad = std::string(to_string(algo)) + "/" + std::string(to_string(kind)) + "/n=" +
                            std::to_string(n) + "/dup=" + fmt(dup) + "/W=" + std::to_string(w);
            }
          }
        }
      }
    }
  }
  std::string detail = std::to_string(runs - mismatches) + "/" + std::to_string(runs) + " runs oracle-equal";
  if (!first_bad.empty()) detail += "; first mismatch " + first_bad;
  return {mismatches == 0, detail};
}

// 2. GRMI exponential search vs RMI binary search, successful lookups only.
Outcome grmi_proximity() {
  bool ok = true;
  std::string detail;
  for (DatasetKind kind : {DatasetKind::seq_h, DatasetKind::unif}) {
    const Relation r = relation_of(kind, 100000, 7);
    const JoinOutput g = grmi_inlj(build_grmi(r, 4.0), r, 1, false);
    const JoinOutput b = rmi_inlj(build_rmi_index(r), r, 1, false);
    const double n = static_cast<double>(r.size());
    const double gs = static_cast<double>(g.breakdown.lookup.search_steps) / n;
    const double bs = static_cast<double>(b.breakdown.lookup.search_steps) / n;
    ok = ok && gs <= bs;
    if (kind == DatasetKind::seq_h) ok = ok && gs <= 3.0;
    detail += std::string(to_string(kind)) + ": grmi " + fmt(gs) + " vs rmi " + fmt(bs) + " probes/lookup; ";
  }
  detail += "seq_h bound 3";
  return {ok, detail};
}

// 3. Buffered probing returns the same multiset and switches leaves far less.
Outcome buffering() {
  using Result = std::vector<std::pair<std::size_t, std::optional<Payload>>>;
  auto run = [](const GappedIndex& idx, const KeyVector& probes, bool buffered, LookupStats& st) {
    Result out;
    out.reserve(probes.size());
    auto sink = [&](std::size_t tag, std::optional<Payload> p) { out.emplace_back(tag, p); };
    st = buffered ? buffered_probe(idx, probes, plan_for_index(idx, 200), sink) : unbuffered_probe(idx, probes, sink);
    std::sort(out.begin(), out.end());
    return out;
  };

  const Relation small = relation_of(DatasetKind::unif, 100000, 3);
  const GappedIndex small_idx = build_grmi(small);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Key> any(0, 100010);
  KeyVector probes(100000);
  for (Key& k : probes) k = any(rng);
  LookupStats st_b, st_u;
  const bool same = run(small_idx, probes, true, st_b) == run(small_idx, probes, false, st_u);

  const Relation big = relation_of(DatasetKind::unif, 1000000, 4);
  const GappedIndex big_idx = build_grmi(big);
  KeyVector big_probes(1000000);
  for (Key& k : big_probes) k = big.keys[rng() % big.size()];
  LookupStats lb, lu;
  run(big_idx, big_probes, true, lb);
  run(big_idx, big_probes, false, lu);
  const double ratio = static_cast<double>(lb.segment_switches) / static_cast<double>(lu.segment_switches);
  return {same && ratio <= 0.1, std::string("multiset ") + (same ? "equal" : "DIFFERS") + " over 1e5 probes; switches " +
                                    std::to_string(lb.segment_switches) + " vs " + std::to_string(lu.segment_switches) +
                                    " (ratio " + fmt(ratio) + ", bound 0.1) on 1e6 index, 1e6 probes"};
}

// 4. The recurrence, checked against itself and the closed form m^k (2^(k-1) - 1).
Outcome recurrence() {
  bool ok = true;
  auto check = [&](std::uint64_t n, std::uint64_t m, unsigned k) {
    const std::uint64_t s = request_buffer_total(n, m);
    // Below the base case S is 0; above it the recurrence must hold exactly.
    ok = ok && s == (n <= m ? 0 : n + 2 * m * request_buffer_total(n / m, m));
    ok = ok && s == n * ((std::uint64_t{1} << (k - 1)) - 1);
    const BufferPlan plan = plan_buffers(n, m);
    ok = ok && plan.child_buffers_total == s && plan.root_buffer_size == n + s;
    for (const BufferLevel& l : plan.levels)
      ok = ok && l.analytic_size == l.subtree_models + request_buffer_total(l.subtree_models, m);
  };
  for (unsigned k = 1; k <= 20; ++k) check(std::uint64_t{1} << k, 2, k);
  check(1000000, 1000, 2);
  double worst = 0.0;
  for (std::uint64_t n : {1000u, 10000u, 100000u, 1000000u}) {
    const double ratio = static_cast<double>(request_buffer_total(n, 1000)) /
                         (static_cast<double>(n) * std::log(static_cast<double>(n)) / std::log(1000.0));
    worst = std::max(worst, ratio);
  }
  ok = ok && worst <= 3.0;
  return {ok, "exact on m=2 (2^1..2^20) and m=1000 (1e6); max S(n)/(n log_m n) = " + fmt(worst) +
                  " over n=1e3..1e6, m=1000 (bound 3)"};
}

std::uint64_t network_formula(std::uint64_t s) {
  if (s < 2) return 0;
  const auto lg = static_cast<std::uint64_t>(std::log2(static_cast<double>(s)));
  return s * lg * (lg + 1) / 4;
}

// 5. Exact comparator counts per bucket and strict decrease with p.
Outcome comparator_law() {
  bool ok = true;
  std::mt19937_64 rng(9);
  for (std::uint64_t s = 1; s <= 4096; s *= 2) {
    std::vector<KeyPayload> items(s);
    for (std::size_t i = 0; i < s; ++i) items[i] = {rng() % 977, i};
    SortStats st;
    bitonic_network(items, st);
    ok = ok && st.comparator_count == network_formula(s);
  }
  const std::size_t n = std::size_t{1} << 16;
  KeyVector keys(n);
  std::iota(keys.begin(), keys.end(), Key{0});
  const CdfModel model = train_rmi(keys, 1);
  std::shuffle(keys.begin(), keys.end(), rng);
  std::map<std::size_t, std::uint64_t> counts;
  for (std::size_t p : {1u, 4u, 64u}) {
    KeyVector k = keys;
    std::vector<Payload> pl(n);
    std::iota(pl.begin(), pl.end(), Payload{1});
    const SortStats st = cdf_bitonic_sort(k, pl, model, p);
    counts[p] = st.comparator_count;
    ok = ok && st.comparator_count == p * network_formula(n / p) && std::is_sorted(k.begin(), k.end());
  }
  ok = ok && counts[64] < counts[4] && counts[4] < counts[1];
  return {ok, "network counts exact for s=2^0..2^12; n=2^16: p=1 " + std::to_string(counts[1]) + ", p=4 " +
                  std::to_string(counts[4]) + ", p=64 " + std::to_string(counts[64])};
}

// 6. Partition and sort phases.
Outcome sortedness() {
  bool ok = true;
  std::size_t cases = 0;
  for (DatasetKind kind : kKinds) {
    const Relation r = relation_of(kind, 100000, 11);
    std::vector<std::pair<Key, Payload>> in;
    for (std::size_t i = 0; i < r.size(); ++i) in.emplace_back(r.keys[i], r.payloads[i]);
    std::sort(in.begin(), in.end());
    for (std::size_t w : {1u, 4u, 8u}) {
      LsjConfig cfg;
      cfg.workers = w;
      const CdfModel m = sample_train(r, cfg.sample_rate, w, cfg.seed);
      const PartitionedRelation part = range_partition(r, m, cfg);
      LsjConfig off = cfg;
      off.swwc = false;
      const PartitionedRelation part_off = range_partition(r, m, off);
      ok = ok && part.data.keys == part_off.data.keys && part.data.payloads == part_off.data.payloads &&
           part.range_offsets == part_off.range_offsets;

      std::vector<std::pair<Key, Payload>> perm;
      for (std::size_t i = 0; i < part.data.size(); ++i) perm.emplace_back(part.data.keys[i], part.data.payloads[i]);
      std::sort(perm.begin(), perm.end());
      ok = ok && perm == in;
      bool have = false;
      Key prev_max = 0;
      for (std::size_t x = 0; x < w; ++x) {
        if (part.range_size(x) == 0) continue;
        const auto b = part.data.keys.begin() + part.range_offsets[x];
        const auto e = part.data.keys.begin() + part.range_offsets[x + 1];
        const auto [mn, mx] = std::minmax_element(b, e);
        if (have) ok = ok && prev_max < *mn;
        prev_max = *mx;
        have = true;
      }

      const SortedRelation sorted = sort_phase(part, m, cfg.fanout);
      ok = ok && std::is_sorted(sorted.data.keys.begin(), sorted.data.keys.end());
      std::vector<std::pair<Key, Payload>> out;
      for (std::size_t i = 0; i < sorted.data.size(); ++i) out.emplace_back(sorted.data.keys[i], sorted.data.payloads[i]);
      ok = ok && out == in;
      ++cases;
    }
  }
  return {ok, std::to_string(cases) + " (kind, W) cases: permutation, range order, SWWC identity, global sort"};
}

// 7. Spline-hash collision contrast. The sampled join hashes into |R| slots,
// so the full-data spline is measured at the same table length (factor 1).
Outcome collisions() {
  const Relation seq = relation_of(DatasetKind::seq_h, 100000, 13);
  const double c_seq = build_spline_hash(seq, kDefaultSplineError, kDefaultRadixBits, 1.0).collision_fraction();
  const Relation ln = relation_of(DatasetKind::lognorm, 100000, 13);
  const SplineModel sampled = train_sampled_spline(ln.keys, 0.02, 42, kDefaultSplineError, kDefaultRadixBits);
  auto sampled_at = [&](std::size_t len) {
    return collision_fraction(ln.keys, len, [&](Key k) { return partition_index(sampled, k, len); });
  };
  const double c_full = build_spline_hash(ln, kDefaultSplineError, kDefaultRadixBits, 1.0).collision_fraction();
  const double c_sampled = sampled_at(ln.size());
  // Context only: the same contrast with four slots per key.
  const double c_full4 = build_spline_hash(ln, kDefaultSplineError, kDefaultRadixBits, 4.0).collision_fraction();
  const double c_sampled4 = sampled_at(4 * ln.size());
  const bool ok = c_seq < 0.367 && c_sampled >= 2.0 * c_full;
  return {ok, "seq_h full spline " + fmt(c_seq) + " (< 0.367); lognorm sampled " + fmt(c_sampled) + " vs full " +
                  fmt(c_full) + " at |R| slots (ratio " + fmt(c_sampled / c_full) + ", bound 2); at 4|R| slots " +
                  fmt(c_sampled4) + " vs " + fmt(c_full4) + " (ratio " + fmt(c_sampled4 / c_full4) + ")"};
}

// 8. Bandit environments, each run twice to confirm determinism.
Outcome bandit() {
  const double dom = check::dominant_arm_rate(Algorithm::radix_join, 1000, 500, 7);
  const double dom2 = check::dominant_arm_rate(Algorithm::radix_join, 1000, 500, 7);
  const check::SplitAccuracy split = check::split_accuracy(Algorithm::grmi_inlj, Algorithm::lsj, 2000, 11);
  const check::SplitAccuracy split2 = check::split_accuracy(Algorithm::grmi_inlj, Algorithm::lsj, 2000, 11);
  const bool deterministic = dom == dom2 && split.small == split2.small && split.large == split2.large;
  const bool ok = dom >= 0.9 && split.small >= 0.8 && split.large >= 0.8 && deterministic;
  return {ok, "dominant arm rate " + fmt(dom) + " (>= 0.9); split accuracy " + fmt(split.small) + " / " +
                  fmt(split.large) + " (>= 0.8); " + (deterministic ? "deterministic" : "NOT deterministic")};
}

// 9. Cost model on hand-computed parameters (powers of two keep logs exact).
Outcome cost_model() {
  LsjCostParams p;
  p.n_r = p.n_s = 1 << 20;
  p.s_r = p.s_s = 1 << 10;
  p.p_r = p.p_s = 1 << 10;
  p.o_r = p.o_s = 2;
  p.workers = 4;
  const LsjCostTerms t = lsj_cost_terms(p);
  bool ok = t.sampling == 20992.0 && t.partitioning == 524288.0 && t.sorting == 52428800.0 &&
            t.joining == 1048576.0 && estimate_lsj_cost(p) == 54022656.0;

  LsjCostParams drop = p;
  drop.s_r = drop.s_s = drop.o_r = drop.o_s = 0;
  ok = ok && estimate_lsj_cost(drop) == 524288.0 + 52428800.0;
  LsjCostParams full = p;
  full.p_r = full.n_r;
  ok = ok && lsj_cost_terms(full).sorting == 26214400.0;
  LsjCostParams wider = p;
  wider.workers = 8;
  ok = ok && estimate_lsj_cost(wider) < estimate_lsj_cost(p);
  return {ok, "terms 20992 + 524288 + 52428800 + 1048576 = " + fmt(estimate_lsj_cost(p), 12) +
                  "; dropout, P_R = N_R and doubled-W identities"};
}

// 10. The real CLI, run twice over every algorithm with W in {1, 4}.
Outcome cli_determinism() {
#ifndef LJOIN_BENCH_PATH
  return {false, "ljoin_bench not built"};
#else
  std::string algos;
  for (Algorithm a : kAllAlgorithms) algos += (algos.empty() ? "" : ",") + std::string(to_string(a));
  const std::string cmd = std::string(LJOIN_BENCH_PATH) + " bench --algo " + algos +
                          " --dataset seq_h,unif,lognorm --n 20000 --dup-frac 0.25 --workers 1,4 --repeat 2 --seed 42";
  auto invoke = [&](std::vector<nlohmann::json>& out) {
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return false;
    std::string text;
    std::array<char, 1 << 14> buf;
    while (std::fgets(buf.data(), buf.size(), pipe)) text += buf.data();
    const int status = ::pclose(pipe);
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) out.push_back(nlohmann::json::parse(line));
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  std::vector<nlohmann::json> a, b;
  if (!invoke(a) || !invoke(b)) return {false, "bench invocation failed"};
  if (a.size() != b.size() || a.size() != 10 * 3 * 2 * 2) return {false, "unexpected report count " + std::to_string(a.size())};

  std::map<std::string, std::pair<std::uint64_t, nlohmann::json>> reference;  // (algo, dataset) -> first seen
  std::size_t compared = 0;
  bool ok = true;
  for (const auto* runs : {&a, &b}) {
    for (const nlohmann::json& j : *runs) {
      const std::string key = j["algorithm"].get<std::string>() + "/" + j["dataset"]["kind"].get<std::string>();
      const auto rc = j["result_count"].get<std::uint64_t>();
      auto it = reference.find(key);
      if (it == reference.end()) {
        reference.emplace(key, std::make_pair(rc, j["counters"]));
        continue;
      }
      ok = ok && it->second.first == rc && it->second.second == j["counters"];
      ++compared;
    }
  }
  return {ok, std::to_string(a.size() + b.size()) + " reports; " + std::to_string(compared) +
                  " compared against the first (algo, dataset) record across repeats, invocations and W"};
#endif
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"GRMI proximity", grmi_proximity},
      {"buffering transparency + locality", buffering},
      {"request-buffer recurrence", recurrence},
      {"comparator-count law", comparator_law},
      {"sortedness + partition soundness", sortedness},
      {"collision contrast", collisions},
      {"bandit convergence", bandit},
      {"cost model", cost_model},
      {"end-to-end determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << " — " << o.detail
              << " (" << fmt(secs, 3) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
