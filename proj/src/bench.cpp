#include "learned_joins/bench.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

#include "json.hpp"

namespace ljoin {

std::uint64_t default_seed() {
  const char* env = std::getenv("LEARNED_JOINS_SEED");
  if (env == nullptr) return kDefaultSeed;
  std::uint64_t value = 0;
  const char* end = env + std::strlen(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc{} || ptr != end || ptr == env) return kDefaultSeed;
  return value;
}

Relation make_side(KeyVector keys, std::uint64_t seed, char side) {
  return make_relation(std::move(keys), mix64(seed, static_cast<std::uint64_t>(side)));
}

JoinInputs make_inputs(const DatasetConfig& dataset) {
  auto draw = [&](char side) {
    DatasetSpec spec;
    spec.kind = dataset.kind;
    spec.n = dataset.n;
    spec.seed = mix64(dataset.seed, static_cast<std::uint64_t>(side));
    KeyVector keys = gen_dataset(spec);
    if (dataset.dup_frac > 0.0) keys = inject_duplicates(keys, dataset.dup_frac, mix64(spec.seed, 0xD0));
    return make_side(std::move(keys), dataset.seed, side);
  };
  JoinInputs inputs;
  inputs.r = draw('R');
  inputs.s = dataset.self_join ? inputs.r : draw('S');
  return inputs;
}

BenchReport run_report(Algorithm algo, const DatasetConfig& dataset, const JoinInputs& inputs,
                       const JoinConfig& config, std::size_t repetition) {
  const JoinRun run = run_join(algo, inputs.r, inputs.s, config);
  BenchReport rep;
  rep.algorithm = algo;
  rep.dataset = dataset;
  rep.config = config;
  rep.repetition = repetition;
  rep.r_size = inputs.r.size();
  rep.s_size = inputs.s.size();
  rep.runtime_s = run.runtime_s;
  rep.index_build_s = run.index_build_s;
  rep.throughput = run.runtime_s > 0.0 ? static_cast<double>(rep.r_size + rep.s_size) / run.runtime_s : 0.0;
  rep.result_count = run.output.result.count;
  rep.checksum = run.output.result.checksum;
  rep.breakdown = run.output.breakdown;
  return rep;
}

std::string report_to_json(const BenchReport& rep) {
  using nlohmann::json;
  const JoinConfig& c = rep.config;
  const PhaseBreakdown& b = rep.breakdown;
  json j;
  j["algorithm"] = std::string(to_string(rep.algorithm));
  j["dataset"] = {{"kind", std::string(to_string(rep.dataset.kind))},
                  {"n", rep.dataset.n},
                  {"seed", rep.dataset.seed},
                  {"dup_frac", rep.dataset.dup_frac},
                  {"self_join", rep.dataset.self_join}};
  j["workers"] = c.workers;
  j["config"] = {{"workers", c.workers},
                 {"seed", c.seed},
                 {"materialize", c.materialize},
                 {"gap_factor", c.gap_factor},
                 {"rmi_fanout", c.rmi_fanout},
                 {"buffer_cap", c.buffer_cap},
                 {"spline_error", c.spline_error},
                 {"radix_bits", c.radix_bits},
                 {"table_factor", c.table_factor},
                 {"sample_rate", c.sample_rate},
                 {"fanout", c.fanout},
                 {"swwc", c.swwc},
                 {"swwc_buf_len", c.swwc_buf_len},
                 {"overalloc", c.overalloc},
                 {"radix_passes", c.radix_passes},
                 {"radix_bits_per_pass", c.radix_bits_per_pass}};
  j["repetition"] = rep.repetition;
  j["r_size"] = rep.r_size;
  j["s_size"] = rep.s_size;
  j["runtime_s"] = rep.runtime_s;
  j["index_build_s"] = rep.index_build_s;
  j["throughput"] = rep.throughput;
  j["result_count"] = rep.result_count;
  j["checksum"] = rep.checksum;
  j["breakdown"] = {{"smpl", b.smpl}, {"part", b.part}, {"sort", b.sort}, {"mrge", b.mrge},
                    {"join", b.join}, {"pred", b.pred}, {"srch", b.srch}};
  j["counters"] = {{"search_steps", b.lookup.search_steps},
                   {"predictions", b.lookup.predictions},
                   {"comparator_count", b.sorting.comparator_count},
                   {"partitions_sorted", b.sorting.partitions_sorted}};
  j["locality"] = {{"segment_switches", b.lookup.segment_switches}, {"flushes", b.lookup.flushes}};
  return j.dump();
}

namespace {

template <typename T>
std::vector<T> or_default(const std::vector<T>& axis, T fallback) {
  return axis.empty() ? std::vector<T>{fallback} : axis;
}

}  // namespace

void run_bench(const BenchSweep& sweep, const std::function<void(const BenchReport&)>& sink) {
  const JoinConfig& base = sweep.base;
  const auto algos = or_default(sweep.algorithms, Algorithm::lsj);
  const auto kinds = or_default(sweep.datasets, DatasetKind::seq_h);
  const auto sizes = or_default<std::size_t>(sweep.sizes, 10000);
  const auto dups = or_default(sweep.dup_fracs, 0.0);
  const auto workers = or_default(sweep.workers, base.workers);
  const auto gaps = or_default(sweep.gap_factors, base.gap_factor);
  const auto errors = or_default(sweep.spline_errors, base.spline_error);
  const auto swwc = or_default(sweep.swwc, base.swwc);
  const auto fanouts = or_default(sweep.fanouts, base.fanout);

  for (DatasetKind kind : kinds) {
    for (std::size_t n : sizes) {
      for (double dup : dups) {
        const DatasetConfig dataset{kind, n, sweep.seed, dup, sweep.self_join};
        const JoinInputs inputs = make_inputs(dataset);
        for (Algorithm algo : algos)
          for (std::size_t w : workers)
            for (double g : gaps)
              for (std::size_t e : errors)
                for (bool sw : swwc)
                  for (std::size_t p : fanouts) {
                    JoinConfig cfg = base;
                    cfg.workers = w;
                    cfg.gap_factor = g;
                    cfg.spline_error = e;
                    cfg.swwc = sw;
                    cfg.fanout = p;
                    cfg.seed = sweep.seed;
                    for (std::size_t rep = 0; rep < sweep.repeat; ++rep)
                      sink(run_report(algo, dataset, inputs, cfg, rep));
                  }
      }
    }
  }
}

}  // namespace ljoin
