#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "learned_joins/algorithms.hpp"
#include "learned_joins/baselines.hpp"
#include "learned_joins/bench.hpp"
#include "learned_joins/data.hpp"
#include "learned_joins/gapped_index.hpp"
#include "learned_joins/learned_hash.hpp"
#include "learned_joins/lsj.hpp"
#include "learned_joins/optimizer.hpp"
#include "learned_joins/request_buffers.hpp"

namespace py = pybind11;
using namespace ljoin;

namespace {

using KeyArray = py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>;

KeyVector to_keys(const KeyArray& a) {
  const auto view = a.unchecked<1>();
  KeyVector keys(static_cast<std::size_t>(view.shape(0)));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) keys[static_cast<std::size_t>(i)] = view(i);
  return keys;
}

py::array_t<std::uint64_t> to_array(const std::vector<std::uint64_t>& v) {
  return py::array_t<std::uint64_t>(static_cast<py::ssize_t>(v.size()), v.data());
}

Relation relation_of(const KeyArray& keys, const std::optional<KeyArray>& payloads, std::uint64_t seed,
                     char side) {
  Relation rel = make_side(to_keys(keys), seed, side);
  if (payloads) {
    KeyVector p = to_keys(*payloads);
    if (p.size() != rel.size()) throw Error(ErrorCode::invalid_argument, "payloads must match keys");
    rel.payloads = std::move(p);
  }
  return rel;
}

py::dict result_dict(const JoinResult& res) {
  py::dict d;
  d["count"] = res.count;
  d["checksum"] = res.checksum;
  if (res.materialized) {
    py::list pairs;
    for (const JoinPair& p : res.sorted_pairs()) pairs.append(py::make_tuple(p.r, p.s));
    d["pairs"] = pairs;
  }
  return d;
}

py::dict breakdown_dict(const PhaseBreakdown& b) {
  py::dict d;
  d["smpl"] = b.smpl;
  d["part"] = b.part;
  d["sort"] = b.sort;
  d["mrge"] = b.mrge;
  d["join"] = b.join;
  d["pred"] = b.pred;
  d["srch"] = b.srch;
  d["search_steps"] = b.lookup.search_steps;
  d["predictions"] = b.lookup.predictions;
  d["segment_switches"] = b.lookup.segment_switches;
  d["flushes"] = b.lookup.flushes;
  d["comparator_count"] = b.sorting.comparator_count;
  d["partitions_sorted"] = b.sorting.partitions_sorted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learned in-memory joins: learned indexes, LSJ, baselines and a bandit optimizer";

  py::register_exception<Error>(m, "LearnedJoinError", PyExc_RuntimeError);

  m.def("algorithms", [] {
    std::vector<std::string> names;
    for (Algorithm a : kAllAlgorithms) names.emplace_back(to_string(a));
    return names;
  });

  m.def(
      "gen_dataset",
      [](const std::string& kind, std::size_t n, std::uint64_t seed) {
        const auto k = parse_dataset_kind(kind);
        if (!k) throw Error(ErrorCode::invalid_spec, "unknown dataset: " + kind);
        DatasetSpec spec;
        spec.kind = *k;
        spec.n = n;
        spec.seed = seed;
        return to_array(gen_dataset(spec));
      },
      py::arg("kind"), py::arg("n"), py::arg("seed") = kDefaultSeed);

  m.def(
      "inject_duplicates",
      [](const KeyArray& keys, double frac, std::uint64_t seed) {
        return to_array(inject_duplicates(to_keys(keys), frac, seed));
      },
      py::arg("keys"), py::arg("frac"), py::arg("seed") = kDefaultSeed);

  m.def(
      "join",
      [](const std::string& algo, const KeyArray& r, const KeyArray& s, std::size_t workers,
         std::uint64_t seed, std::optional<KeyArray> r_payloads, std::optional<KeyArray> s_payloads,
         bool materialize) {
        const auto a = parse_algorithm(algo);
        if (!a) throw Error(ErrorCode::usage, "unknown algorithm: " + algo);
        const Relation rr = relation_of(r, r_payloads, seed, 'R');
        const Relation ss = relation_of(s, s_payloads, seed, 'S');
        JoinConfig cfg;
        cfg.workers = workers;
        cfg.seed = seed;
        cfg.materialize = materialize;
        JoinRun run;
        {
          py::gil_scoped_release release;
          run = run_join(*a, rr, ss, cfg);
        }
        py::dict d = result_dict(run.output.result);
        d["runtime_s"] = run.runtime_s;
        d["index_build_s"] = run.index_build_s;
        d["breakdown"] = breakdown_dict(run.output.breakdown);
        return d;
      },
      py::arg("algo"), py::arg("r"), py::arg("s"), py::arg("workers") = 1,
      py::arg("seed") = kDefaultSeed, py::arg("r_payloads") = py::none(),
      py::arg("s_payloads") = py::none(), py::arg("materialize") = true);

  m.def(
      "nlj_oracle",
      [](const KeyArray& r, const KeyArray& s, std::uint64_t seed, std::optional<KeyArray> r_payloads,
         std::optional<KeyArray> s_payloads) {
        const Relation rr = relation_of(r, r_payloads, seed, 'R');
        const Relation ss = relation_of(s, s_payloads, seed, 'S');
        return result_dict(nlj_oracle(rr, ss));
      },
      py::arg("r"), py::arg("s"), py::arg("seed") = kDefaultSeed, py::arg("r_payloads") = py::none(),
      py::arg("s_payloads") = py::none());

  py::class_<GappedIndex>(m, "GappedIndex")
      .def(py::init([](const KeyArray& keys, const std::optional<KeyArray>& payloads, double gap_factor,
                       std::uint64_t seed) { return build_grmi(relation_of(keys, payloads, seed, 'R'), gap_factor); }),
           py::arg("keys"), py::arg("payloads") = py::none(), py::arg("gap_factor") = 4.0,
           py::arg("seed") = kDefaultSeed)
      .def_property_readonly("size", &GappedIndex::size)
      .def_property_readonly("slots", &GappedIndex::slots)
      .def("lookup", [](const GappedIndex& idx, Key k) { return grmi_lookup(idx, k); })
      .def("lookup_range", [](const GappedIndex& idx, Key k) { return grmi_lookup_range(idx, k); });

  py::class_<SplineHashIndex>(m, "SplineHashIndex")
      .def(py::init([](const KeyArray& keys, const std::optional<KeyArray>& payloads, std::size_t max_error,
                       std::size_t radix_bits, double table_factor, std::uint64_t seed) {
             return build_spline_hash(relation_of(keys, payloads, seed, 'R'), max_error, radix_bits,
                                      table_factor);
           }),
           py::arg("keys"), py::arg("payloads") = py::none(), py::arg("max_error") = kDefaultSplineError,
           py::arg("radix_bits") = kDefaultRadixBits, py::arg("table_factor") = 4.0,
           py::arg("seed") = kDefaultSeed)
      .def_property_readonly("table_len", &SplineHashIndex::table_len)
      .def("collision_fraction", &SplineHashIndex::collision_fraction)
      .def("probe", [](const SplineHashIndex& idx, Key k) { return spline_hash_probe(idx, k); });

  m.def("request_buffer_total", &request_buffer_total, py::arg("n_models"), py::arg("fanout"));

  m.def(
      "estimate_lsj_cost",
      [](double n_r, double n_s, double s_r, double s_s, double p_r, double p_s, double o_r, double o_s,
         double workers) {
        return estimate_lsj_cost({n_r, n_s, s_r, s_s, p_r, p_s, o_r, o_s, workers});
      },
      py::arg("n_r"), py::arg("n_s"), py::arg("s_r"), py::arg("s_s"), py::arg("p_r"), py::arg("p_s"),
      py::arg("o_r"), py::arg("o_s"), py::arg("workers"));

  m.def(
      "featurize",
      [](std::uint64_t r_size, std::uint64_t s_size, const std::string& distribution, double dup_frac) {
        QueryMeta meta;
        meta.r_size = r_size;
        meta.s_size = s_size;
        meta.duplicate_frac = dup_frac;
        for (auto t : {DistributionTag::seq_h, DistributionTag::unif, DistributionTag::lognorm})
          if (to_string(t) == distribution) meta.distribution = t;
        return FeatureVector(featurize(meta));
      },
      py::arg("r_size"), py::arg("s_size"), py::arg("distribution") = "unknown", py::arg("dup_frac") = 0.0);

  py::class_<BanditState>(m, "Bandit")
      .def(py::init([](double prior_precision, double noise_scale) {
             return make_bandit(default_arms(), prior_precision, noise_scale);
           }),
           py::arg("prior_precision") = 1.0, py::arg("noise_scale") = 0.5)
      .def_property_readonly("arms",
                             [](const BanditState& s) {
                               std::vector<std::string> names;
                               for (Algorithm a : s.arms) names.emplace_back(to_string(a));
                               return names;
                             })
      .def(
          "select",
          [](const BanditState& s, const FeatureVector& x, std::uint64_t seed) {
            return std::string(to_string(select_arm(s, x, seed)));
          },
          py::arg("features"), py::arg("seed"))
      .def(
          "record",
          [](BanditState& s, const FeatureVector& x, const std::string& arm, double latency) {
            const auto a = parse_algorithm(arm);
            if (!a) throw Error(ErrorCode::invalid_argument, "unknown arm: " + arm);
            record_outcome(s, x, *a, latency);
          },
          py::arg("features"), py::arg("arm"), py::arg("latency_s"))
      .def("save_log", [](const BanditState& s, const std::string& path) { write_experience_log(path, s); })
      .def("replay_log", [](BanditState& s, const std::string& path) { return replay_experience_log(path, s); })
      .def_property_readonly("log_size", [](const BanditState& s) { return s.log.size(); });
}
