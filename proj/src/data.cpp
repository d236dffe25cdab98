#include "learned_joins/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

namespace ljoin {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::generation_exhausted: return "generation-exhausted";
    case ErrorCode::corrupt_file: return "corrupt-file";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::model_mismatch: return "model-mismatch";
    case ErrorCode::oracle_too_large: return "oracle-too-large";
    case ErrorCode::usage: return "usage";
  }
  return "unknown";
}

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::seq_h: return "seq_h";
    case DatasetKind::unif: return "unif";
    case DatasetKind::lognorm: return "lognorm";
  }
  return "unknown";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view name) {
  if (name == "seq_h") return DatasetKind::seq_h;
  if (name == "unif") return DatasetKind::unif;
  if (name == "lognorm") return DatasetKind::lognorm;
  return std::nullopt;
}

void DatasetSpec::validate() const {
  if (n < 1) throw Error(ErrorCode::invalid_spec, "n must be >= 1");
  if (!(hole_frac >= 0.0) || !(hole_frac < 1.0))
    throw Error(ErrorCode::invalid_spec, "hole_frac must be in [0, 1)");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::invalid_spec, "sigma must be > 0");
  if (!std::isfinite(mu)) throw Error(ErrorCode::invalid_spec, "mu must be finite");
}

namespace {

KeyVector gen_seq_h(const DatasetSpec& spec, std::mt19937_64& rng) {
  // Guard the ceiling against 9 / 0.9 landing a hair above 10.
  const double exact = static_cast<double>(spec.n) / (1.0 - spec.hole_frac);
  auto universe = static_cast<std::size_t>(std::ceil(exact - exact * 1e-12));
  universe = std::max(universe, spec.n);

  KeyVector ids(universe);
  std::iota(ids.begin(), ids.end(), Key{1});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(spec.n);
  return ids;
}

template <typename Draw, typename Seen>
KeyVector draw_distinct(std::size_t n, Draw&& draw, Seen&& seen) {
  KeyVector keys;
  keys.reserve(n);
  const std::uint64_t budget = 100 * static_cast<std::uint64_t>(n);
  std::uint64_t redraws = 0;
  while (keys.size() < n) {
    const std::optional<Key> k = draw();
    if (k && seen(*k)) {
      keys.push_back(*k);
      continue;
    }
    if (++redraws > budget)
      throw Error(ErrorCode::generation_exhausted,
                  "could not draw " + std::to_string(n) + " distinct keys");
  }
  return keys;
}

KeyVector gen_unif(const DatasetSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<bool> taken(spec.n + 1, false);
  const double scale = static_cast<double>(spec.n);
  return draw_distinct(
      spec.n,
      [&]() -> std::optional<Key> { return static_cast<Key>(std::llround(unit(rng) * scale)); },
      [&](Key k) {
        if (taken[k]) return false;
        taken[k] = true;
        return true;
      });
}

KeyVector gen_lognorm(const DatasetSpec& spec, std::mt19937_64& rng) {
  std::lognormal_distribution<double> dist(spec.mu, spec.sigma);
  std::unordered_set<Key> taken;
  taken.reserve(spec.n * 2);
  const double scale = static_cast<double>(spec.n);
  // Draws at or beyond 2^63 are rejected; this also keeps the sentinel free.
  constexpr double kLimit = 9.2e18;
  return draw_distinct(
      spec.n,
      [&]() -> std::optional<Key> {
        const double v = std::round(dist(rng) * scale);
        if (!(v < kLimit)) return std::nullopt;
        return static_cast<Key>(v);
      },
      [&](Key k) { return taken.insert(k).second; });
}

}  // namespace

KeyVector gen_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(mix64(spec.seed, static_cast<std::uint64_t>(spec.kind)));
  KeyVector keys;
  switch (spec.kind) {
    case DatasetKind::seq_h: return gen_seq_h(spec, rng);  // already a random subset in random order
    case DatasetKind::unif: keys = gen_unif(spec, rng); break;
    case DatasetKind::lognorm: keys = gen_lognorm(spec, rng); break;
  }
  std::shuffle(keys.begin(), keys.end(), rng);
  return keys;
}

KeyVector inject_duplicates(std::span<const Key> keys, double frac, std::uint64_t seed) {
  if (!(frac >= 0.0) || !(frac <= 1.0))
    throw Error(ErrorCode::invalid_argument, "duplicate fraction must be in [0, 1]");
  KeyVector out(keys.begin(), keys.end());
  const std::size_t n = out.size();
  const auto replaced = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  if (replaced == 0) return out;

  std::mt19937_64 rng(mix64(seed, 0xD0B1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t survivors = n - replaced;
  if (survivors == 0) {
    // Nothing survives: every position takes one seed-chosen original key.
    const Key k = keys[order.front()];
    std::fill(out.begin(), out.end(), k);
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick(0, survivors - 1);
  for (std::size_t i = survivors; i < n; ++i) out[order[i]] = keys[order[pick(rng)]];
  return out;
}

Payload payload_for(std::uint64_t seed, std::size_t position) noexcept {
  const Payload p = mix64(seed, position);
  return p == 0 ? 1 : p;
}

Relation make_relation(KeyVector keys, std::uint64_t seed) {
  Relation rel;
  rel.payloads.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) rel.payloads[i] = payload_for(seed, i);
  rel.keys = std::move(keys);
  return rel;
}

namespace {

void store_le(std::uint64_t v, char* out) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
}

std::uint64_t load_le(const char* in) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[b])) << (8 * b);
  return v;
}

}  // namespace

void write_keys_file(const std::filesystem::path& path, std::span<const Key> keys) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  char header[8];
  store_le(keys.size(), header);
  out.write(header, 8);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(keys.data()),
              static_cast<std::streamsize>(keys.size_bytes()));
  } else {
    char buf[8];
    for (Key k : keys) {
      store_le(k, buf);
      out.write(buf, 8);
    }
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

KeyVector load_keys_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  const auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (size < 8) throw Error(ErrorCode::corrupt_file, path.string() + ": missing count header");
  char header[8];
  in.read(header, 8);
  const std::uint64_t count = load_le(header);
  if ((size - 8) % 8 != 0 || (size - 8) / 8 != count)
    throw Error(ErrorCode::corrupt_file, path.string() + ": header says " + std::to_string(count) +
                                             " keys, file holds " + std::to_string((size - 8) / 8));
  KeyVector keys(count);
  in.read(reinterpret_cast<char*>(keys.data()), static_cast<std::streamsize>(count * 8));
  if (!in) throw Error(ErrorCode::io_error, "read failed for " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (Key& k : keys) {
      char buf[8];
      std::memcpy(buf, &k, 8);
      k = load_le(buf);
    }
  }
  return keys;
}

namespace {

struct Strata {
  std::size_t n;
  std::size_t count;
  std::uint64_t seed;

  std::size_t lo(std::size_t j) const {
    return static_cast<std::size_t>(static_cast<unsigned __int128>(j) * n / count);
  }
  std::size_t pick(std::size_t j) const {
    const std::size_t a = lo(j);
    const std::size_t b = lo(j + 1);
    return a + static_cast<std::size_t>(mix64(seed, j) % (b - a));
  }
};

Strata make_strata(std::size_t n, double rate, std::uint64_t seed) {
  if (!(rate > 0.0) || !(rate <= 1.0))
    throw Error(ErrorCode::invalid_argument, "sample rate must be in (0, 1]");
  auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  return {n, std::min(count, n), mix64(seed, 0x5A4D)};
}

}  // namespace

std::vector<std::size_t> stratified_sample_positions(std::size_t n, double rate,
                                                     std::uint64_t seed) {
  return stratified_sample_positions(n, rate, seed, 0, n);
}

std::vector<std::size_t> stratified_sample_positions(std::size_t n, double rate,
                                                     std::uint64_t seed, std::size_t begin,
                                                     std::size_t end) {
  const Strata strata = make_strata(n, rate, seed);
  std::vector<std::size_t> out;
  if (strata.count == 0 || begin >= end) return out;
  std::size_t j = static_cast<std::size_t>(static_cast<unsigned __int128>(begin) * strata.count / n);
  if (j > 0) --j;
  for (; j < strata.count && strata.lo(j) < end; ++j) {
    const std::size_t pos = strata.pick(j);
    if (pos >= begin && pos < end) out.push_back(pos);
  }
  return out;
}

}  // namespace ljoin
