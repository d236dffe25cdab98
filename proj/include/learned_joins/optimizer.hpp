#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "learned_joins/algorithms.hpp"

namespace ljoin {

enum class IndexKind { none, grmi, rmi, chain_hash, spline_hash };
enum class DistributionTag { seq_h, unif, lognorm, unknown };

std::string_view to_string(IndexKind kind);
std::string_view to_string(DistributionTag tag);

struct QueryMeta {
  std::uint64_t r_size = 0;
  std::uint64_t s_size = 0;
  bool indexed_r = false;
  IndexKind index_kind = IndexKind::none;
  DistributionTag distribution = DistributionTag::unknown;
  double duplicate_frac = 0.0;
  bool presorted = false;
};

/// [log2|R|, log2|S|, log2|S| - log2|R|, indexed, index kind one-hot (5),
///  distribution one-hot (4), duplicate_frac, presorted, 1]. log2(0) := 0.
inline constexpr std::size_t kFeatureDim = 16;
using FeatureVector = Eigen::Matrix<double, kFeatureDim, 1>;
using PrecisionMatrix = Eigen::Matrix<double, kFeatureDim, kFeatureDim>;

FeatureVector featurize(const QueryMeta& meta);

/// Bayesian linear regression of reward on features: precision A = lambda*I +
/// sum x x^T, b = sum x*reward, mean = A^-1 b, weights ~ N(mean, noise^2 A^-1).
struct ArmPosterior {
  PrecisionMatrix precision;
  FeatureVector moment;  // b
  FeatureVector mean;
  std::uint64_t observations = 0;
};

struct Experience {
  FeatureVector features;
  Algorithm arm;
  double latency_s;
  double reward;
};

struct BanditState {
  std::vector<Algorithm> arms;
  std::vector<ArmPosterior> posteriors;
  double prior_precision = 1.0;
  double noise_scale = 0.5;
  std::vector<Experience> log;

  std::optional<std::size_t> arm_index(Algorithm arm) const noexcept;
};

/// The nine optimizer arms (every registered algorithm except the sampled
/// hash join, which exists only as a negative result).
const std::vector<Algorithm>& default_arms();

/// Throws Error(invalid_argument) for an empty arm list or nonpositive
/// prior_precision / noise_scale.
BanditState make_bandit(std::vector<Algorithm> arms = default_arms(), double prior_precision = 1.0,
                        double noise_scale = 0.5);

/// Thompson sampling: one posterior draw per arm, highest draw . x wins (ties
/// go to the earlier arm). Deterministic in rng_seed.
Algorithm select_arm(const BanditState& state, const FeatureVector& features, std::uint64_t rng_seed);

/// reward = -ln(latency). Throws Error(invalid_argument) for latency <= 0 or
/// an arm outside the state.
void record_outcome(BanditState& state, const FeatureVector& features, Algorithm arm,
                    double latency_s);

/// Experience log, one JSON object per line:
///   {"features": [16 numbers], "arm": "<algorithm id>", "latency_s": <number>}
void append_experience(const std::filesystem::path& path, const Experience& e);
void write_experience_log(const std::filesystem::path& path, const BanditState& state);

/// Replays every record through record_outcome; returns the count. Throws
/// Error(corrupt_file) on a malformed line, Error(io_error) if unreadable.
std::size_t replay_experience_log(const std::filesystem::path& path, BanditState& state);

}  // namespace ljoin
