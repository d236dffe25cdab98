#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "learned_joins/types.hpp"

namespace ljoin {

struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;

  double operator()(double x) const noexcept { return std::fma(slope, x, intercept); }
};

/// Least-squares fit; slope clamped to >= 0.
LinearModel fit_linear(std::span<const double> xs, std::span<const double> ys);

/// Rank estimate with inclusive search bounds. lo <= pos <= hi < trained_len.
struct PosPrediction {
  std::size_t pos = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
};

/// Anything that approximates the CDF of a sorted key sequence.
template <typename M>
concept CdfApproximator = requires(const M& m, Key k) {
  { m.rank_estimate(k) } -> std::convertible_to<double>;
  { m.trained_len() } -> std::convertible_to<std::size_t>;
  { m.predict(k) } -> std::same_as<PosPrediction>;
};

/// Two-level linear RMI. Leaves are monotone: slopes are nonnegative and each
/// leaf's output is clamped to the rank range of the keys it was fit on, so
/// rank_estimate is nondecreasing in the key across the whole model.
class CdfModel {
 public:
  struct Leaf {
    LinearModel line;
    double min_rank = 0.0;
    double max_rank = 0.0;
    std::int64_t err_lo = 0;  // <= 0
    std::int64_t err_hi = 0;  // >= 0
  };

  CdfModel() = default;

  std::size_t fanout() const noexcept { return leaves_.size(); }
  std::size_t trained_len() const noexcept { return trained_len_; }
  const LinearModel& root() const noexcept { return root_; }
  std::span<const Leaf> leaves() const noexcept { return leaves_; }

  std::size_t leaf_for(Key key) const noexcept;
  double rank_estimate_in_leaf(std::size_t leaf, Key key) const noexcept;
  PosPrediction predict_in_leaf(std::size_t leaf, Key key) const noexcept;

  double rank_estimate(Key key) const noexcept { return rank_estimate_in_leaf(leaf_for(key), key); }
  PosPrediction predict(Key key) const noexcept { return predict_in_leaf(leaf_for(key), key); }

  /// Hash of every trained parameter; equal models give equal fingerprints.
  std::uint64_t fingerprint() const noexcept;

 private:
  friend CdfModel train_rmi(std::span<const Key> sorted_keys, std::size_t fanout);

  LinearModel root_;
  std::vector<Leaf> leaves_;
  std::size_t trained_len_ = 0;
};

/// Throws Error(empty_input) for an empty key set and Error(invalid_argument)
/// for fanout 0. Duplicate keys take the rank of their first occurrence.
CdfModel train_rmi(std::span<const Key> sorted_keys, std::size_t fanout);

inline PosPrediction rmi_predict(const CdfModel& model, Key key) { return model.predict(key); }

struct SplinePoint {
  Key key;
  double rank;
};

/// RadixSpline: error-bounded linear spline over (key, rank) plus a radix
/// table over the r most significant bits of (key - min_key).
class SplineModel {
 public:
  SplineModel() = default;

  std::span<const SplinePoint> spline_points() const noexcept { return points_; }
  std::span<const std::uint32_t> radix_table() const noexcept { return radix_table_; }
  std::size_t radix_bits() const noexcept { return radix_bits_; }
  std::size_t max_error() const noexcept { return max_error_; }
  std::size_t trained_len() const noexcept { return trained_len_; }

  double rank_estimate(Key key) const noexcept;
  PosPrediction predict(Key key) const noexcept;

  std::uint64_t fingerprint() const noexcept;

 private:
  friend SplineModel train_radix_spline(std::span<const Key>, std::size_t, std::size_t);

  std::size_t upper_point(Key key) const noexcept;

  std::vector<SplinePoint> points_;
  std::vector<std::uint32_t> radix_table_;
  std::size_t radix_bits_ = 0;
  unsigned shift_ = 0;
  Key min_key_ = 0;
  Key max_key_ = 0;
  std::size_t max_error_ = 0;
  std::size_t trained_len_ = 0;
};

/// One-pass greedy spline corridor; every training key is predicted within
/// max_error of its true rank. Requires max_error >= 1, 1 <= radix_bits <= 30.
SplineModel train_radix_spline(std::span<const Key> sorted_keys, std::size_t max_error,
                               std::size_t radix_bits);

inline PosPrediction spline_predict(const SplineModel& model, Key key) { return model.predict(key); }

/// floor(CDF(key) * P), clamped to [0, P-1]. Nondecreasing in key.
template <CdfApproximator Model>
std::size_t partition_index(const Model& model, Key key, std::size_t partitions) noexcept {
  const std::size_t len = model.trained_len();
  if (partitions <= 1 || len == 0) return 0;
  const double scaled = std::floor(model.rank_estimate(key) * static_cast<double>(partitions) /
                                   static_cast<double>(len));
  if (!(scaled > 0.0)) return 0;
  const auto idx = static_cast<std::size_t>(scaled);
  return std::min(idx, partitions - 1);
}

/// Leaf count used when a caller passes fanout 0: about 100 keys per leaf.
inline std::size_t default_rmi_fanout(std::size_t n) noexcept {
  return std::clamp<std::size_t>(n / 100, 1, std::size_t{1} << 20);
}

/// First-occurrence rank of every element of a sorted sequence.
std::vector<std::size_t> first_occurrence_ranks(std::span<const Key> sorted_keys);

}  // namespace ljoin
