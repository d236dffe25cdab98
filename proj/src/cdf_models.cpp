#include "learned_joins/cdf_models.hpp"

#include <bit>
#include <limits>

namespace ljoin {

LinearModel fit_linear(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n == 0) return {};
  if (n == 1) return {0.0, ys[0]};
  double x_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - x_mean;
    sxx += dx * dx;
    sxy += dx * (ys[i] - y_mean);
  }
  double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (!(slope > 0.0) || !std::isfinite(slope)) slope = 0.0;
  return {slope, y_mean - slope * x_mean};
}

std::vector<std::size_t> first_occurrence_ranks(std::span<const Key> sorted_keys) {
  std::vector<std::size_t> ranks(sorted_keys.size());
  for (std::size_t i = 0; i < sorted_keys.size(); ++i)
    ranks[i] = (i > 0 && sorted_keys[i] == sorted_keys[i - 1]) ? ranks[i - 1] : i;
  return ranks;
}

namespace {

std::size_t clamp_index(std::int64_t v, std::size_t len) noexcept {
  if (v <= 0 || len == 0) return 0;
  return std::min(static_cast<std::size_t>(v), len - 1);
}

std::uint64_t hash_double(std::uint64_t h, double v) noexcept {
  return mix64(h, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

CdfModel train_rmi(std::span<const Key> sorted_keys, std::size_t fanout) {
  if (sorted_keys.empty()) throw Error(ErrorCode::empty_input, "cannot train an RMI on no keys");
  if (fanout == 0) throw Error(ErrorCode::invalid_argument, "RMI fanout must be >= 1");

  const std::size_t n = sorted_keys.size();
  const std::vector<std::size_t> ranks = first_occurrence_ranks(sorted_keys);

  CdfModel model;
  model.trained_len_ = n;

  std::vector<double> xs(n);
  std::vector<double> ys(n);
  const double root_scale = static_cast<double>(fanout) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = static_cast<double>(sorted_keys[i]);
    ys[i] = static_cast<double>(ranks[i]) * root_scale;
  }
  model.root_ = fit_linear(xs, ys);
  model.leaves_.resize(fanout);

  // The root is monotone, so each leaf owns a contiguous run of the keys.
  std::size_t begin = 0;
  for (std::size_t leaf = 0; leaf < fanout; ++leaf) {
    std::size_t end = begin;
    while (end < n && model.leaf_for(sorted_keys[end]) == leaf) ++end;
    CdfModel::Leaf& out = model.leaves_[leaf];
    if (begin == end) {
      const double start = static_cast<double>(std::min(begin, n - 1));
      out.line = {0.0, start};
      out.min_rank = out.max_rank = start;
      continue;
    }
    for (std::size_t i = begin; i < end; ++i) ys[i] = static_cast<double>(ranks[i]);
    out.line = fit_linear(std::span(xs).subspan(begin, end - begin),
                          std::span(ys).subspan(begin, end - begin));
    out.min_rank = static_cast<double>(ranks[begin]);
    out.max_rank = static_cast<double>(ranks[end - 1]);
    for (std::size_t i = begin; i < end; ++i) {
      const auto pos = static_cast<std::int64_t>(model.predict_in_leaf(leaf, sorted_keys[i]).pos);
      const std::int64_t err = static_cast<std::int64_t>(ranks[i]) - pos;
      out.err_lo = std::min(out.err_lo, err);
      out.err_hi = std::max(out.err_hi, err);
    }
    begin = end;
  }
  return model;
}

std::size_t CdfModel::leaf_for(Key key) const noexcept {
  const double v = std::floor(root_(static_cast<double>(key)));
  if (!(v > 0.0)) return 0;
  const double last = static_cast<double>(leaves_.size() - 1);
  return v >= last ? leaves_.size() - 1 : static_cast<std::size_t>(v);
}

double CdfModel::rank_estimate_in_leaf(std::size_t leaf, Key key) const noexcept {
  const Leaf& l = leaves_[leaf];
  const double v = l.line(static_cast<double>(key));
  return std::clamp(v, l.min_rank, l.max_rank);
}

PosPrediction CdfModel::predict_in_leaf(std::size_t leaf, Key key) const noexcept {
  const Leaf& l = leaves_[leaf];
  const auto pos = static_cast<std::int64_t>(std::llround(rank_estimate_in_leaf(leaf, key)));
  return {clamp_index(pos, trained_len_), clamp_index(pos + l.err_lo, trained_len_),
          clamp_index(pos + l.err_hi, trained_len_)};
}

std::uint64_t CdfModel::fingerprint() const noexcept {
  std::uint64_t h = mix64(trained_len_, leaves_.size());
  h = hash_double(h, root_.slope);
  h = hash_double(h, root_.intercept);
  for (const Leaf& l : leaves_) {
    h = hash_double(h, l.line.slope);
    h = hash_double(h, l.line.intercept);
    h = hash_double(h, l.min_rank);
    h = hash_double(h, l.max_rank);
    h = mix64(h, static_cast<std::uint64_t>(l.err_lo) ^ (static_cast<std::uint64_t>(l.err_hi) << 32));
  }
  return h;
}

SplineModel train_radix_spline(std::span<const Key> sorted_keys, std::size_t max_error,
                               std::size_t radix_bits) {
  if (sorted_keys.empty())
    throw Error(ErrorCode::empty_input, "cannot train a RadixSpline on no keys");
  if (max_error < 1) throw Error(ErrorCode::invalid_argument, "spline max_error must be >= 1");
  if (radix_bits < 1 || radix_bits > 30)
    throw Error(ErrorCode::invalid_argument, "radix_bits must be in [1, 30]");

  SplineModel m;
  m.trained_len_ = sorted_keys.size();
  m.max_error_ = max_error;
  m.radix_bits_ = radix_bits;
  m.min_key_ = sorted_keys.front();
  m.max_key_ = sorted_keys.back();

  // Greedy corridor over the distinct keys: the slope from the last emitted
  // point must stay inside every intermediate point's +-max_error window.
  const long double err = static_cast<long double>(max_error);
  SplinePoint base{sorted_keys.front(), 0.0};
  SplinePoint prev = base;
  m.points_.push_back(base);
  long double upper = std::numeric_limits<long double>::infinity();
  long double lower = -upper;
  for (std::size_t i = 1; i < sorted_keys.size(); ++i) {
    if (sorted_keys[i] == sorted_keys[i - 1]) continue;
    const SplinePoint p{sorted_keys[i], static_cast<double>(i)};
    auto dx = static_cast<long double>(p.key - base.key);
    const long double dy = static_cast<long double>(p.rank) - base.rank;
    const long double slope = dy / dx;
    if (slope > upper || slope < lower) {
      m.points_.push_back(prev);
      base = prev;
      dx = static_cast<long double>(p.key - base.key);
      const long double rel = static_cast<long double>(p.rank) - base.rank;
      upper = (rel + err) / dx;
      lower = (rel - err) / dx;
    } else {
      upper = std::min(upper, (dy + err) / dx);
      lower = std::max(lower, (dy - err) / dx);
    }
    prev = p;
  }
  if (prev.key != base.key) m.points_.push_back(prev);

  const Key range = m.max_key_ - m.min_key_;
  const unsigned bits = range == 0 ? 0u : static_cast<unsigned>(64 - std::countl_zero(range));
  m.shift_ = bits > radix_bits ? bits - static_cast<unsigned>(radix_bits) : 0u;
  const std::size_t max_prefix = static_cast<std::size_t>(range >> m.shift_);
  // table[p] = first spline point whose prefix is >= p; trailing entries
  // point at the last spline point.
  const auto last = static_cast<std::uint32_t>(m.points_.size() - 1);
  m.radix_table_.assign(max_prefix + 2, last);
  std::size_t next_prefix = 0;
  for (std::size_t i = 0; i < m.points_.size(); ++i) {
    const std::size_t prefix = static_cast<std::size_t>((m.points_[i].key - m.min_key_) >> m.shift_);
    for (; next_prefix <= prefix; ++next_prefix) m.radix_table_[next_prefix] = static_cast<std::uint32_t>(i);
  }
  return m;
}

std::size_t SplineModel::upper_point(Key key) const noexcept {
  const std::size_t prefix = static_cast<std::size_t>((key - min_key_) >> shift_);
  const std::size_t begin = radix_table_[prefix];
  const std::size_t end = static_cast<std::size_t>(radix_table_[prefix + 1]) + 1;
  const auto it = std::lower_bound(points_.begin() + static_cast<std::ptrdiff_t>(begin),
                                   points_.begin() + static_cast<std::ptrdiff_t>(end), key,
                                   [](const SplinePoint& p, Key k) { return p.key < k; });
  return static_cast<std::size_t>(it - points_.begin());
}

double SplineModel::rank_estimate(Key key) const noexcept {
  if (points_.empty()) return 0.0;
  if (key <= min_key_) return points_.front().rank;
  if (key >= max_key_) return points_.back().rank;
  const std::size_t hi = upper_point(key);
  const SplinePoint& b = points_[hi];
  if (b.key == key) return b.rank;
  const SplinePoint& a = points_[hi - 1];
  // Multiply before dividing so integer-exact segments stay exact.
  return a.rank + static_cast<double>(key - a.key) * (b.rank - a.rank) / static_cast<double>(b.key - a.key);
}

PosPrediction SplineModel::predict(Key key) const noexcept {
  const auto pos = static_cast<std::int64_t>(std::llround(rank_estimate(key)));
  const auto err = static_cast<std::int64_t>(max_error_);
  return {clamp_index(pos, trained_len_), clamp_index(pos - err, trained_len_),
          clamp_index(pos + err, trained_len_)};
}

std::uint64_t SplineModel::fingerprint() const noexcept {
  std::uint64_t h = mix64(trained_len_, mix64(max_error_, radix_bits_));
  h = mix64(h, min_key_);
  for (const SplinePoint& p : points_) h = hash_double(mix64(h, p.key), p.rank);
  return h;
}

}  // namespace ljoin
