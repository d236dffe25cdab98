#include "learned_joins/optimizer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "json.hpp"

namespace ljoin {

std::string_view to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::none: return "none";
    case IndexKind::grmi: return "grmi";
    case IndexKind::rmi: return "rmi";
    case IndexKind::chain_hash: return "chain_hash";
    case IndexKind::spline_hash: return "spline_hash";
  }
  return "none";
}

std::string_view to_string(DistributionTag tag) {
  switch (tag) {
    case DistributionTag::seq_h: return "seq_h";
    case DistributionTag::unif: return "unif";
    case DistributionTag::lognorm: return "lognorm";
    case DistributionTag::unknown: return "unknown";
  }
  return "unknown";
}

namespace {

double log2_or_zero(std::uint64_t n) { return n == 0 ? 0.0 : std::log2(static_cast<double>(n)); }

}  // namespace

FeatureVector featurize(const QueryMeta& meta) {
  FeatureVector x = FeatureVector::Zero();
  const double lr = log2_or_zero(meta.r_size);
  const double ls = log2_or_zero(meta.s_size);
  x[0] = lr;
  x[1] = ls;
  x[2] = ls - lr;
  x[3] = meta.indexed_r ? 1.0 : 0.0;
  x[4 + static_cast<int>(meta.index_kind)] = 1.0;
  x[9 + static_cast<int>(meta.distribution)] = 1.0;
  x[13] = meta.duplicate_frac;
  x[14] = meta.presorted ? 1.0 : 0.0;
  x[15] = 1.0;
  return x;
}

std::optional<std::size_t> BanditState::arm_index(Algorithm arm) const noexcept {
  for (std::size_t i = 0; i < arms.size(); ++i)
    if (arms[i] == arm) return i;
  return std::nullopt;
}

const std::vector<Algorithm>& default_arms() {
  static const std::vector<Algorithm> arms = {
      Algorithm::buffered_grmi_inlj, Algorithm::grmi_inlj, Algorithm::rmi_inlj,
      Algorithm::hash_inlj,          Algorithm::spline_hash_inlj, Algorithm::lsj,
      Algorithm::smj,                Algorithm::npj,       Algorithm::radix_join,
  };
  return arms;
}

BanditState make_bandit(std::vector<Algorithm> arms, double prior_precision, double noise_scale) {
  if (arms.empty()) throw Error(ErrorCode::invalid_argument, "bandit needs at least one arm");
  if (!(prior_precision > 0.0) || !(noise_scale > 0.0))
    throw Error(ErrorCode::invalid_argument, "prior precision and noise scale must be > 0");
  BanditState state;
  state.arms = std::move(arms);
  state.prior_precision = prior_precision;
  state.noise_scale = noise_scale;
  ArmPosterior prior;
  prior.precision = PrecisionMatrix::Identity() * prior_precision;
  prior.moment = FeatureVector::Zero();
  prior.mean = FeatureVector::Zero();
  state.posteriors.assign(state.arms.size(), prior);
  return state;
}

Algorithm select_arm(const BanditState& state, const FeatureVector& features, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < state.arms.size(); ++a) {
    const ArmPosterior& post = state.posteriors[a];
    FeatureVector z;
    for (std::size_t i = 0; i < kFeatureDim; ++i) z[static_cast<Eigen::Index>(i)] = normal(rng);
    // A = L L^T, so L^-T z ~ N(0, A^-1).
    const Eigen::LLT<PrecisionMatrix> llt(post.precision);
    const FeatureVector w = post.mean + state.noise_scale * llt.matrixU().solve(z);
    const double score = w.dot(features);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return state.arms[best];
}

void record_outcome(BanditState& state, const FeatureVector& features, Algorithm arm,
                    double latency_s) {
  if (!(latency_s > 0.0) || !std::isfinite(latency_s))
    throw Error(ErrorCode::invalid_argument, "latency must be positive");
  const std::optional<std::size_t> idx = state.arm_index(arm);
  if (!idx) throw Error(ErrorCode::invalid_argument, "arm is not part of this bandit");
  const double reward = -std::log(latency_s);
  ArmPosterior& post = state.posteriors[*idx];
  post.precision.noalias() += features * features.transpose();
  post.moment += reward * features;
  post.mean = post.precision.llt().solve(post.moment);
  ++post.observations;
  state.log.push_back({features, arm, latency_s, reward});
}

namespace {

nlohmann::json to_json(const Experience& e) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < kFeatureDim; ++i) features.push_back(e.features[static_cast<Eigen::Index>(i)]);
  return {{"features", features}, {"arm", std::string(to_string(e.arm))}, {"latency_s", e.latency_s}};
}

}  // namespace

void append_experience(const std::filesystem::path& path, const Experience& e) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  out << to_json(e).dump() << '\n';
}

void write_experience_log(const std::filesystem::path& path, const BanditState& state) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  for (const Experience& e : state.log) out << to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path.string());
}

std::size_t replay_experience_log(const std::filesystem::path& path, BanditState& state) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::size_t count = 0;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    FeatureVector x;
    std::optional<Algorithm> arm;
    double latency = 0.0;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const auto& f = j.at("features");
      if (!f.is_array() || f.size() != kFeatureDim) throw std::runtime_error("bad features");
      for (std::size_t i = 0; i < kFeatureDim; ++i) x[static_cast<Eigen::Index>(i)] = f[i].get<double>();
      arm = parse_algorithm(j.at("arm").get<std::string>());
      latency = j.at("latency_s").get<double>();
    } catch (const std::exception& ex) {
      throw Error(ErrorCode::corrupt_file, "experience log line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (!arm) throw Error(ErrorCode::corrupt_file, "experience log line " + std::to_string(lineno) + ": unknown arm");
    record_outcome(state, x, *arm, latency);
    ++count;
  }
  return count;
}

}  // namespace ljoin
