#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

#include "tcf/geometry.hpp"
#include "tcf/random.hpp"

namespace tcf {

struct TcfParams {
  double tau = 0.3;       // noise bound, meters
  double lambda = 0.99;   // confidence of drawing one clean sample
  std::uint64_t max_iters_1pt = 10000;
  std::uint64_t max_iters_2pt = 10000;
  std::uint64_t max_iters_3pt = 10000;
  std::uint64_t seed = 0;
  /// When false the stages ignore the confidence bound and run exactly
  /// their caps.
  bool adaptive = true;

  /// Throws InvalidArgument unless tau > 0, 0 < lambda < 1, caps >= 1.
  void validate() const;
};

enum class Stage { OnePoint, TwoPoint, ThreePoint };

std::string_view to_string(Stage stage);

struct ConsensusResult {
  std::vector<std::size_t> indices;  // strictly increasing, into the stage input
  std::uint64_t iterations_run = 0;
  Stage stage = Stage::OnePoint;

  std::size_t size() const { return indices.size(); }
};

inline constexpr std::uint64_t kUnboundedIterations = std::numeric_limits<std::uint64_t>::max();

/// ceil(log(1 - lambda) / log(1 - fraction^sample_size)) clamped to [1, cap].
/// A zero fraction yields cap; a unit fraction yields 1.
std::uint64_t required_iterations(double lambda, double inlier_fraction, unsigned sample_size,
                                  std::uint64_t cap = kUnboundedIterations);

/// | |p_a - p_b| - |q_a - q_b| |
double length_discrepancy(const Correspondence& a, const Correspondence& b);

struct AngleCheck {
  double alpha = 0.0;  // |angle(p_i, p_m, p_j) - angle(q_i, q_m, q_j)|
  double beta = 0.0;   // arcsin(tau / |p_m p_i|) + arcsin(tau / |p_m p_j|)
  bool pass = false;   // alpha < beta
};

/// Compares the included angle at vertex m of the source triangle
/// (p_i, p_m, p_j) with that of the target triangle (q_i, q_m, q_j). Each
/// arcsin argument is clamped to 1. Throws DegenerateTriangle when any two
/// vertices of either triangle are closer than 1e-12.
AngleCheck angle_consistency_test(const Correspondence& m, const Correspondence& i,
                                  const Correspondence& j, double tau);

/// Length-consistency consensus: for a sampled anchor k, every c_j with
/// length_discrepancy(c_j, c_k) < 2 tau. Keeps the largest so far and stops
/// adaptively. Throws EmptyInput on an empty set.
ConsensusResult one_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng);

/// Pair sampling refined by double length consistency and the angle test.
/// Throws TooFewCorrespondences below two correspondences.
ConsensusResult two_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng);

struct PoseConsensus {
  RigidTransform pose;
  ConsensusResult consensus;
};

/// Minimal three-point SVD hypotheses scored by |R p + t - q| < tau.
/// Throws TooFewCorrespondences below three correspondences and
/// DegenerateConfiguration when no non-collinear triple turns up within
/// 10 x cap sampling attempts.
PoseConsensus three_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng);

/// Members of a one-point consensus anchored at `anchor`.
std::vector<std::size_t> length_consensus(Correspondences corrs, std::size_t anchor, double tau);

/// Two-point candidate set for the pair (i, j), always including i and j.
std::vector<std::size_t> pair_consensus(Correspondences corrs, std::size_t i, std::size_t j,
                                        double tau);

/// Indices with |T p - q| < tau.
std::vector<std::size_t> transform_consensus(Correspondences corrs, const RigidTransform& pose,
                                             double tau);

std::size_t count_transform_consensus(Correspondences corrs, const RigidTransform& pose,
                                      double tau);

/// Copies the selected correspondences in index order.
CorrespondenceSet select(Correspondences corrs, std::span<const std::size_t> indices);

}  // namespace tcf
