#include "tcf/consensus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "tcf/error.hpp"

namespace tcf {

void TcfParams::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidArgument, "tau must be positive and finite");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0, 1)");
  }
  if (max_iters_1pt < 1 || max_iters_2pt < 1 || max_iters_3pt < 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration caps must be at least 1");
  }
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::OnePoint: return "one_point";
    case Stage::TwoPoint: return "two_point";
    case Stage::ThreePoint: return "three_point";
  }
  return "unknown";
}

std::uint64_t required_iterations(double lambda, double inlier_fraction, unsigned sample_size,
                                  std::uint64_t cap) {
  cap = std::max<std::uint64_t>(cap, 1);
  if (!(inlier_fraction > 0.0)) return cap;
  if (inlier_fraction >= 1.0) return 1;
  const double clean = std::pow(inlier_fraction, static_cast<double>(sample_size));
  const double denom = std::log1p(-clean);
  if (!(denom < 0.0)) return cap;  // clean sample probability underflowed
  const double n = std::ceil(std::log(1.0 - lambda) / denom);
  if (!(n < static_cast<double>(cap))) return cap;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
}

double length_discrepancy(const Correspondence& a, const Correspondence& b) {
  return std::abs((a.p - b.p).norm() - (a.q - b.q).norm());
}

namespace {

constexpr double kCoincident = 1e-12;

double included_angle(const Point3& a, const Point3& vertex, const Point3& b) {
  const Point3 u = a - vertex;
  const Point3 v = b - vertex;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

bool degenerate_triangle(const Point3& a, const Point3& b, const Point3& c) {
  return (a - b).norm() < kCoincident || (b - c).norm() < kCoincident ||
         (c - a).norm() < kCoincident;
}

// Non-throwing form shared by the stage; nullopt on a degenerate triangle.
std::optional<AngleCheck> angle_check(const Correspondence& m, const Correspondence& i,
                                      const Correspondence& j, double tau) {
  if (degenerate_triangle(m.p, i.p, j.p) || degenerate_triangle(m.q, i.q, j.q)) {
    return std::nullopt;
  }
  AngleCheck out;
  out.alpha = std::abs(included_angle(i.p, m.p, j.p) - included_angle(i.q, m.q, j.q));
  const double to_i = (m.p - i.p).norm();
  const double to_j = (m.p - j.p).norm();
  out.beta = std::abs(std::asin(std::min(1.0, tau / to_i)) + std::asin(std::min(1.0, tau / to_j)));
  out.pass = out.alpha < out.beta;
  return out;
}

// Draws `count` distinct indices from [0, n).
template <std::size_t K>
std::array<std::size_t, K> sample_distinct(Rng& rng, std::size_t n) {
  std::array<std::size_t, K> out{};
  for (std::size_t s = 0; s < K; ++s) {
    std::size_t candidate;
    bool repeat;
    do {
      candidate = rng.uniform_index(n);
      repeat = std::find(out.begin(), out.begin() + s, candidate) != out.begin() + s;
    } while (repeat);
    out[s] = candidate;
  }
  std::sort(out.begin(), out.end());
  return out;
}

double fraction(std::size_t part, std::size_t whole) {
  return static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

AngleCheck angle_consistency_test(const Correspondence& m, const Correspondence& i,
                                  const Correspondence& j, double tau) {
  auto out = angle_check(m, i, j, tau);
  if (!out) {
    throw Error(ErrorCode::DegenerateTriangle, "angle test on coincident triangle vertices");
  }
  return *out;
}

std::vector<std::size_t> length_consensus(Correspondences corrs, std::size_t anchor, double tau) {
  const double gate = 2.0 * tau;
  const Correspondence& a = corrs[anchor];
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < corrs.size(); ++j) {
    if (length_discrepancy(corrs[j], a) < gate) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> pair_consensus(Correspondences corrs, std::size_t i, std::size_t j,
                                        double tau) {
  const double gate = 2.0 * tau;
  const Correspondence& ci = corrs[i];
  const Correspondence& cj = corrs[j];
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < corrs.size(); ++k) {
    if (k == i || k == j) {
      out.push_back(k);
      continue;
    }
    const Correspondence& ck = corrs[k];
    if (!(length_discrepancy(ck, ci) < gate && length_discrepancy(ck, cj) < gate)) continue;
    const auto check = angle_check(ck, ci, cj, tau);
    if (check && check->pass) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> transform_consensus(Correspondences corrs, const RigidTransform& pose,
                                             double tau) {
  const double gate = tau * tau;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < corrs.size(); ++k) {
    if ((pose.apply(corrs[k].p) - corrs[k].q).squaredNorm() < gate) out.push_back(k);
  }
  return out;
}

std::size_t count_transform_consensus(Correspondences corrs, const RigidTransform& pose,
                                      double tau) {
  const double gate = tau * tau;
  std::size_t count = 0;
  for (const auto& c : corrs) {
    if ((pose.apply(c.p) - c.q).squaredNorm() < gate) ++count;
  }
  return count;
}

CorrespondenceSet select(Correspondences corrs, std::span<const std::size_t> indices) {
  CorrespondenceSet out;
  out.reserve(indices.size());
  for (const std::size_t i : indices) out.push_back(corrs[i]);
  return out;
}

ConsensusResult one_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng) {
  params.validate();
  if (corrs.empty()) throw Error(ErrorCode::EmptyInput, "one-point RANSAC on an empty set");

  const std::size_t n = corrs.size();
  const std::uint64_t cap = params.max_iters_1pt;
  ConsensusResult best{{}, 0, Stage::OnePoint};
  std::uint64_t bound = params.adaptive ? 1 : cap;
  std::uint64_t iter = 1;
  for (; iter <= bound && iter <= cap; ++iter) {
    auto candidate = length_consensus(corrs, rng.uniform_index(n), params.tau);
    if (candidate.size() > best.indices.size()) {
      best.indices = std::move(candidate);
      if (params.adaptive) bound = required_iterations(params.lambda, fraction(best.size(), n), 1, cap);
    }
  }
  best.iterations_run = iter - 1;
  return best;
}

ConsensusResult two_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng) {
  params.validate();
  if (corrs.size() < 2) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "two-point RANSAC needs at least 2 correspondences, got " +
                    std::to_string(corrs.size()));
  }

  const std::size_t n = corrs.size();
  const std::uint64_t cap = params.max_iters_2pt;
  ConsensusResult best{{}, 0, Stage::TwoPoint};
  std::uint64_t bound = params.adaptive ? 1 : cap;
  std::uint64_t iter = 1;
  for (; iter <= bound && iter <= cap; ++iter) {
    const auto pair = sample_distinct<2>(rng, n);
    auto candidate = pair_consensus(corrs, pair[0], pair[1], params.tau);
    if (candidate.size() > best.indices.size()) {
      best.indices = std::move(candidate);
      if (params.adaptive) bound = required_iterations(params.lambda, fraction(best.size(), n), 2, cap);
    }
  }
  best.iterations_run = iter - 1;
  return best;
}

PoseConsensus three_point_ransac(Correspondences corrs, const TcfParams& params, Rng& rng) {
  params.validate();
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "three-point RANSAC needs at least 3 correspondences, got " +
                    std::to_string(corrs.size()));
  }

  const std::size_t n = corrs.size();
  const std::uint64_t cap = params.max_iters_3pt;
  const std::uint64_t max_attempts = cap > kUnboundedIterations / 10 ? kUnboundedIterations : cap * 10;
  const std::array<double, 3> unit{1.0, 1.0, 1.0};

  PoseConsensus best{RigidTransform{}, {{}, 0, Stage::ThreePoint}};
  bool found = false;
  std::uint64_t bound = params.adaptive ? 1 : cap;
  std::uint64_t iter = 0;
  std::uint64_t attempts = 0;
  while (iter < bound && iter < cap && attempts < max_attempts) {
    ++attempts;
    const auto triple = sample_distinct<3>(rng, n);
    const std::array<Correspondence, 3> sample{corrs[triple[0]], corrs[triple[1]], corrs[triple[2]]};
    if (normalized_triangle_area(sample[0].p, sample[1].p, sample[2].p) < kCollinearityThreshold) {
      continue;
    }
    ++iter;
    const RigidTransform pose = estimate_pose_svd_unchecked(sample, unit);
    const std::size_t count = count_transform_consensus(corrs, pose, params.tau);
    if (!found || count > best.consensus.indices.size()) {
      found = true;
      best.pose = pose;
      best.consensus.indices = transform_consensus(corrs, pose, params.tau);
      if (params.adaptive) {
        bound = required_iterations(params.lambda, fraction(best.consensus.size(), n), 3, cap);
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "no non-collinear triple found in " + std::to_string(attempts) + " attempts");
  }
  best.consensus.iterations_run = iter;
  return best;
}

}  // namespace tcf
