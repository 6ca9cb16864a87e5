#include "tcf/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <string>

namespace tcf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Re-expresses stage-local indices against the original input.
void lift_indices(ConsensusResult& result, std::span<const std::size_t> parent) {
  for (auto& idx : result.indices) idx = parent[idx];
}

}  // namespace

double RegistrationOutput::stage_ratio(Stage s) const {
  const std::size_t size = stage_size(s);
  const std::size_t parent =
      s == Stage::OnePoint ? input_size : stages[static_cast<int>(s) - 1].size();
  return parent == 0 ? 0.0 : static_cast<double>(size) / static_cast<double>(parent);
}

RegistrationOutput tcf_register(Correspondences corrs, const TcfParams& params,
                                const IrlsParams& irls_params) {
  params.validate();
  irls_params.validate();
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "registration needs at least 3 correspondences, got " +
                    std::to_string(corrs.size()));
  }

  RegistrationOutput out;
  out.input_size = corrs.size();
  Rng rng(params.seed);

  auto start = Clock::now();
  out.stages[0] = one_point_ransac(corrs, params, rng);
  out.timings.one_point_ms = elapsed_ms(start);
  if (out.stages[0].size() < 3) {
    throw StageCollapseError("one-point stage kept " + std::to_string(out.stages[0].size()) +
                                 " correspondences; three are needed for a pose",
                             out);
  }
  const CorrespondenceSet first = select(corrs, out.stages[0].indices);

  start = Clock::now();
  out.stages[1] = two_point_ransac(first, params, rng);
  out.timings.two_point_ms = elapsed_ms(start);
  lift_indices(out.stages[1], out.stages[0].indices);
  if (out.stages[1].size() < 3) {
    out.stages[2].stage = Stage::ThreePoint;
    throw StageCollapseError("two-point stage kept " + std::to_string(out.stages[1].size()) +
                                 " of " + std::to_string(out.stages[0].size()) +
                                 " correspondences; three are needed for a pose",
                             out);
  }
  const CorrespondenceSet second = select(corrs, out.stages[1].indices);

  start = Clock::now();
  PoseConsensus coarse;
  try {
    coarse = three_point_ransac(second, params, rng);
  } catch (const Error& err) {
    out.timings.three_point_ms = elapsed_ms(start);
    if (err.code() != ErrorCode::DegenerateConfiguration) throw;
    throw StageCollapseError(std::string("three-point stage failed: ") + err.what(), out);
  }
  out.timings.three_point_ms = elapsed_ms(start);
  out.coarse_pose = coarse.pose;
  out.stages[2] = std::move(coarse.consensus);
  lift_indices(out.stages[2], out.stages[1].indices);
  if (out.stages[2].size() < 3) {
    throw StageCollapseError("three-point stage kept " + std::to_string(out.stages[2].size()) +
                                 " correspondences; three are needed for a pose",
                             out);
  }
  const CorrespondenceSet third = select(corrs, out.stages[2].indices);

  start = Clock::now();
  try {
    const IrlsResult refined = sa_cauchy_irls(third, irls_params);
    out.pose = refined.pose;
    out.irls_iterations = refined.iterations;
    out.irls_stop = refined.stop;
  } catch (const Error& err) {
    out.timings.irls_ms = elapsed_ms(start);
    if (err.code() != ErrorCode::DegenerateConfiguration) throw;
    throw StageCollapseError(std::string("refinement failed: ") + err.what(), out);
  }
  out.timings.irls_ms = elapsed_ms(start);
  return out;
}

PoseConsensus vanilla_ransac(Correspondences corrs, std::uint64_t iterations, double tau,
                             Rng& rng) {
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "RANSAC needs at least 3 correspondences, got " + std::to_string(corrs.size()));
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be at least 1");

  const std::size_t n = corrs.size();
  const std::array<double, 3> unit{1.0, 1.0, 1.0};
  RigidTransform best_pose;
  std::size_t best_count = 0;
  bool found = false;
  for (std::uint64_t it = 0; it < iterations; ++it) {
    std::array<std::size_t, 3> idx{};
    idx[0] = rng.uniform_index(n);
    do idx[1] = rng.uniform_index(n); while (idx[1] == idx[0]);
    do idx[2] = rng.uniform_index(n); while (idx[2] == idx[0] || idx[2] == idx[1]);
    std::sort(idx.begin(), idx.end());
    const std::array<Correspondence, 3> sample{corrs[idx[0]], corrs[idx[1]], corrs[idx[2]]};
    if (normalized_triangle_area(sample[0].p, sample[1].p, sample[2].p) < kCollinearityThreshold) {
      continue;
    }
    const RigidTransform pose = estimate_pose_svd_unchecked(sample, unit);
    const std::size_t count = count_transform_consensus(corrs, pose, tau);
    if (!found || count > best_count) {
      found = true;
      best_count = count;
      best_pose = pose;
    }
  }
  if (!found) {
    throw Error(ErrorCode::DegenerateConfiguration, "every sampled triple was collinear");
  }

  PoseConsensus out;
  out.consensus.stage = Stage::ThreePoint;
  out.consensus.iterations_run = iterations;
  out.consensus.indices = transform_consensus(corrs, best_pose, tau);
  out.pose = best_pose;
  if (out.consensus.size() >= 3) {
    try {
      out.pose = estimate_pose_svd(select(corrs, out.consensus.indices));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateConfiguration) throw;
    }
  }
  return out;
}

}  // namespace tcf
