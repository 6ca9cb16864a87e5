#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tcf/consensus.hpp"
#include "tcf/error.hpp"
#include "tcf/irls.hpp"

namespace tcf {

struct StageTimings {
  double one_point_ms = 0.0;
  double two_point_ms = 0.0;
  double three_point_ms = 0.0;
  double irls_ms = 0.0;

  double total_ms() const { return one_point_ms + two_point_ms + three_point_ms + irls_ms; }
};

/// Result of a full cascade. Stage indices refer to the input set C, so
/// stages[2] is a subset of stages[1], which is a subset of stages[0].
struct RegistrationOutput {
  RigidTransform pose;
  RigidTransform coarse_pose;  // best three-point hypothesis
  std::size_t input_size = 0;
  std::array<ConsensusResult, 3> stages;
  std::size_t irls_iterations = 0;
  IrlsStop irls_stop = IrlsStop::MaxIterations;
  StageTimings timings;

  std::size_t stage_size(Stage s) const { return stages[static_cast<int>(s)].size(); }
  /// Stage size over its own input size.
  double stage_ratio(Stage s) const;
};

/// Thrown when the cascade leaves too few correspondences to fit a pose.
/// Carries the stage results computed before the collapse.
class StageCollapseError : public Error {
 public:
  StageCollapseError(const std::string& what, RegistrationOutput partial)
      : Error(ErrorCode::StageCollapse, what), partial_(std::move(partial)) {}

  const RegistrationOutput& partial() const { return partial_; }

 private:
  RegistrationOutput partial_;
};

/// One-point, two-point and three-point RANSAC followed by scale-adaptive
/// Cauchy IRLS on the three-point consensus. Deterministic in params.seed.
RegistrationOutput tcf_register(Correspondences corrs, const TcfParams& params,
                                const IrlsParams& irls_params = {});

/// Classic three-point RANSAC with a fixed hypothesis budget and no adaptive
/// stop. The returned pose is the unweighted SVD refit on the best
/// consensus; the consensus is that of the best hypothesis.
PoseConsensus vanilla_ransac(Correspondences corrs, std::uint64_t iterations, double tau,
                             Rng& rng);

}  // namespace tcf
