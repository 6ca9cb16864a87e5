#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "tcf/geometry.hpp"

namespace tcf {

struct IrlsParams {
  double mu = 1.3;         // scale decay per iteration
  double e_min = 0.01;     // stop when the weighted objective changes less than this
  double gamma_min = 1.0;  // scale floor, meters
  std::size_t max_iters = 100;

  void validate() const;
};

/// w_i = gamma^2 / (gamma^2 + e_i^2).
WeightVector cauchy_weights(std::span<const double> residuals, double gamma);

enum class IrlsStop { Converged, ScaleFloor, MaxIterations, InlierCollapse, ExactFit };

std::string_view to_string(IrlsStop stop);

struct IrlsResult {
  RigidTransform pose;
  std::size_t iterations = 0;
  IrlsStop stop = IrlsStop::MaxIterations;
  std::size_t final_inliers = 0;      // size of the set the returned pose was fitted on
  std::vector<double> gammas;         // scale used by each iteration
  bool collapsed() const { return stop == IrlsStop::InlierCollapse; }
};

/// Scale-adaptive Cauchy IRLS.
///
/// Starts from the unweighted SVD fit over all correspondences with gamma
/// set to its largest residual. Each iteration refits with the current
/// weights on the current inlier set, gates inliers by e < 3 gamma, reweights
/// with the Cauchy kernel and shrinks gamma by mu. When the gate would leave
/// fewer than three points the previous pose is returned with
/// stop == InlierCollapse.
///
/// Throws TooFewCorrespondences (< 3) and DegenerateConfiguration.
IrlsResult sa_cauchy_irls(Correspondences corrs, const IrlsParams& params = {});

}  // namespace tcf
