#include "tcf/irls.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tcf/consensus.hpp"
#include "tcf/error.hpp"

namespace tcf {

void IrlsParams::validate() const {
  if (!(mu > 1.0)) throw Error(ErrorCode::InvalidArgument, "mu must exceed 1");
  if (!(e_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "e_min must be positive");
  if (!(gamma_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_min must be positive");
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
}

std::string_view to_string(IrlsStop stop) {
  switch (stop) {
    case IrlsStop::Converged: return "converged";
    case IrlsStop::ScaleFloor: return "scale_floor";
    case IrlsStop::MaxIterations: return "max_iterations";
    case IrlsStop::InlierCollapse: return "inlier_collapse";
    case IrlsStop::ExactFit: return "exact_fit";
  }
  return "unknown";
}

WeightVector cauchy_weights(std::span<const double> residuals, double gamma) {
  const double g2 = gamma * gamma;
  WeightVector w(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    w[i] = g2 / (g2 + residuals[i] * residuals[i]);
  }
  return w;
}

namespace {

double weighted_objective(std::span<const double> w, std::span<const double> e) {
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) sum += w[i] * e[i] * e[i];
  return sum;
}

}  // namespace

IrlsResult sa_cauchy_irls(Correspondences corrs, const IrlsParams& params) {
  params.validate();
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences,
                "IRLS needs at least 3 correspondences, got " + std::to_string(corrs.size()));
  }

  IrlsResult out;
  out.pose = estimate_pose_svd(corrs);
  out.final_inliers = corrs.size();
  std::vector<double> e = residuals(out.pose, corrs);
  double gamma = *std::max_element(e.begin(), e.end());
  if (!(gamma > 0.0)) {
    out.stop = IrlsStop::ExactFit;
    return out;
  }

  CorrespondenceSet inliers(corrs.begin(), corrs.end());
  WeightVector w(inliers.size(), 1.0);
  double previous = weighted_objective(w, e);

  for (std::size_t j = 1; j <= params.max_iters; ++j) {
    out.gammas.push_back(gamma);
    out.iterations = j;

    RigidTransform pose;
    try {
      pose = estimate_pose_svd(inliers, w);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DegenerateConfiguration) throw;
      out.stop = IrlsStop::InlierCollapse;
      return out;
    }
    out.pose = pose;
    out.final_inliers = inliers.size();
    e = residuals(pose, inliers);

    const double gate = 3.0 * gamma;
    CorrespondenceSet kept;
    std::vector<double> kept_residuals;
    for (std::size_t k = 0; k < inliers.size(); ++k) {
      if (e[k] < gate) {
        kept.push_back(inliers[k]);
        kept_residuals.push_back(e[k]);
      }
    }
    if (kept.size() < 3) {
      out.stop = IrlsStop::InlierCollapse;
      return out;
    }

    WeightVector next_w = cauchy_weights(kept_residuals, gamma);
    const double next_gamma = gamma / params.mu;
    const double objective = weighted_objective(next_w, kept_residuals);
    if (std::abs(objective - previous) < params.e_min) {
      out.stop = IrlsStop::Converged;
      return out;
    }
    if (next_gamma < params.gamma_min) {
      out.stop = IrlsStop::ScaleFloor;
      return out;
    }
    inliers = std::move(kept);
    w = std::move(next_w);
    previous = objective;
    gamma = next_gamma;
  }
  out.stop = IrlsStop::MaxIterations;
  return out;
}

}  // namespace tcf
