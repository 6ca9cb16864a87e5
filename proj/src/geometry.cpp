#include "tcf/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tcf/error.hpp"

namespace tcf {

bool is_rotation(const Matrix3& r, double tol) {
  if (!r.allFinite()) return false;
  const Matrix3 gram = r.transpose() * r;
  if ((gram - Matrix3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Matrix3 project_to_rotation(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Matrix3 axis_angle_rotation(const Point3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

RigidTransform::RigidTransform(const Matrix3& rotation, const Point3& translation,
                               double tolerance)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation, tolerance)) {
    throw Error(ErrorCode::InvalidArgument, "rotation matrix is not proper orthonormal");
  }
  if (!translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "translation is not finite");
  }
}

RigidTransform RigidTransform::from_matrix(const Matrix4& m, double tolerance) {
  const Eigen::RowVector4d bottom = m.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > tolerance) {
    throw Error(ErrorCode::InvalidArgument, "homogeneous bottom row must be 0 0 0 1");
  }
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>(), tolerance};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

Matrix4 RigidTransform::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Point3 apply(const RigidTransform& transform, const Point3& p) { return transform.apply(p); }

double normalized_triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  const double ab = (b - a).norm();
  const double bc = (c - b).norm();
  const double ca = (a - c).norm();
  double edges[3] = {ab, bc, ca};
  std::sort(edges, edges + 3);
  const double denom = edges[1] * edges[2];
  if (!(denom > 0.0)) return 0.0;
  const double area = 0.5 * (b - a).cross(c - a).norm();
  return area / denom;
}

double max_normalized_triangle_area(std::span<const Point3> points) {
  const std::size_t n = points.size();
  if (n < 3) return 0.0;
  double best = 0.0;
  if (n <= 32) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k)
          best = std::max(best, normalized_triangle_area(points[i], points[j], points[k]));
    return best;
  }
  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(n);
  auto farthest_from = [&](const Point3& origin) {
    std::size_t idx = 0;
    double dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (points[i] - origin).squaredNorm();
      if (d > dist) {
        dist = d;
        idx = i;
      }
    }
    return idx;
  };
  const std::size_t a = farthest_from(centroid);
  const std::size_t b = farthest_from(points[a]);
  for (std::size_t k = 0; k < n; ++k) {
    if (k == a || k == b) continue;
    best = std::max(best, normalized_triangle_area(points[a], points[b], points[k]));
  }
  return best;
}

bool is_collinear(std::span<const Point3> points, double threshold) {
  return max_normalized_triangle_area(points) < threshold;
}

namespace {

void check_weights(Correspondences corrs, std::span<const double> weights) {
  if (weights.size() != corrs.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "weight count " + std::to_string(weights.size()) +
                    " does not match correspondence count " + std::to_string(corrs.size()));
  }
  for (const double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "weights must lie in [0, 1]");
    }
  }
}

}  // namespace

RigidTransform estimate_pose_svd_unchecked(Correspondences corrs,
                                           std::span<const double> weights) {
  double total = 0.0;
  Point3 src_mean = Point3::Zero();
  Point3 dst_mean = Point3::Zero();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    total += weights[i];
    src_mean += weights[i] * corrs[i].p;
    dst_mean += weights[i] * corrs[i].q;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::DegenerateConfiguration, "total weight is zero");
  }
  src_mean /= total;
  dst_mean /= total;

  Matrix3 cross_cov = Matrix3::Zero();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    cross_cov += weights[i] * (corrs[i].p - src_mean) * (corrs[i].q - dst_mean).transpose();
  }

  Eigen::JacobiSVD<Matrix3> svd(cross_cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  Matrix3 v = svd.matrixV();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) *= -1.0;
  Matrix3 rotation = v * u.transpose();
  // Jacobi SVD is orthonormal to a few ulp; re-orthonormalize so the result
  // always passes the 1e-9 rotation check.
  if (!is_rotation(rotation)) rotation = project_to_rotation(rotation);
  const Point3 translation = dst_mean - rotation * src_mean;
  return {rotation, translation};
}

RigidTransform estimate_pose_svd(Correspondences corrs, std::span<const double> weights) {
  check_weights(corrs, weights);
  std::vector<Point3> effective;
  effective.reserve(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    if (weights[i] > 0.0) effective.push_back(corrs[i].p);
  }
  if (effective.size() < 3) {
    throw Error(ErrorCode::DegenerateConfiguration,
                "pose estimation needs at least 3 positively weighted correspondences, got " +
                    std::to_string(effective.size()));
  }
  if (is_collinear(effective)) {
    throw Error(ErrorCode::DegenerateConfiguration, "source points are collinear");
  }
  return estimate_pose_svd_unchecked(corrs, weights);
}

RigidTransform estimate_pose_svd(Correspondences corrs) {
  const WeightVector uniform(corrs.size(), 1.0);
  return estimate_pose_svd(corrs, uniform);
}

PoseErrors pose_errors(const RigidTransform& estimate, const RigidTransform& truth) {
  const double trace = (estimate.rotation() * truth.rotation().transpose()).trace();
  const double cos_angle = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  PoseErrors out;
  out.rotation_deg = std::acos(cos_angle) * 180.0 / std::numbers::pi;
  out.translation = (estimate.translation() - truth.translation()).norm();
  return out;
}

std::vector<double> residuals(const RigidTransform& transform, Correspondences corrs) {
  std::vector<double> out(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    out[i] = (transform.apply(corrs[i].p) - corrs[i].q).norm();
  }
  return out;
}

}  // namespace tcf
