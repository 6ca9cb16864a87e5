#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>
#include <vector>

namespace tcf {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;

/// A hypothesized match between a source point p and a target point q.
struct Correspondence {
  Point3 p;
  Point3 q;
};

using CorrespondenceSet = std::vector<Correspondence>;
using Correspondences = std::span<const Correspondence>;

/// Per-correspondence weights in [0, 1].
using WeightVector = std::vector<double>;

/// Proper rigid motion x -> R x + t.
///
/// Constructing from a matrix that is not a rotation (orthonormal with
/// det +1 within the tolerance) throws InvalidArgument.
class RigidTransform {
 public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform() : rotation_(Matrix3::Identity()), translation_(Point3::Zero()) {}
  RigidTransform(const Matrix3& rotation, const Point3& translation,
                 double tolerance = kTolerance);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Matrix4& m, double tolerance = kTolerance);

  const Matrix3& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 operator()(const Point3& p) const { return apply(p); }

  RigidTransform inverse() const;
  /// (a * b)(x) = a(b(x)).
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  Matrix4 matrix() const;

 private:
  Matrix3 rotation_;
  Point3 translation_;
};

/// True when R is orthonormal with det +1 within tol (element-wise).
bool is_rotation(const Matrix3& r, double tol = RigidTransform::kTolerance);

/// Nearest rotation in the Frobenius sense.
Matrix3 project_to_rotation(const Matrix3& m);

/// Rotation of `angle` radians about `axis` (need not be normalized).
Matrix3 axis_angle_rotation(const Point3& axis, double angle);

Point3 apply(const RigidTransform& transform, const Point3& p);

/// Triangle area divided by the product of its two longest edges.
/// It lies in [0, sqrt(3)/4]; zero for coincident or collinear vertices.
double normalized_triangle_area(const Point3& a, const Point3& b, const Point3& c);

inline constexpr double kCollinearityThreshold = 1e-3;

/// Largest normalized triangle area over the points. Exhaustive up to 32
/// points; above that the triple is built from the two most distant
/// extremes and the point farthest off their line.
double max_normalized_triangle_area(std::span<const Point3> points);

bool is_collinear(std::span<const Point3> points,
                  double threshold = kCollinearityThreshold);

/// Weighted least-squares rigid alignment of sources onto targets (Kabsch
/// with reflection correction). Minimizes sum_i w_i |R p_i + t - q_i|^2.
///
/// Throws DegenerateConfiguration when fewer than three weights are positive
/// or the positively weighted sources are collinear, InvalidArgument on a
/// weight count mismatch or a weight outside [0, 1].
RigidTransform estimate_pose_svd(Correspondences corrs, std::span<const double> weights);
RigidTransform estimate_pose_svd(Correspondences corrs);

/// Same solver without the collinearity screen; used where the caller has
/// already validated the sample.
RigidTransform estimate_pose_svd_unchecked(Correspondences corrs,
                                           std::span<const double> weights);

struct PoseErrors {
  double rotation_deg = 0.0;  // in [0, 180]
  double translation = 0.0;
};

/// Rotation error arccos((tr(Ra Rb^T) - 1) / 2) in degrees and the
/// translation distance.
PoseErrors pose_errors(const RigidTransform& estimate, const RigidTransform& truth);

/// |R p + t - q| per correspondence.
std::vector<double> residuals(const RigidTransform& transform, Correspondences corrs);

}  // namespace tcf
