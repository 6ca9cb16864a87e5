#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tcf/error.hpp"
#include "tcf/geometry.hpp"

using namespace tcf;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Matrix3& m) { return m.cwiseAbs().maxCoeff(); }

CorrespondenceSet transformed(const std::vector<Point3>& pts, const RigidTransform& t) {
  CorrespondenceSet c;
  for (const auto& p : pts) c.push_back({p, t.apply(p)});
  return c;
}

std::vector<Point3> random_points(Rng& rng, std::size_t n, double extent) {
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(oracle::random_point(rng, extent));
  return pts;
}

}  // namespace

TEST_CASE("apply on hand-evaluated transforms") {
  CHECK((apply(RigidTransform::identity(), Point3(1, 2, 3)) - Point3(1, 2, 3)).norm() == 0.0);
  const RigidTransform shift(Matrix3::Identity(), Point3(1, 0, 0));
  CHECK((shift.apply(Point3::Zero()) - Point3(1, 0, 0)).norm() == 0.0);
  const RigidTransform quarter(axis_angle_rotation(Point3::UnitZ(), kPi / 2), Point3::Zero());
  CHECK((quarter(Point3(1, 0, 0)) - Point3(0, 1, 0)).norm() < 1e-12);
}

TEST_CASE("rigid transform rejects improper rotations") {
  Matrix3 mirror = Matrix3::Identity();
  mirror(2, 2) = -1.0;
  CHECK_THROWS_AS(RigidTransform(mirror, Point3::Zero()), Error);
  Matrix3 scaled = 1.01 * Matrix3::Identity();
  CHECK_THROWS_AS(RigidTransform(scaled, Point3::Zero()), Error);
  CHECK_THROWS_AS(RigidTransform(Matrix3::Identity(), Point3(NAN, 0, 0)), Error);
  Matrix4 m = Matrix4::Identity();
  m(3, 0) = 1.0;
  CHECK_THROWS_AS(RigidTransform::from_matrix(m), Error);
}

TEST_CASE("composition and inverse") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform a(oracle::random_rotation(rng), oracle::random_point(rng, 10));
    const RigidTransform b(oracle::random_rotation(rng), oracle::random_point(rng, 10));
    const Point3 x = oracle::random_point(rng, 10);
    CHECK(((a * b).apply(x) - a.apply(b.apply(x))).norm() < 1e-12);
    CHECK(((a.inverse() * a).apply(x) - x).norm() < 1e-11);
    CHECK((RigidTransform::from_matrix(a.matrix()).apply(x) - a.apply(x)).norm() < 1e-12);
  }
}

TEST_CASE("axis-angle rotation and projection") {
  const Matrix3 r = axis_angle_rotation(Point3(1, 1, 1), 2 * kPi / 3);
  // A third turn about the diagonal cycles the coordinate axes.
  CHECK((r * Point3::UnitX() - Point3::UnitY()).norm() < 1e-12);
  CHECK(is_rotation(r));
  Matrix3 noisy = r;
  noisy(0, 1) += 1e-4;
  CHECK_FALSE(is_rotation(noisy));
  CHECK(is_rotation(project_to_rotation(noisy)));
  CHECK(max_abs(project_to_rotation(noisy) - r) < 1e-3);
}

TEST_CASE("normalized triangle area") {
  const double equilateral =
      normalized_triangle_area(Point3(0, 0, 0), Point3(1, 0, 0), Point3(0.5, std::sqrt(3.0) / 2, 0));
  CHECK(equilateral == doctest::Approx(std::sqrt(3.0) / 4).epsilon(1e-12));
  CHECK(normalized_triangle_area(Point3(0, 0, 0), Point3(1, 0, 0), Point3(2, 0, 0)) == 0.0);
  CHECK(normalized_triangle_area(Point3(0, 0, 0), Point3(0, 0, 0), Point3(0, 0, 0)) == 0.0);
  // Scale invariance.
  const Point3 a(0.3, -1, 2), b(4, 1, 0), c(-2, 5, 1);
  CHECK(normalized_triangle_area(a * 1e3, b * 1e3, c * 1e3) ==
        doctest::Approx(normalized_triangle_area(a, b, c)).epsilon(1e-12));
}

TEST_CASE("collinearity detection") {
  std::vector<Point3> line;
  for (int i = 0; i < 40; ++i) line.push_back(Point3(i, 2.0 * i, -i));
  CHECK(is_collinear(line));
  CHECK(is_collinear(std::span(line).first(5)));
  line.push_back(Point3(0, 0, 5));
  CHECK_FALSE(is_collinear(line));
  std::vector<Point3> short_line(line.begin(), line.begin() + 5);
  short_line.push_back(Point3(1, 0, 0));
  CHECK_FALSE(is_collinear(short_line));
}

TEST_CASE("svd pose: identity and known motion") {
  Rng rng(3);
  const auto pts = random_points(rng, 10, 5);
  const RigidTransform same = estimate_pose_svd(transformed(pts, RigidTransform::identity()));
  CHECK(max_abs(same.rotation() - Matrix3::Identity()) < 1e-12);
  CHECK(same.translation().norm() < 1e-12);

  const RigidTransform truth(axis_angle_rotation(Point3(1, 1, 1), 30.0 * kPi / 180.0),
                             Point3(2, -1, 0.5));
  const std::vector<Point3> four{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const RigidTransform got = estimate_pose_svd(transformed(four, truth));
  CHECK(max_abs(got.rotation() - truth.rotation()) < 1e-9);
  CHECK((got.translation() - truth.translation()).norm() < 1e-9);
}

TEST_CASE("svd pose: degenerate and invalid inputs") {
  const std::vector<Point3> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  const auto c = transformed(line, RigidTransform::identity());
  try {
    estimate_pose_svd(c);
    FAIL("expected DegenerateConfiguration");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateConfiguration);
  }
  const std::vector<Point3> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}};
  const auto t = transformed(tri, RigidTransform::identity());
  const std::vector<double> two_positive{1, 1, 0, 0};
  CHECK_THROWS_AS(estimate_pose_svd(t, two_positive), Error);
  const std::vector<double> wrong_size{1, 1, 1};
  CHECK_THROWS_AS(estimate_pose_svd(t, wrong_size), Error);
  const std::vector<double> out_of_range{1, 1, 1, 1.5};
  CHECK_THROWS_AS(estimate_pose_svd(t, out_of_range), Error);
}

TEST_CASE("svd pose: zero weights exclude points") {
  Rng rng(5);
  const RigidTransform truth(oracle::random_rotation(rng), oracle::random_point(rng, 3));
  auto c = transformed(random_points(rng, 8, 4), truth);
  c[7].q += Point3(50, -20, 3);
  std::vector<double> w(8, 1.0);
  w[7] = 0.0;
  const RigidTransform got = estimate_pose_svd(c, w);
  CHECK(max_abs(got.rotation() - truth.rotation()) < 1e-9);
  CHECK((got.translation() - truth.translation()).norm() < 1e-9);
}

TEST_CASE("svd pose: reflection correction on mirrored configurations") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    // Planar sources make the cross-covariance rank 2, so the raw SVD may
    // return a reflection that fits equally well.
    std::vector<Point3> planar;
    for (int i = 0; i < 6; ++i) planar.push_back(Point3(rng.uniform(-5, 5), rng.uniform(-5, 5), 0));
    const RigidTransform truth(oracle::random_rotation(rng), oracle::random_point(rng, 5));
    const RigidTransform got = estimate_pose_svd(transformed(planar, truth));
    CHECK(got.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_abs(got.rotation() - truth.rotation()) < 1e-9);

    // Mirrored targets: no proper rotation fits, the solver must still
    // return a rotation (not the reflection).
    auto mirrored = transformed(random_points(rng, 6, 5), RigidTransform::identity());
    for (auto& m : mirrored) m.q.x() = -m.q.x();
    const RigidTransform r = estimate_pose_svd(mirrored);
    CHECK(is_rotation(r.rotation()));
  }
}

TEST_CASE("svd pose is invariant under permutation") {
  Rng rng(23);
  auto c = oracle::small_instance(rng, 15, 10, 10, 0.05);
  const RigidTransform a = estimate_pose_svd(c);
  std::reverse(c.begin(), c.end());
  std::swap(c[2], c[9]);
  const RigidTransform b = estimate_pose_svd(c);
  CHECK(max_abs(a.rotation() - b.rotation()) < 1e-12);
  CHECK((a.translation() - b.translation()).norm() < 1e-10);
}

TEST_CASE("svd pose is weighted least-squares optimal") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = oracle::small_instance(rng, 20, 14, 10, 0.2);
    std::vector<double> w;
    for (std::size_t i = 0; i < c.size(); ++i) w.push_back(rng.uniform01());
    const RigidTransform best = estimate_pose_svd(c, w);
    auto objective = [&](const RigidTransform& t) {
      double s = 0;
      for (std::size_t i = 0; i < c.size(); ++i) s += w[i] * (t.apply(c[i].p) - c[i].q).squaredNorm();
      return s;
    };
    const double f0 = objective(best);
    for (int k = 0; k < 20; ++k) {
      const Matrix3 dr = axis_angle_rotation(oracle::random_point(rng, 1), rng.uniform(1e-6, 1e-2));
      const RigidTransform perturbed(dr * best.rotation(),
                                     best.translation() + oracle::random_point(rng, 1e-2));
      CHECK(objective(perturbed) >= f0 - 1e-9);
    }
  }
}

TEST_CASE("pose errors") {
  const RigidTransform a(axis_angle_rotation(Point3(0.2, 1, -3), 0.7), Point3(1, 2, 3));
  const PoseErrors zero = pose_errors(a, a);
  CHECK(zero.rotation_deg == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(zero.translation == 0.0);

  const RigidTransform b(axis_angle_rotation(Point3::UnitZ(), kPi / 2) * a.rotation(),
                         a.translation() + Point3(3, 4, 0));
  const PoseErrors e = pose_errors(b, a);
  CHECK(std::abs(e.rotation_deg - 90.0) < 1e-9);
  CHECK(e.translation == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(pose_errors(a, b).rotation_deg == doctest::Approx(e.rotation_deg).epsilon(1e-15));

  // Half turn: trace at the edge of the arccos domain.
  const RigidTransform flip(axis_angle_rotation(Point3::UnitX(), kPi), Point3::Zero());
  CHECK(pose_errors(flip, RigidTransform::identity()).rotation_deg == doctest::Approx(180.0));
}

TEST_CASE("residuals") {
  const CorrespondenceSet c{{Point3(0, 0, 0), Point3(3, 4, 0)}, {Point3(1, 1, 1), Point3(1, 1, 1)}};
  const auto e = residuals(RigidTransform::identity(), c);
  REQUIRE(e.size() == 2);
  CHECK(e[0] == 5.0);
  CHECK(e[1] == 0.0);
}
