#include <cmath>
#include <set>

#include "doctest.h"
#include "tcf/error.hpp"
#include "tcf/synthbench.hpp"

using namespace tcf;

TEST_CASE("scene generation") {
  const SyntheticScene s = generate_scene({3000, 100, 0.98, 0.1, 1});
  CHECK(s.correspondences.size() == 3000);
  CHECK(s.inlier_count() == 60);
  CHECK(s.sigma == 0.1);
  for (const auto& c : s.correspondences) {
    CHECK(c.p.cwiseAbs().maxCoeff() <= 100.0);
  }
  CHECK(s.gt_pose.translation().cwiseAbs().maxCoeff() <= 100.0);

  const SyntheticScene again = generate_scene({3000, 100, 0.98, 0.1, 1});
  CHECK(again.inlier_mask == s.inlier_mask);
  for (std::size_t i = 0; i < s.correspondences.size(); ++i) {
    REQUIRE(again.correspondences[i].p == s.correspondences[i].p);
    REQUIRE(again.correspondences[i].q == s.correspondences[i].q);
  }
  const SyntheticScene other = generate_scene({3000, 100, 0.98, 0.1, 2});
  CHECK(other.inlier_mask != s.inlier_mask);
}

TEST_CASE("scene noise statistics") {
  const SyntheticScene s = generate_scene({2000, 100, 0.25, 0.5, 3});
  double sum = 0, sum_sq = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.correspondences.size(); ++i) {
    if (!s.inlier_mask[i]) continue;
    const Point3 d = s.correspondences[i].q - s.gt_pose.apply(s.correspondences[i].p);
    for (int k = 0; k < 3; ++k) {
      sum += d[k];
      sum_sq += d[k] * d[k];
      ++n;
    }
  }
  REQUIRE(n / 3 >= 1000);
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(sd - 0.5) < 0.025);
}

TEST_CASE("random rotations are uniform in angle") {
  // Under the Haar measure the angle density is (1 - cos x) / pi, so
  // E[cos x] = -1/2 and E[tr R] = 1 + 2 E[cos x] = 0.
  Rng rng(4);
  double trace = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) trace += random_rigid_transform(rng, 1.0).rotation().trace();
  CHECK(std::abs(trace / n) < 0.03);
}

TEST_CASE("scene spec validation") {
  CHECK_THROWS_AS(generate_scene({2, 100, 0.5, 0.1, 0}), Error);
  CHECK_THROWS_AS(generate_scene({10, 0, 0.5, 0.1, 0}), Error);
  CHECK_THROWS_AS(generate_scene({10, 100, 1.0, 0.1, 0}), Error);
  CHECK_THROWS_AS(generate_scene({10, 100, 0.5, -1, 0}), Error);
}

TEST_CASE("evaluation metrics") {
  const SyntheticScene exact = generate_scene({200, 100, 0.5, 0.0, 5});
  const Metrics m = evaluate_registration(exact.gt_pose, exact, InlierRmse{3});
  CHECK(m.e_r == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(m.e_t == 0.0);
  CHECK(m.inlier_rmse < 1e-12);
  CHECK(m.success);
  CHECK(evaluate_registration(exact.gt_pose, exact, Thresholds{}).success);

  const RigidTransform off(exact.gt_pose.rotation(), exact.gt_pose.translation() + Point3(0.6, 0, 0));
  CHECK_FALSE(evaluate_registration(off, exact, Thresholds{5, 0.5}).success);
  CHECK_FALSE(evaluate_registration(off, exact, InlierRmse{3}).success);

  // E|eps|^2 = 3 sigma^2 for isotropic Gaussian noise.
  const SyntheticScene noisy = generate_scene({3000, 100, 0.0, 1.0, 6});
  const Metrics mn = evaluate_registration(noisy.gt_pose, noisy, InlierRmse{3});
  CHECK(mn.inlier_rmse == doctest::Approx(std::sqrt(3.0)).epsilon(0.03));
  CHECK(mn.success);

  SyntheticScene none = exact;
  none.inlier_mask.assign(none.inlier_mask.size(), false);
  CHECK_THROWS_AS(evaluate_registration(exact.gt_pose, none, InlierRmse{3}), Error);
  CHECK(std::isnan(evaluate_registration(exact.gt_pose, none, Thresholds{}).inlier_rmse));

  const Metrics failed = failed_metrics(1.5);
  CHECK_FALSE(failed.success);
  CHECK(std::isnan(failed.e_r));
  CHECK(failed.wall_time_ms == 1.5);
}

TEST_CASE("noise study report") {
  NoiseStudyConfig config;
  config.common.trials = 4;
  config.common.n = 400;
  config.outlier_ratios = {0.5, 0.9};
  config.sigmas = {0.1, 0.5};
  const StudyReport r = run_noise_study(config);
  CHECK(r.kind == StudyKind::Noise);
  CHECK(r.cells.size() == 4);
  REQUIRE(r.rows.size() == 16);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].cell == i / 4);
    CHECK(r.rows[i].trial == i % 4);
    seeds.insert(r.rows[i].seed);
  }
  CHECK(seeds.size() == 16);
  for (const auto& c : r.cells) {
    CHECK(c.trials == 4);
    CHECK(c.recall >= 0.0);
    CHECK(c.recall <= 1.0);
  }

  StudyReport copy = r;
  summarize(copy);
  for (std::size_t k = 0; k < r.cells.size(); ++k) {
    CHECK(copy.cells[k].recall == r.cells[k].recall);
    CHECK(copy.cells[k].successes == r.cells[k].successes);
  }

  config.common.threads = 3;
  const StudyReport threaded = run_noise_study(config);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(threaded.rows[i].seed == r.rows[i].seed);
    CHECK(threaded.rows[i].metrics.success == r.rows[i].metrics.success);
    CHECK(threaded.rows[i].metrics.e_r == r.rows[i].metrics.e_r);
    CHECK(threaded.rows[i].extras == r.rows[i].extras);
  }
}

TEST_CASE("summaries count failures and skip missing poses in means") {
  StudyReport r;
  r.cells.resize(1);
  TrialRow ok;
  ok.metrics = {true, 1.0, 0.2, 0.1, 3.0};
  TrialRow bad;
  bad.trial = 1;
  bad.metrics = failed_metrics(1.0);
  r.rows = {ok, bad};
  summarize(r);
  CHECK(r.cells[0].trials == 2);
  CHECK(r.cells[0].successes == 1);
  CHECK(r.cells[0].recall == 0.5);
  CHECK(r.cells[0].mean_e_r == 1.0);
  CHECK(r.cells[0].mean_wall_time_ms == 2.0);
  CHECK(r.overall_recall() == 0.5);
}

TEST_CASE("iteration study") {
  IterationStudyConfig config;
  config.common.trials = 3;
  config.common.n = 300;
  config.outlier_ratio = 0.8;
  config.budgets = {5, 50, 500};
  const StudyReport r = run_iteration_study(config);
  REQUIRE(r.cells.size() == 4);
  CHECK(r.cells.back().label == "tcf");
  for (std::size_t k = 1; k < 3; ++k) CHECK(r.cells[k].recall >= r.cells[k - 1].recall);
  // Nested budgets on a shared stream never lose consensus.
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(r.rows[3 + t].extras.at("consensus") >= r.rows[t].extras.at("consensus"));
    CHECK(r.rows[6 + t].extras.at("consensus") >= r.rows[3 + t].extras.at("consensus"));
  }
  config.budgets.clear();
  CHECK_THROWS_AS(run_iteration_study(config), Error);
}

TEST_CASE("ablation variants") {
  using F = AblationVariant::Final;
  const AblationVariant v = AblationVariant::parse("1R+2R+3R/3R+IRLS");
  CHECK(v.one_point);
  CHECK(v.two_point);
  CHECK(v.three_point);
  CHECK(v.final_pose == F::ThreePointIrls);
  for (const auto& d : AblationStudyConfig::default_variants()) {
    CHECK(AblationVariant::parse(d.label()).label() == d.label());
  }
  CHECK_THROWS_AS(AblationVariant::parse("1R"), Error);
  CHECK_THROWS_AS(AblationVariant::parse("4R/3R"), Error);
  CHECK_THROWS_AS(AblationVariant::parse("1R/3R"), Error);
  CHECK_THROWS_AS(AblationVariant::parse("1R/XYZ"), Error);

  AblationStudyConfig config;
  config.common.trials = 3;
  config.common.n = 600;
  config.variants = {AblationVariant::parse("3R/3R"), AblationVariant::parse("1R+2R+3R/3R")};
  const StudyReport r = run_ablation_study(config);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[1].extra_means.at("output_inlier_ratio") > r.cells[0].extra_means.at("output_inlier_ratio"));
  for (const auto& row : r.rows) {
    CHECK(row.extras.at("raw_inlier_ratio") >= 0.02 - 1e-3);
    CHECK(row.extras.at("raw_inlier_ratio") <= 0.05 + 1e-3);
  }
}

TEST_CASE("study config validation") {
  NoiseStudyConfig bad;
  bad.outlier_ratios = {1.0};
  CHECK_THROWS_AS(run_noise_study(bad), Error);
  AblationStudyConfig inverted;
  inverted.min_inlier_ratio = 0.5;
  inverted.max_inlier_ratio = 0.1;
  CHECK_THROWS_AS(run_ablation_study(inverted), Error);
  CHECK(study_kind_from_string("ablation") == StudyKind::Ablation);
  CHECK(to_string(StudyKind::Iteration) == "iteration");
  CHECK_THROWS_AS(study_kind_from_string("nope"), Error);
}

TEST_CASE("parallel_for runs every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw Error(ErrorCode::InvalidArgument, "boom");
                               }),
                  Error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
