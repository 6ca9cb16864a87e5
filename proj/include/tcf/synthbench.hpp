#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tcf/consensus.hpp"
#include "tcf/irls.hpp"
#include "tcf/pipeline.hpp"

namespace tcf {

// ---------------------------------------------------------------------------
// Scenes

struct SceneSpec {
  std::size_t n = 3000;
  double extent = 100.0;  // points are drawn from [-extent, extent]^3
  double outlier_ratio = 0.0;
  double sigma = 0.1;  // per-axis Gaussian noise on inlier targets
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
  std::size_t inlier_count() const;
};

struct SyntheticScene {
  CorrespondenceSet correspondences;
  RigidTransform gt_pose;
  std::vector<bool> inlier_mask;
  double sigma = 0.0;

  std::size_t inlier_count() const;
};

/// Uniform rotation over SO(3) with translation uniform in the cube.
RigidTransform random_rigid_transform(Rng& rng, double extent);

/// Sources uniform in the cube; inlier targets are gt-transformed sources
/// plus Gaussian noise; outlier targets are fresh uniform draws. Which
/// correspondences are outliers is itself random.
SyntheticScene generate_scene(const SceneSpec& spec);

// ---------------------------------------------------------------------------
// Metrics

struct Thresholds {
  double max_rotation_deg = 5.0;
  double max_translation = 0.5;
};

struct InlierRmse {
  double multiple = 3.0;  // success when rmse < multiple * sigma
};

using SuccessCriterion = std::variant<Thresholds, InlierRmse>;

struct Metrics {
  bool success = false;
  double e_r = 0.0;          // degrees
  double e_t = 0.0;          // meters
  double inlier_rmse = 0.0;  // meters, NaN when the scene has no true inlier
  double wall_time_ms = 0.0;
};

/// Throws NoTrueInliers for InlierRmse on a scene without inliers.
Metrics evaluate_registration(const RigidTransform& estimate, const SyntheticScene& scene,
                              const SuccessCriterion& criterion);

/// Metrics for a registration that produced no pose.
Metrics failed_metrics(double wall_time_ms);

// ---------------------------------------------------------------------------
// Studies

enum class StudyKind { Noise, Iteration, Ablation };

std::string_view to_string(StudyKind kind);
StudyKind study_kind_from_string(std::string_view name);

struct StudyCommon {
  std::uint64_t master_seed = 1;
  std::size_t trials = 20;
  std::size_t n = 3000;
  double extent = 100.0;
  double tau_factor = 3.0;     // tau = tau_factor * sigma
  double rmse_multiple = 3.0;  // success: inlier rmse < rmse_multiple * sigma
  double lambda = 0.99;
  std::uint64_t max_iters_1pt = 10000;
  std::uint64_t max_iters_2pt = 10000;
  std::uint64_t max_iters_3pt = 10000;
  IrlsParams irls;
  std::size_t threads = 1;
};

struct NoiseStudyConfig {
  StudyCommon common;
  std::vector<double> outlier_ratios{0.10, 0.50, 0.90, 0.95, 0.98};
  std::vector<double> sigmas{0.1, 1.0, 2.0, 3.5, 5.0};

  /// 50 noise levels from 0.1 m to 5 m and 100 trials per cell.
  static NoiseStudyConfig paper_scale();
};

struct IterationStudyConfig {
  StudyCommon common;
  double outlier_ratio = 0.98;
  double sigma = 0.1;
  std::vector<std::uint64_t> budgets{1000, 10000, 100000};
  bool include_tcf = true;

  /// 200 scenes and budgets up to 10^6.
  static IterationStudyConfig paper_scale();
};

/// Stage subset plus the way the final pose is produced.
struct AblationVariant {
  bool one_point = false;
  bool two_point = false;
  bool three_point = false;
  enum class Final { ThreePoint, Irls, ThreePointIrls } final_pose = Final::ThreePoint;

  std::string label() const;  // e.g. "1R+2R+3R/3R+IRLS"
  static AblationVariant parse(std::string_view label);
};

struct AblationStudyConfig {
  StudyCommon common = [] {
    StudyCommon c;
    c.trials = 50;
    return c;
  }();
  double min_inlier_ratio = 0.02;
  double max_inlier_ratio = 0.05;
  double sigma = 0.1;
  std::vector<AblationVariant> variants = default_variants();

  static std::vector<AblationVariant> default_variants();
};

struct TrialRow {
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Metrics metrics;
  std::map<std::string, double> extras;
};

struct CellSummary {
  std::string label;
  std::map<std::string, double> params;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double recall = 0.0;
  double mean_e_r = 0.0;  // over trials that produced a pose
  double mean_e_t = 0.0;
  double mean_wall_time_ms = 0.0;
  std::map<std::string, double> extra_means;
};

struct StudyReport {
  StudyKind kind = StudyKind::Noise;
  std::uint64_t master_seed = 0;
  std::map<std::string, double> parameters;
  std::vector<CellSummary> cells;  // labels and params; aggregates filled by summarize()
  std::vector<TrialRow> rows;      // ordered by (cell, trial)

  double overall_recall() const;
};

/// Recomputes every cell aggregate from the rows.
void summarize(StudyReport& report);

StudyReport run_noise_study(const NoiseStudyConfig& config);
StudyReport run_iteration_study(const IterationStudyConfig& config);
StudyReport run_ablation_study(const AblationStudyConfig& config);

using StudyConfig = std::variant<NoiseStudyConfig, IterationStudyConfig, AblationStudyConfig>;

/// Dispatches on the config alternative. Throws InvalidConfig.
StudyReport run_study(const StudyConfig& config);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// rethrown on the caller after all workers join.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Thread count from TCF_THREADS, else 1.
std::size_t default_thread_count();

}  // namespace tcf
