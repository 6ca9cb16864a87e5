#include "tcf/synthbench.hpp"

#include <Eigen/Geometry>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "tcf/error.hpp"

namespace tcf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Point3 uniform_in_cube(Rng& rng, double extent) {
  const double x = rng.uniform(-extent, extent);
  const double y = rng.uniform(-extent, extent);
  const double z = rng.uniform(-extent, extent);
  return {x, y, z};
}

std::size_t true_inliers(std::span<const std::size_t> indices, const std::vector<bool>& mask) {
  std::size_t count = 0;
  for (const std::size_t i : indices) count += mask[i] ? 1 : 0;
  return count;
}

double ratio(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(whole);
}

void check_common(const StudyCommon& c) {
  if (c.n < 3) throw Error(ErrorCode::InvalidConfig, "n must be at least 3");
  if (!(c.extent > 0.0)) throw Error(ErrorCode::InvalidConfig, "extent must be positive");
  if (!(c.tau_factor > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau factor must be positive");
  if (!(c.rmse_multiple > 0.0)) throw Error(ErrorCode::InvalidConfig, "rmse multiple must be positive");
  if (!(c.lambda > 0.0 && c.lambda < 1.0)) throw Error(ErrorCode::InvalidConfig, "lambda must lie in (0, 1)");
  if (c.max_iters_1pt < 1 || c.max_iters_2pt < 1 || c.max_iters_3pt < 1) {
    throw Error(ErrorCode::InvalidConfig, "iteration caps must be at least 1");
  }
  try {
    c.irls.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidConfig, "study noise levels must be positive (tau is tied to sigma)");
  }
}

void check_ratio(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidConfig, "outlier ratio must lie in [0, 1)");
}

TcfParams make_params(const StudyCommon& c, double sigma, std::uint64_t seed) {
  TcfParams p;
  p.tau = c.tau_factor * sigma;
  p.lambda = c.lambda;
  p.max_iters_1pt = c.max_iters_1pt;
  p.max_iters_2pt = c.max_iters_2pt;
  p.max_iters_3pt = c.max_iters_3pt;
  p.seed = seed;
  return p;
}

void put_common(std::map<std::string, double>& out, const StudyCommon& c) {
  out["trials"] = static_cast<double>(c.trials);
  out["n"] = static_cast<double>(c.n);
  out["extent"] = c.extent;
  out["tau_factor"] = c.tau_factor;
  out["rmse_multiple"] = c.rmse_multiple;
  out["lambda"] = c.lambda;
  out["max_iters_1pt"] = static_cast<double>(c.max_iters_1pt);
  out["max_iters_2pt"] = static_cast<double>(c.max_iters_2pt);
  out["max_iters_3pt"] = static_cast<double>(c.max_iters_3pt);
  out["irls_mu"] = c.irls.mu;
  out["irls_e_min"] = c.irls.e_min;
  out["irls_gamma_min"] = c.irls.gamma_min;
  out["irls_max_iters"] = static_cast<double>(c.irls.max_iters);
}

// Stage diagnostics shared by the noise and iteration studies.
void put_registration_extras(std::map<std::string, double>& extras, const RegistrationOutput& out,
                             const std::vector<bool>& mask) {
  static constexpr std::array<const char*, 3> names{"1pt", "2pt", "3pt"};
  for (int s = 0; s < 3; ++s) {
    const auto& stage = out.stages[s];
    const std::string name = names[s];
    extras["size_" + name] = static_cast<double>(stage.size());
    extras["true_inliers_" + name] = static_cast<double>(true_inliers(stage.indices, mask));
    extras["inlier_ratio_" + name] = ratio(true_inliers(stage.indices, mask), stage.size());
    extras["iterations_" + name] = static_cast<double>(stage.iterations_run);
  }
  extras["irls_iterations"] = static_cast<double>(out.irls_iterations);
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenes

void SceneSpec::validate() const {
  if (n < 3) throw Error(ErrorCode::InvalidSpec, "scene needs n >= 3");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw Error(ErrorCode::InvalidSpec, "extent must be positive");
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "outlier ratio must lie in [0, 1)");
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidSpec, "sigma must be >= 0");
}

std::size_t SceneSpec::inlier_count() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - outlier_ratio)));
}

std::size_t SyntheticScene::inlier_count() const {
  return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

RigidTransform random_rigid_transform(Rng& rng, double extent) {
  Eigen::Quaterniond q;
  do {
    const double w = rng.gaussian();
    const double x = rng.gaussian();
    const double y = rng.gaussian();
    const double z = rng.gaussian();
    q = Eigen::Quaterniond(w, x, y, z);
  } while (q.norm() < 1e-6);
  q.normalize();
  Matrix3 r = q.toRotationMatrix();
  if (!is_rotation(r)) r = project_to_rotation(r);
  return {r, uniform_in_cube(rng, extent)};
}

SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticScene scene;
  scene.sigma = spec.sigma;
  scene.gt_pose = random_rigid_transform(rng, spec.extent);

  std::vector<std::size_t> order(spec.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = spec.n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);
  scene.inlier_mask.assign(spec.n, false);
  const std::size_t inliers = spec.inlier_count();
  for (std::size_t k = 0; k < inliers; ++k) scene.inlier_mask[order[k]] = true;

  scene.correspondences.resize(spec.n);
  for (auto& c : scene.correspondences) c.p = uniform_in_cube(rng, spec.extent);
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto& c = scene.correspondences[i];
    if (scene.inlier_mask[i]) {
      const double nx = rng.gaussian();
      const double ny = rng.gaussian();
      const double nz = rng.gaussian();
      c.q = scene.gt_pose.apply(c.p) + spec.sigma * Point3(nx, ny, nz);
    } else {
      c.q = uniform_in_cube(rng, spec.extent);
    }
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Metrics

Metrics evaluate_registration(const RigidTransform& estimate, const SyntheticScene& scene,
                              const SuccessCriterion& criterion) {
  if (scene.inlier_mask.size() != scene.correspondences.size()) {
    throw Error(ErrorCode::InvalidArgument, "inlier mask size does not match the correspondences");
  }
  Metrics m;
  const PoseErrors err = pose_errors(estimate, scene.gt_pose);
  m.e_r = err.rotation_deg;
  m.e_t = err.translation;

  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < scene.correspondences.size(); ++i) {
    if (!scene.inlier_mask[i]) continue;
    const auto& c = scene.correspondences[i];
    sum_sq += (estimate.apply(c.p) - c.q).squaredNorm();
    ++count;
  }
  m.inlier_rmse = count == 0 ? kNaN : std::sqrt(sum_sq / static_cast<double>(count));

  if (const auto* t = std::get_if<Thresholds>(&criterion)) {
    m.success = m.e_r <= t->max_rotation_deg && m.e_t <= t->max_translation;
  } else {
    const auto& r = std::get<InlierRmse>(criterion);
    if (count == 0) {
      throw Error(ErrorCode::NoTrueInliers, "inlier RMSE criterion on a scene without inliers");
    }
    const double bound = r.multiple * scene.sigma;
    // A noiseless scene has bound 0; accept a numerically exact fit there.
    m.success = scene.sigma > 0.0 ? m.inlier_rmse < bound : m.inlier_rmse <= 1e-9;
  }
  return m;
}

Metrics failed_metrics(double wall_time_ms) {
  Metrics m;
  m.success = false;
  m.e_r = kNaN;
  m.e_t = kNaN;
  m.inlier_rmse = kNaN;
  m.wall_time_ms = wall_time_ms;
  return m;
}

// ---------------------------------------------------------------------------
// Reports

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::Noise: return "noise";
    case StudyKind::Iteration: return "iteration";
    case StudyKind::Ablation: return "ablation";
  }
  return "unknown";
}

StudyKind study_kind_from_string(std::string_view name) {
  if (name == "noise") return StudyKind::Noise;
  if (name == "iteration") return StudyKind::Iteration;
  if (name == "ablation") return StudyKind::Ablation;
  throw Error(ErrorCode::InvalidConfig, "unknown study kind '" + std::string(name) + "'");
}

double StudyReport::overall_recall() const {
  if (rows.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.metrics.success ? 1 : 0;
  return ratio(ok, rows.size());
}

void summarize(StudyReport& report) {
  struct Acc {
    std::size_t trials = 0, successes = 0, posed = 0;
    double e_r = 0.0, e_t = 0.0, time = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> extras;
  };
  std::vector<Acc> acc(report.cells.size());
  for (const auto& row : report.rows) {
    if (row.cell >= acc.size()) throw Error(ErrorCode::InvalidConfig, "row refers to a missing cell");
    Acc& a = acc[row.cell];
    ++a.trials;
    a.successes += row.metrics.success ? 1 : 0;
    a.time += row.metrics.wall_time_ms;
    if (std::isfinite(row.metrics.e_r) && std::isfinite(row.metrics.e_t)) {
      ++a.posed;
      a.e_r += row.metrics.e_r;
      a.e_t += row.metrics.e_t;
    }
    for (const auto& [key, value] : row.extras) {
      auto& slot = a.extras[key];
      if (std::isfinite(value)) {
        slot.first += value;
        ++slot.second;
      }
    }
  }
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    CellSummary& cell = report.cells[i];
    const Acc& a = acc[i];
    cell.trials = a.trials;
    cell.successes = a.successes;
    cell.recall = ratio(a.successes, a.trials);
    cell.mean_e_r = a.posed ? a.e_r / static_cast<double>(a.posed) : kNaN;
    cell.mean_e_t = a.posed ? a.e_t / static_cast<double>(a.posed) : kNaN;
    cell.mean_wall_time_ms = a.trials ? a.time / static_cast<double>(a.trials) : 0.0;
    cell.extra_means.clear();
    for (const auto& [key, slot] : a.extras) {
      cell.extra_means[key] = slot.second ? slot.first / static_cast<double>(slot.second) : kNaN;
    }
  }
}

// ---------------------------------------------------------------------------
// Worker pool

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t default_thread_count() {
  if (const char* env = std::getenv("TCF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Noise study

NoiseStudyConfig NoiseStudyConfig::paper_scale() {
  NoiseStudyConfig c;
  c.common.trials = 100;
  c.sigmas.clear();
  for (int k = 0; k < 50; ++k) c.sigmas.push_back(0.1 + (5.0 - 0.1) * k / 49.0);
  return c;
}

StudyReport run_noise_study(const NoiseStudyConfig& config) {
  const StudyCommon& common = config.common;
  check_common(common);
  for (const double r : config.outlier_ratios) check_ratio(r);
  for (const double s : config.sigmas) check_sigma(s);

  StudyReport report;
  report.kind = StudyKind::Noise;
  report.master_seed = common.master_seed;
  put_common(report.parameters, common);
  for (const double r : config.outlier_ratios) {
    for (const double s : config.sigmas) {
      CellSummary cell;
      cell.label = "outlier_ratio=" + std::to_string(r) + ",sigma=" + std::to_string(s);
      cell.params = {{"outlier_ratio", r}, {"sigma", s}};
      report.cells.push_back(std::move(cell));
    }
  }

  const std::size_t trials = common.trials;
  const std::size_t total = report.cells.size() * trials;
  report.rows.resize(total);
  parallel_for(total, common.threads, [&](std::size_t job) {
    const std::size_t cell = job / trials;
    const std::size_t trial = job % trials;
    const double ratio_out = report.cells[cell].params.at("outlier_ratio");
    const double sigma = report.cells[cell].params.at("sigma");

    TrialRow row;
    row.cell = cell;
    row.trial = trial;
    row.seed = derive_seed(common.master_seed, {cell, trial});
    SceneSpec spec{common.n, common.extent, ratio_out, sigma, row.seed};
    const SyntheticScene scene = generate_scene(spec);
    const TcfParams params = make_params(common, sigma, derive_seed(row.seed, {1}));

    const auto start = Clock::now();
    try {
      const RegistrationOutput out = tcf_register(scene.correspondences, params, common.irls);
      const double ms = elapsed_ms(start);
      row.metrics = evaluate_registration(out.pose, scene, InlierRmse{common.rmse_multiple});
      row.metrics.wall_time_ms = ms;
      put_registration_extras(row.extras, out, scene.inlier_mask);
      row.extras["collapsed"] = 0.0;
    } catch (const Error&) {
      row.metrics = failed_metrics(elapsed_ms(start));
      row.extras["collapsed"] = 1.0;
    }
    report.rows[job] = std::move(row);
  });
  summarize(report);
  return report;
}

// ---------------------------------------------------------------------------
// Iteration study

IterationStudyConfig IterationStudyConfig::paper_scale() {
  IterationStudyConfig c;
  c.common.trials = 200;
  c.budgets = {1000, 10000, 100000, 1000000};
  return c;
}

StudyReport run_iteration_study(const IterationStudyConfig& config) {
  const StudyCommon& common = config.common;
  check_common(common);
  check_ratio(config.outlier_ratio);
  check_sigma(config.sigma);
  if (config.budgets.empty()) throw Error(ErrorCode::InvalidConfig, "no iteration budgets given");
  for (const auto b : config.budgets) {
    if (b < 1) throw Error(ErrorCode::InvalidConfig, "iteration budgets must be at least 1");
  }

  StudyReport report;
  report.kind = StudyKind::Iteration;
  report.master_seed = common.master_seed;
  put_common(report.parameters, common);
  report.parameters["outlier_ratio"] = config.outlier_ratio;
  report.parameters["sigma"] = config.sigma;
  for (const auto b : config.budgets) {
    CellSummary cell;
    cell.label = "ransac/" + std::to_string(b);
    cell.params = {{"budget", static_cast<double>(b)}};
    report.cells.push_back(std::move(cell));
  }
  if (config.include_tcf) {
    CellSummary cell;
    cell.label = "tcf";
    report.cells.push_back(std::move(cell));
  }

  const std::size_t trials = common.trials;
  const std::size_t cells = report.cells.size();
  report.rows.resize(cells * trials);
  const double tau = common.tau_factor * config.sigma;
  parallel_for(trials, common.threads, [&](std::size_t trial) {
    // Every cell sees the same scene and the same sampling stream, so a
    // larger budget extends the hypothesis sequence of a smaller one.
    const std::uint64_t scene_seed = derive_seed(common.master_seed, {0, trial});
    const std::uint64_t solver_seed = derive_seed(common.master_seed, {1, trial});
    const SyntheticScene scene =
        generate_scene({common.n, common.extent, config.outlier_ratio, config.sigma, scene_seed});
    const InlierRmse criterion{common.rmse_multiple};
    const double raw_ratio = ratio(scene.inlier_count(), scene.correspondences.size());

    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      TrialRow row;
      row.cell = b;
      row.trial = trial;
      row.seed = scene_seed;
      Rng rng(solver_seed);
      const auto start = Clock::now();
      try {
        const PoseConsensus out = vanilla_ransac(scene.correspondences, config.budgets[b], tau, rng);
        const double ms = elapsed_ms(start);
        row.metrics = evaluate_registration(out.pose, scene, criterion);
        row.metrics.wall_time_ms = ms;
        row.extras["consensus"] = static_cast<double>(out.consensus.size());
        row.extras["true_inliers"] =
            static_cast<double>(true_inliers(out.consensus.indices, scene.inlier_mask));
      } catch (const Error&) {
        row.metrics = failed_metrics(elapsed_ms(start));
      }
      row.extras["required_iterations"] =
          static_cast<double>(required_iterations(common.lambda, raw_ratio, 3));
      report.rows[b * trials + trial] = std::move(row);
    }

    if (config.include_tcf) {
      TrialRow row;
      row.cell = cells - 1;
      row.trial = trial;
      row.seed = scene_seed;
      const TcfParams params = make_params(common, config.sigma, solver_seed);
      const auto start = Clock::now();
      try {
        const RegistrationOutput out = tcf_register(scene.correspondences, params, common.irls);
        const double ms = elapsed_ms(start);
        row.metrics = evaluate_registration(out.pose, scene, criterion);
        row.metrics.wall_time_ms = ms;
        put_registration_extras(row.extras, out, scene.inlier_mask);
        row.extras["collapsed"] = 0.0;
      } catch (const Error&) {
        row.metrics = failed_metrics(elapsed_ms(start));
        row.extras["collapsed"] = 1.0;
      }
      row.extras["required_iterations"] =
          static_cast<double>(required_iterations(common.lambda, raw_ratio, 3));
      report.rows[(cells - 1) * trials + trial] = std::move(row);
    }
  });
  summarize(report);
  return report;
}

// ---------------------------------------------------------------------------
// Ablation study

std::string AblationVariant::label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += "+";
    s += name;
  };
  add(one_point, "1R");
  add(two_point, "2R");
  add(three_point, "3R");
  switch (final_pose) {
    case Final::ThreePoint: s += "/3R"; break;
    case Final::Irls: s += "/IRLS"; break;
    case Final::ThreePointIrls: s += "/3R+IRLS"; break;
  }
  return s;
}

AblationVariant AblationVariant::parse(std::string_view label) {
  const auto slash = label.find('/');
  if (slash == std::string_view::npos) {
    throw Error(ErrorCode::InvalidConfig, "ablation variant '" + std::string(label) +
                                              "' must look like STAGES/FINAL, e.g. 1R+2R+3R/3R+IRLS");
  }
  AblationVariant v;
  std::string_view stages = label.substr(0, slash);
  const std::string_view final_name = label.substr(slash + 1);
  while (!stages.empty()) {
    const auto plus = stages.find('+');
    const std::string_view token = stages.substr(0, plus);
    if (token == "1R") v.one_point = true;
    else if (token == "2R") v.two_point = true;
    else if (token == "3R") v.three_point = true;
    else throw Error(ErrorCode::InvalidConfig, "unknown stage '" + std::string(token) + "'");
    if (plus == std::string_view::npos) break;
    stages.remove_prefix(plus + 1);
  }
  if (final_name == "3R") v.final_pose = Final::ThreePoint;
  else if (final_name == "IRLS") v.final_pose = Final::Irls;
  else if (final_name == "3R+IRLS") v.final_pose = Final::ThreePointIrls;
  else throw Error(ErrorCode::InvalidConfig, "unknown final pose '" + std::string(final_name) + "'");
  if (!v.one_point && !v.two_point && !v.three_point && v.final_pose != Final::Irls) {
    throw Error(ErrorCode::InvalidConfig, "ablation variant has no stage");
  }
  if (v.final_pose != Final::Irls && !v.three_point) {
    throw Error(ErrorCode::InvalidConfig, "final pose '" + std::string(final_name) +
                                              "' needs the three-point stage");
  }
  return v;
}

std::vector<AblationVariant> AblationStudyConfig::default_variants() {
  using F = AblationVariant::Final;
  return {
      {true, false, false, F::Irls},          {false, true, false, F::Irls},
      {false, false, true, F::ThreePoint},    {true, true, false, F::Irls},
      {true, false, true, F::ThreePoint},     {false, true, true, F::ThreePoint},
      {true, true, true, F::ThreePoint},      {true, true, true, F::ThreePointIrls},
  };
}

namespace {

struct VariantRun {
  std::optional<RigidTransform> pose;
  std::vector<std::size_t> output;  // indices into the scene
  std::optional<std::uint64_t> three_point_iterations;
};

VariantRun run_variant(Correspondences corrs, const AblationVariant& v, const TcfParams& params,
                       const IrlsParams& irls) {
  Rng rng(params.seed);
  VariantRun run;
  run.output.resize(corrs.size());
  std::iota(run.output.begin(), run.output.end(), std::size_t{0});
  auto narrow = [&](const ConsensusResult& r) {
    std::vector<std::size_t> lifted;
    lifted.reserve(r.size());
    for (const std::size_t i : r.indices) lifted.push_back(run.output[i]);
    run.output = std::move(lifted);
  };

  if (v.one_point) narrow(one_point_ransac(select(corrs, run.output), params, rng));
  if (v.two_point) {
    if (run.output.size() < 2) return run;
    narrow(two_point_ransac(select(corrs, run.output), params, rng));
  }
  std::optional<RigidTransform> coarse;
  if (v.three_point) {
    if (run.output.size() < 3) return run;
    const PoseConsensus pc = three_point_ransac(select(corrs, run.output), params, rng);
    run.three_point_iterations = pc.consensus.iterations_run;
    coarse = pc.pose;
    narrow(pc.consensus);
  }
  if (v.final_pose == AblationVariant::Final::ThreePoint) {
    run.pose = coarse;
  } else if (run.output.size() >= 3) {
    run.pose = sa_cauchy_irls(select(corrs, run.output), irls).pose;
  }
  return run;
}

}  // namespace

StudyReport run_ablation_study(const AblationStudyConfig& config) {
  const StudyCommon& common = config.common;
  check_common(common);
  check_sigma(config.sigma);
  if (!(config.min_inlier_ratio > 0.0 && config.min_inlier_ratio <= config.max_inlier_ratio &&
        config.max_inlier_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "inlier ratio range must satisfy 0 < min <= max <= 1");
  }
  if (config.variants.empty()) throw Error(ErrorCode::InvalidConfig, "no ablation variants given");
  for (const auto& v : config.variants) AblationVariant::parse(v.label());

  StudyReport report;
  report.kind = StudyKind::Ablation;
  report.master_seed = common.master_seed;
  put_common(report.parameters, common);
  report.parameters["min_inlier_ratio"] = config.min_inlier_ratio;
  report.parameters["max_inlier_ratio"] = config.max_inlier_ratio;
  report.parameters["sigma"] = config.sigma;
  for (std::size_t k = 0; k < config.variants.size(); ++k) {
    CellSummary cell;
    cell.label = config.variants[k].label();
    cell.params = {{"variant", static_cast<double>(k)}};
    report.cells.push_back(std::move(cell));
  }

  const std::size_t trials = common.trials;
  const std::size_t cells = report.cells.size();
  report.rows.resize(cells * trials);
  parallel_for(trials, common.threads, [&](std::size_t trial) {
    const std::uint64_t scene_seed = derive_seed(common.master_seed, {trial});
    Rng ratio_rng(derive_seed(scene_seed, {7}));
    const double inlier_ratio = ratio_rng.uniform(config.min_inlier_ratio, config.max_inlier_ratio);
    const SyntheticScene scene =
        generate_scene({common.n, common.extent, 1.0 - inlier_ratio, config.sigma, scene_seed});
    const double raw_ratio = ratio(scene.inlier_count(), scene.correspondences.size());
    const std::uint64_t raw_required = required_iterations(common.lambda, raw_ratio, 3);

    for (std::size_t k = 0; k < cells; ++k) {
      TrialRow row;
      row.cell = k;
      row.trial = trial;
      row.seed = scene_seed;
      row.extras["raw_inlier_ratio"] = raw_ratio;
      row.extras["required_iterations_raw"] = static_cast<double>(raw_required);
      const TcfParams params = make_params(common, config.sigma, derive_seed(scene_seed, {100 + k}));
      const auto start = Clock::now();
      try {
        const VariantRun run = run_variant(scene.correspondences, config.variants[k], params, common.irls);
        const double ms = elapsed_ms(start);
        if (run.pose) {
          row.metrics = evaluate_registration(*run.pose, scene, InlierRmse{common.rmse_multiple});
          row.metrics.wall_time_ms = ms;
        } else {
          row.metrics = failed_metrics(ms);
        }
        const std::size_t kept = true_inliers(run.output, scene.inlier_mask);
        row.extras["output_size"] = static_cast<double>(run.output.size());
        row.extras["output_inliers"] = static_cast<double>(kept);
        row.extras["output_inlier_ratio"] = ratio(kept, run.output.size());
        row.extras["iterations_3pt"] =
            run.three_point_iterations ? static_cast<double>(*run.three_point_iterations) : kNaN;
      } catch (const Error&) {
        row.metrics = failed_metrics(elapsed_ms(start));
        row.extras["output_size"] = 0.0;
        row.extras["output_inliers"] = 0.0;
        row.extras["output_inlier_ratio"] = 0.0;
        row.extras["iterations_3pt"] = kNaN;
      }
      report.rows[k * trials + trial] = std::move(row);
    }
  });
  summarize(report);
  return report;
}

StudyReport run_study(const StudyConfig& config) {
  return std::visit(
      [](const auto& c) -> StudyReport {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NoiseStudyConfig>) return run_noise_study(c);
        else if constexpr (std::is_same_v<T, IterationStudyConfig>) return run_iteration_study(c);
        else return run_ablation_study(c);
      },
      config);
}

}  // namespace tcf
