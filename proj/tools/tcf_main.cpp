// Command-line front end: register, baseline, generate, study, apply.
//
// Exit codes
//   0  success
//   1  unexpected internal error
//   2  usage error: bad flag, invalid parameter, spec or config
//   3  malformed input file
//   4  registration failed: degenerate data, stage collapse, too few points
//   5  file system error

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tcf/io.hpp"

namespace {

namespace io = tcf::io;
using nlohmann::json;

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kParse = 3, kRegistration = 4, kIo = 5 };

int exit_code_for(tcf::ErrorCode code) {
  using tcf::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvalidConfig:
      return kUsage;
    case ErrorCode::ParseError:
    case ErrorCode::MixedColumnCount:
      return kParse;
    case ErrorCode::EmptyInput:
    case ErrorCode::TooFewCorrespondences:
    case ErrorCode::DegenerateConfiguration:
    case ErrorCode::DegenerateTriangle:
    case ErrorCode::StageCollapse:
    case ErrorCode::NoTrueInliers:
      return kRegistration;
    case ErrorCode::IoError:
      return kIo;
  }
  return kInternal;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    io::write_file_atomic(out_path, content);
  }
}

io::ReportFormat parse_format(const std::string& name) { return io::report_format_from_string(name); }

// ---------------------------------------------------------------------------
// register / baseline

struct SolverFlags {
  std::string input;
  double tau = 0.3;
  double lambda = 0.99;
  std::uint64_t max_iters_1pt = 10000;
  std::uint64_t max_iters_2pt = 10000;
  std::uint64_t max_iters_3pt = 10000;
  std::uint64_t seed = 0;
  tcf::IrlsParams irls;
  std::uint64_t iterations = 10000;
  std::string gt_pose;
  double max_rotation_deg = 5.0;
  double max_translation = 0.5;
  std::string out_pose;
  std::string out_report;
  std::string format = "json";
};

void add_input_flags(CLI::App* cmd, SolverFlags& f) {
  cmd->add_option("input", f.input, "Correspondence file: px py pz qx qy qz [inlier] per line")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--tau", f.tau, "Noise bound tau in meters")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--gt-pose", f.gt_pose, "Ground-truth 4x4 pose file; adds error metrics");
  cmd->add_option("--max-rotation-deg", f.max_rotation_deg,
                  "Success threshold on rotation error with --gt-pose")
      ->capture_default_str();
  cmd->add_option("--max-translation", f.max_translation,
                  "Success threshold on translation error with --gt-pose")
      ->capture_default_str();
  cmd->add_option("--out-pose", f.out_pose, "Write the estimated 4x4 pose here");
  cmd->add_option("--out", f.out_report, "Write the diagnostics report here (default: stdout)");
  cmd->add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

std::optional<tcf::Metrics> metrics_against(const SolverFlags& f, const tcf::RigidTransform& pose,
                                            const io::LoadedCorrespondences& loaded) {
  if (f.gt_pose.empty()) return std::nullopt;
  tcf::SyntheticScene scene;
  scene.correspondences = loaded.correspondences;
  scene.gt_pose = io::load_pose(f.gt_pose);
  scene.inlier_mask = loaded.inlier_mask.value_or(
      std::vector<bool>(loaded.correspondences.size(), false));
  return tcf::evaluate_registration(pose, scene,
                                    tcf::Thresholds{f.max_rotation_deg, f.max_translation});
}

int run_register(const SolverFlags& f) {
  const auto loaded = io::load_correspondences(f.input);
  tcf::TcfParams params;
  params.tau = f.tau;
  params.lambda = f.lambda;
  params.max_iters_1pt = f.max_iters_1pt;
  params.max_iters_2pt = f.max_iters_2pt;
  params.max_iters_3pt = f.max_iters_3pt;
  params.seed = f.seed;
  const tcf::RegistrationOutput out = tcf::tcf_register(loaded.correspondences, params, f.irls);
  const auto metrics = metrics_against(f, out.pose, loaded);

  if (!f.out_pose.empty()) io::write_pose(f.out_pose, out.pose);
  if (parse_format(f.format) == io::ReportFormat::Json) {
    emit(f.out_report, io::dump(io::to_json(out, metrics ? &*metrics : nullptr)));
  } else {
    emit(f.out_report, io::to_csv(out));
  }
  std::cerr << "stages: " << out.stage_size(tcf::Stage::OnePoint) << " -> "
            << out.stage_size(tcf::Stage::TwoPoint) << " -> "
            << out.stage_size(tcf::Stage::ThreePoint) << " of " << out.input_size
            << ", irls " << out.irls_iterations << " iterations ("
            << tcf::to_string(out.irls_stop) << ")\n";
  if (metrics) {
    std::cerr << "rotation error " << metrics->e_r << " deg, translation error " << metrics->e_t
              << " m, " << (metrics->success ? "success" : "failure") << "\n";
  }
  return kOk;
}

int run_baseline(const SolverFlags& f) {
  const auto loaded = io::load_correspondences(f.input);
  tcf::Rng rng(f.seed);
  const tcf::PoseConsensus out = tcf::vanilla_ransac(loaded.correspondences, f.iterations, f.tau, rng);
  const auto metrics = metrics_against(f, out.pose, loaded);

  if (!f.out_pose.empty()) io::write_pose(f.out_pose, out.pose);
  json j = {{"schema", io::kSchemaVersion},
            {"type", "baseline"},
            {"input_size", loaded.correspondences.size()},
            {"iterations", f.iterations},
            {"tau", f.tau},
            {"seed", f.seed},
            {"consensus_size", out.consensus.size()},
            {"indices", out.consensus.indices},
            {"pose", io::to_json(out.pose)}};
  if (metrics) {
    j["metrics"] = {{"success", metrics->success},
                    {"e_r_deg", metrics->e_r},
                    {"e_t_m", metrics->e_t}};
    if (std::isfinite(metrics->inlier_rmse)) j["metrics"]["inlier_rmse_m"] = metrics->inlier_rmse;
  }
  if (parse_format(f.format) == io::ReportFormat::Json) {
    emit(f.out_report, io::dump(j));
  } else {
    emit(f.out_report, "iterations,consensus_size\n" + std::to_string(f.iterations) + "," +
                           std::to_string(out.consensus.size()) + "\n");
  }
  std::cerr << "consensus " << out.consensus.size() << " of " << loaded.correspondences.size()
            << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateFlags {
  tcf::SceneSpec spec;
  std::string out;
  std::string out_pose;
  bool mask = true;
};

int run_generate(const GenerateFlags& f) {
  const tcf::SyntheticScene scene = tcf::generate_scene(f.spec);
  const std::string text =
      io::format_correspondences(scene.correspondences, f.mask ? &scene.inlier_mask : nullptr);
  emit(f.out, text);
  if (!f.out_pose.empty()) io::write_pose(f.out_pose, scene.gt_pose);
  std::cerr << "generated " << scene.correspondences.size() << " correspondences, "
            << scene.inlier_count() << " inliers\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// study

struct StudyFlags {
  std::string config_path;
  bool paper_scale = false;
  std::string out;
  std::string format = "json";
  // Every override below is applied only when given on the command line.
  std::uint64_t master_seed = 0;
  std::size_t trials = 0;
  std::size_t n = 0;
  double extent = 0.0;
  double tau_factor = 0.0;
  double rmse_multiple = 0.0;
  double lambda = 0.0;
  std::uint64_t max_iters_1pt = 0, max_iters_2pt = 0, max_iters_3pt = 0;
  double irls_mu = 0.0, irls_e_min = 0.0, irls_gamma_min = 0.0;
  std::size_t irls_max_iters = 0;
  std::size_t threads = 0;
  std::vector<double> outlier_ratios;
  std::vector<double> sigmas;
  double outlier_ratio = 0.0;
  double sigma = 0.0;
  std::vector<std::uint64_t> budgets;
  bool no_tcf = false;
  double min_inlier_ratio = 0.0;
  double max_inlier_ratio = 0.0;
  std::vector<std::string> variants;
};

struct StudyCommand {
  tcf::StudyKind kind;
  CLI::App* app = nullptr;
  StudyFlags flags;
};

void add_common_study_flags(CLI::App* cmd, StudyFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "JSON file with study settings; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--paper-scale", f.paper_scale, "Start from the full-size protocol instead of desk scale");
  cmd->add_option("--out", f.out, "Report destination (default: stdout)");
  cmd->add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  cmd->add_option("--seed", f.master_seed, "Master seed for scenes and solvers (default 1)");
  cmd->add_option("--trials", f.trials, "Trials per cell");
  cmd->add_option("--n", f.n, "Correspondences per scene (default 3000)");
  cmd->add_option("--extent", f.extent, "Half side of the sampling cube, meters (default 100)");
  cmd->add_option("--tau-factor", f.tau_factor, "Noise bound as a multiple of sigma (default 3)");
  cmd->add_option("--rmse-multiple", f.rmse_multiple,
                  "Success when inlier RMSE is below this multiple of sigma (default 3)");
  cmd->add_option("--lambda", f.lambda, "RANSAC confidence (default 0.99)");
  cmd->add_option("--max-iters-1pt", f.max_iters_1pt, "One-point iteration cap (default 10000)");
  cmd->add_option("--max-iters-2pt", f.max_iters_2pt, "Two-point iteration cap (default 10000)");
  cmd->add_option("--max-iters-3pt", f.max_iters_3pt, "Three-point iteration cap (default 10000)");
  cmd->add_option("--irls-mu", f.irls_mu, "IRLS scale decay (default 1.3)");
  cmd->add_option("--irls-e-min", f.irls_e_min, "IRLS convergence threshold (default 0.01)");
  cmd->add_option("--irls-gamma-min", f.irls_gamma_min, "IRLS scale floor, meters (default 1)");
  cmd->add_option("--irls-max-iters", f.irls_max_iters, "IRLS iteration cap (default 100)");
  cmd->add_option("--threads", f.threads,
                  "Worker threads (default: TCF_THREADS environment variable, else 1)");
}

tcf::StudyConfig base_config(tcf::StudyKind kind, bool paper_scale) {
  switch (kind) {
    case tcf::StudyKind::Noise:
      return paper_scale ? tcf::NoiseStudyConfig::paper_scale() : tcf::NoiseStudyConfig{};
    case tcf::StudyKind::Iteration:
      return paper_scale ? tcf::IterationStudyConfig::paper_scale() : tcf::IterationStudyConfig{};
    case tcf::StudyKind::Ablation:
      return tcf::AblationStudyConfig{};
  }
  return tcf::NoiseStudyConfig{};
}

int run_study_command(const StudyCommand& sc) {
  const StudyFlags& f = sc.flags;
  CLI::App* app = sc.app;
  auto given = [&](const char* name) { return app->get_option(name)->count() > 0; };

  tcf::StudyConfig config = base_config(sc.kind, f.paper_scale);
  std::visit([](auto& c) { c.common.threads = tcf::default_thread_count(); }, config);
  if (!f.config_path.empty()) {
    json j;
    try {
      j = json::parse(io::read_file(f.config_path));
    } catch (const json::parse_error& e) {
      throw io::ParseError(tcf::ErrorCode::ParseError,
                           "config file " + f.config_path + ": " + e.what(), 0, "");
    }
    io::apply_config_json(j, config);
  }

  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        tcf::StudyCommon& k = c.common;
        if (given("--seed")) k.master_seed = f.master_seed;
        if (given("--trials")) k.trials = f.trials;
        if (given("--n")) k.n = f.n;
        if (given("--extent")) k.extent = f.extent;
        if (given("--tau-factor")) k.tau_factor = f.tau_factor;
        if (given("--rmse-multiple")) k.rmse_multiple = f.rmse_multiple;
        if (given("--lambda")) k.lambda = f.lambda;
        if (given("--max-iters-1pt")) k.max_iters_1pt = f.max_iters_1pt;
        if (given("--max-iters-2pt")) k.max_iters_2pt = f.max_iters_2pt;
        if (given("--max-iters-3pt")) k.max_iters_3pt = f.max_iters_3pt;
        if (given("--irls-mu")) k.irls.mu = f.irls_mu;
        if (given("--irls-e-min")) k.irls.e_min = f.irls_e_min;
        if (given("--irls-gamma-min")) k.irls.gamma_min = f.irls_gamma_min;
        if (given("--irls-max-iters")) k.irls.max_iters = f.irls_max_iters;
        if (given("--threads")) k.threads = f.threads;
        if constexpr (std::is_same_v<T, tcf::NoiseStudyConfig>) {
          if (given("--outlier-ratios")) c.outlier_ratios = f.outlier_ratios;
          if (given("--sigmas")) c.sigmas = f.sigmas;
        } else if constexpr (std::is_same_v<T, tcf::IterationStudyConfig>) {
          if (given("--outlier-ratio")) c.outlier_ratio = f.outlier_ratio;
          if (given("--sigma")) c.sigma = f.sigma;
          if (given("--budgets")) c.budgets = f.budgets;
          if (given("--no-tcf")) c.include_tcf = false;
        } else {
          if (given("--min-inlier-ratio")) c.min_inlier_ratio = f.min_inlier_ratio;
          if (given("--max-inlier-ratio")) c.max_inlier_ratio = f.max_inlier_ratio;
          if (given("--sigma")) c.sigma = f.sigma;
          if (given("--variants")) {
            c.variants.clear();
            for (const auto& label : f.variants) c.variants.push_back(tcf::AblationVariant::parse(label));
          }
        }
      },
      config);

  const tcf::StudyReport report = tcf::run_study(config);
  if (parse_format(f.format) == io::ReportFormat::Json) {
    emit(f.out, io::dump(io::to_json(report)));
  } else {
    emit(f.out, io::to_csv(report));
  }
  for (const auto& cell : report.cells) {
    std::fprintf(stderr, "%-40s recall %.3f (%zu/%zu)\n", cell.label.c_str(), cell.recall,
                 cell.successes, cell.trials);
  }
  std::fprintf(stderr, "overall recall %.4f\n", report.overall_recall());
  return kOk;
}

// ---------------------------------------------------------------------------
// apply

struct ApplyFlags {
  std::string input;
  std::string pose;
  std::string out;
};

int run_apply(const ApplyFlags& f) {
  io::PlyFile ply = io::load_ply(f.input);
  io::transform_ply(ply, io::load_pose(f.pose));
  emit(f.out, io::format_ply(ply));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded one-, two- and three-point RANSAC registration of 3D correspondences"};
  app.require_subcommand(1);

  SolverFlags reg;
  auto* reg_cmd = app.add_subcommand("register", "Estimate the rigid pose aligning a correspondence set");
  add_input_flags(reg_cmd, reg);
  reg_cmd->add_option("--lambda", reg.lambda, "RANSAC confidence")->capture_default_str();
  reg_cmd->add_option("--max-iters-1pt", reg.max_iters_1pt, "One-point iteration cap")->capture_default_str();
  reg_cmd->add_option("--max-iters-2pt", reg.max_iters_2pt, "Two-point iteration cap")->capture_default_str();
  reg_cmd->add_option("--max-iters-3pt", reg.max_iters_3pt, "Three-point iteration cap")->capture_default_str();
  reg_cmd->add_option("--irls-mu", reg.irls.mu, "IRLS scale decay")->capture_default_str();
  reg_cmd->add_option("--irls-e-min", reg.irls.e_min, "IRLS convergence threshold")->capture_default_str();
  reg_cmd->add_option("--irls-gamma-min", reg.irls.gamma_min, "IRLS scale floor, meters")->capture_default_str();
  reg_cmd->add_option("--irls-max-iters", reg.irls.max_iters, "IRLS iteration cap")->capture_default_str();

  SolverFlags base;
  auto* base_cmd = app.add_subcommand("baseline", "Classic three-point RANSAC with a fixed budget");
  add_input_flags(base_cmd, base);
  base_cmd->add_option("--iterations", base.iterations, "Hypothesis budget")->capture_default_str();

  GenerateFlags gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic correspondence set and its true pose");
  gen_cmd->add_option("--n", gen.spec.n, "Number of correspondences")->capture_default_str();
  gen_cmd->add_option("--extent", gen.spec.extent, "Half side of the sampling cube, meters")->capture_default_str();
  gen_cmd->add_option("--outlier-ratio", gen.spec.outlier_ratio, "Fraction of outliers")->capture_default_str();
  gen_cmd->add_option("--sigma", gen.spec.sigma, "Inlier noise standard deviation, meters")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "Scene seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Correspondence file (default: stdout)");
  gen_cmd->add_option("--out-pose", gen.out_pose, "Ground-truth pose file");
  gen_cmd->add_flag("!--no-mask", gen.mask, "Omit the inlier flag column");

  auto* study_cmd = app.add_subcommand("study", "Run a synthetic benchmark study");
  study_cmd->require_subcommand(1);
  std::vector<StudyCommand> studies(3);
  studies[0].kind = tcf::StudyKind::Noise;
  studies[1].kind = tcf::StudyKind::Iteration;
  studies[2].kind = tcf::StudyKind::Ablation;
  studies[0].app = study_cmd->add_subcommand("noise", "Recall over outlier ratio x noise level");
  studies[1].app = study_cmd->add_subcommand("iteration", "Vanilla RANSAC recall against its budget");
  studies[2].app = study_cmd->add_subcommand("ablation", "Stage subsets on low inlier ratios");
  for (auto& s : studies) add_common_study_flags(s.app, s.flags);
  studies[0].app->add_option("--outlier-ratios", studies[0].flags.outlier_ratios, "Outlier ratios of the grid");
  studies[0].app->add_option("--sigmas", studies[0].flags.sigmas, "Noise levels of the grid, meters");
  studies[1].app->add_option("--outlier-ratio", studies[1].flags.outlier_ratio, "Outlier ratio (default 0.98)");
  studies[1].app->add_option("--sigma", studies[1].flags.sigma, "Noise level, meters (default 0.1)");
  studies[1].app->add_option("--budgets", studies[1].flags.budgets, "RANSAC budgets (default 1000 10000 100000)");
  studies[1].app->add_flag("--no-tcf", studies[1].flags.no_tcf, "Skip the cascaded solver column");
  studies[2].app->add_option("--min-inlier-ratio", studies[2].flags.min_inlier_ratio, "Lowest inlier ratio (default 0.02)");
  studies[2].app->add_option("--max-inlier-ratio", studies[2].flags.max_inlier_ratio, "Highest inlier ratio (default 0.05)");
  studies[2].app->add_option("--sigma", studies[2].flags.sigma, "Noise level, meters (default 0.1)");
  studies[2].app->add_option("--variants", studies[2].flags.variants,
                             "Variant labels such as 1R+2R+3R/3R+IRLS or 3R/3R");

  ApplyFlags apply;
  auto* apply_cmd = app.add_subcommand("apply", "Transform an ASCII PLY vertex list by a pose");
  apply_cmd->add_option("input", apply.input, "ASCII PLY file")->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--pose", apply.pose, "4x4 pose file")->required()->check(CLI::ExistingFile);
  apply_cmd->add_option("--out", apply.out, "Output PLY (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*reg_cmd) return run_register(reg);
    if (*base_cmd) return run_baseline(base);
    if (*gen_cmd) return run_generate(gen);
    if (*apply_cmd) return run_apply(apply);
    for (const auto& s : studies) {
      if (*s.app) return run_study_command(s);
    }
  } catch (const tcf::StageCollapseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRegistration;
  } catch (const io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParse;
  } catch (const tcf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
