#include "tcf/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <system_error>
#include <type_traits>

namespace tcf::io {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<double> parse_number(std::string_view token) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  return in;
}

// Doubles go through json as numbers; NaN maps to null and back.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

json map_to_json(const std::map<std::string, double>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[k] = number_or_null(v);
  return out;
}

std::map<std::string, double> map_from_json(const json& j) {
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = number_from(it.value());
  return out;
}

json metrics_to_json(const Metrics& m) {
  return {{"success", m.success},
          {"e_r_deg", number_or_null(m.e_r)},
          {"e_t_m", number_or_null(m.e_t)},
          {"inlier_rmse_m", number_or_null(m.inlier_rmse)},
          {"wall_time_ms", number_or_null(m.wall_time_ms)}};
}

json matrix_to_json(const Matrix4& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "number formatting failed");
  return {buf, ptr};
}

// ---------------------------------------------------------------------------
// Correspondences

LoadedCorrespondences parse_correspondences(std::istream& in) {
  LoadedCorrespondences out;
  std::vector<bool> mask;
  std::optional<std::size_t> columns;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(strip_comment(line));
    if (tokens.empty()) continue;
    if (tokens.size() != 6 && tokens.size() != 7) {
      throw ParseError(ErrorCode::ParseError,
                       "line " + std::to_string(line_no) + ": expected 6 or 7 fields, got " +
                           std::to_string(tokens.size()),
                       line_no, std::string(tokens.back()));
    }
    if (columns && *columns != tokens.size()) {
      throw ParseError(ErrorCode::MixedColumnCount,
                       "line " + std::to_string(line_no) + ": " + std::to_string(tokens.size()) +
                           " fields after earlier lines with " + std::to_string(*columns),
                       line_no, std::string(tokens.back()));
    }
    columns = tokens.size();
    double v[6];
    for (std::size_t k = 0; k < 6; ++k) {
      const auto parsed = parse_number(tokens[k]);
      if (!parsed) {
        throw ParseError(ErrorCode::ParseError,
                         "line " + std::to_string(line_no) + ": invalid number '" +
                             std::string(tokens[k]) + "'",
                         line_no, std::string(tokens[k]));
      }
      v[k] = *parsed;
    }
    if (tokens.size() == 7) {
      if (tokens[6] != "0" && tokens[6] != "1") {
        throw ParseError(ErrorCode::ParseError,
                         "line " + std::to_string(line_no) + ": inlier flag must be 0 or 1, got '" +
                             std::string(tokens[6]) + "'",
                         line_no, std::string(tokens[6]));
      }
      mask.push_back(tokens[6] == "1");
    }
    out.correspondences.push_back({Point3(v[0], v[1], v[2]), Point3(v[3], v[4], v[5])});
  }
  if (columns == 7u) out.inlier_mask = std::move(mask);
  return out;
}

LoadedCorrespondences load_correspondences(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_correspondences(in);
}

std::string format_correspondences(Correspondences corrs, const std::vector<bool>* inlier_mask) {
  if (inlier_mask && inlier_mask->size() != corrs.size()) {
    throw Error(ErrorCode::InvalidArgument, "inlier mask size does not match correspondences");
  }
  std::string out = inlier_mask ? "# px py pz qx qy qz inlier\n" : "# px py pz qx qy qz\n";
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto& c = corrs[i];
    out += format_double(c.p.x()) + ' ' + format_double(c.p.y()) + ' ' + format_double(c.p.z()) +
           ' ' + format_double(c.q.x()) + ' ' + format_double(c.q.y()) + ' ' +
           format_double(c.q.z());
    if (inlier_mask) out += (*inlier_mask)[i] ? " 1" : " 0";
    out += '\n';
  }
  return out;
}

void write_correspondences(const std::filesystem::path& path, Correspondences corrs,
                           const std::vector<bool>* inlier_mask) {
  write_file_atomic(path, format_correspondences(corrs, inlier_mask));
}

// ---------------------------------------------------------------------------
// Poses

RigidTransform parse_pose(std::istream& in) {
  Matrix4 m;
  std::size_t filled = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(strip_comment(line));
    if (tokens.empty()) continue;
    if (tokens.size() != 4 || filled >= 16) {
      throw ParseError(ErrorCode::ParseError,
                       "pose line " + std::to_string(line_no) + ": expected 4 numbers per row, 4 rows",
                       line_no, std::string(tokens.front()));
    }
    for (const auto token : tokens) {
      const auto v = parse_number(token);
      if (!v) {
        throw ParseError(ErrorCode::ParseError,
                         "pose line " + std::to_string(line_no) + ": invalid number '" +
                             std::string(token) + "'",
                         line_no, std::string(token));
      }
      m(static_cast<int>(filled / 4), static_cast<int>(filled % 4)) = *v;
      ++filled;
    }
  }
  if (filled != 16) {
    throw ParseError(ErrorCode::ParseError, "pose file must hold 16 numbers, got " + std::to_string(filled),
                     line_no, "");
  }
  try {
    RigidTransform::from_matrix(m, 1e-6);
  } catch (const Error& e) {
    throw ParseError(ErrorCode::ParseError, std::string("pose is not rigid: ") + e.what(), line_no, "");
  }
  // Exact rotations load unchanged; rounded ones are snapped back onto SO(3).
  const Matrix3 r = m.topLeftCorner<3, 3>();
  return {is_rotation(r) ? r : project_to_rotation(r), m.topRightCorner<3, 1>()};
}

RigidTransform load_pose(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_pose(in);
}

std::string format_pose(const RigidTransform& pose) {
  const Matrix4 m = pose.matrix();
  std::string out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      out += format_double(m(r, c));
      out += c == 3 ? '\n' : ' ';
    }
  }
  return out;
}

void write_pose(const std::filesystem::path& path, const RigidTransform& pose) {
  write_file_atomic(path, format_pose(pose));
}

// ---------------------------------------------------------------------------
// Reports

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

json to_json(const RigidTransform& pose) { return matrix_to_json(pose.matrix()); }

json to_json(const StudyReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"label", c.label},
                     {"params", map_to_json(c.params)},
                     {"trials", c.trials},
                     {"successes", c.successes},
                     {"recall", c.recall},
                     {"mean_e_r_deg", number_or_null(c.mean_e_r)},
                     {"mean_e_t_m", number_or_null(c.mean_e_t)},
                     {"mean_wall_time_ms", number_or_null(c.mean_wall_time_ms)},
                     {"extra_means", map_to_json(c.extra_means)}});
  }
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = metrics_to_json(r.metrics);
    row["cell"] = r.cell;
    row["trial"] = r.trial;
    row["seed"] = r.seed;
    row["extras"] = map_to_json(r.extras);
    rows.push_back(std::move(row));
  }
  return {{"schema", kSchemaVersion},
          {"type", "study"},
          {"kind", to_string(report.kind)},
          {"master_seed", report.master_seed},
          {"parameters", map_to_json(report.parameters)},
          {"overall_recall", report.overall_recall()},
          {"cells", std::move(cells)},
          {"rows", std::move(rows)}};
}

StudyReport study_report_from_json(const json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchemaVersion) {
      throw Error(ErrorCode::ParseError, "unsupported report schema");
    }
    StudyReport report;
    report.kind = study_kind_from_string(j.at("kind").get<std::string>());
    report.master_seed = j.at("master_seed").get<std::uint64_t>();
    report.parameters = map_from_json(j.at("parameters"));
    for (const auto& c : j.at("cells")) {
      CellSummary cell;
      cell.label = c.at("label").get<std::string>();
      cell.params = map_from_json(c.at("params"));
      cell.trials = c.at("trials").get<std::size_t>();
      cell.successes = c.at("successes").get<std::size_t>();
      cell.recall = c.at("recall").get<double>();
      cell.mean_e_r = number_from(c.at("mean_e_r_deg"));
      cell.mean_e_t = number_from(c.at("mean_e_t_m"));
      cell.mean_wall_time_ms = number_from(c.at("mean_wall_time_ms"));
      cell.extra_means = map_from_json(c.at("extra_means"));
      report.cells.push_back(std::move(cell));
    }
    for (const auto& r : j.at("rows")) {
      TrialRow row;
      row.cell = r.at("cell").get<std::size_t>();
      row.trial = r.at("trial").get<std::size_t>();
      row.seed = r.at("seed").get<std::uint64_t>();
      row.metrics.success = r.at("success").get<bool>();
      row.metrics.e_r = number_from(r.at("e_r_deg"));
      row.metrics.e_t = number_from(r.at("e_t_m"));
      row.metrics.inlier_rmse = number_from(r.at("inlier_rmse_m"));
      row.metrics.wall_time_ms = number_from(r.at("wall_time_ms"));
      row.extras = map_from_json(r.at("extras"));
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed study report: ") + e.what());
  }
}

std::string to_csv(const StudyReport& report) {
  std::set<std::string> param_keys;
  for (const auto& c : report.cells)
    for (const auto& [k, v] : c.params) param_keys.insert(k);
  std::set<std::string> extra_keys;
  for (const auto& r : report.rows)
    for (const auto& [k, v] : r.extras) extra_keys.insert(k);

  std::string out = "cell,label";
  for (const auto& k : param_keys) out += "," + k;
  out += ",trial,seed,success,e_r_deg,e_t_m,inlier_rmse_m,wall_time_ms";
  for (const auto& k : extra_keys) out += "," + k;
  out += '\n';

  for (const auto& r : report.rows) {
    const CellSummary* cell = r.cell < report.cells.size() ? &report.cells[r.cell] : nullptr;
    out += std::to_string(r.cell) + "," + csv_escape(cell ? cell->label : std::string());
    for (const auto& k : param_keys) {
      out += ",";
      if (cell) {
        const auto it = cell->params.find(k);
        if (it != cell->params.end()) out += csv_number(it->second);
      }
    }
    out += "," + std::to_string(r.trial) + "," + std::to_string(r.seed) + "," +
           (r.metrics.success ? "1" : "0") + "," + csv_number(r.metrics.e_r) + "," +
           csv_number(r.metrics.e_t) + "," + csv_number(r.metrics.inlier_rmse) + "," +
           csv_number(r.metrics.wall_time_ms);
    for (const auto& k : extra_keys) {
      out += ",";
      const auto it = r.extras.find(k);
      if (it != r.extras.end()) out += csv_number(it->second);
    }
    out += '\n';
  }
  return out;
}

json to_json(const RegistrationOutput& out, const Metrics* metrics) {
  json stages = json::array();
  for (int s = 0; s < 3; ++s) {
    const auto& st = out.stages[s];
    stages.push_back({{"stage", to_string(st.stage)},
                      {"size", st.size()},
                      {"ratio", out.stage_ratio(st.stage)},
                      {"iterations", st.iterations_run},
                      {"indices", st.indices}});
  }
  json j = {{"schema", kSchemaVersion},
            {"type", "registration"},
            {"input_size", out.input_size},
            {"pose", matrix_to_json(out.pose.matrix())},
            {"coarse_pose", matrix_to_json(out.coarse_pose.matrix())},
            {"stages", std::move(stages)},
            {"irls", {{"iterations", out.irls_iterations}, {"stop", to_string(out.irls_stop)}}},
            {"timings_ms",
             {{"one_point", out.timings.one_point_ms},
              {"two_point", out.timings.two_point_ms},
              {"three_point", out.timings.three_point_ms},
              {"irls", out.timings.irls_ms},
              {"total", out.timings.total_ms()}}}};
  if (metrics) j["metrics"] = metrics_to_json(*metrics);
  return j;
}

std::string to_csv(const RegistrationOutput& out) {
  std::string csv = "stage,size,ratio,iterations,time_ms\n";
  const double times[3] = {out.timings.one_point_ms, out.timings.two_point_ms,
                           out.timings.three_point_ms};
  for (int s = 0; s < 3; ++s) {
    const auto& st = out.stages[s];
    csv += std::string(to_string(st.stage)) + "," + std::to_string(st.size()) + "," +
           format_double(out.stage_ratio(st.stage)) + "," + std::to_string(st.iterations_run) + "," +
           format_double(times[s]) + "\n";
  }
  csv += "irls," + std::to_string(out.stage_size(Stage::ThreePoint)) + ",," +
         std::to_string(out.irls_iterations) + "," + format_double(out.timings.irls_ms) + "\n";
  return csv;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_file_atomic(path, format == ReportFormat::Json ? dump(to_json(report)) : to_csv(report));
}

void write_report(const RegistrationOutput& out, const std::filesystem::path& path,
                  ReportFormat format, const Metrics* metrics) {
  write_file_atomic(path, format == ReportFormat::Json ? dump(to_json(out, metrics)) : to_csv(out));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::random_device rd;
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::error_code ignore;
      std::filesystem::remove(tmp, ignore);
      throw Error(ErrorCode::IoError, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    std::filesystem::remove(tmp, ignore);
    throw Error(ErrorCode::IoError, "cannot move output into '" + path.string() + "': " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Study configuration

namespace {

// Reads keys from a config object, tracking which ones were consumed so
// leftovers can be reported as unknown.
class ConfigReader {
 public:
  explicit ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) fail("expected a json object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) fail(std::string("'") + key + "' must be a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) fail(std::string("'") + key + "' must be a number");
        if constexpr (std::is_unsigned_v<T>) {
          if (!it->is_number_unsigned()) fail(std::string("'") + key + "' must be a non-negative integer");
        }
      }
      out = it->get<T>();
    } catch (const json::exception& e) {
      fail(std::string("'") + key + "': " + e.what());
    }
  }

  const json* child(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::InvalidConfig, where_ + ": " + what);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_common(ConfigReader& r, StudyCommon& c) {
  r.read("master_seed", c.master_seed);
  r.read("trials", c.trials);
  r.read("n", c.n);
  r.read("extent", c.extent);
  r.read("tau_factor", c.tau_factor);
  r.read("rmse_multiple", c.rmse_multiple);
  r.read("lambda", c.lambda);
  r.read("max_iters_1pt", c.max_iters_1pt);
  r.read("max_iters_2pt", c.max_iters_2pt);
  r.read("max_iters_3pt", c.max_iters_3pt);
  r.read("threads", c.threads);
  if (const json* irls = r.child("irls")) {
    ConfigReader ir(*irls, "irls");
    ir.read("mu", c.irls.mu);
    ir.read("e_min", c.irls.e_min);
    ir.read("gamma_min", c.irls.gamma_min);
    ir.read("max_iters", c.irls.max_iters);
    ir.finish();
  }
}

json common_to_json(const StudyCommon& c) {
  return {{"master_seed", c.master_seed},
          {"trials", c.trials},
          {"n", c.n},
          {"extent", c.extent},
          {"tau_factor", c.tau_factor},
          {"rmse_multiple", c.rmse_multiple},
          {"lambda", c.lambda},
          {"max_iters_1pt", c.max_iters_1pt},
          {"max_iters_2pt", c.max_iters_2pt},
          {"max_iters_3pt", c.max_iters_3pt},
          {"threads", c.threads},
          {"irls",
           {{"mu", c.irls.mu},
            {"e_min", c.irls.e_min},
            {"gamma_min", c.irls.gamma_min},
            {"max_iters", c.irls.max_iters}}}};
}

}  // namespace

void apply_config_json(const json& j, StudyConfig& config) {
  const StudyKind kind = std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NoiseStudyConfig>) return StudyKind::Noise;
        else if constexpr (std::is_same_v<T, IterationStudyConfig>) return StudyKind::Iteration;
        else return StudyKind::Ablation;
      },
      config);
  ConfigReader r(j, std::string(to_string(kind)) + " study config");
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        read_common(r, c.common);
        if constexpr (std::is_same_v<T, NoiseStudyConfig>) {
          r.read("outlier_ratios", c.outlier_ratios);
          r.read("sigmas", c.sigmas);
        } else if constexpr (std::is_same_v<T, IterationStudyConfig>) {
          r.read("outlier_ratio", c.outlier_ratio);
          r.read("sigma", c.sigma);
          r.read("budgets", c.budgets);
          r.read("include_tcf", c.include_tcf);
        } else {
          r.read("min_inlier_ratio", c.min_inlier_ratio);
          r.read("max_inlier_ratio", c.max_inlier_ratio);
          r.read("sigma", c.sigma);
          std::vector<std::string> labels;
          r.read("variants", labels);
          if (r.child("variants")) {
            c.variants.clear();
            for (const auto& label : labels) c.variants.push_back(AblationVariant::parse(label));
          }
        }
      },
      config);
  r.finish();
}

StudyConfig study_config_from_json(StudyKind kind, const json& j) {
  StudyConfig config;
  switch (kind) {
    case StudyKind::Noise: config = NoiseStudyConfig{}; break;
    case StudyKind::Iteration: config = IterationStudyConfig{}; break;
    case StudyKind::Ablation: config = AblationStudyConfig{}; break;
  }
  apply_config_json(j, config);
  return config;
}

json to_json(const StudyConfig& config) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        json j = common_to_json(c.common);
        if constexpr (std::is_same_v<T, NoiseStudyConfig>) {
          j["outlier_ratios"] = c.outlier_ratios;
          j["sigmas"] = c.sigmas;
        } else if constexpr (std::is_same_v<T, IterationStudyConfig>) {
          j["outlier_ratio"] = c.outlier_ratio;
          j["sigma"] = c.sigma;
          j["budgets"] = c.budgets;
          j["include_tcf"] = c.include_tcf;
        } else {
          j["min_inlier_ratio"] = c.min_inlier_ratio;
          j["max_inlier_ratio"] = c.max_inlier_ratio;
          j["sigma"] = c.sigma;
          json labels = json::array();
          for (const auto& v : c.variants) labels.push_back(v.label());
          j["variants"] = std::move(labels);
        }
        return j;
      },
      config);
}


// ---------------------------------------------------------------------------
// PLY

PlyFile parse_ply(std::istream& in) {
  PlyFile ply;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what, std::string token) -> ParseError {
    return ParseError(ErrorCode::ParseError, "ply line " + std::to_string(line_no) + ": " + what,
                      line_no, std::move(token));
  };

  line_no = 1;
  if (!std::getline(in, line) || split_ws(line).empty() || split_ws(line)[0] != "ply") {
    throw fail("missing 'ply' magic", line);
  }
  ply.header.push_back(line);
  bool in_vertex = false;
  bool seen_vertex = false;
  bool ended = false;
  std::size_t vertex_props = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ply.header.push_back(line);
    const auto t = split_ws(line);
    if (t.empty()) continue;
    if (t[0] == "format") {
      if (t.size() < 2 || t[1] != "ascii") throw fail("only ascii PLY is supported", std::string(t.size() > 1 ? t[1] : t[0]));
    } else if (t[0] == "element") {
      if (t.size() != 3) throw fail("malformed element line", line);
      in_vertex = t[1] == "vertex";
      if (in_vertex) {
        if (seen_vertex) throw fail("duplicate vertex element", line);
        const auto count = parse_number(t[2]);
        if (!count || *count < 0) throw fail("bad vertex count", std::string(t[2]));
        ply.vertex_count = static_cast<std::size_t>(*count);
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw fail("vertex element must come first", std::string(t[1]));
      }
    } else if (t[0] == "property" && in_vertex) {
      if (t.size() < 3) throw fail("malformed property line", line);
      if (t[1] == "list") throw fail("list properties on vertices are not supported", std::string(t[1]));
      const std::string_view name = t.back();
      if (name == "x") ply.x_col = vertex_props;
      else if (name == "y") ply.y_col = vertex_props;
      else if (name == "z") ply.z_col = vertex_props;
      else if (name == "nx") ply.nx_col = vertex_props;
      else if (name == "ny") ply.ny_col = vertex_props;
      else if (name == "nz") ply.nz_col = vertex_props;
      ++vertex_props;
    } else if (t[0] == "end_header") {
      ended = true;
      break;
    }
  }
  if (!ended) throw fail("missing end_header", "");
  if (!seen_vertex || vertex_props < 3) throw fail("vertex element needs x, y, z properties", "");

  for (std::size_t v = 0; v < ply.vertex_count; ++v) {
    if (!std::getline(in, line)) throw fail("unexpected end of vertex data", "");
    ++line_no;
    const auto t = split_ws(line);
    if (t.size() != vertex_props) {
      throw fail("expected " + std::to_string(vertex_props) + " vertex values", std::string(line));
    }
    std::vector<std::string> tokens(t.begin(), t.end());
    for (const std::size_t col : {ply.x_col, ply.y_col, ply.z_col}) {
      if (!parse_number(tokens[col])) throw fail("invalid coordinate", tokens[col]);
    }
    ply.vertices.push_back(std::move(tokens));
  }
  while (std::getline(in, line)) ply.trailing.push_back(line);
  return ply;
}

PlyFile load_ply(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_ply(in);
}

void transform_ply(PlyFile& ply, const RigidTransform& pose) {
  for (auto& v : ply.vertices) {
    const Point3 p(*parse_number(v[ply.x_col]), *parse_number(v[ply.y_col]), *parse_number(v[ply.z_col]));
    const Point3 moved = pose.apply(p);
    v[ply.x_col] = format_double(moved.x());
    v[ply.y_col] = format_double(moved.y());
    v[ply.z_col] = format_double(moved.z());
    if (ply.nx_col && ply.ny_col && ply.nz_col) {
      const auto nx = parse_number(v[*ply.nx_col]);
      const auto ny = parse_number(v[*ply.ny_col]);
      const auto nz = parse_number(v[*ply.nz_col]);
      if (nx && ny && nz) {
        const Point3 n = pose.rotation() * Point3(*nx, *ny, *nz);
        v[*ply.nx_col] = format_double(n.x());
        v[*ply.ny_col] = format_double(n.y());
        v[*ply.nz_col] = format_double(n.z());
      }
    }
  }
}

std::string format_ply(const PlyFile& ply) {
  std::string out;
  for (const auto& h : ply.header) out += h + "\n";
  for (const auto& v : ply.vertices) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) out += ' ';
      out += v[k];
    }
    out += '\n';
  }
  for (const auto& t : ply.trailing) out += t + "\n";
  return out;
}

}  // namespace tcf::io
