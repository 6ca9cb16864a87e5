#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tcf/error.hpp"
#include "tcf/pipeline.hpp"
#include "tcf/synthbench.hpp"

namespace tcf::io {

inline constexpr std::string_view kSchemaVersion = "tcf-report/1";

/// Parse failure with the 1-based line and the offending token.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& what, std::size_t line, std::string token)
      : Error(code, what), line_(line), token_(std::move(token)) {}

  std::size_t line() const { return line_; }
  const std::string& token() const { return token_; }

 private:
  std::size_t line_;
  std::string token_;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Correspondence files: "px py pz qx qy qz [inlier]" per line, '#' comments.

struct LoadedCorrespondences {
  CorrespondenceSet correspondences;
  std::optional<std::vector<bool>> inlier_mask;  // present iff every line has 7 fields
};

LoadedCorrespondences parse_correspondences(std::istream& in);
LoadedCorrespondences load_correspondences(const std::filesystem::path& path);

std::string format_correspondences(Correspondences corrs,
                                   const std::vector<bool>* inlier_mask = nullptr);
void write_correspondences(const std::filesystem::path& path, Correspondences corrs,
                           const std::vector<bool>* inlier_mask = nullptr);

// ---------------------------------------------------------------------------
// Pose files: 4 x 4 row-major homogeneous matrix.

/// Validates the rotation block within 1e-6; one that is not a rotation at
/// the 1e-9 tolerance is re-projected onto SO(3).
RigidTransform parse_pose(std::istream& in);
RigidTransform load_pose(const std::filesystem::path& path);
std::string format_pose(const RigidTransform& pose);
void write_pose(const std::filesystem::path& path, const RigidTransform& pose);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Json, Csv };

ReportFormat report_format_from_string(std::string_view name);

/// 4 x 4 row-major nested array.
nlohmann::json to_json(const RigidTransform& pose);
nlohmann::json to_json(const StudyReport& report);
StudyReport study_report_from_json(const nlohmann::json& j);
std::string to_csv(const StudyReport& report);

nlohmann::json to_json(const RegistrationOutput& out, const Metrics* metrics = nullptr);
std::string to_csv(const RegistrationOutput& out);

/// Study configuration from a json object. Keys absent from `j` keep their
/// defaults; unknown keys and ill-typed values throw InvalidConfig.
StudyConfig study_config_from_json(StudyKind kind, const nlohmann::json& j);
/// Overrides the fields of `config` named in `j`; the study kind is kept.
void apply_config_json(const nlohmann::json& j, StudyConfig& config);
nlohmann::json to_json(const StudyConfig& config);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump(const nlohmann::json& j);

void write_report(const StudyReport& report, const std::filesystem::path& path, ReportFormat format);
void write_report(const RegistrationOutput& out, const std::filesystem::path& path,
                  ReportFormat format, const Metrics* metrics = nullptr);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// ASCII PLY

struct PlyFile {
  std::vector<std::string> header;  // lines up to and including end_header
  std::size_t vertex_count = 0;
  std::size_t x_col = 0, y_col = 1, z_col = 2;
  std::optional<std::size_t> nx_col, ny_col, nz_col;
  std::vector<std::vector<std::string>> vertices;  // tokens per vertex line
  std::vector<std::string> trailing;               // lines after the vertex block
};

PlyFile parse_ply(std::istream& in);
PlyFile load_ply(const std::filesystem::path& path);
/// Moves vertex positions (and normals, if present) by the pose.
void transform_ply(PlyFile& ply, const RigidTransform& pose);
std::string format_ply(const PlyFile& ply);

}  // namespace tcf::io
