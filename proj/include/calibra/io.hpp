#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "calibra/calibrators.hpp"
#include "calibra/experiments.hpp"
#include "calibra/metrics.hpp"
#include "calibra/score_set.hpp"

namespace calibra {

/// 17 significant digits, "%.17g"; parses back to the same double.
std::string format_double(double value);

/// Strict decimal parse of a whole cell (leading/trailing blanks allowed).
std::optional<double> parse_double(std::string_view text);

// ---- score files ----------------------------------------------------------

/// CSV of score columns optionally followed by a `label` column.
struct ScoreFile {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;  // raw text per row, for faithful echo
    LabeledScoreSet data;                         // labels empty when has_labels is false
    bool has_labels = false;

    std::size_t dims() const noexcept { return data.dims(); }
};

/// Throws ConfigError on malformed content: missing header, ragged rows,
/// non-finite or unparsable scores, labels other than 0/1, or a score count
/// outside {1, 2}.
ScoreFile read_score_file(const std::filesystem::path& path);
ScoreFile parse_score_file(std::string_view text);

// ---- models ---------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const CalibratorModel& model);

/// Throws ConfigError on an unknown format, version, or method, or on
/// parameters that violate the model invariants.
CalibratorModel model_from_json(const nlohmann::json& doc);

// ---- run configuration ----------------------------------------------------

/// INI document with [grid], [calibrators] and [output] sections.
///
///     [grid]
///     mode = single            ; single | multi | trunc_exp
///     preset = desk            ; optional base grid: paper | desk
///     configs = a-a, b-c
///     auc_targets = 0.75
///     n_values = 10, 80, 640, 5120
///     trials = 50
///
/// Keys given in the file override the preset; unknown sections or keys are
/// rejected with ConfigError.
struct RunConfig {
    GridSpec grid;
    std::optional<std::string> preset;
    std::string output_dir;
};

RunConfig parse_run_config(std::string_view text, std::optional<std::string> preset_override = std::nullopt,
                           std::optional<GridMode> mode_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path, std::optional<std::string> preset_override = std::nullopt,
                          std::optional<GridMode> mode_override = std::nullopt);

/// Every GridSpec field written explicitly, so parsing the result restores the
/// same spec without consulting a preset.
std::string serialize_run_config(const RunConfig& config);

// ---- results --------------------------------------------------------------

std::string results_csv(const std::vector<EvalRecord>& rows);
std::vector<EvalRecord> parse_results_csv(std::string_view text);

std::string aggregates_csv(const std::vector<AggregateRow>& rows);
std::string ranks_csv(const ResultTable& table);
std::string comparison_csv(const ComparisonTable& table);

/// Long-form mean of each metric per (calibrator, n) over all rows of that
/// pair that carry the metric: columns metric, calibrator, n, mean, count.
struct SummaryRow {
    std::string metric;
    std::string calibrator;
    std::size_t n = 0;
    double mean = 0.0;
    std::size_t count = 0;
};

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Line chart of mean versus n for one metric, one polyline per calibrator.
std::string summary_svg(const std::vector<SummaryRow>& rows, std::string_view metric);

// ---- files ----------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);

/// Write through a temporary sibling and rename into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace calibra
