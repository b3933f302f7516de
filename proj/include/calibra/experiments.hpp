#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calibra/calibrators.hpp"
#include "calibra/dist_models.hpp"
#include "calibra/metrics.hpp"
#include "calibra/random.hpp"

namespace calibra {

constexpr std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t config_index,
                                          std::uint64_t trial) noexcept
{
    return mix64(mix64(mix64(master_seed), config_index), trial);
}

enum class GridMode { single, multi, trunc_exp };

std::string_view to_string(GridMode mode) noexcept;
GridMode parse_grid_mode(std::string_view text);

enum class Method { platt, logreg, isotonic, binning };

// Which score columns a calibrator sees in a multi-score grid.
enum class ScoreColumns { all, first, second };

// Parsed calibrator identifier. Accepted ids: Platt, LogReg, LogRegExt,
// IsoReg, BinReg<k>, each optionally suffixed with @h1 or @h2 to restrict
// a multi-score calibrator to one score.
struct CalibratorSpec {
    std::string id;
    Method method = Method::platt;
    int degree = 1;
    std::size_t bins = 0;
    ScoreColumns columns = ScoreColumns::all;
};

CalibratorSpec parse_calibrator(std::string_view id);

// Fit the calibrator on the columns it is restricted to.
CalibratorModel fit_calibrator(const CalibratorSpec& spec, const LabeledScoreSet& data, double ridge);

// Calibrated posteriors for `scores`, restricted to the calibrator's columns.
std::vector<double> apply_calibrator(const CalibratorSpec& spec, const CalibratorModel& model,
                                     const ScoreMatrix& scores);

std::vector<std::string> single_score_calibrators();  // the nine: Platt, LogReg, LogRegExt, IsoReg, BinReg10..50
std::vector<std::string> multi_score_calibrators();   // LogReg, LogRegExt
std::vector<std::string> comparison_calibrators();    // the multi pair plus their @h1/@h2 variants

struct GridSpec {
    GridMode mode = GridMode::single;
    // single: "F0-F1" (e.g. "a-d"); multi: "F01-F02-F11-F12"; unused for trunc_exp.
    std::vector<std::string> configs;
    std::vector<double> auc_targets;
    std::vector<double> rho_values;  // multi only
    std::vector<std::size_t> n_values;
    std::size_t trials = 1000;
    std::size_t ind_test_size = 10000;
    std::vector<std::string> calibrators;
    double ridge = kDefaultRidge;
    std::uint64_t master_seed = 0;
    std::uint64_t standardize_seed = 1;
    std::size_t threads = 0;  // 0: CALIBRA_THREADS or all cores

    /// Throws ConfigError describing the first invalid field.
    void validate() const;

    std::size_t cell_count() const noexcept;
    std::size_t row_count() const noexcept { return cell_count() * trials * calibrators.size(); }
};

/// Full paper-scale grid for a mode.
GridSpec paper_grid(GridMode mode);

/// Desk-scale grid: 4 distribution pairs, M = 50, n in {10, 80, 640, 5120}.
GridSpec desk_grid(GridMode mode);

GridSpec preset_grid(std::string_view name, GridMode mode);

std::vector<std::string> all_single_configs();  // the 16 ordered pairs of a..d
std::vector<std::string> all_multi_configs();   // the 256 quadruples

struct AggregateRow {
    std::string config_id;
    std::string calibrator_id;
    double auc_target = 0.0;
    std::optional<double> rho;
    std::size_t n = 0;
    std::size_t trials = 0;    // rows that contributed
    std::size_t failures = 0;  // flagged rows skipped
    std::optional<double> rmse_ind;
    std::optional<double> rmse_sub;
    std::optional<double> rb_ind;
    std::optional<double> rb_sub;
};

struct ResultTable {
    std::vector<EvalRecord> rows;
    std::vector<AggregateRow> aggregates;
    std::vector<std::string> config_ids;  // in grid order
    std::vector<std::size_t> pair_rank;   // 1-based rank per config_ids entry; empty without RMSE
};

/// Mean of each metric per (config, auc, rho, calibrator, n), skipping
/// failed rows. Groups appear in order of first occurrence.
std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& rows);

/// Rank of each config (1 = lowest) by the unweighted mean over its
/// aggregates of mean RMSE^ind; ties go to the earlier config. Throws
/// DomainError if any non-failed row lacks RMSE^ind.
std::vector<std::size_t> rank_configs_by_mean_rmse(const ResultTable& table);

ResultTable run_single_score_grid(const GridSpec& spec);
ResultTable run_multi_score_grid(const GridSpec& spec);
ResultTable run_truncexp_study(const GridSpec& spec);
ResultTable run_grid(const GridSpec& spec);

/// Worker count: spec.threads, else CALIBRA_THREADS, else hardware concurrency.
std::size_t resolve_worker_count(std::size_t requested);

struct ComparisonRow {
    std::string config_id;
    double auc_target = 0.0;
    double rho = 0.0;
    std::size_t n = 0;
    std::string base;    // LogReg or LogRegExt
    std::string metric;  // rmse or rb
    std::string split;   // ind or sub
    double r1 = 0.0;
    double r2 = 0.0;
    double r12 = 0.0;
    double ratio1 = 0.0;  // r12 / r1
    double ratio2 = 0.0;  // r12 / r2
    bool flagged = false; // zero or missing denominator; excluded from p
    bool win = false;     // r12 < min(r1, r2)
};

// Fraction p of unflagged points where the multi-score calibrator wins.
// Exactly one of the (auc, rho) pair or n is set.
struct WinFraction {
    std::string base;
    std::string metric;
    std::string split;
    std::optional<double> auc_target;
    std::optional<double> rho;
    std::optional<std::size_t> n;
    std::size_t points = 0;
    std::size_t wins = 0;
    double p = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
    std::vector<WinFraction> by_cell;
    std::vector<WinFraction> by_n;
};

/// Builds the comparison from a multi-score table whose calibrator set
/// includes X, X@h1 and X@h2 for X in {LogReg, LogRegExt}. Bases missing
/// any of the three variants are skipped.
ComparisonTable compare_multi_vs_single(const ResultTable& table);

/// Runs the multi grid with comparison_calibrators() and compares.
ComparisonTable compare_multi_vs_single(const GridSpec& spec);

}  // namespace calibra
