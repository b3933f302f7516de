#include "calibra/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>
#include <variant>

#include "calibra/error.hpp"

namespace calibra {

namespace {

constexpr std::string_view kTruncExpConfigId = "texp";

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

std::vector<std::string> config_components(const std::string& id, std::size_t expected)
{
    std::vector<std::string> names = split(id, '-');
    if (names.size() != expected) {
        throw ConfigError("config '" + id + "' must name " + std::to_string(expected) +
                          " basic distributions joined by '-'");
    }
    for (const auto& name : names) {
        if (name != "a" && name != "b" && name != "c" && name != "d") {
            throw ConfigError("config '" + id + "': unknown basic distribution '" + name + "'");
        }
    }
    return names;
}

template <typename T>
void require_unique(const std::vector<T>& values, const char* field)
{
    std::vector<T> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConfigError(std::string(field) + ": duplicate entries");
    }
}

struct Cell {
    std::size_t config_index;
    std::string config_id;
    double auc;
    std::optional<double> rho;
    std::size_t n;
    std::shared_ptr<const PosteriorOracle> oracle;
};

LabeledScoreSet draw(const PosteriorOracle& oracle, std::size_t n0, std::size_t n1, std::uint64_t seed)
{
    if (oracle.is_multi()) {
        return sample_correlated_pair(std::get<MultiConfig>(oracle.config()), n0, n1, seed);
    }
    return sample_pair(std::get<PairConfig>(oracle.config()), n0, n1, seed);
}

// Resolve every (config, auc[, rho]) combination before any trial runs.
std::vector<Cell> build_cells(const GridSpec& spec)
{
    std::vector<std::string> ids = spec.mode == GridMode::trunc_exp ? std::vector<std::string>{std::string(kTruncExpConfigId)}
                                                                     : spec.configs;
    std::map<std::string, DistSpec> standardized;
    const auto basic = [&](const std::string& name) -> const DistSpec& {
        auto it = standardized.find(name);
        if (it == standardized.end()) {
            it = standardized.emplace(name, standardize(basic_distribution(name), spec.standardize_seed)).first;
        }
        return it->second;
    };

    const std::vector<std::optional<double>> rhos = [&] {
        std::vector<std::optional<double>> out;
        if (spec.mode == GridMode::multi) {
            out.assign(spec.rho_values.begin(), spec.rho_values.end());
        } else {
            out.push_back(std::nullopt);
        }
        return out;
    }();

    std::vector<Cell> cells;
    for (std::size_t c = 0; c < ids.size(); ++c) {
        for (double auc : spec.auc_targets) {
            for (const auto& rho : rhos) {
                std::shared_ptr<const PosteriorOracle> oracle;
                try {
                    switch (spec.mode) {
                    case GridMode::single: {
                        const auto names = config_components(ids[c], 2);
                        oracle = std::make_shared<PosteriorOracle>(make_pair_config(basic(names[0]), basic(names[1]), auc));
                        break;
                    }
                    case GridMode::multi: {
                        const auto names = config_components(ids[c], 4);
                        oracle = std::make_shared<PosteriorOracle>(make_multi_config(
                            basic(names[0]), basic(names[1]), basic(names[2]), basic(names[3]), auc, *rho));
                        break;
                    }
                    case GridMode::trunc_exp:
                        oracle = std::make_shared<PosteriorOracle>(make_truncexp_pair_config(auc));
                        break;
                    }
                } catch (const ConfigError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw ConfigError("cannot resolve config '" + ids[c] + "' at AUC " + std::to_string(auc) + ": " +
                                      e.what());
                }
                for (std::size_t n : spec.n_values) {
                    cells.push_back(Cell{c, ids[c], auc, rho, n, oracle});
                }
            }
        }
    }
    return cells;
}

std::vector<EvalRecord> run_task(const GridSpec& spec, const std::vector<CalibratorSpec>& calibrators,
                                 const Cell& cell, std::size_t cell_index, std::size_t trial)
{
    const std::uint64_t seed = derive_trial_seed(spec.master_seed, cell_index, trial);
    const LabeledScoreSet train = draw(*cell.oracle, cell.n, cell.n, mix64(seed, 1));
    const std::size_t test1 = spec.ind_test_size / 2;
    const LabeledScoreSet test = draw(*cell.oracle, spec.ind_test_size - test1, test1, mix64(seed, 2));
    const OraclePosteriors truth{cell.oracle->posteriors(train.scores), cell.oracle->posteriors(test.scores)};

    // Column-restricted views, built on first use.
    std::map<ScoreColumns, std::pair<LabeledScoreSet, LabeledScoreSet>> views;
    const auto view = [&](ScoreColumns columns) -> const std::pair<LabeledScoreSet, LabeledScoreSet>& {
        auto it = views.find(columns);
        if (it == views.end()) {
            const std::vector<std::size_t> keep = columns == ScoreColumns::first ? std::vector<std::size_t>{0}
                                                                                  : std::vector<std::size_t>{1};
            it = views.emplace(columns, std::make_pair(train.select_columns(keep), test.select_columns(keep))).first;
        }
        return it->second;
    };

    std::vector<EvalRecord> records;
    records.reserve(calibrators.size());
    for (const auto& calibrator : calibrators) {
        EvalRecord record;
        try {
            const bool restricted = calibrator.columns != ScoreColumns::all;
            const LabeledScoreSet& tr = restricted ? view(calibrator.columns).first : train;
            const LabeledScoreSet& te = restricted ? view(calibrator.columns).second : test;
            const CalibratorModel model = fit_calibrator(calibrator, tr, spec.ridge);
            record = evaluate_trial(model, tr, te, &truth);
        } catch (const FitError& e) {
            record = EvalRecord{};
            record.failed = true;
            record.failure = e.what();
        } catch (const NumericError& e) {
            record = EvalRecord{};
            record.failed = true;
            record.failure = e.what();
        } catch (const DomainError& e) {
            record = EvalRecord{};
            record.failed = true;
            record.failure = e.what();
        }
        record.config_id = cell.config_id;
        record.calibrator_id = calibrator.id;
        record.auc_target = cell.auc;
        record.rho = cell.rho;
        record.n = cell.n;
        record.trial = trial;
        records.push_back(std::move(record));
    }
    return records;
}

ResultTable execute(const GridSpec& spec, GridMode expected)
{
    if (spec.mode != expected) {
        throw ConfigError("grid mode is '" + std::string(to_string(spec.mode)) + "', expected '" +
                          std::string(to_string(expected)) + "'");
    }
    spec.validate();
    std::vector<CalibratorSpec> calibrators;
    for (const auto& id : spec.calibrators) {
        calibrators.push_back(parse_calibrator(id));
    }
    const std::vector<Cell> cells = build_cells(spec);
    const std::size_t tasks = cells.size() * spec.trials;

    std::vector<std::vector<EvalRecord>> slots(tasks);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    const auto worker = [&] {
        while (!abort.load()) {
            const std::size_t task = next.fetch_add(1);
            if (task >= tasks) {
                return;
            }
            const std::size_t cell = task / spec.trials;
            const std::size_t trial = task % spec.trials;
            try {
                slots[task] = run_task(spec, calibrators, cells[cell], cell, trial);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
                abort.store(true);
            }
        }
    };

    const std::size_t workers = std::min(resolve_worker_count(spec.threads), std::max<std::size_t>(tasks, 1));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }

    ResultTable table;
    table.rows.reserve(spec.row_count());
    for (auto& slot : slots) {
        std::move(slot.begin(), slot.end(), std::back_inserter(table.rows));
    }
    table.aggregates = aggregate(table.rows);
    table.config_ids = spec.mode == GridMode::trunc_exp ? std::vector<std::string>{std::string(kTruncExpConfigId)}
                                                         : spec.configs;
    table.pair_rank = rank_configs_by_mean_rmse(table);
    return table;
}

std::vector<std::size_t> paper_n_values()
{
    std::vector<std::size_t> n;
    for (std::size_t i = 0; i < 10; ++i) {
        n.push_back(std::size_t{10} << i);
    }
    return n;
}

}  // namespace

std::string_view to_string(GridMode mode) noexcept
{
    switch (mode) {
    case GridMode::single:
        return "single";
    case GridMode::multi:
        return "multi";
    case GridMode::trunc_exp:
        return "trunc_exp";
    }
    return "unknown";
}

GridMode parse_grid_mode(std::string_view text)
{
    if (text == "single") {
        return GridMode::single;
    }
    if (text == "multi") {
        return GridMode::multi;
    }
    if (text == "trunc_exp") {
        return GridMode::trunc_exp;
    }
    throw ConfigError("unknown grid mode '" + std::string(text) + "' (expected single, multi or trunc_exp)");
}

CalibratorSpec parse_calibrator(std::string_view id)
{
    CalibratorSpec spec;
    spec.id = std::string(id);
    std::string_view base = id;
    if (const auto at = id.find('@'); at != std::string_view::npos) {
        const std::string_view suffix = id.substr(at + 1);
        if (suffix == "h1") {
            spec.columns = ScoreColumns::first;
        } else if (suffix == "h2") {
            spec.columns = ScoreColumns::second;
        } else {
            throw ConfigError("calibrator '" + spec.id + "': column suffix must be @h1 or @h2");
        }
        base = id.substr(0, at);
    }
    if (base == "Platt") {
        spec.method = Method::platt;
    } else if (base == "LogReg") {
        spec.method = Method::logreg;
    } else if (base == "LogRegExt") {
        spec.method = Method::logreg;
        spec.degree = 2;
    } else if (base == "IsoReg") {
        spec.method = Method::isotonic;
    } else if (base.starts_with("BinReg")) {
        const std::string_view digits = base.substr(6);
        std::size_t bins = 0;
        const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), bins);
        if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size() || bins < 2) {
            throw ConfigError("calibrator '" + spec.id + "': BinReg needs a bin count >= 2, e.g. BinReg10");
        }
        spec.method = Method::binning;
        spec.bins = bins;
    } else {
        throw ConfigError("unknown calibrator '" + spec.id + "'");
    }
    return spec;
}

CalibratorModel fit_calibrator(const CalibratorSpec& spec, const LabeledScoreSet& data, double ridge)
{
    if (spec.columns != ScoreColumns::all && data.dims() != 1) {
        const std::size_t column = spec.columns == ScoreColumns::first ? 0 : 1;
        return fit_calibrator(CalibratorSpec{spec.id, spec.method, spec.degree, spec.bins, ScoreColumns::all},
                              data.select_columns({column}), ridge);
    }
    switch (spec.method) {
    case Method::platt:
        return platt_fit(data);
    case Method::logreg:
        return logreg_fit(data, spec.degree, ridge);
    case Method::isotonic:
        return isotonic_fit(data);
    case Method::binning:
        return binning_fit(data, spec.bins);
    }
    throw DomainError("fit_calibrator: unknown method");
}

std::vector<double> apply_calibrator(const CalibratorSpec& spec, const CalibratorModel& model,
                                     const ScoreMatrix& scores)
{
    if (spec.columns != ScoreColumns::all && scores.cols() != 1) {
        const Eigen::Index column = spec.columns == ScoreColumns::first ? 0 : 1;
        if (scores.cols() <= column) {
            throw DomainError("apply_calibrator: score column out of range");
        }
        return predict(model, scores.col(column));
    }
    return predict(model, scores);
}

std::vector<std::string> single_score_calibrators()
{
    return {"Platt", "LogReg", "LogRegExt", "IsoReg", "BinReg10", "BinReg20", "BinReg30", "BinReg40", "BinReg50"};
}

std::vector<std::string> multi_score_calibrators()
{
    return {"LogReg", "LogRegExt"};
}

std::vector<std::string> comparison_calibrators()
{
    return {"LogReg", "LogReg@h1", "LogReg@h2", "LogRegExt", "LogRegExt@h1", "LogRegExt@h2"};
}

void GridSpec::validate() const
{
    if (mode != GridMode::trunc_exp) {
        if (configs.empty()) {
            throw ConfigError("grid: configs must not be empty");
        }
        for (const auto& id : configs) {
            config_components(id, mode == GridMode::single ? 2 : 4);
        }
        require_unique(configs, "grid.configs");
    }
    if (auc_targets.empty()) {
        throw ConfigError("grid: auc_targets must not be empty");
    }
    for (double auc : auc_targets) {
        if (!(auc > 0.5 && auc < 1.0)) {
            throw ConfigError("grid: every AUC target must lie in (0.5, 1)");
        }
    }
    require_unique(auc_targets, "grid.auc_targets");
    if (mode == GridMode::multi) {
        if (rho_values.empty()) {
            throw ConfigError("grid: rho_values must not be empty in multi mode");
        }
        for (double rho : rho_values) {
            if (!(rho >= 0.0 && rho < 1.0)) {
                throw ConfigError("grid: every rho must lie in [0, 1)");
            }
        }
        require_unique(rho_values, "grid.rho_values");
    }
    if (n_values.empty()) {
        throw ConfigError("grid: n_values must not be empty");
    }
    if (std::find(n_values.begin(), n_values.end(), std::size_t{0}) != n_values.end()) {
        throw ConfigError("grid: every n must be at least 1");
    }
    require_unique(n_values, "grid.n_values");
    if (trials == 0) {
        throw ConfigError("grid: trials must be at least 1");
    }
    if (ind_test_size < 2) {
        throw ConfigError("grid: ind_test_size must be at least 2");
    }
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw ConfigError("grid: ridge must be a finite value >= 0");
    }
    if (calibrators.empty()) {
        throw ConfigError("calibrators: the set must not be empty");
    }
    for (const auto& id : calibrators) {
        const CalibratorSpec spec = parse_calibrator(id);
        if (mode != GridMode::multi && spec.columns != ScoreColumns::all) {
            throw ConfigError("calibrator '" + id + "': column suffixes apply to multi mode only");
        }
        if (mode == GridMode::multi && spec.columns == ScoreColumns::all && spec.method != Method::logreg) {
            throw ConfigError("calibrator '" + id + "' is single-score only; use " + id + "@h1 or " + id + "@h2");
        }
    }
    require_unique(calibrators, "calibrators");
}

std::size_t GridSpec::cell_count() const noexcept
{
    const std::size_t config_count = mode == GridMode::trunc_exp ? 1 : configs.size();
    const std::size_t rho_count = mode == GridMode::multi ? rho_values.size() : 1;
    return config_count * auc_targets.size() * rho_count * n_values.size();
}

std::vector<std::string> all_single_configs()
{
    std::vector<std::string> ids;
    for (char f0 : {'a', 'b', 'c', 'd'}) {
        for (char f1 : {'a', 'b', 'c', 'd'}) {
            ids.push_back(std::string{f0, '-', f1});
        }
    }
    return ids;
}

std::vector<std::string> all_multi_configs()
{
    std::vector<std::string> ids;
    for (const auto& first : all_single_configs()) {
        for (const auto& second : all_single_configs()) {
            // first = F01-F02, second = F11-F12
            ids.push_back(first + "-" + second);
        }
    }
    return ids;
}

GridSpec paper_grid(GridMode mode)
{
    GridSpec spec;
    spec.mode = mode;
    spec.n_values = paper_n_values();
    spec.trials = 1000;
    spec.ind_test_size = 10000;
    switch (mode) {
    case GridMode::single:
        spec.configs = all_single_configs();
        spec.auc_targets = {0.6, 0.75, 0.9};
        spec.calibrators = single_score_calibrators();
        break;
    case GridMode::multi:
        spec.configs = all_multi_configs();
        spec.auc_targets = {0.6, 0.75, 0.9};
        spec.rho_values = {0.0, 0.5, 0.9};
        spec.calibrators = multi_score_calibrators();
        break;
    case GridMode::trunc_exp:
        spec.auc_targets = {0.6, 0.75, 0.9, 0.99};
        spec.calibrators = single_score_calibrators();
        break;
    }
    return spec;
}

GridSpec desk_grid(GridMode mode)
{
    GridSpec spec = paper_grid(mode);
    spec.trials = 50;
    spec.n_values = {10, 80, 640, 5120};
    switch (mode) {
    case GridMode::single:
        spec.configs = {"a-a", "b-c", "c-b", "d-d"};
        spec.auc_targets = {0.75};
        break;
    case GridMode::multi:
        spec.configs = {"a-a-a-a", "b-c-b-c", "c-d-c-d", "d-d-d-d"};
        spec.auc_targets = {0.75};
        spec.rho_values = {0.0, 0.5};
        break;
    case GridMode::trunc_exp:
        spec.auc_targets = {0.6, 0.9};
        break;
    }
    return spec;
}

GridSpec preset_grid(std::string_view name, GridMode mode)
{
    if (name == "paper") {
        return paper_grid(mode);
    }
    if (name == "desk") {
        return desk_grid(mode);
    }
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper or desk)");
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& rows)
{
    using Key = std::tuple<std::string, double, bool, double, std::string, std::size_t>;
    struct Sums {
        double rmse_ind = 0.0, rmse_sub = 0.0, rb_ind = 0.0, rb_sub = 0.0;
        bool has_rmse_ind = true, has_rmse_sub = true, has_rb_ind = true, has_rb_sub = true;
    };
    std::map<Key, std::size_t> index;
    std::vector<AggregateRow> out;
    std::vector<Sums> sums;

    for (const auto& row : rows) {
        const Key key{row.config_id, row.auc_target, row.rho.has_value(), row.rho.value_or(0.0), row.calibrator_id, row.n};
        auto [it, inserted] = index.emplace(key, out.size());
        if (inserted) {
            AggregateRow agg;
            agg.config_id = row.config_id;
            agg.calibrator_id = row.calibrator_id;
            agg.auc_target = row.auc_target;
            agg.rho = row.rho;
            agg.n = row.n;
            out.push_back(agg);
            sums.emplace_back();
        }
        AggregateRow& agg = out[it->second];
        Sums& s = sums[it->second];
        if (row.failed) {
            ++agg.failures;
            continue;
        }
        ++agg.trials;
        const auto add = [](const std::optional<double>& v, double& total, bool& present) {
            if (v) {
                total += *v;
            } else {
                present = false;
            }
        };
        add(row.rmse_ind, s.rmse_ind, s.has_rmse_ind);
        add(row.rmse_sub, s.rmse_sub, s.has_rmse_sub);
        add(row.rb_ind, s.rb_ind, s.has_rb_ind);
        add(row.rb_sub, s.rb_sub, s.has_rb_sub);
    }

    for (std::size_t i = 0; i < out.size(); ++i) {
        AggregateRow& agg = out[i];
        if (agg.trials == 0) {
            continue;
        }
        const double m = static_cast<double>(agg.trials);
        const Sums& s = sums[i];
        if (s.has_rmse_ind) agg.rmse_ind = s.rmse_ind / m;
        if (s.has_rmse_sub) agg.rmse_sub = s.rmse_sub / m;
        if (s.has_rb_ind) agg.rb_ind = s.rb_ind / m;
        if (s.has_rb_sub) agg.rb_sub = s.rb_sub / m;
    }
    return out;
}

std::vector<std::size_t> rank_configs_by_mean_rmse(const ResultTable& table)
{
    for (const auto& row : table.rows) {
        if (!row.failed && !row.rmse_ind) {
            throw DomainError("rank_configs_by_mean_rmse: row without RMSE^ind for config '" + row.config_id + "'");
        }
    }
    std::vector<std::string> ids = table.config_ids;
    if (ids.empty()) {
        for (const auto& row : table.rows) {
            if (std::find(ids.begin(), ids.end(), row.config_id) == ids.end()) {
                ids.push_back(row.config_id);
            }
        }
    }
    const std::vector<AggregateRow> aggregates = table.aggregates.empty() ? aggregate(table.rows) : table.aggregates;

    std::vector<double> means(ids.size());
    for (std::size_t c = 0; c < ids.size(); ++c) {
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& agg : aggregates) {
            if (agg.config_id == ids[c] && agg.rmse_ind) {
                total += *agg.rmse_ind;
                ++count;
            }
        }
        if (count == 0) {
            throw DomainError("rank_configs_by_mean_rmse: no RMSE^ind data for config '" + ids[c] + "'");
        }
        means[c] = total / static_cast<double>(count);
    }

    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return means[l] < means[r]; });
    std::vector<std::size_t> rank(ids.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        rank[order[pos]] = pos + 1;
    }
    return rank;
}

std::size_t resolve_worker_count(std::size_t requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("CALIBRA_THREADS"); env != nullptr && *env != '\0') {
        std::size_t value = 0;
        const std::string_view text(env);
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || end != text.data() + text.size() || value == 0) {
            throw ConfigError("CALIBRA_THREADS must be a positive integer");
        }
        return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

ResultTable run_single_score_grid(const GridSpec& spec)
{
    return execute(spec, GridMode::single);
}

ResultTable run_multi_score_grid(const GridSpec& spec)
{
    return execute(spec, GridMode::multi);
}

ResultTable run_truncexp_study(const GridSpec& spec)
{
    return execute(spec, GridMode::trunc_exp);
}

ResultTable run_grid(const GridSpec& spec)
{
    return execute(spec, spec.mode);
}

ComparisonTable compare_multi_vs_single(const ResultTable& table)
{
    using CellKey = std::tuple<std::string, double, double, std::size_t>;
    std::map<std::pair<CellKey, std::string>, const AggregateRow*> lookup;
    std::vector<CellKey> cells;
    std::set<CellKey> seen;
    for (const auto& agg : table.aggregates) {
        const CellKey key{agg.config_id, agg.auc_target, agg.rho.value_or(0.0), agg.n};
        lookup[{key, agg.calibrator_id}] = &agg;
        if (seen.insert(key).second) {
            cells.push_back(key);
        }
    }

    using Getter = std::optional<double> AggregateRow::*;
    struct MetricSpec {
        const char* metric;
        const char* split;
        Getter field;
    };
    const MetricSpec metrics[] = {
        {"rmse", "ind", &AggregateRow::rmse_ind},
        {"rmse", "sub", &AggregateRow::rmse_sub},
        {"rb", "ind", &AggregateRow::rb_ind},
        {"rb", "sub", &AggregateRow::rb_sub},
    };

    ComparisonTable out;
    for (const std::string base : {"LogReg", "LogRegExt"}) {
        for (const auto& key : cells) {
            const auto find = [&](const std::string& id) -> const AggregateRow* {
                const auto it = lookup.find({key, id});
                return it == lookup.end() ? nullptr : it->second;
            };
            const AggregateRow* both = find(base);
            const AggregateRow* first = find(base + "@h1");
            const AggregateRow* second = find(base + "@h2");
            if (both == nullptr || first == nullptr || second == nullptr) {
                continue;
            }
            for (const auto& m : metrics) {
                ComparisonRow row;
                row.config_id = std::get<0>(key);
                row.auc_target = std::get<1>(key);
                row.rho = std::get<2>(key);
                row.n = std::get<3>(key);
                row.base = base;
                row.metric = m.metric;
                row.split = m.split;
                const auto& v12 = both->*m.field;
                const auto& v1 = first->*m.field;
                const auto& v2 = second->*m.field;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                row.r12 = v12.value_or(nan);
                row.r1 = v1.value_or(nan);
                row.r2 = v2.value_or(nan);
                row.flagged = !v12 || !v1 || !v2 || *v1 == 0.0 || *v2 == 0.0;
                row.ratio1 = row.flagged ? nan : row.r12 / row.r1;
                row.ratio2 = row.flagged ? nan : row.r12 / row.r2;
                row.win = !row.flagged && row.r12 < std::min(row.r1, row.r2);
                out.rows.push_back(std::move(row));
            }
        }
    }

    // Fractions keyed by (base, metric, split, group); groups in first-seen order.
    const auto tally = [&](auto group_of, auto fill) {
        std::vector<WinFraction> fractions;
        std::map<std::tuple<std::string, std::string, std::string, decltype(group_of(out.rows.front()))>, std::size_t>
            where;
        for (const auto& row : out.rows) {
            const auto group = group_of(row);
            auto [it, inserted] = where.emplace(std::make_tuple(row.base, row.metric, row.split, group), fractions.size());
            if (inserted) {
                WinFraction f;
                f.base = row.base;
                f.metric = row.metric;
                f.split = row.split;
                fill(f, row);
                fractions.push_back(std::move(f));
            }
            WinFraction& f = fractions[it->second];
            if (!row.flagged) {
                ++f.points;
                f.wins += row.win ? 1 : 0;
            }
        }
        for (auto& f : fractions) {
            f.p = f.points == 0 ? 0.0 : static_cast<double>(f.wins) / static_cast<double>(f.points);
        }
        return fractions;
    };
    if (!out.rows.empty()) {
        out.by_cell = tally([](const ComparisonRow& r) { return std::make_pair(r.auc_target, r.rho); },
                            [](WinFraction& f, const ComparisonRow& r) {
                                f.auc_target = r.auc_target;
                                f.rho = r.rho;
                            });
        out.by_n = tally([](const ComparisonRow& r) { return r.n; },
                         [](WinFraction& f, const ComparisonRow& r) { f.n = r.n; });
    }
    return out;
}

ComparisonTable compare_multi_vs_single(const GridSpec& spec)
{
    if (spec.mode != GridMode::multi) {
        throw ConfigError("compare_multi_vs_single needs a multi-mode grid");
    }
    GridSpec run = spec;
    run.calibrators = comparison_calibrators();
    return compare_multi_vs_single(run_multi_score_grid(run));
}

}  // namespace calibra
