#include "calibra/cli.hpp"

#include <ostream>

#include <json.hpp>

#include "calibra/error.hpp"
#include "calibra/experiments.hpp"
#include "calibra/io.hpp"
#include "calibra/metrics.hpp"

namespace calibra {

namespace {

// Validation problems map to kExitUsage, everything else to kExitRuntime.
template <typename Fn>
int guarded(std::ostream& err, const char* command, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "calibra " << command << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "calibra " << command << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "calibra " << command << ": malformed JSON: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "calibra " << command << ": " << e.what() << "\n";
        return kExitRuntime;
    }
}

nlohmann::json grid_json(const GridSpec& g)
{
    return {{"mode", std::string(to_string(g.mode))},
            {"configs", g.configs},
            {"auc_targets", g.auc_targets},
            {"rho_values", g.rho_values},
            {"n_values", g.n_values},
            {"trials", g.trials},
            {"ind_test_size", g.ind_test_size},
            {"calibrators", g.calibrators},
            {"ridge", g.ridge},
            {"master_seed", g.master_seed},
            {"standardize_seed", g.standardize_seed}};
}

std::string describe(const CalibratorModel& model)
{
    std::string text;
    if (const auto* m = std::get_if<PlattModel>(&model)) {
        text = "A = " + format_double(m->a) + ", B = " + format_double(m->b);
    } else if (const auto* m = std::get_if<LogisticModel>(&model)) {
        text = "weights = [";
        for (Eigen::Index i = 0; i < m->weights.size(); ++i) {
            text += (i > 0 ? ", " : "") + format_double(m->weights(i));
        }
        text += "], intercept = " + format_double(m->intercept) + ", degree = " + std::to_string(m->degree) +
                ", ridge = " + format_double(m->ridge);
        if (m->separated) {
            text += " (classes completely separated; weights are not a finite MLE)";
        }
    } else if (const auto* m = std::get_if<IsotonicModel>(&model)) {
        text = std::to_string(m->knots.size()) + " knots";
    } else if (const auto* m = std::get_if<BinningModel>(&model)) {
        text = std::to_string(m->bins()) + " bins over [" + format_double(m->edges.front()) + ", " +
               format_double(m->edges.back()) + "]";
    }
    return text;
}

}  // namespace

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, "simulate", [&] {
        std::optional<GridMode> mode;
        if (options.mode) {
            mode = parse_grid_mode(*options.mode);
        }
        RunConfig config;
        if (options.config) {
            config = load_run_config(*options.config, options.preset, mode);
        } else {
            config.preset = options.preset.value_or("desk");
            config.grid = preset_grid(*config.preset, mode.value_or(GridMode::single));
        }
        if (options.seed) {
            config.grid.master_seed = *options.seed;
        }
        if (options.trials) {
            config.grid.trials = *options.trials;
        }
        if (options.out) {
            config.output_dir = options.out->string();
        }
        if (config.output_dir.empty()) {
            throw ConfigError("no output directory: pass --out or set [output] dir");
        }
        config.grid.validate();

        const ResultTable table = run_grid(config.grid);

        const std::filesystem::path dir = config.output_dir;
        std::filesystem::create_directories(dir);
        std::size_t failed = 0;
        for (const auto& row : table.rows) {
            failed += row.failed ? 1 : 0;
        }
        const nlohmann::json manifest = {{"tool", "calibra"},
                                         {"version", kVersion},
                                         {"command", "simulate"},
                                         {"preset", config.preset ? nlohmann::json(*config.preset) : nlohmann::json()},
                                         {"master_seed", config.grid.master_seed},
                                         {"grid", grid_json(config.grid)},
                                         {"config", serialize_run_config(config)},
                                         {"rows", table.rows.size()},
                                         {"failed_rows", failed}};
        write_file_atomic(dir / "results.csv", results_csv(table.rows));
        write_file_atomic(dir / "aggregates.csv", aggregates_csv(table.aggregates));
        write_file_atomic(dir / "ranks.csv", ranks_csv(table));
        write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
        out << "simulate: " << table.rows.size() << " rows (" << failed << " failed fits) written to " << dir.string()
            << "\n";
        return kExitOk;
    });
}

int cmd_calibrate(const CalibrateOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, "calibrate", [&] {
        const ScoreFile file = read_score_file(options.scores);
        if (!file.has_labels) {
            throw ConfigError("score file needs a trailing 'label' column for fitting");
        }
        if (file.data.count(0) == 0 || file.data.count(1) == 0) {
            throw ConfigError("score file holds a single class; fitting needs both labels");
        }
        const std::size_t dims = file.dims();
        const bool single_only = options.method == "platt" || options.method == "isotonic" || options.method == "binning";
        if (single_only && dims != 1) {
            throw ConfigError("method '" + options.method + "' is single-score only; the file has " +
                              std::to_string(dims) + " score columns");
        }
        if (options.method == "binning" && options.bins < 2) {
            throw ConfigError("--bins must be at least 2");
        }

        CalibratorModel model;
        if (options.method == "platt") {
            model = platt_fit(file.data);
        } else if (options.method == "logreg" || options.method == "logreg_ext") {
            const int degree = options.method == "logreg_ext" ? 2 : options.degree.value_or(1);
            if (options.method == "logreg_ext" && options.degree && *options.degree != 2) {
                throw ConfigError("logreg_ext is the degree-2 expansion; drop --degree or use logreg");
            }
            if (degree != 1 && degree != 2) {
                throw ConfigError("--degree must be 1 or 2");
            }
            if (!(options.ridge >= 0.0)) {
                throw ConfigError("--ridge must be >= 0");
            }
            model = logreg_fit(file.data, degree, options.ridge);
        } else if (options.method == "isotonic") {
            model = isotonic_fit(file.data);
        } else if (options.method == "binning") {
            model = binning_fit(file.data, options.bins);
        } else {
            throw ConfigError("unknown method '" + options.method +
                              "' (expected platt, logreg, logreg_ext, isotonic or binning)");
        }

        if (options.out.has_parent_path()) {
            std::filesystem::create_directories(options.out.parent_path());
        }
        write_file_atomic(options.out, model_to_json(model).dump(2) + "\n");

        out << "method: " << method_name(model) << "\n";
        out << "fit: " << describe(model) << "\n";
        out << "rows: " << file.data.size() << " (class 0: " << file.data.count(0) << ", class 1: " << file.data.count(1)
            << ")\n";
        for (std::size_t j = 0; j < dims; ++j) {
            out << "auc[" << file.header[j] << "]: "
                << format_double(mann_whitney_auc(file.data.class_scores(0, j), file.data.class_scores(1, j))) << "\n";
        }
        out << "rb (training): " << format_double(rb_hat(predict(model, file.data.scores), file.data.labels)) << "\n";
        return kExitOk;
    });
}

int cmd_apply(const ApplyOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, "apply", [&] {
        const CalibratorModel model = model_from_json(nlohmann::json::parse(read_text_file(options.model)));
        const ScoreFile file = read_score_file(options.scores);
        if (file.dims() != input_dims(model)) {
            throw ConfigError("model expects " + std::to_string(input_dims(model)) + " score columns, file has " +
                              std::to_string(file.dims()));
        }
        const std::vector<double> calibrated = predict(model, file.data.scores);

        std::string text;
        for (std::size_t j = 0; j < file.header.size(); ++j) {
            text += file.header[j] + ',';
        }
        text += "calibrated\n";
        for (std::size_t i = 0; i < file.cells.size(); ++i) {
            for (const auto& cell : file.cells[i]) {
                text += cell + ',';
            }
            text += format_double(calibrated[i]) + '\n';
        }
        if (options.out.has_parent_path()) {
            std::filesystem::create_directories(options.out.parent_path());
        }
        write_file_atomic(options.out, text);

        out << "apply: " << calibrated.size() << " rows written to " << options.out.string() << "\n";
        if (file.has_labels) {
            out << "rb: " << format_double(rb_hat(calibrated, file.data.labels)) << "\n";
        }
        return kExitOk;
    });
}

int cmd_report(const ReportOptions& options, std::ostream& out, std::ostream& err)
{
    return guarded(err, "report", [&] {
        const std::vector<EvalRecord> rows = parse_results_csv(read_text_file(options.results));
        if (rows.empty()) {
            throw ConfigError("results file has no rows");
        }
        const std::vector<SummaryRow> summary = summarize(rows);

        ResultTable table;
        table.rows = rows;
        table.aggregates = aggregate(rows);
        const ComparisonTable comparison = compare_multi_vs_single(table);

        std::filesystem::create_directories(options.out);
        write_file_atomic(options.out / "summary.csv", summary_csv(summary));
        std::size_t charts = 0;
        for (const char* metric : {"rmse_ind", "rmse_sub", "rb_ind", "rb_sub"}) {
            const bool present = std::any_of(summary.begin(), summary.end(),
                                             [&](const SummaryRow& r) { return r.metric == metric; });
            if (present) {
                write_file_atomic(options.out / (std::string(metric) + ".svg"), summary_svg(summary, metric));
                ++charts;
            }
        }
        if (!comparison.rows.empty()) {
            write_file_atomic(options.out / "comparison.csv", comparison_csv(comparison));
        }
        out << "report: summary.csv, " << charts << " charts" << (comparison.rows.empty() ? "" : ", comparison.csv")
            << " written to " << options.out.string() << "\n";
        return kExitOk;
    });
}

}  // namespace calibra
