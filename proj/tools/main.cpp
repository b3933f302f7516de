#include <iostream>

#include <CLI11.hpp>

#include "calibra/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"calibra: score calibration and Monte-Carlo calibration benchmarks"};
    app.set_version_flag("--version", calibra::kVersion);
    app.require_subcommand(1);

    calibra::SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "run a simulation grid and write results.csv");
    simulate->add_option("--config", sim.config, "INI run configuration")->check(CLI::ExistingFile);
    simulate->add_option("--preset", sim.preset, "base grid")->check(CLI::IsMember({"paper", "desk"}));
    simulate->add_option("--mode", sim.mode, "grid mode")->check(CLI::IsMember({"single", "multi", "trunc_exp"}));
    simulate->add_option("--seed", sim.seed, "master seed");
    simulate->add_option("--trials", sim.trials, "Monte-Carlo trials per cell")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim.out, "output directory");

    calibra::CalibrateOptions cal;
    int degree = 0;
    auto* calibrate = app.add_subcommand("calibrate", "fit a calibrator on a labeled score file");
    calibrate->add_option("scores", cal.scores, "score CSV with a trailing label column")->required();
    calibrate->add_option("--method", cal.method, "platt, logreg, logreg_ext, isotonic or binning")->required();
    calibrate->add_option("--bins", cal.bins, "bin count for binning");
    auto* degree_opt = calibrate->add_option("--degree", degree, "feature expansion degree for logreg (1 or 2)");
    calibrate->add_option("--ridge", cal.ridge, "L2 penalty for logreg (0 = plain MLE)");
    calibrate->add_option("--out", cal.out, "model file to write")->required();

    calibra::ApplyOptions apl;
    auto* apply = app.add_subcommand("apply", "append calibrated probabilities to a score file");
    apply->add_option("model", apl.model, "model file from calibrate")->required();
    apply->add_option("scores", apl.scores, "score CSV (label column optional)")->required();
    apply->add_option("--out", apl.out, "output CSV")->required();

    calibra::ReportOptions rep;
    auto* report = app.add_subcommand("report", "summaries and SVG charts from results.csv");
    report->add_option("results", rep.results, "results.csv from simulate")->required();
    report->add_option("--out", rep.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? calibra::kExitOk : calibra::kExitUsage;
    }

    if (simulate->parsed()) {
        return calibra::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (calibrate->parsed()) {
        if (degree_opt->count() > 0) {
            cal.degree = degree;
        }
        return calibra::cmd_calibrate(cal, std::cout, std::cerr);
    }
    if (apply->parsed()) {
        return calibra::cmd_apply(apl, std::cout, std::cerr);
    }
    return calibra::cmd_report(rep, std::cout, std::cerr);
}
