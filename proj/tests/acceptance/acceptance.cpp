// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "calibra/calibrators.hpp"
#include "calibra/cli.hpp"
#include "calibra/dist_models.hpp"
#include "calibra/experiments.hpp"
#include "calibra/io.hpp"
#include "calibra/metrics.hpp"
#include "oracles.hpp"

using namespace calibra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

LabeledScoreSet one_column(const std::vector<double>& h, const std::vector<int>& y)
{
    LabeledScoreSet s;
    s.scores = Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()));
    s.labels = y;
    return s;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

DistSpec standardized(char name)
{
    return standardize(basic_distribution(std::string(1, name)), GridSpec{}.standardize_seed);
}

Outcome monotone_invariance()
{
    std::mt19937_64 rng(101);
    const std::vector<std::function<double(double)>> transforms = {
        [](double x) { return std::exp(x); },
        [](double x) { return x * x * x + x; },
        [](double x) { return 3.0 * x - 7.0; }};
    std::size_t mismatches = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto s0 = oracle::tied_scores(rng, 5 + rng() % 150, 64);
        const auto s1 = oracle::tied_scores(rng, 5 + rng() % 150, 64);
        const double base = mann_whitney_auc(s0, s1);
        for (const auto& g : transforms) {
            std::vector<double> t0(s0.size()), t1(s1.size());
            std::transform(s0.begin(), s0.end(), t0.begin(), g);
            std::transform(s1.begin(), s1.end(), t1.begin(), g);
            mismatches += mann_whitney_auc(t0, t1) != base ? 1 : 0;
        }
    }
    // floor merges 0.2 and 0.7 into a tie
    const double before = mann_whitney_auc(std::vector<double>{0.2}, std::vector<double>{0.7});
    const double after = mann_whitney_auc(std::vector<double>{std::floor(0.2)}, std::vector<double>{std::floor(0.7)});
    return {mismatches == 0 && before != after,
            "300 transformed datasets, " + std::to_string(mismatches) + " mismatches; step witness " + fmt(before) +
                " -> " + fmt(after)};
}

Outcome double_loop_equivalence()
{
    std::mt19937_64 rng(202);
    std::size_t mismatches = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto s0 = oracle::tied_scores(rng, 1 + rng() % 200, 1 + static_cast<int>(rng() % 30));
        const auto s1 = oracle::tied_scores(rng, 1 + rng() % 200, 1 + static_cast<int>(rng() % 30));
        mismatches += mann_whitney_auc(s0, s1) != oracle::auc_double_loop(s0, s1) ? 1 : 0;
    }
    return {mismatches == 0, "200 tied datasets, " + std::to_string(mismatches) + " mismatches"};
}

Outcome binormal_oracle()
{
    const DistSpec d = standardized('d');
    const boost::math::normal unit;
    double worst_post = 0.0, worst_shift = 0.0;
    for (double auc : {0.6, 0.75, 0.9}) {
        const PairConfig pair = make_pair_config(d, d, auc);
        worst_shift = std::max(worst_shift, std::abs(pair.shift - std::sqrt(2.0) * boost::math::quantile(unit, auc)));
        const PosteriorOracle o(pair);
        for (int i = 0; i <= 100; ++i) {
            const double h = -5.0 + 0.1 * i;
            worst_post = std::max(worst_post,
                                  std::abs(true_posterior_single(o, h) - oracle::binormal_posterior(h, pair.shift, 0.5)));
        }
    }
    return {worst_post <= 1e-8 && worst_shift <= 2e-3,
            "max posterior error " + fmt(worst_post) + ", max shift error " + fmt(worst_shift)};
}

Outcome calibrator_oracles()
{
    std::mt19937_64 rng(303);
    double worst_pava = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<double> h(n);
        std::iota(h.begin(), h.end(), 0.0);
        std::shuffle(h.begin(), h.end(), rng);
        std::vector<int> y(n);
        std::vector<double> ordered(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng() % 2);
            ordered[static_cast<std::size_t>(h[i])] = y[i];
        }
        const IsotonicModel m = isotonic_fit(one_column(h, y));
        const auto best = oracle::isotonic_exhaustive(ordered);
        for (std::size_t i = 0; i < n; ++i) {
            worst_pava = std::max(worst_pava, std::abs(m.values[i] - best[i]));
        }
    }

    std::normal_distribution<double> noise;
    double worst_bin = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> h(30 + rep);
        std::vector<int> y(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
            y[i] = static_cast<int>(i % 2);
            h[i] = noise(rng) + y[i];
        }
        const std::size_t k = 2 + rep % 49;
        const BinningModel m = binning_fit(one_column(h, y), k);
        std::vector<double> pos(k, 0.0), all(k, 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) {
            const std::size_t b = bin_index(m.edges, h[i]);
            pos[b] += y[i];
            all[b] += 1.0;
        }
        for (std::size_t b = 0; b < k; ++b) {
            if (all[b] > 0) {
                worst_bin = std::max(worst_bin, std::abs(m.posteriors[b] - pos[b] / all[b]));
            }
        }
    }

    double worst_grad = 0.0;
    const double step = 1e-6;
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    std::uniform_real_distribution<double> param(-2.0, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> h(40);
        std::vector<int> y(40);
        for (std::size_t i = 0; i < h.size(); ++i) {
            y[i] = static_cast<int>(i % 2);
            h[i] = noise(rng) + y[i];
        }
        const double a = param(rng), b = param(rng);
        Eigen::Vector2d g;
        platt_objective(h, y, a, b, &g);
        worst_grad = std::max(worst_grad, rel(g(0), (platt_objective(h, y, a + step, b) -
                                                      platt_objective(h, y, a - step, b)) / (2 * step)));
        worst_grad = std::max(worst_grad, rel(g(1), (platt_objective(h, y, a, b + step) -
                                                      platt_objective(h, y, a, b - step)) / (2 * step)));

        ScoreMatrix raw(40, 2);
        for (Eigen::Index i = 0; i < raw.rows(); ++i) {
            raw(i, 0) = h[static_cast<std::size_t>(i)];
            raw(i, 1) = noise(rng);
        }
        const ScoreMatrix f = expand_features(raw, 2);
        Eigen::VectorXd w(f.cols());
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            w(k) = param(rng) / 2;
        }
        const double icpt = param(rng);
        Eigen::VectorXd grad;
        logistic_objective(f, y, w, icpt, 0.2, &grad);
        for (Eigen::Index k = 0; k < w.size(); ++k) {
            Eigen::VectorXd up = w, down = w;
            up(k) += step;
            down(k) -= step;
            worst_grad = std::max(worst_grad, rel(grad(k), (logistic_objective(f, y, up, icpt, 0.2) -
                                                            logistic_objective(f, y, down, icpt, 0.2)) / (2 * step)));
        }
        worst_grad = std::max(worst_grad, rel(grad(w.size()), (logistic_objective(f, y, w, icpt + step, 0.2) -
                                                               logistic_objective(f, y, w, icpt - step, 0.2)) / (2 * step)));
    }

    double worst_fit = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> h(6);
        std::vector<int> y = {0, 1, 0, 1, 0, 1};
        for (double& v : h) {
            v = noise(rng);
        }
        const LogisticModel m = logreg_fit(one_column(h, y), 1, 0.1);
        const oracle::Point2 best = oracle::logistic_grid_search(h, y, 0.1);
        worst_fit = std::max({worst_fit, std::abs(m.weights(0) - best.w), std::abs(m.intercept - best.b)});
    }
    return {worst_pava <= 1e-12 && worst_bin <= 1e-12 && worst_grad < 1e-5 && worst_fit < 1e-3,
            "pava " + fmt(worst_pava) + ", binning " + fmt(worst_bin) + ", gradient rel " + fmt(worst_grad) +
                ", brute-force fit " + fmt(worst_fit)};
}

Outcome auc_and_correlation_round_trips()
{
    constexpr std::size_t draws = 100000;
    const std::string letters = "abcd";
    std::vector<DistSpec> base;
    for (char c : letters) {
        base.push_back(standardized(c));
    }
    double worst_auc = 0.0;
    std::uint64_t seed = 500;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            for (double auc : {0.6, 0.75, 0.9}) {
                const LabeledScoreSet s = sample_pair(make_pair_config(base[i], base[j], auc), draws, draws, ++seed);
                worst_auc = std::max(worst_auc, std::abs(mann_whitney_auc(s.class_scores(0), s.class_scores(1)) - auc));
            }
        }
    }
    // The within-class correlation depends only on the marginal pair and rho,
    // so every ordered marginal pair at every rho covers all multi configs.
    double worst_rho = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            for (double rho : {0.0, 0.5, 0.9}) {
                const MultiConfig m = make_multi_config(base[i], base[j], base[i], base[j], 0.75, rho);
                const LabeledScoreSet s = sample_correlated_pair(m, draws, draws, ++seed);
                for (int label : {0, 1}) {
                    worst_rho = std::max(
                        worst_rho, std::abs(correlation(s.class_scores(label, 0), s.class_scores(label, 1)) - rho));
                }
            }
        }
    }
    return {worst_auc <= 0.01 && worst_rho <= 0.02,
            "48 pair configs max AUC error " + fmt(worst_auc) + ", 48 marginal/rho combos max rho error " +
                fmt(worst_rho)};
}

struct DeskRuns {
    std::vector<SummaryRow> summary;
    bool identical = false;
    std::string detail;
};

DeskRuns desk_runs()
{
    const fs::path root = fs::temp_directory_path() / ("calibra_acceptance_" + std::to_string(std::random_device{}()));
    std::ostringstream out, err;
    DeskRuns runs;
    std::vector<std::string> texts;
    for (const char* workers : {"1", "1", "8"}) {
        ::setenv("CALIBRA_THREADS", workers, 1);
        SimulateOptions o;
        o.preset = "desk";
        o.seed = 7;
        o.out = root / ("run" + std::to_string(texts.size()));
        if (cmd_simulate(o, out, err) != kExitOk) {
            runs.detail = "simulate failed: " + err.str();
            fs::remove_all(root);
            return runs;
        }
        texts.push_back(read_text_file(*o.out / "results.csv"));
    }
    ::unsetenv("CALIBRA_THREADS");
    fs::remove_all(root);
    runs.identical = texts[0] == texts[1] && texts[1] == texts[2];
    runs.summary = summarize(parse_results_csv(texts[0]));
    runs.detail = std::to_string(texts[0].size()) + " bytes per run";
    return runs;
}

double summary_mean(const std::vector<SummaryRow>& rows, const std::string& metric, const std::string& calibrator,
                    std::size_t n)
{
    for (const auto& r : rows) {
        if (r.metric == metric && r.calibrator == calibrator && r.n == n) {
            return r.mean;
        }
    }
    return std::nan("");
}

Outcome small_and_large_n_trend(const DeskRuns& runs)
{
    if (runs.summary.empty()) {
        return {false, runs.detail};
    }
    const double platt = summary_mean(runs.summary, "rb_ind", "Platt", 10);
    const double binreg = summary_mean(runs.summary, "rb_ind", "BinReg50", 10);
    double lo = 1.0, hi = 0.0;
    for (const auto& cal : single_score_calibrators()) {
        const double v = summary_mean(runs.summary, "rb_ind", cal, 5120);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {platt < binreg && hi - lo <= 0.02,
            "n=10 Platt " + fmt(platt) + " vs BinReg50 " + fmt(binreg) + "; n=5120 spread " + fmt(hi - lo)};
}

Outcome optimistic_bias(const DeskRuns& runs)
{
    if (runs.summary.empty()) {
        return {false, runs.detail};
    }
    double worst = -1.0;
    std::size_t cells = 0;
    for (const auto& r : runs.summary) {
        if (r.metric != "rb_sub") {
            continue;
        }
        worst = std::max(worst, r.mean - summary_mean(runs.summary, "rb_ind", r.calibrator, r.n));
        ++cells;
    }
    return {cells == 36 && worst <= 0.005,
            std::to_string(cells) + " calibrator/n cells, max RB^sub - RB^ind " + fmt(worst)};
}

Outcome multi_beats_single()
{
    GridSpec g;
    g.mode = GridMode::multi;
    g.configs = {"a-a-a-a", "b-b-b-b", "c-c-c-c", "d-d-d-d", "a-b-c-d", "d-c-b-a", "b-d-a-c", "c-a-d-b"};
    g.auc_targets = {0.75, 0.9};
    g.rho_values = {0.0, 0.5, 0.9};
    g.n_values = {320, 640, 1280};
    g.trials = 50;
    g.master_seed = 8;
    const ComparisonTable c = compare_multi_vs_single(g);
    bool pass = true;
    std::string detail;
    std::size_t found = 0;
    for (const auto& w : c.by_n) {
        if (w.base != "LogReg" || w.metric != "rb" || w.split != "ind") {
            continue;
        }
        ++found;
        pass = pass && w.p >= 0.9;
        detail += (detail.empty() ? "" : ", ") + std::string("n=") + std::to_string(*w.n) + " p=" + fmt(w.p) + " (" +
                  std::to_string(w.wins) + "/" + std::to_string(w.points) + ")";
    }
    return {pass && found == g.n_values.size(), detail};
}

Outcome platt_matches_logreg()
{
    GridSpec g;
    g.configs = {"d-d"};
    g.auc_targets = {0.9};
    g.n_values = {5120};
    g.trials = 20;
    g.ridge = 0.0;
    g.calibrators = {"Platt", "LogReg"};
    g.master_seed = 9;
    const ResultTable t = run_single_score_grid(g);
    const double platt = *t.aggregates[0].rb_ind;
    const double logreg = *t.aggregates[1].rb_ind;
    return {std::abs(platt - logreg) < 0.005,
            "Platt " + fmt(platt, 6) + ", LogReg " + fmt(logreg, 6) + ", difference " + fmt(std::abs(platt - logreg))};
}

Outcome truncexp_shape()
{
    double worst = 0.0;
    std::uint64_t seed = 900;
    for (double auc : {0.6, 0.75, 0.9, 0.99}) {
        const PairConfig pair = make_truncexp_pair_config(auc);
        const LabeledScoreSet s = sample_pair(pair, 1'000'000, 1'000'000, ++seed);
        worst = std::max(worst, std::abs(mann_whitney_auc(s.class_scores(0), s.class_scores(1)) - auc));
    }
    GridSpec g;
    g.mode = GridMode::trunc_exp;
    g.auc_targets = {0.6};
    g.n_values = {5120};
    g.trials = 20;
    g.calibrators = single_score_calibrators();
    g.master_seed = 10;
    const ResultTable t = run_truncexp_study(g);
    double lo = 1.0, hi = 0.0;
    for (const auto& a : t.aggregates) {
        lo = std::min(lo, *a.rb_ind);
        hi = std::max(hi, *a.rb_ind);
    }
    return {worst <= 1e-3 && hi - lo <= 0.03 && t.aggregates.size() == 9,
            "max Monte-Carlo AUC error " + fmt(worst) + ", RB^ind spread at n=5120 " + fmt(hi - lo)};
}

}  // namespace

int main()
{
    int failures = 0;
    const auto run = [&](int id, const std::string& name, const std::function<Outcome()>& body) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << o.detail << " ["
                  << fmt(seconds, 3) << " s]" << std::endl;
    };

    run(1, "monotone invariance of AUC", monotone_invariance);
    run(2, "rank AUC equals pair sum", double_loop_equivalence);
    run(3, "binormal posterior oracle", binormal_oracle);
    run(4, "calibrator unit oracles", calibrator_oracles);
    run(5, "AUC and correlation round-trips", auc_and_correlation_round_trips);

    DeskRuns desk;
    const auto start = std::chrono::steady_clock::now();
    try {
        desk = desk_runs();
    } catch (const std::exception& e) {
        desk.detail = std::string("exception: ") + e.what();
    }
    const double desk_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "desk grid, seed 7, three runs: " << fmt(desk_seconds, 3) << " s" << std::endl;
    run(6, "desk trend in n", [&] { return small_and_large_n_trend(desk); });
    run(7, "resubstitution RB is optimistic", [&] { return optimistic_bias(desk); });
    run(8, "multi-score LogReg beats both single scores", multi_beats_single);
    run(9, "Platt and LogReg agree at large n", platt_matches_logreg);
    run(10, "truncated exponential study", truncexp_shape);
    run(11, "desk results independent of run and worker count", [&] {
        return Outcome{desk.identical && !desk.summary.empty(), "1, 1 and 8 workers, " + desk.detail};
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
