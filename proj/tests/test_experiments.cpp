#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <tuple>
#include <unordered_set>

#include "calibra/error.hpp"
#include "calibra/experiments.hpp"
#include "calibra/io.hpp"

using namespace calibra;

namespace {

GridSpec small_single()
{
    GridSpec g;
    g.mode = GridMode::single;
    g.configs = {"a-d"};
    g.auc_targets = {0.75};
    g.n_values = {10, 20};
    g.trials = 2;
    g.ind_test_size = 500;
    g.calibrators = single_score_calibrators();
    g.master_seed = 11;
    return g;
}

EvalRecord record(std::string config, std::string calibrator, double value, std::size_t n = 100)
{
    EvalRecord r;
    r.config_id = std::move(config);
    r.calibrator_id = std::move(calibrator);
    r.auc_target = 0.75;
    r.rho = 0.5;
    r.n = n;
    r.rmse_ind = r.rmse_sub = r.rb_ind = r.rb_sub = value;
    return r;
}

// Three records per config: the multi-score fit and the two single-score fits.
void add_point(std::vector<EvalRecord>& rows, const std::string& config, double r12, double r1, double r2,
               std::size_t n = 100)
{
    rows.push_back(record(config, "LogReg", r12, n));
    rows.push_back(record(config, "LogReg@h1", r1, n));
    rows.push_back(record(config, "LogReg@h2", r2, n));
}

ComparisonTable compare_rows(const std::vector<EvalRecord>& rows)
{
    ResultTable t;
    t.rows = rows;
    t.aggregates = aggregate(rows);
    return compare_multi_vs_single(t);
}

const WinFraction& rb_ind_by_n(const ComparisonTable& c)
{
    const auto it = std::find_if(c.by_n.begin(), c.by_n.end(), [](const WinFraction& w) {
        return w.base == "LogReg" && w.metric == "rb" && w.split == "ind";
    });
    REQUIRE(it != c.by_n.end());
    return *it;
}

}  // namespace

TEST_CASE("trial seeds")
{
    static_assert(derive_trial_seed(3, 4, 5) == derive_trial_seed(3, 4, 5));
    CHECK(derive_trial_seed(9, 0, 0) != derive_trial_seed(9, 0, 1));
    CHECK(derive_trial_seed(9, 1, 0) != derive_trial_seed(9, 0, 1));

    std::unordered_set<std::uint64_t> seen;
    for (std::uint64_t cell = 0; cell < 100; ++cell) {
        for (std::uint64_t trial = 0; trial < 1000; ++trial) {
            seen.insert(derive_trial_seed(42, cell, trial));
        }
    }
    CHECK(seen.size() == 100000);
}

TEST_CASE("calibrator ids")
{
    CHECK(parse_calibrator("BinReg30").bins == 30);
    CHECK(parse_calibrator("LogRegExt").degree == 2);
    CHECK(parse_calibrator("LogReg@h2").columns == ScoreColumns::second);
    CHECK_THROWS_AS(parse_calibrator("BinReg"), ConfigError);
    CHECK_THROWS_AS(parse_calibrator("Spline"), ConfigError);
    CHECK(single_score_calibrators().size() == 9);
}

TEST_CASE("grid validation")
{
    GridSpec g = small_single();
    CHECK_NOTHROW(g.validate());
    g.auc_targets = {1.2};
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = small_single();
    g.configs = {"a-e"};
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = small_single();
    g.n_values.clear();
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = small_single();
    CHECK_THROWS_AS(run_multi_score_grid(g), ConfigError);

    const GridSpec paper = paper_grid(GridMode::single);
    CHECK(paper.cell_count() == 16 * 3 * 10);
    CHECK(paper.n_values.back() == 5120);
    CHECK(paper_grid(GridMode::multi).cell_count() == 256 * 3 * 3 * 10);
    CHECK(paper_grid(GridMode::trunc_exp).auc_targets.size() == 4);
}

TEST_CASE("single grid row accounting and aggregation")
{
    const GridSpec g = small_single();
    const ResultTable t = run_single_score_grid(g);
    REQUIRE(t.rows.size() == 36);
    CHECK(t.rows.size() == g.row_count());
    for (const auto& r : t.rows) {
        CHECK(r.config_id == "a-d");
        if (!r.failed) {
            CHECK(r.rmse_ind.has_value());
            CHECK(r.rmse_sub.has_value());
        }
    }
    CHECK(t.pair_rank == std::vector<std::size_t>{1});

    // Recompute each aggregate from the rows with a map keyed by group.
    using Key = std::tuple<std::string, std::string, double, std::size_t>;
    std::map<Key, std::vector<double>> members;
    for (const auto& r : t.rows) {
        if (!r.failed) {
            members[{r.config_id, r.calibrator_id, r.auc_target, r.n}].push_back(*r.rb_ind);
        }
    }
    CHECK(t.aggregates.size() == 18);
    for (const auto& a : t.aggregates) {
        const auto& v = members[{a.config_id, a.calibrator_id, a.auc_target, a.n}];
        CHECK(a.trials == v.size());
        CHECK(a.trials + a.failures == g.trials);
        if (v.empty()) {
            CHECK_FALSE(a.rb_ind.has_value());
            continue;
        }
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        CHECK(std::abs(*a.rb_ind - mean) < 1e-12);
        CHECK(*a.rb_ind >= *std::min_element(v.begin(), v.end()) - 1e-15);
        CHECK(*a.rb_ind <= *std::max_element(v.begin(), v.end()) + 1e-15);
    }
}

TEST_CASE("grid output does not depend on the worker count")
{
    GridSpec g = small_single();
    g.configs = {"b-c", "d-d"};
    g.threads = 1;
    const std::string one = results_csv(run_grid(g).rows);
    g.threads = 8;
    CHECK(results_csv(run_grid(g).rows) == one);
    g.threads = 3;
    CHECK(results_csv(run_grid(g).rows) == one);

    GridSpec m;
    m.mode = GridMode::multi;
    m.configs = {"a-b-c-d"};
    m.auc_targets = {0.75};
    m.rho_values = {0.5};
    m.n_values = {40};
    m.trials = 4;
    m.ind_test_size = 400;
    m.calibrators = comparison_calibrators();
    m.threads = 1;
    const std::string multi_one = results_csv(run_grid(m).rows);
    m.threads = 8;
    CHECK(results_csv(run_grid(m).rows) == multi_one);
}

TEST_CASE("multi grid")
{
    GridSpec m;
    m.mode = GridMode::multi;
    m.configs = {"d-d-d-d"};
    m.auc_targets = {0.75};
    m.rho_values = {0.0};
    m.n_values = {40};
    m.trials = 3;
    m.ind_test_size = 1000;
    m.calibrators = multi_score_calibrators();
    CHECK(run_multi_score_grid(m).rows.size() == 6);

    // LogReg approaches the product-LHR posterior as n grows.
    m.calibrators = {"LogReg"};
    m.n_values = {40, 5120};
    m.trials = 20;
    m.ind_test_size = 10000;
    const ResultTable t = run_multi_score_grid(m);
    REQUIRE(t.aggregates.size() == 2);
    CHECK(t.aggregates[0].n == 40);
    CHECK(*t.aggregates[1].rmse_ind < *t.aggregates[0].rmse_ind);

    m.calibrators = {"IsoReg"};
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("subsample root brier is optimistic for a binormal pair")
{
    GridSpec g;
    g.configs = {"d-d"};
    g.auc_targets = {0.9};
    g.n_values = {5120};
    g.trials = 20;
    g.calibrators = {"LogReg"};
    g.master_seed = 5;
    const ResultTable t = run_single_score_grid(g);
    REQUIRE(t.aggregates.size() == 1);
    CHECK(*t.aggregates[0].rb_sub <= *t.aggregates[0].rb_ind);
}

TEST_CASE("truncated exponential study")
{
    GridSpec g = preset_grid("desk", GridMode::trunc_exp);
    g.auc_targets = {0.75};
    g.n_values = {20};
    g.trials = 2;
    g.ind_test_size = 200;
    const ResultTable a = run_truncexp_study(g);
    CHECK(a.rows.size() == 2 * 9);
    CHECK(a.rows.front().config_id == "texp");
    CHECK(results_csv(run_truncexp_study(g).rows) == results_csv(a.rows));

    // No rate produces an AUC below one half; the study stops before any trial.
    g.auc_targets = {0.75, 0.4};
    CHECK_THROWS_AS(run_truncexp_study(g), ConfigError);
}

TEST_CASE("rank configs by mean rmse")
{
    ResultTable single;
    single.config_ids = {"a-a"};
    single.rows = {record("a-a", "LogReg", 0.2)};
    single.aggregates = aggregate(single.rows);
    CHECK(rank_configs_by_mean_rmse(single) == std::vector<std::size_t>{1});

    ResultTable two;
    two.config_ids = {"a-a", "b-b"};
    two.rows = {record("a-a", "LogReg", 0.3), record("b-b", "LogReg", 0.1)};
    two.aggregates = aggregate(two.rows);
    CHECK(rank_configs_by_mean_rmse(two) == std::vector<std::size_t>{2, 1});

    ResultTable missing = two;
    missing.rows[1].rmse_ind.reset();
    missing.aggregates = aggregate(missing.rows);
    CHECK_THROWS_AS(rank_configs_by_mean_rmse(missing), DomainError);

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> level(0, 5);
    for (int rep = 0; rep < 50; ++rep) {
        ResultTable t;
        const std::size_t configs = 2 + rep % 9;
        for (std::size_t c = 0; c < configs; ++c) {
            t.config_ids.push_back("c" + std::to_string(c));
        }
        for (std::size_t c = 0; c < configs; ++c) {
            for (const char* cal : {"Platt", "IsoReg"}) {
                for (std::size_t n : {10u, 20u}) {
                    // coarse values produce ties between configs
                    t.rows.push_back(record(t.config_ids[c], cal, level(rng) / 8.0, n));
                }
            }
        }
        t.aggregates = aggregate(t.rows);

        std::vector<double> mean(configs, 0.0);
        std::vector<double> count(configs, 0.0);
        for (const auto& a : t.aggregates) {
            const auto c = static_cast<std::size_t>(
                std::find(t.config_ids.begin(), t.config_ids.end(), a.config_id) - t.config_ids.begin());
            mean[c] += *a.rmse_ind;
            count[c] += 1;
        }
        std::vector<std::size_t> order(configs);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            const double mx = mean[x] / count[x], my = mean[y] / count[y];
            return mx != my ? mx < my : x < y;
        });
        std::vector<std::size_t> expected(configs);
        for (std::size_t pos = 0; pos < configs; ++pos) {
            expected[order[pos]] = pos + 1;
        }
        CHECK(rank_configs_by_mean_rmse(t) == expected);
    }
}

TEST_CASE("multi-vs-single win fraction")
{
    std::vector<EvalRecord> all_win, none_win, three;
    for (int c = 0; c < 5; ++c) {
        add_point(all_win, "x" + std::to_string(c), 0.1, 0.2, 0.3);
        add_point(none_win, "x" + std::to_string(c), 0.25, 0.2, 0.3);
    }
    CHECK(rb_ind_by_n(compare_rows(all_win)).p == 1.0);
    CHECK(rb_ind_by_n(compare_rows(none_win)).p == 0.0);

    add_point(three, "p", 0.1, 0.2, 0.3);
    add_point(three, "q", 0.1, 0.11, 0.5);
    add_point(three, "r", 0.3, 0.2, 0.4);
    add_point(three, "s", 0.05, 0.3, 0.06);
    const ComparisonTable c = compare_rows(three);
    const WinFraction& w = rb_ind_by_n(c);
    CHECK(w.points == 4);
    CHECK(w.wins == 3);
    CHECK(w.p == 0.75);

    const auto point = std::find_if(c.rows.begin(), c.rows.end(), [](const ComparisonRow& r) {
        return r.config_id == "r" && r.metric == "rb" && r.split == "ind";
    });
    REQUIRE(point != c.rows.end());
    CHECK(point->ratio1 == doctest::Approx(1.5));
    CHECK(point->ratio2 == doctest::Approx(0.75));
    CHECK_FALSE(point->win);

    // A perfectly calibrated single-score fit leaves a zero denominator.
    std::vector<EvalRecord> zero;
    add_point(zero, "z", 0.1, 0.0, 0.3);
    add_point(zero, "y", 0.1, 0.2, 0.3);
    const ComparisonTable cz = compare_rows(zero);
    CHECK(rb_ind_by_n(cz).points == 1);
    CHECK(std::count_if(cz.rows.begin(), cz.rows.end(), [](const ComparisonRow& r) { return r.flagged; }) == 4);
}
