#include "calibra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calibra/error.hpp"

namespace calibra {

double mann_whitney_auc(std::span<const double> scores0, std::span<const double> scores1)
{
    if (scores0.empty() || scores1.empty()) {
        throw DomainError("mann_whitney_auc: both classes need at least one score");
    }
    struct Entry {
        double value;
        bool positive;
    };
    std::vector<Entry> pooled;
    pooled.reserve(scores0.size() + scores1.size());
    for (double s : scores0) {
        pooled.push_back({s, false});
    }
    for (double s : scores1) {
        pooled.push_back({s, true});
    }
    if (std::any_of(pooled.begin(), pooled.end(), [](const Entry& e) { return std::isnan(e.value); })) {
        throw DomainError("mann_whitney_auc: NaN score");
    }
    std::sort(pooled.begin(), pooled.end(), [](const Entry& l, const Entry& r) { return l.value < r.value; });

    // Sum of class-1 midranks; every midrank is a half-integer, so the sum is exact.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        std::size_t positives = 0;
        while (j < pooled.size() && pooled[j].value == pooled[i].value) {
            positives += pooled[j].positive ? 1 : 0;
            ++j;
        }
        const double midrank = static_cast<double>(i + 1 + j) / 2.0;
        rank_sum += midrank * static_cast<double>(positives);
        i = j;
    }
    const double n0 = static_cast<double>(scores0.size());
    const double n1 = static_cast<double>(scores1.size());
    const double u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    return u / (n1 * n0);
}

double rmse_hat(std::span<const double> predicted, std::span<const double> true_posterior)
{
    if (predicted.size() != true_posterior.size()) {
        throw DomainError("rmse_hat: length mismatch");
    }
    if (predicted.empty()) {
        throw DomainError("rmse_hat: empty input");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - true_posterior[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

double rb_hat(std::span<const double> predicted, std::span<const int> labels)
{
    if (predicted.size() != labels.size()) {
        throw DomainError("rb_hat: length mismatch");
    }
    if (predicted.empty()) {
        throw DomainError("rb_hat: empty input");
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw DomainError("rb_hat: labels must be 0 or 1");
        }
        const double d = predicted[i] - labels[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

EvalRecord evaluate_trial(const CalibratorModel& model, const LabeledScoreSet& train, const LabeledScoreSet& test,
                          const PosteriorOracle* oracle)
{
    if (oracle == nullptr) {
        return evaluate_trial(model, train, test, static_cast<const OraclePosteriors*>(nullptr));
    }
    const OraclePosteriors truth{oracle->posteriors(train.scores), oracle->posteriors(test.scores)};
    return evaluate_trial(model, train, test, &truth);
}

EvalRecord evaluate_trial(const CalibratorModel& model, const LabeledScoreSet& train, const LabeledScoreSet& test,
                          const OraclePosteriors* truth)
{
    const std::vector<double> sub = predict(model, train.scores);
    const std::vector<double> ind = predict(model, test.scores);

    EvalRecord record;
    record.rb_sub = rb_hat(sub, train.labels);
    record.rb_ind = rb_hat(ind, test.labels);
    if (truth != nullptr) {
        record.rmse_sub = rmse_hat(sub, truth->train);
        record.rmse_ind = rmse_hat(ind, truth->test);
    }
    return record;
}

}  // namespace calibra
