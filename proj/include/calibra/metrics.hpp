#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibra/calibrators.hpp"
#include "calibra/dist_models.hpp"
#include "calibra/score_set.hpp"

namespace calibra {

/// Mann-Whitney estimate of Pr(class-0 score < class-1 score), ties counted 1/2.
///
/// Computed from midranks in O(n log n); the result is bit-identical to the
/// literal double sum over all (class-0, class-1) pairs because both
/// numerators are exact half-integers. Throws DomainError on an empty class
/// or NaN scores.
double mann_whitney_auc(std::span<const double> scores0, std::span<const double> scores1);

/// Root mean squared deviation between calibrated and true posteriors.
double rmse_hat(std::span<const double> predicted, std::span<const double> true_posterior);

/// Root of the empirical Brier score against 0/1 labels.
double rb_hat(std::span<const double> predicted, std::span<const int> labels);

/// One (configuration, calibrator, n, trial) evaluation. RMSE fields are
/// present only when a true-posterior oracle exists; a failed fit carries
/// no metrics at all.
struct EvalRecord {
    std::string config_id;
    std::string calibrator_id;
    double auc_target = 0.0;
    std::optional<double> rho;
    std::size_t n = 0;
    std::size_t trial = 0;
    std::optional<double> rmse_ind;
    std::optional<double> rmse_sub;
    std::optional<double> rb_ind;
    std::optional<double> rb_sub;
    bool failed = false;
    std::string failure;
};

/// True posteriors for the rows of a train and a test set.
struct OraclePosteriors {
    std::vector<double> train;
    std::vector<double> test;
};

/// Resubstitution metrics on `train`, independent metrics on `test`.
/// Identifier fields of the returned record are left for the caller.
EvalRecord evaluate_trial(const CalibratorModel& model, const LabeledScoreSet& train, const LabeledScoreSet& test,
                          const PosteriorOracle* oracle);

EvalRecord evaluate_trial(const CalibratorModel& model, const LabeledScoreSet& train, const LabeledScoreSet& test,
                          const OraclePosteriors* truth);

}  // namespace calibra
