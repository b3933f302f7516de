#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "calibra/score_set.hpp"

namespace calibra {

/// p(h) = 1 / (1 + exp(a * h + b)); a < 0 for scores that grow with class 1.
struct PlattModel {
    double a = 0.0;
    double b = 0.0;
};

/// Logistic regression on expanded score features.
struct LogisticModel {
    Eigen::VectorXd weights;  // one per expanded feature, in expand_features() order
    double intercept = 0.0;
    int degree = 1;
    double ridge = 0.0;
    std::size_t input_dims = 1;
    bool separated = false;  // fit stopped on complete separation (ridge 0 only)
};

/// Piecewise-linear monotone map through (knots[i], values[i]), clamped outside.
struct IsotonicModel {
    std::vector<double> knots;
    std::vector<double> values;
};

/// Equal-width histogram: bin i covers [edges[i], edges[i+1]).
struct BinningModel {
    std::vector<double> edges;
    std::vector<double> posteriors;

    std::size_t bins() const noexcept { return posteriors.size(); }
};

using CalibratorModel = std::variant<PlattModel, LogisticModel, IsotonicModel, BinningModel>;

inline constexpr double kDefaultRidge = 1e-4;

std::string_view method_name(const CalibratorModel& model) noexcept;

/// Number of score columns the model expects.
std::size_t input_dims(const CalibratorModel& model) noexcept;

// --- Platt -----------------------------------------------------------------

/// Smoothed regression targets: positives (n1 + 1) / (n1 + 2), negatives 1 / (n0 + 2).
struct PlattTargets {
    double positive;
    double negative;
};

PlattTargets platt_targets(std::size_t n1, std::size_t n0);

/// Cross-entropy of the sigmoid against the smoothed targets, with gradient
/// (d/da, d/db) written to `gradient` when non-null.
double platt_objective(std::span<const double> scores, std::span<const int> labels, double a, double b,
                       Eigen::Vector2d* gradient = nullptr);

/// Newton iteration with backtracking; stops at gradient norm <= 1e-10 or
/// 100 iterations. Throws FitError for single-class data and NumericError if
/// the final gradient is still large.
PlattModel platt_fit(const LabeledScoreSet& data);

// --- logistic regression ---------------------------------------------------

/// degree 1: identity. degree 2: (h, h^2) for one score, (h1, h2, h1^2, h2^2, h1 h2) for two.
ScoreMatrix expand_features(const ScoreMatrix& scores, int degree);

/// Negative binomial log-likelihood plus (ridge / 2) * |weights|^2 (intercept
/// unpenalized). Gradient ordered (weights..., intercept).
double logistic_objective(const ScoreMatrix& features, std::span<const int> labels, const Eigen::VectorXd& weights,
                          double intercept, double ridge, Eigen::VectorXd* gradient = nullptr);

/// Newton iteration with backtracking line search to gradient norm <= 1e-8
/// or 200 iterations. With ridge 0, a fit whose weights exceed norm 30 while
/// still strictly separating the classes stops early with `separated` set.
LogisticModel logreg_fit(const LabeledScoreSet& data, int degree, double ridge = kDefaultRidge);

// --- isotonic / binning ----------------------------------------------------

/// Pool-adjacent-violators on the score-sorted labels, tied scores pre-pooled.
IsotonicModel isotonic_fit(const LabeledScoreSet& data);

/// k equal-width bins over the training score range; per-bin class
/// likelihoods combined with the empirical prior. Empty bins take the
/// posterior of the nearest nonempty bin (lower bin on ties).
BinningModel binning_fit(const LabeledScoreSet& data, std::size_t k);

/// Index of the bin holding h; out-of-range scores clamp to the end bins.
std::size_t bin_index(std::span<const double> edges, double h) noexcept;

// --- application -----------------------------------------------------------

/// Calibrated probability per row. Throws DomainError if the column count
/// does not match input_dims(model).
std::vector<double> predict(const CalibratorModel& model, const ScoreMatrix& scores);

/// Label-free combination of K calibrated posteriors weighted by classifier
/// accuracy: sum_k p_k A_k / sum_k A_k.
double accuracy_weighted_mixture(std::span<const double> posteriors, std::span<const double> accuracies);

}  // namespace calibra
