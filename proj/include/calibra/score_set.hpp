#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace calibra {

// n x d, one row per observation, one column per classifier score.
using ScoreMatrix = Eigen::MatrixXd;

/// Labeled scores: per-observation score vector plus a 0/1 class label.
struct LabeledScoreSet {
    ScoreMatrix scores;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(scores.cols()); }
    std::size_t count(int label) const noexcept;

    /// Scores of one column restricted to one class.
    std::vector<double> class_scores(int label, std::size_t column = 0) const;

    /// New set holding only the listed score columns (labels copied).
    LabeledScoreSet select_columns(const std::vector<std::size_t>& columns) const;

    /// Throws DomainError on shape mismatch, non-binary labels, or non-finite scores.
    void validate() const;

    /// validate() plus n >= 2 and both classes present; throws FitError otherwise.
    void validate_for_fit() const;
};

}  // namespace calibra
