#include "calibra/score_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calibra/error.hpp"

namespace calibra {

std::size_t LabeledScoreSet::count(int label) const noexcept
{
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<double> LabeledScoreSet::class_scores(int label, std::size_t column) const
{
    if (column >= dims()) {
        throw DomainError("class_scores: column out of range");
    }
    std::vector<double> out;
    out.reserve(count(label));
    for (std::size_t i = 0; i < size(); ++i) {
        if (labels[i] == label) {
            out.push_back(scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(column)));
        }
    }
    return out;
}

LabeledScoreSet LabeledScoreSet::select_columns(const std::vector<std::size_t>& columns) const
{
    LabeledScoreSet out;
    out.scores.resize(scores.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= dims()) {
            throw DomainError("select_columns: column out of range");
        }
        out.scores.col(static_cast<Eigen::Index>(j)) = scores.col(static_cast<Eigen::Index>(columns[j]));
    }
    out.labels = labels;
    return out;
}

void LabeledScoreSet::validate() const
{
    if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
        throw DomainError("score set: " + std::to_string(scores.rows()) + " score rows but " +
                          std::to_string(labels.size()) + " labels");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw DomainError("score set: labels must be 0 or 1");
        }
    }
    if (!scores.allFinite()) {
        throw DomainError("score set: scores must be finite");
    }
}

void LabeledScoreSet::validate_for_fit() const
{
    validate();
    if (size() < 2) {
        throw FitError("need at least two observations to fit");
    }
    if (count(0) == 0 || count(1) == 0) {
        throw FitError("need observations from both classes to fit");
    }
}

}  // namespace calibra
