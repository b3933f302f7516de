#include "calibra/calibrators.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "calibra/error.hpp"
#include "calibra/posterior.hpp"

namespace calibra {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// log(1 + e^z) without overflow.
double log1p_exp(double z) noexcept
{
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// logistic sigmoid 1 / (1 + e^{-z}) and its complement, both accurate in the tails.
struct SigmoidPair {
    double value;
    double complement;
};

SigmoidPair sigmoid(double z) noexcept
{
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return {1.0 / (1.0 + e), e / (1.0 + e)};
    }
    const double e = std::exp(z);
    return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

// Keep smooth-model outputs strictly inside (0, 1).
double open_unit(double p) noexcept
{
    return std::clamp(p, DBL_MIN, 1.0 - DBL_EPSILON / 2.0);
}

std::vector<double> column(const ScoreMatrix& scores, Eigen::Index j)
{
    std::vector<double> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = scores(i, j);
    }
    return out;
}

void require_single_score(const LabeledScoreSet& data, const char* method)
{
    if (data.dims() != 1) {
        throw DomainError(std::string(method) + " calibrates a single score; got " + std::to_string(data.dims()) +
                          " score columns");
    }
}

bool strictly_separates(const ScoreMatrix& features, std::span<const int> labels, const Eigen::VectorXd& weights,
                        double intercept)
{
    const Eigen::VectorXd z = (features * weights).array() + intercept;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const bool positive = labels[static_cast<std::size_t>(i)] == 1;
        if ((positive && !(z(i) > 0.0)) || (!positive && !(z(i) < 0.0))) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::string_view method_name(const CalibratorModel& model) noexcept
{
    return std::visit(Overloaded{[](const PlattModel&) { return std::string_view("platt"); },
                                 [](const LogisticModel&) { return std::string_view("logreg"); },
                                 [](const IsotonicModel&) { return std::string_view("isotonic"); },
                                 [](const BinningModel&) { return std::string_view("binning"); }},
                      model);
}

std::size_t input_dims(const CalibratorModel& model) noexcept
{
    if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
        return logistic->input_dims;
    }
    return 1;
}

// --- Platt -----------------------------------------------------------------

PlattTargets platt_targets(std::size_t n1, std::size_t n0)
{
    return {(static_cast<double>(n1) + 1.0) / (static_cast<double>(n1) + 2.0), 1.0 / (static_cast<double>(n0) + 2.0)};
}

double platt_objective(std::span<const double> scores, std::span<const int> labels, double a, double b,
                       Eigen::Vector2d* gradient)
{
    if (scores.size() != labels.size()) {
        throw DomainError("platt_objective: scores and labels differ in length");
    }
    const auto n1 = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const PlattTargets targets = platt_targets(n1, labels.size() - n1);

    double value = 0.0;
    double ga = 0.0;
    double gb = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double t = labels[i] == 1 ? targets.positive : targets.negative;
        const double f = a * scores[i] + b;
        value += log1p_exp(f) - (1.0 - t) * f;
        // d/df = (1 - p) - (1 - t) with p = 1 / (1 + e^f)
        const double d = t - sigmoid(-f).value;
        ga += d * scores[i];
        gb += d;
    }
    if (gradient != nullptr) {
        *gradient = Eigen::Vector2d(ga, gb);
    }
    return value;
}

PlattModel platt_fit(const LabeledScoreSet& data)
{
    data.validate_for_fit();
    require_single_score(data, "platt");

    const std::vector<double> x = column(data.scores, 0);
    const std::span<const int> y(data.labels);
    const double n1 = static_cast<double>(data.count(1));
    const double n0 = static_cast<double>(data.count(0));

    constexpr int max_iterations = 100;
    constexpr double gradient_tolerance = 1e-10;
    constexpr double min_step = 1e-10;
    constexpr double hessian_shift = 1e-12;

    double a = 0.0;
    double b = std::log((n0 + 1.0) / (n1 + 1.0));
    Eigen::Vector2d grad;
    double value = platt_objective(x, y, a, b, &grad);

    int iter = 0;
    for (; iter < max_iterations && grad.norm() > gradient_tolerance; ++iter) {
        double h11 = hessian_shift;
        double h22 = hessian_shift;
        double h21 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const SigmoidPair s = sigmoid(a * x[i] + b);
            const double w = s.value * s.complement;
            h11 += x[i] * x[i] * w;
            h22 += w;
            h21 += x[i] * w;
        }
        Eigen::Matrix2d hessian;
        hessian << h11, h21, h21, h22;
        const Eigen::Vector2d direction = -hessian.ldlt().solve(grad);
        const double slope = grad.dot(direction);

        double step = 1.0;
        bool accepted = false;
        while (step >= min_step) {
            const double na = a + step * direction(0);
            const double nb = b + step * direction(1);
            Eigen::Vector2d ngrad;
            const double nvalue = platt_objective(x, y, na, nb, &ngrad);
            if (nvalue < value + 1e-4 * step * slope) {
                a = na;
                b = nb;
                value = nvalue;
                grad = ngrad;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) {
            break;  // no representable decrease left
        }
    }

    if (!std::isfinite(value) || grad.norm() > 1e-5 * std::max(1.0, n0 + n1)) {
        std::ostringstream msg;
        msg << "platt_fit did not converge: iterations=" << iter << " A=" << a << " B=" << b
            << " |gradient|=" << grad.norm();
        throw NumericError(msg.str());
    }
    return PlattModel{a, b};
}

// --- logistic regression ---------------------------------------------------

ScoreMatrix expand_features(const ScoreMatrix& scores, int degree)
{
    const Eigen::Index d = scores.cols();
    if (d != 1 && d != 2) {
        throw DomainError("expand_features supports one or two score columns, got " + std::to_string(d));
    }
    if (degree == 1) {
        return scores;
    }
    if (degree != 2) {
        throw DomainError("expand_features supports degree 1 or 2, got " + std::to_string(degree));
    }
    if (d == 1) {
        ScoreMatrix out(scores.rows(), 2);
        out.col(0) = scores.col(0);
        out.col(1) = scores.col(0).array().square();
        return out;
    }
    ScoreMatrix out(scores.rows(), 5);
    out.col(0) = scores.col(0);
    out.col(1) = scores.col(1);
    out.col(2) = scores.col(0).array().square();
    out.col(3) = scores.col(1).array().square();
    out.col(4) = scores.col(0).array() * scores.col(1).array();
    return out;
}

double logistic_objective(const ScoreMatrix& features, std::span<const int> labels, const Eigen::VectorXd& weights,
                          double intercept, double ridge, Eigen::VectorXd* gradient)
{
    if (static_cast<std::size_t>(features.rows()) != labels.size() || features.cols() != weights.size()) {
        throw DomainError("logistic_objective: shape mismatch");
    }
    const Eigen::VectorXd z = (features * weights).array() + intercept;
    double value = 0.5 * ridge * weights.squaredNorm();
    Eigen::VectorXd residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double y = labels[static_cast<std::size_t>(i)];
        value += log1p_exp(z(i)) - y * z(i);
        residual(i) = sigmoid(z(i)).value - y;
    }
    if (gradient != nullptr) {
        gradient->resize(weights.size() + 1);
        gradient->head(weights.size()) = features.transpose() * residual + ridge * weights;
        (*gradient)(weights.size()) = residual.sum();
    }
    return value;
}

LogisticModel logreg_fit(const LabeledScoreSet& data, int degree, double ridge)
{
    data.validate_for_fit();
    if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
        throw DomainError("logreg_fit: ridge must be a finite value >= 0");
    }
    const ScoreMatrix features = expand_features(data.scores, degree);
    const std::span<const int> y(data.labels);
    const Eigen::Index p = features.cols();
    const double n = static_cast<double>(data.size());

    constexpr int max_iterations = 200;
    constexpr double gradient_tolerance = 1e-8;
    constexpr double separation_norm = 30.0;
    constexpr double min_step = 1e-12;

    LogisticModel model;
    model.degree = degree;
    model.ridge = ridge;
    model.input_dims = data.dims();
    model.weights = Eigen::VectorXd::Zero(p);
    model.intercept = std::log(static_cast<double>(data.count(1)) / static_cast<double>(data.count(0)));

    Eigen::VectorXd grad;
    double value = logistic_objective(features, y, model.weights, model.intercept, ridge, &grad);

    // Design matrix with the intercept column appended.
    ScoreMatrix design(features.rows(), p + 1);
    design.leftCols(p) = features;
    design.col(p).setOnes();

    bool converged = false;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const bool separating = ridge == 0.0 && strictly_separates(features, y, model.weights, model.intercept);
        if (separating && model.weights.norm() > separation_norm) {
            model.separated = true;
            break;
        }
        if (grad.norm() <= gradient_tolerance && !separating) {
            converged = true;
            break;
        }

        const Eigen::VectorXd z = (features * model.weights).array() + model.intercept;
        Eigen::VectorXd curvature(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const SigmoidPair s = sigmoid(z(i));
            curvature(i) = s.value * s.complement;
        }
        Eigen::MatrixXd hessian = design.transpose() * curvature.asDiagonal() * design;
        hessian.diagonal().head(p).array() += ridge;

        Eigen::LLT<Eigen::MatrixXd> llt(hessian);
        if (llt.info() != Eigen::Success) {
            hessian.diagonal().array() += 1e-8;
            llt.compute(hessian);
            if (llt.info() != Eigen::Success) {
                throw NumericError("logreg_fit: singular Hessian at iteration " + std::to_string(iter));
            }
        }
        const Eigen::VectorXd direction = -llt.solve(grad);
        const double slope = grad.dot(direction);
        // Past this point the predicted decrease is below the rounding level
        // of the objective, and for large n the gradient norm can sit above
        // 1e-8 from summation error alone.
        if (!separating && -slope <= 8.0 * DBL_EPSILON * std::max(1.0, std::abs(value))) {
            converged = true;
            break;
        }

        double step = 1.0;
        bool accepted = false;
        while (step >= min_step) {
            const Eigen::VectorXd nw = model.weights + step * direction.head(p);
            const double nb = model.intercept + step * direction(p);
            Eigen::VectorXd ngrad;
            const double nvalue = logistic_objective(features, y, nw, nb, ridge, &ngrad);
            if (nvalue <= value + 1e-4 * step * slope) {
                model.weights = nw;
                model.intercept = nb;
                value = nvalue;
                grad = ngrad;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if (!accepted) {
            converged = grad.norm() <= 1e-4 * n;
            break;
        }
    }

    if (!converged && !model.separated) {
        if (ridge == 0.0 && model.weights.norm() > separation_norm) {
            model.separated = true;
        } else if (!std::isfinite(value) || grad.norm() > 1e-4 * n) {
            std::ostringstream msg;
            msg << "logreg_fit did not converge: iterations=" << iter << " |gradient|=" << grad.norm()
                << " |weights|=" << model.weights.norm();
            throw NumericError(msg.str());
        }
    }
    return model;
}

// --- isotonic --------------------------------------------------------------

IsotonicModel isotonic_fit(const LabeledScoreSet& data)
{
    data.validate();
    require_single_score(data, "isotonic");
    if (data.size() == 0) {
        throw FitError("isotonic_fit: empty data");
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return data.scores(static_cast<Eigen::Index>(i), 0) < data.scores(static_cast<Eigen::Index>(j), 0);
    });

    // Pre-pool exact ties into weighted groups.
    IsotonicModel model;
    std::vector<double> sums;
    std::vector<double> weights;
    for (std::size_t idx : order) {
        const double h = data.scores(static_cast<Eigen::Index>(idx), 0);
        if (model.knots.empty() || h != model.knots.back()) {
            model.knots.push_back(h);
            sums.push_back(0.0);
            weights.push_back(0.0);
        }
        sums.back() += data.labels[idx];
        weights.back() += 1.0;
    }

    struct Block {
        double sum;
        double weight;
        std::size_t first;
        std::size_t last;
    };
    std::vector<Block> blocks;
    blocks.reserve(sums.size());
    for (std::size_t g = 0; g < sums.size(); ++g) {
        blocks.push_back({sums[g], weights[g], g, g});
        while (blocks.size() >= 2) {
            const Block& prev = blocks[blocks.size() - 2];
            const Block& last = blocks.back();
            if (prev.sum / prev.weight <= last.sum / last.weight) {
                break;
            }
            Block merged{prev.sum + last.sum, prev.weight + last.weight, prev.first, last.last};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }

    model.values.resize(model.knots.size());
    for (const Block& block : blocks) {
        const double mean = block.sum / block.weight;
        for (std::size_t g = block.first; g <= block.last; ++g) {
            model.values[g] = mean;
        }
    }
    return model;
}

// --- binning ---------------------------------------------------------------

std::size_t bin_index(std::span<const double> edges, double h) noexcept
{
    // Interior edges decide the bin; anything below edges[1] is bin 0 and
    // anything at or above edges[k-1] is bin k-1.
    const auto first = edges.begin() + 1;
    const auto last = edges.end() - 1;
    return static_cast<std::size_t>(std::upper_bound(first, last, h) - first);
}

BinningModel binning_fit(const LabeledScoreSet& data, std::size_t k)
{
    data.validate_for_fit();
    require_single_score(data, "binning");
    if (k < 2) {
        throw DomainError("binning_fit: need at least 2 bins");
    }
    const double lo = data.scores.col(0).minCoeff();
    const double hi = data.scores.col(0).maxCoeff();
    if (!(hi > lo)) {
        throw FitError("binning_fit: degenerate score range (all scores equal)");
    }

    BinningModel model;
    model.edges.resize(k + 1);
    const double width = (hi - lo) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
        model.edges[i] = lo + static_cast<double>(i) * width;
    }
    model.edges[k] = hi;
    for (std::size_t i = 1; i <= k; ++i) {
        if (!(model.edges[i] > model.edges[i - 1])) {
            throw FitError("binning_fit: score range too narrow for " + std::to_string(k) + " bins");
        }
    }

    std::vector<double> count1(k, 0.0);
    std::vector<double> count0(k, 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t bin = bin_index(model.edges, data.scores(static_cast<Eigen::Index>(i), 0));
        (data.labels[i] == 1 ? count1 : count0)[bin] += 1.0;
    }

    // Per-bin class likelihoods (relative frequency over bin width) and the
    // empirical prior, combined through Bayes' rule.
    const double n1 = static_cast<double>(data.count(1));
    const double n0 = static_cast<double>(data.count(0));
    const double prior = n1 / (n1 + n0);
    std::vector<bool> filled(k, false);
    model.posteriors.assign(k, 0.0);
    for (std::size_t bin = 0; bin < k; ++bin) {
        if (count1[bin] + count0[bin] == 0.0) {
            continue;
        }
        const double bin_width = model.edges[bin + 1] - model.edges[bin];
        const double lh1 = count1[bin] / n1 / bin_width;
        const double lh0 = count0[bin] / n0 / bin_width;
        const double ratio = lh0 == 0.0 ? HUGE_VAL : lh1 / lh0;
        model.posteriors[bin] = posterior_from_likelihood_ratio(ratio, prior);
        filled[bin] = true;
    }

    std::vector<double> resolved = model.posteriors;
    for (std::size_t bin = 0; bin < k; ++bin) {
        if (filled[bin]) {
            continue;
        }
        // Nearest nonempty bin; lower wins ties.
        for (std::size_t dist = 1; dist < k; ++dist) {
            if (bin >= dist && filled[bin - dist]) {
                resolved[bin] = model.posteriors[bin - dist];
                break;
            }
            if (bin + dist < k && filled[bin + dist]) {
                resolved[bin] = model.posteriors[bin + dist];
                break;
            }
        }
    }
    model.posteriors = std::move(resolved);
    return model;
}

// --- application -----------------------------------------------------------

std::vector<double> predict(const CalibratorModel& model, const ScoreMatrix& scores)
{
    const auto expected = static_cast<Eigen::Index>(input_dims(model));
    if (scores.cols() != expected) {
        throw DomainError("predict: model expects " + std::to_string(expected) + " score columns, got " +
                          std::to_string(scores.cols()));
    }
    const auto n = static_cast<std::size_t>(scores.rows());
    std::vector<double> out(n);

    std::visit(Overloaded{
                   [&](const PlattModel& m) {
                       for (std::size_t i = 0; i < n; ++i) {
                           const double f = m.a * scores(static_cast<Eigen::Index>(i), 0) + m.b;
                           out[i] = open_unit(sigmoid(-f).value);
                       }
                   },
                   [&](const LogisticModel& m) {
                       const ScoreMatrix features = expand_features(scores, m.degree);
                       if (features.cols() != m.weights.size()) {
                           throw DomainError("predict: logistic model has wrong number of weights");
                       }
                       const Eigen::VectorXd z = (features * m.weights).array() + m.intercept;
                       for (std::size_t i = 0; i < n; ++i) {
                           out[i] = open_unit(sigmoid(z(static_cast<Eigen::Index>(i))).value);
                       }
                   },
                   [&](const IsotonicModel& m) {
                       for (std::size_t i = 0; i < n; ++i) {
                           const double h = scores(static_cast<Eigen::Index>(i), 0);
                           if (h <= m.knots.front()) {
                               out[i] = m.values.front();
                               continue;
                           }
                           if (h >= m.knots.back()) {
                               out[i] = m.values.back();
                               continue;
                           }
                           const auto upper = std::upper_bound(m.knots.begin(), m.knots.end(), h);
                           const auto j = static_cast<std::size_t>(upper - m.knots.begin());
                           const double x0 = m.knots[j - 1];
                           const double x1 = m.knots[j];
                           const double v0 = m.values[j - 1];
                           const double v1 = m.values[j];
                           out[i] = std::clamp(v0 + (v1 - v0) * (h - x0) / (x1 - x0), v0, v1);
                       }
                   },
                   [&](const BinningModel& m) {
                       for (std::size_t i = 0; i < n; ++i) {
                           out[i] = m.posteriors[bin_index(m.edges, scores(static_cast<Eigen::Index>(i), 0))];
                       }
                   }},
               model);
    return out;
}

double accuracy_weighted_mixture(std::span<const double> posteriors, std::span<const double> accuracies)
{
    if (posteriors.empty() || posteriors.size() != accuracies.size()) {
        throw DomainError("accuracy_weighted_mixture: need K >= 1 posteriors with matching accuracies");
    }
    double weighted = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < posteriors.size(); ++k) {
        if (!(accuracies[k] > 0.0) || !std::isfinite(accuracies[k])) {
            throw DomainError("accuracy_weighted_mixture: accuracies must be positive");
        }
        if (!(posteriors[k] >= 0.0 && posteriors[k] <= 1.0)) {
            throw DomainError("accuracy_weighted_mixture: posteriors must lie in [0, 1]");
        }
        weighted += posteriors[k] * accuracies[k];
        total += accuracies[k];
    }
    const auto [lo, hi] = std::minmax_element(posteriors.begin(), posteriors.end());
    return std::clamp(weighted / total, *lo, *hi);
}

}  // namespace calibra
