#pragma once

// Reference implementations used only by tests. Each one is written from the
// defining formula and shares no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Literal pair sum with psi(a, b) = 1, 1/2, 0 for a > b, a == b, a < b.
inline double auc_double_loop(const std::vector<double>& s0, const std::vector<double>& s1)
{
    double total = 0.0;
    for (double b : s1) {
        for (double a : s0) {
            total += b > a ? 1.0 : (b == a ? 0.5 : 0.0);
        }
    }
    return total / (static_cast<double>(s0.size()) * static_cast<double>(s1.size()));
}

// Least-squares nondecreasing fit of y by scanning every split of the index
// range into contiguous blocks, each fitted by its mean.
inline std::vector<double> isotonic_exhaustive(const std::vector<double>& y)
{
    const std::size_t n = y.size();
    std::vector<double> best;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::uint32_t cuts = 0; cuts < (1u << (n - 1)); ++cuts) {
        std::vector<double> fit(n);
        std::size_t start = 0;
        double previous = -std::numeric_limits<double>::infinity();
        bool feasible = true;
        for (std::size_t i = 0; i < n && feasible; ++i) {
            const bool ends = i == n - 1 || ((cuts >> i) & 1u);
            if (!ends) {
                continue;
            }
            double mean = 0.0;
            for (std::size_t j = start; j <= i; ++j) {
                mean += y[j];
            }
            mean /= static_cast<double>(i - start + 1);
            if (mean < previous) {
                feasible = false;
            }
            for (std::size_t j = start; j <= i; ++j) {
                fit[j] = mean;
            }
            previous = mean;
            start = i + 1;
        }
        if (!feasible) {
            continue;
        }
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            loss += (y[i] - fit[i]) * (y[i] - fit[i]);
        }
        if (loss < best_loss - 1e-15) {
            best_loss = loss;
            best = fit;
        }
    }
    return best;
}

// sum log(1 + exp(w x + b)) - y (w x + b) + ridge / 2 * w^2, one feature.
inline double penalized_logistic_loss(const std::vector<double>& x, const std::vector<int>& y, double w, double b,
                                      double ridge)
{
    double loss = 0.5 * ridge * w * w;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = w * x[i] + b;
        loss += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y[i] * z;
    }
    return loss;
}

struct Point2 {
    double w;
    double b;
};

// Grid search over a box, then repeated zoom around the best grid point.
inline Point2 logistic_grid_search(const std::vector<double>& x, const std::vector<int>& y, double ridge)
{
    double cw = 0.0, cb = 0.0, half = 20.0;
    for (int round = 0; round < 40; ++round) {
        double best = std::numeric_limits<double>::infinity();
        double bw = cw, bb = cb;
        for (int i = -20; i <= 20; ++i) {
            for (int j = -20; j <= 20; ++j) {
                const double w = cw + half * i / 20.0;
                const double b = cb + half * j / 20.0;
                const double loss = penalized_logistic_loss(x, y, w, b, ridge);
                if (loss < best) {
                    best = loss;
                    bw = w;
                    bb = b;
                }
            }
        }
        cw = bw;
        cb = bb;
        half *= 0.25;
    }
    return {cw, cb};
}

inline double sigmoid(double z)
{
    return 1.0 / (1.0 + std::exp(-z));
}

// Binormal posterior for N(0,1) versus N(mu,1) with prior pi.
inline double binormal_posterior(double h, double mu, double pi)
{
    return sigmoid(mu * h - mu * mu / 2.0 + std::log(pi / (1.0 - pi)));
}

// Posterior for two bivariate normals with unit variances, correlation rho,
// class-0 mean 0 and class-1 mean (m1, m2), via the explicit 2x2 inverse.
inline double bivariate_normal_posterior(double h1, double h2, double m1, double m2, double rho, double pi)
{
    const double det = 1.0 - rho * rho;
    const auto quad = [&](double a, double b) { return (a * a - 2.0 * rho * a * b + b * b) / det; };
    const double log_ratio = -0.5 * quad(h1 - m1, h2 - m2) + 0.5 * quad(h1, h2);
    return sigmoid(log_ratio + std::log(pi / (1.0 - pi)));
}

// Uniform integers drawn with heavy ties for AUC tests.
inline std::vector<double> tied_scores(std::mt19937_64& rng, std::size_t n, int levels)
{
    std::uniform_int_distribution<int> pick(0, levels - 1);
    std::vector<double> out(n);
    for (double& v : out) {
        v = pick(rng) / 16.0;
    }
    return out;
}

}  // namespace oracle
