#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "calibra/posterior.hpp"
#include "calibra/score_set.hpp"

namespace calibra {

/// Generalized lambda distribution in the Ramberg-Schmeiser form
///
///     Q(u) = lambda1 + (u^lambda3 - (1 - u)^lambda4) / lambda2.
///
/// Two parameter regions are accepted: lambda2, lambda3, lambda4 all
/// positive (bounded support), or all three negative (unbounded support).
/// The constructor rejects any other sign pattern and checks that Q is
/// nondecreasing on a 1024-point grid.
class GldParams {
public:
    GldParams(double lambda1, double lambda2, double lambda3, double lambda4);

    double lambda1() const noexcept { return lambda1_; }
    double lambda2() const noexcept { return lambda2_; }
    double lambda3() const noexcept { return lambda3_; }
    double lambda4() const noexcept { return lambda4_; }

    bool bounded() const noexcept { return lambda2_ > 0.0; }

    GldParams shifted(double delta) const { return {lambda1_ + delta, lambda2_, lambda3_, lambda4_}; }

private:
    double lambda1_;
    double lambda2_;
    double lambda3_;
    double lambda4_;
};

double gld_quantile(const GldParams& params, double u);

/// Density at x via the quantile-density identity f(Q(u)) = 1 / Q'(u).
/// Returns 0 outside the support. Throws NumericError if the inversion
/// u = Q^{-1}(x) fails to converge.
double gld_density(const GldParams& params, double x);

/// CDF u = Q^{-1}(x) by safeguarded Newton iteration on the tail coordinate.
double gld_cdf(const GldParams& params, double x);

enum class DistKind { gld, normal, truncated_exponential, flipped_truncated_exponential };

std::string_view to_string(DistKind kind) noexcept;

struct NormalParams {
    double mu = 0.0;
    double sigma = 1.0;
};

struct TruncExpParams {
    double rate = 1.0;
};

using DistParams = std::variant<GldParams, NormalParams, TruncExpParams>;

/// A score distribution plus an affine standardization Z = (X - center) / scale.
///
/// raw_* functions describe X, the unprefixed ones describe Z. Specs are
/// immutable; standardize() and with_standardization() return new values.
class DistSpec {
public:
    static DistSpec gld(const GldParams& params);
    static DistSpec normal(double mu, double sigma);
    static DistSpec truncated_exponential(double rate);
    static DistSpec flipped_truncated_exponential(double rate);

    DistKind kind() const noexcept { return kind_; }
    const DistParams& params() const noexcept { return params_; }
    double center() const noexcept { return center_; }
    double scale() const noexcept { return scale_; }

    DistSpec with_standardization(double center, double scale) const;

    double raw_quantile(double u) const;
    double raw_density(double x) const;
    std::pair<double, double> raw_support() const noexcept;

    double quantile(double u) const { return (raw_quantile(u) - center_) / scale_; }
    double density(double z) const { return scale_ * raw_density(center_ + scale_ * z); }
    std::pair<double, double> support() const noexcept;

private:
    DistSpec(DistKind kind, DistParams params) : kind_(kind), params_(std::move(params)) {}

    DistKind kind_;
    DistParams params_;
    double center_ = 0.0;
    double scale_ = 1.0;
};

/// The four basic score distributions: "a" symmetric GLD, "b" and "c" the
/// two skewed GLDs, "d" normal. Location parameters are zero.
DistSpec basic_distribution(std::string_view name);

inline constexpr std::size_t kStandardizeSampleSize = 1'000'000;

/// Resolve (center, scale) so the variable has mean 0 and sd 1.
///
/// GLD and truncated-exponential kinds use the sample mean and sd of
/// 10^6 draws at `seed`, composed with any existing standardization.
/// Normal kinds use their exact moments. Throws NumericError when the
/// sample sd is <= 1e-12.
DistSpec standardize(const DistSpec& spec, std::uint64_t seed);

/// Pr(X0 < X1 + shift) estimated over a fixed 2048 x 2048 midpoint grid of
/// quantile values; ties count 1/2.
double grid_auc(const DistSpec& f0, const DistSpec& f1, double shift);

inline constexpr std::size_t kAucGridSize = 2048;

/// Location offset for F1 that makes grid_auc(f0, f1, shift) hit the target.
/// Bisection over [-20, 20].
double resolve_shift_for_auc(const DistSpec& f0, const DistSpec& f1, double target_auc);

/// AUC of the truncated-exponential pair at `rate`, same grid as grid_auc.
double truncexp_auc(double rate);

/// Rate lambda in (0, 1e4] giving the truncated-exponential pair the target AUC.
double resolve_rate_for_auc_truncexp(double target_auc);

struct PairConfig {
    DistSpec f0;
    DistSpec f1;
    double target_auc = 0.0;
    double shift = 0.0;
    double prior_pi = 0.5;
};

/// Resolve the shift for already standardized f0, f1. Verifies the result
/// reproduces the target within 1e-3.
PairConfig make_pair_config(const DistSpec& f0, const DistSpec& f1, double target_auc, double prior_pi = 0.5);

/// Truncated exponential F0 and flipped F1 sharing the resolved rate; no shift.
PairConfig make_truncexp_pair_config(double target_auc, double prior_pi = 0.5);

/// Per-class bivariate scores: f{class}{score}. Each (f0j, f1j) pair has its own shift.
struct MultiConfig {
    DistSpec f01;
    DistSpec f02;
    DistSpec f11;
    DistSpec f12;
    double target_auc = 0.0;
    double shift1 = 0.0;
    double shift2 = 0.0;
    double rho = 0.0;
    double prior_pi = 0.5;
};

MultiConfig make_multi_config(const DistSpec& f01, const DistSpec& f02, const DistSpec& f11, const DistSpec& f12,
                              double target_auc, double rho, double prior_pi = 0.5);

/// Second score from two independent draws: rho * v1 + sqrt(1 - rho^2) * v2.
double correlate(double v1, double v2, double rho);

LabeledScoreSet sample_pair(const PairConfig& config, std::size_t n0, std::size_t n1, std::uint64_t seed);

LabeledScoreSet sample_correlated_pair(const MultiConfig& config, std::size_t n0, std::size_t n1,
                                       std::uint64_t seed);

/// True posterior Pr(class 1 | scores) for a known simulation configuration.
class PosteriorOracle {
public:
    explicit PosteriorOracle(PairConfig config) : config_(std::move(config)) {}
    explicit PosteriorOracle(MultiConfig config) : config_(std::move(config)) {}

    bool is_multi() const noexcept { return std::holds_alternative<MultiConfig>(config_); }
    std::size_t dims() const noexcept { return is_multi() ? 2 : 1; }
    const std::variant<PairConfig, MultiConfig>& config() const noexcept { return config_; }

    /// Class-conditional density ratio f(h | class 1) / f(h | class 0).
    double likelihood_ratio(double h) const;
    double likelihood_ratio(double h1, double h2) const;

    /// Posterior for every row of `scores` (n x dims()).
    std::vector<double> posteriors(const ScoreMatrix& scores) const;

private:
    std::variant<PairConfig, MultiConfig> config_;
};

/// Throws DomainError if the oracle is multi-score, NumericError if both
/// class densities vanish at h.
double true_posterior_single(const PosteriorOracle& oracle, double h);

double true_posterior_multi(const PosteriorOracle& oracle, double h1, double h2);

}  // namespace calibra
