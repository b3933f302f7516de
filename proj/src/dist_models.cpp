#include "calibra/dist_models.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <optional>

#include "calibra/error.hpp"
#include "calibra/normal.hpp"
#include "calibra/random.hpp"

namespace calibra {

namespace {

constexpr int kMaxInversionIterations = 200;
constexpr double kInversionTolerance = 1e-10;
constexpr int kMonotonicityGrid = 1024;

void require_open_unit(double u, const char* what)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError(std::string(what) + ": u must lie in (0, 1)");
    }
}

// Position of x on the GLD in tail coordinates: t = u on the lower half,
// t = 1 - u on the upper half, so both tails keep full relative precision.
struct TailPosition {
    double t;
    bool upper;
};

double gld_tail_value(const GldParams& p, double t, bool upper)
{
    if (upper) {
        return p.lambda1() + (std::pow(1.0 - t, p.lambda3()) - std::pow(t, p.lambda4())) / p.lambda2();
    }
    return p.lambda1() + (std::pow(t, p.lambda3()) - std::pow(1.0 - t, p.lambda4())) / p.lambda2();
}

// lambda2 * dQ/du expressed in tail coordinates.
double gld_tail_slope(const GldParams& p, double t, bool upper)
{
    const double u = upper ? 1.0 - t : t;
    const double v = upper ? t : 1.0 - t;
    return p.lambda3() * std::pow(u, p.lambda3() - 1.0) + p.lambda4() * std::pow(v, p.lambda4() - 1.0);
}

// Solves Q(u) = x. Returns nullopt when x lies beyond the representable tail
// (or outside a bounded support).
std::optional<TailPosition> gld_invert(const GldParams& p, double x)
{
    if (!std::isfinite(x)) {
        return std::nullopt;
    }
    const double median = gld_tail_value(p, 0.5, false);
    const bool upper = x > median;
    if (x == median) {
        return TailPosition{0.5, false};
    }

    // g(s) = Q at t = exp(s); increasing in s on the lower tail, decreasing on the upper.
    const auto g = [&](double s) { return gld_tail_value(p, std::exp(s), upper); };
    const double sign = upper ? -1.0 : 1.0;

    double a = std::log(DBL_MIN);
    double b = std::log(0.5);
    const double extreme = g(a);
    if (sign * (x - extreme) <= 0.0) {
        return std::nullopt;
    }

    // Typical scores sit in the body of the distribution, so Newton starts there.
    double s = std::log(0.25);
    for (int iter = 0; iter < kMaxInversionIterations; ++iter) {
        const double t = std::exp(s);
        const double residual = g(s) - x;
        if (std::abs(residual) <= kInversionTolerance) {
            return TailPosition{t, upper};
        }
        // Keep [a, b] bracketing the root.
        if (sign * residual < 0.0) {
            a = s;
        } else {
            b = s;
        }
        if (b - a <= 4.0 * DBL_EPSILON * std::max(1.0, std::abs(s))) {
            return TailPosition{t, upper};
        }
        const double dg = (upper ? -1.0 : 1.0) * gld_tail_slope(p, t, upper) / p.lambda2() * t;
        double next = s - residual / dg;
        if (!std::isfinite(next) || next <= a || next >= b) {
            next = 0.5 * (a + b);
        }
        s = next;
    }
    throw NumericError("gld_density: quantile inversion did not converge for x = " + std::to_string(x));
}

std::vector<double> quantile_grid(const DistSpec& spec)
{
    std::vector<double> q(kAucGridSize);
    for (std::size_t i = 0; i < kAucGridSize; ++i) {
        q[i] = spec.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(kAucGridSize));
    }
    std::sort(q.begin(), q.end());
    return q;
}

double grid_auc_sorted(const std::vector<double>& q0, const std::vector<double>& q1, double shift)
{
    double total = 0.0;
    for (double x1 : q1) {
        const double y = x1 + shift;
        const auto lo = std::lower_bound(q0.begin(), q0.end(), y);
        const auto hi = std::upper_bound(lo, q0.end(), y);
        total += static_cast<double>(lo - q0.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return total / (static_cast<double>(q0.size()) * static_cast<double>(q1.size()));
}

void require_auc_target(double target_auc)
{
    if (!(target_auc > 0.5 && target_auc < 1.0)) {
        throw DomainError("target AUC must lie in (0.5, 1)");
    }
}

void require_prior(double prior_pi)
{
    if (!(prior_pi >= 0.0 && prior_pi <= 1.0)) {
        throw DomainError("prior must lie in [0, 1]");
    }
}

double truncexp_quantile(double rate, double u)
{
    return -std::log1p(u * std::expm1(-rate)) / rate;
}

double truncexp_density(double rate, double x)
{
    if (x < 0.0 || x > 1.0) {
        return 0.0;
    }
    return rate * std::exp(-rate * x) / -std::expm1(-rate);
}

double ratio_from_densities(double f1, double f0)
{
    if (f0 == 0.0 && f1 == 0.0) {
        throw NumericError("posterior undefined: both class densities vanish");
    }
    if (f0 == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return f1 / f0;
}

}  // namespace

// --- GLD -------------------------------------------------------------------

GldParams::GldParams(double lambda1, double lambda2, double lambda3, double lambda4)
    : lambda1_(lambda1), lambda2_(lambda2), lambda3_(lambda3), lambda4_(lambda4)
{
    if (!std::isfinite(lambda1) || !std::isfinite(lambda2) || !std::isfinite(lambda3) || !std::isfinite(lambda4)) {
        throw DomainError("GLD parameters must be finite");
    }
    const bool positive = lambda2 > 0.0 && lambda3 > 0.0 && lambda4 > 0.0;
    const bool negative = lambda2 < 0.0 && lambda3 < 0.0 && lambda4 < 0.0;
    if (!positive && !negative) {
        throw DomainError("GLD parameters outside the supported regions (lambda2..4 all > 0 or all < 0)");
    }
    double previous = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < kMonotonicityGrid; ++i) {
        const double q = gld_quantile(*this, static_cast<double>(i) / kMonotonicityGrid);
        if (q < previous) {
            throw DomainError("GLD quantile function is not monotone for these parameters");
        }
        previous = q;
    }
}

double gld_quantile(const GldParams& params, double u)
{
    require_open_unit(u, "gld_quantile");
    return params.lambda1() + (std::pow(u, params.lambda3()) - std::pow(1.0 - u, params.lambda4())) / params.lambda2();
}

double gld_density(const GldParams& params, double x)
{
    if (params.bounded()) {
        const double half_width = 1.0 / params.lambda2();
        if (x <= params.lambda1() - half_width || x >= params.lambda1() + half_width) {
            return 0.0;
        }
    }
    const auto pos = gld_invert(params, x);
    if (!pos) {
        return 0.0;
    }
    const double slope = gld_tail_slope(params, pos->t, pos->upper);
    const double f = params.lambda2() / slope;
    return std::isfinite(f) && f > 0.0 ? f : 0.0;
}

double gld_cdf(const GldParams& params, double x)
{
    const double lo = params.bounded() ? params.lambda1() - 1.0 / params.lambda2()
                                       : -std::numeric_limits<double>::infinity();
    const double hi = params.bounded() ? params.lambda1() + 1.0 / params.lambda2()
                                       : std::numeric_limits<double>::infinity();
    if (x <= lo) {
        return 0.0;
    }
    if (x >= hi) {
        return 1.0;
    }
    const auto pos = gld_invert(params, x);
    if (!pos) {
        return x > params.lambda1() ? 1.0 : 0.0;
    }
    return pos->upper ? 1.0 - pos->t : pos->t;
}

// --- DistSpec --------------------------------------------------------------

std::string_view to_string(DistKind kind) noexcept
{
    switch (kind) {
    case DistKind::gld: return "gld";
    case DistKind::normal: return "normal";
    case DistKind::truncated_exponential: return "truncated_exponential";
    case DistKind::flipped_truncated_exponential: return "flipped_truncated_exponential";
    }
    return "unknown";
}

DistSpec DistSpec::gld(const GldParams& params)
{
    return {DistKind::gld, params};
}

DistSpec DistSpec::normal(double mu, double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
        throw DomainError("normal distribution needs finite mu and sigma > 0");
    }
    return {DistKind::normal, NormalParams{mu, sigma}};
}

DistSpec DistSpec::truncated_exponential(double rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw DomainError("truncated exponential rate must be positive");
    }
    return {DistKind::truncated_exponential, TruncExpParams{rate}};
}

DistSpec DistSpec::flipped_truncated_exponential(double rate)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw DomainError("truncated exponential rate must be positive");
    }
    return {DistKind::flipped_truncated_exponential, TruncExpParams{rate}};
}

DistSpec DistSpec::with_standardization(double center, double scale) const
{
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center)) {
        throw DomainError("standardization needs finite center and scale > 0");
    }
    DistSpec out = *this;
    out.center_ = center;
    out.scale_ = scale;
    return out;
}

double DistSpec::raw_quantile(double u) const
{
    require_open_unit(u, "quantile");
    switch (kind_) {
    case DistKind::gld:
        return gld_quantile(std::get<GldParams>(params_), u);
    case DistKind::normal: {
        const auto& p = std::get<NormalParams>(params_);
        return p.mu + p.sigma * normal_quantile(u);
    }
    case DistKind::truncated_exponential:
        return truncexp_quantile(std::get<TruncExpParams>(params_).rate, u);
    case DistKind::flipped_truncated_exponential:
        return 1.0 - truncexp_quantile(std::get<TruncExpParams>(params_).rate, 1.0 - u);
    }
    throw DomainError("unknown distribution kind");
}

double DistSpec::raw_density(double x) const
{
    switch (kind_) {
    case DistKind::gld:
        return gld_density(std::get<GldParams>(params_), x);
    case DistKind::normal: {
        const auto& p = std::get<NormalParams>(params_);
        return normal_pdf((x - p.mu) / p.sigma) / p.sigma;
    }
    case DistKind::truncated_exponential:
        return truncexp_density(std::get<TruncExpParams>(params_).rate, x);
    case DistKind::flipped_truncated_exponential:
        return truncexp_density(std::get<TruncExpParams>(params_).rate, 1.0 - x);
    }
    throw DomainError("unknown distribution kind");
}

std::pair<double, double> DistSpec::raw_support() const noexcept
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (kind_) {
    case DistKind::gld: {
        const auto& p = std::get<GldParams>(params_);
        if (p.bounded()) {
            return {p.lambda1() - 1.0 / p.lambda2(), p.lambda1() + 1.0 / p.lambda2()};
        }
        return {-inf, inf};
    }
    case DistKind::normal:
        return {-inf, inf};
    case DistKind::truncated_exponential:
    case DistKind::flipped_truncated_exponential:
        return {0.0, 1.0};
    }
    return {-inf, inf};
}

std::pair<double, double> DistSpec::support() const noexcept
{
    const auto [lo, hi] = raw_support();
    return {(lo - center_) / scale_, (hi - center_) / scale_};
}

DistSpec basic_distribution(std::string_view name)
{
    if (name == "a") {
        return DistSpec::gld(GldParams(0.0, -0.1125, -0.1359, -0.1359));
    }
    if (name == "b") {
        return DistSpec::gld(GldParams(0.0, 0.014, 0.009695, 0.0285));
    }
    if (name == "c") {
        return DistSpec::gld(GldParams(0.0, 0.014, 0.0285, 0.009695));
    }
    if (name == "d") {
        return DistSpec::normal(0.0, 1.0);
    }
    throw DomainError("unknown basic distribution '" + std::string(name) + "' (expected a, b, c or d)");
}

DistSpec standardize(const DistSpec& spec, std::uint64_t seed)
{
    if (spec.kind() == DistKind::normal) {
        const auto& p = std::get<NormalParams>(spec.params());
        return spec.with_standardization(p.mu, p.sigma);
    }

    UniformSource uniform(seed);
    std::vector<double> draws(kStandardizeSampleSize);
    for (double& z : draws) {
        z = spec.quantile(uniform());
    }
    double mean = 0.0;
    for (double z : draws) {
        mean += z;
    }
    mean /= static_cast<double>(draws.size());
    double ss = 0.0;
    for (double z : draws) {
        ss += (z - mean) * (z - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(draws.size() - 1));
    if (!(sd > 1e-12)) {
        throw NumericError("standardize: degenerate sample standard deviation");
    }
    return spec.with_standardization(spec.center() + spec.scale() * mean, spec.scale() * sd);
}

// --- AUC targeting ---------------------------------------------------------

double grid_auc(const DistSpec& f0, const DistSpec& f1, double shift)
{
    return grid_auc_sorted(quantile_grid(f0), quantile_grid(f1), shift);
}

double resolve_shift_for_auc(const DistSpec& f0, const DistSpec& f1, double target_auc)
{
    require_auc_target(target_auc);
    const auto q0 = quantile_grid(f0);
    const auto q1 = quantile_grid(f1);

    double lo = -20.0;
    double hi = 20.0;
    if (grid_auc_sorted(q0, q1, lo) > target_auc || grid_auc_sorted(q0, q1, hi) < target_auc) {
        throw NumericError("resolve_shift_for_auc: target not bracketed within [-20, 20]");
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (grid_auc_sorted(q0, q1, mid) < target_auc) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double truncexp_auc(double rate)
{
    return grid_auc(DistSpec::truncated_exponential(rate), DistSpec::flipped_truncated_exponential(rate), 0.0);
}

double resolve_rate_for_auc_truncexp(double target_auc)
{
    require_auc_target(target_auc);
    constexpr double max_rate = 1e4;
    if (truncexp_auc(max_rate) < target_auc) {
        throw NumericError("resolve_rate_for_auc_truncexp: target AUC unreachable for rate <= 1e4");
    }
    // Bisection on log(rate); AUC increases with rate.
    double lo = std::log(1e-9);
    double hi = std::log(max_rate);
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (truncexp_auc(std::exp(mid)) < target_auc) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::exp(0.5 * (lo + hi));
}

PairConfig make_pair_config(const DistSpec& f0, const DistSpec& f1, double target_auc, double prior_pi)
{
    require_prior(prior_pi);
    const double shift = resolve_shift_for_auc(f0, f1, target_auc);
    if (std::abs(grid_auc(f0, f1, shift) - target_auc) > 1e-3) {
        throw NumericError("resolved shift does not reproduce the target AUC");
    }
    return PairConfig{f0, f1, target_auc, shift, prior_pi};
}

PairConfig make_truncexp_pair_config(double target_auc, double prior_pi)
{
    require_prior(prior_pi);
    const double rate = resolve_rate_for_auc_truncexp(target_auc);
    return PairConfig{DistSpec::truncated_exponential(rate), DistSpec::flipped_truncated_exponential(rate),
                      target_auc, 0.0, prior_pi};
}

MultiConfig make_multi_config(const DistSpec& f01, const DistSpec& f02, const DistSpec& f11, const DistSpec& f12,
                              double target_auc, double rho, double prior_pi)
{
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw DomainError("rho must lie in [0, 1)");
    }
    const PairConfig first = make_pair_config(f01, f11, target_auc, prior_pi);
    const PairConfig second = make_pair_config(f02, f12, target_auc, prior_pi);
    return MultiConfig{f01, f02, f11, f12, target_auc, first.shift, second.shift, rho, prior_pi};
}

// --- sampling --------------------------------------------------------------

double correlate(double v1, double v2, double rho)
{
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw DomainError("rho must lie in [0, 1)");
    }
    return v1 * rho + v2 * std::sqrt(1.0 - rho * rho);
}

LabeledScoreSet sample_pair(const PairConfig& config, std::size_t n0, std::size_t n1, std::uint64_t seed)
{
    if (n0 == 0 || n1 == 0) {
        throw DomainError("sample_pair: both class sizes must be at least 1");
    }
    UniformSource uniform(seed);
    LabeledScoreSet out;
    out.scores.resize(static_cast<Eigen::Index>(n0 + n1), 1);
    out.labels.resize(n0 + n1);
    for (std::size_t i = 0; i < n0; ++i) {
        out.scores(static_cast<Eigen::Index>(i), 0) = config.f0.quantile(uniform());
        out.labels[i] = 0;
    }
    for (std::size_t i = n0; i < n0 + n1; ++i) {
        out.scores(static_cast<Eigen::Index>(i), 0) = config.f1.quantile(uniform()) + config.shift;
        out.labels[i] = 1;
    }
    return out;
}

LabeledScoreSet sample_correlated_pair(const MultiConfig& config, std::size_t n0, std::size_t n1,
                                       std::uint64_t seed)
{
    if (n0 == 0 || n1 == 0) {
        throw DomainError("sample_correlated_pair: both class sizes must be at least 1");
    }
    if (!(config.rho >= 0.0 && config.rho < 1.0)) {
        throw DomainError("rho must lie in [0, 1)");
    }
    UniformSource uniform(seed);
    LabeledScoreSet out;
    out.scores.resize(static_cast<Eigen::Index>(n0 + n1), 2);
    out.labels.resize(n0 + n1);
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const bool positive = i >= n0;
        const double v1 = positive ? config.f11.quantile(uniform()) + config.shift1 : config.f01.quantile(uniform());
        const double v2 = positive ? config.f12.quantile(uniform()) + config.shift2 : config.f02.quantile(uniform());
        const auto row = static_cast<Eigen::Index>(i);
        out.scores(row, 0) = v1;
        out.scores(row, 1) = correlate(v1, v2, config.rho);
        out.labels[i] = positive ? 1 : 0;
    }
    return out;
}

// --- posterior oracle ------------------------------------------------------

double PosteriorOracle::likelihood_ratio(double h) const
{
    const auto* pair = std::get_if<PairConfig>(&config_);
    if (pair == nullptr) {
        throw DomainError("single-score posterior requested from a multi-score oracle");
    }
    return ratio_from_densities(pair->f1.density(h - pair->shift), pair->f0.density(h));
}

double PosteriorOracle::likelihood_ratio(double h1, double h2) const
{
    const auto* multi = std::get_if<MultiConfig>(&config_);
    if (multi == nullptr) {
        throw DomainError("multi-score posterior requested from a single-score oracle");
    }
    // Inverse of the correlating transform: v1 = h1, v2 = (h2 - rho h1) / c.
    const double c = std::sqrt(1.0 - multi->rho * multi->rho);
    const double v2 = (h2 - multi->rho * h1) / c;
    const double f0 = multi->f01.density(h1) * multi->f02.density(v2) / c;
    const double f1 = multi->f11.density(h1 - multi->shift1) * multi->f12.density(v2 - multi->shift2) / c;
    return ratio_from_densities(f1, f0);
}

std::vector<double> PosteriorOracle::posteriors(const ScoreMatrix& scores) const
{
    if (static_cast<std::size_t>(scores.cols()) != dims()) {
        throw DomainError("oracle dimension does not match score columns");
    }
    std::vector<double> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = is_multi() ? true_posterior_multi(*this, scores(i, 0), scores(i, 1))
                                                      : true_posterior_single(*this, scores(i, 0));
    }
    return out;
}

double true_posterior_single(const PosteriorOracle& oracle, double h)
{
    const double ratio = oracle.likelihood_ratio(h);
    return posterior_from_likelihood_ratio(ratio, std::get<PairConfig>(oracle.config()).prior_pi);
}

double true_posterior_multi(const PosteriorOracle& oracle, double h1, double h2)
{
    const double ratio = oracle.likelihood_ratio(h1, h2);
    return posterior_from_likelihood_ratio(ratio, std::get<MultiConfig>(oracle.config()).prior_pi);
}

}  // namespace calibra
