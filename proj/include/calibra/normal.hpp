#pragma once

namespace calibra {

double normal_pdf(double x) noexcept;

double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF (Wichura, AS 241), relative accuracy ~1e-16.
/// Throws DomainError for p outside (0, 1).
double normal_quantile(double p);

}  // namespace calibra
