#pragma once

namespace calibra {

/// Bayes posterior Pr(class 1 | h) from the likelihood ratio L and prior pi:
/// 1 / (1 + L^{-1} (1 - pi) / pi). L may be 0 or +inf; pi = 0 and pi = 1
/// return 0 and 1 regardless of L.
double posterior_from_likelihood_ratio(double likelihood_ratio, double prior_pi);

}  // namespace calibra
