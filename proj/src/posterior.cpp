#include "calibra/posterior.hpp"

#include <cmath>

namespace calibra {

double posterior_from_likelihood_ratio(double likelihood_ratio, double prior_pi)
{
    if (prior_pi >= 1.0) {
        return 1.0;
    }
    if (prior_pi <= 0.0) {
        return 0.0;
    }
    if (std::isinf(likelihood_ratio)) {
        return 1.0;
    }
    if (likelihood_ratio == 0.0) {
        return 0.0;
    }
    return 1.0 / (1.0 + (1.0 / likelihood_ratio) * (1.0 - prior_pi) / prior_pi);
}

}  // namespace calibra
