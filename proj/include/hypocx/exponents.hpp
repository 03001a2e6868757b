#pragma once

#include <cmath>
#include <sstream>

#include "hypocx/common.hpp"

namespace hypocx {

/// The coupled exponents of an L^p problem for a type-sigma field.
///
/// q is the Hölder conjugate of p, tau = sigma/(sigma+1) is the kernel
/// weight exponent and alpha = (2 - q - tau)/q is the Hölder exponent gained
/// by the Cauchy-type operator. Integrability p > 2 + sigma is equivalent to
/// q < 2 - tau, which makes alpha positive.
struct ExponentSet {
    double sigma;
    double p;
    double q;
    double tau;
    double alpha;
};

[[nodiscard]] inline ExponentSet make_exponents(double sigma, double p) {
    require(std::isfinite(sigma) && sigma > 0.0, "make_exponents: sigma must be > 0");
    if (!(std::isfinite(p) && p > 2.0 + sigma)) {
        std::ostringstream msg;
        msg << "make_exponents: p = " << p << " must exceed the threshold 2 + sigma = " << 2.0 + sigma;
        throw InvalidArgument(msg.str());
    }
    ExponentSet e{};
    e.sigma = sigma;
    e.p = p;
    e.q = p / (p - 1.0);
    e.tau = sigma / (sigma + 1.0);
    require(e.q < 2.0 - e.tau, "make_exponents: q < 2 - tau violated");
    e.alpha = (2.0 - e.q - e.tau) / e.q;
    require(e.alpha > 0.0 && e.alpha < 1.0, "make_exponents: alpha outside (0,1)");
    return e;
}

} // namespace hypocx
