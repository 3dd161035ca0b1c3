#pragma once

#include "mosie/error.hpp"

namespace mosie {

// Special functions backing the parametric amplitude estimator: log-gamma and
// Kummer's confluent hypergeometric function M(a, b; x) with b fixed to 1.
//
// Accuracy contracts (checked against extended-precision oracles in the tests):
//   log_gamma        <= 1e-12 relative on z in [1e-3, 100]
//   kummer_m         <= 1e-10 relative for x in [0, 30], finite positive up to x = 700
//   log_kummer_ratio <= 1e-9 absolute for x in [0, 700] (valid well beyond)

struct KummerArgs {
    double a;       // > 0
    double b = 1.0; // only b == 1 supported
    double x;       // series domain [-12, 700]; negative x exists only for the
                    // transformation identity, production callers use x >= 0
};

double log_gamma(double z);

double kummer_m(const KummerArgs& args);
inline double kummer_m(double a, double x) { return kummer_m(KummerArgs{a, 1.0, x}); }

// ln M(a, 1; x) for x >= 0, any a > 0. Power series below x = 30, log-domain
// asymptotic expansion above (the e^x factor never materialises, so arguments
// far beyond the kummer_m overflow range are fine).
double log_kummer_m(double a, double x);

// ln M(a1, 1; x) - ln M(a2, 1; x). The leading x terms of the asymptotic
// branch cancel analytically, which keeps the small-compression exponent
// 1/beta in the estimator stable.
double log_kummer_ratio(double a1, double a2, double x);

} // namespace mosie
