#include "iotwm/mathx.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace iotwm {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955125739;   // 2/sqrt(pi)
constexpr double kOneOverSqrtPi = 0.5641895835477562869;   // 1/sqrt(pi)

// erf(x) for 0 <= x <= 1 via the cancellation-free confluent series
//   erf(x) = (2/sqrt(pi)) * x * exp(-x^2) * sum_k (2x^2)^k / (1*3*...*(2k+1))
// All terms positive, so no precision is lost to alternation.
double erf_series(double x) {
    const double x2 = x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 80; ++k) {
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return kTwoOverSqrtPi * x * std::exp(-x2) * sum;
}

// erfc(x) for x >= 1 via the Laplace continued fraction
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(...))))
// evaluated with the modified Lentz algorithm.
double erfc_cf(double x) {
    const double tiny = 1e-300;
    double f = x != 0.0 ? x : tiny;
    double c = f;
    double d = 0.0;
    for (int k = 1; k <= 300; ++k) {
        const double a = 0.5 * k;  // numerator of the k-th partial fraction
        d = x + a * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + a / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    // f now approximates x + CF tail; erfc = exp(-x^2)/sqrt(pi) / f.
    return kOneOverSqrtPi * std::exp(-x * x) / f;
}

}  // namespace

double erfc_approx(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) return 2.0 - erfc_approx(-x);
    if (x > 26.7) return 0.0;  // below double underflow threshold
    if (x <= 1.0) return 1.0 - erf_series(x);
    return erfc_cf(x);
}

double binomial_tail_geq(int n, double p, int k) {
    if (n < 0 || p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_tail_geq: bad arguments");
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    // Sum pmf from k upward; log-space per term to dodge overflow in C(n,i).
    double tail = 0.0;
    for (int i = k; i <= n; ++i) {
        double lg = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        if (p > 0.0 && p < 1.0) {
            lg += i * std::log(p) + (n - i) * std::log1p(-p);
        } else if (p == 0.0) {
            return i == 0 ? 1.0 : 0.0;  // only i==k==0 contributes, handled above
        } else {  // p == 1
            return 1.0;                 // all mass at i==n >= k
        }
        tail += std::exp(lg);
    }
    return tail < 1.0 ? tail : 1.0;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean: empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance_pop(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

double variance_sample(const std::vector<double>& v) {
    if (v.size() < 2) throw std::invalid_argument("variance_sample: need at least 2 samples");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace iotwm
