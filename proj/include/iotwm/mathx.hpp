#pragma once

#include <cstdint>
#include <vector>

namespace iotwm {

// Complementary error function, implemented here rather than taken from
// <cmath>: power series below x=1, Lentz continued fraction above.
// Absolute error <= 1e-12 over the real line (see test_mathx.cpp).
double erfc_approx(double x);

// Tail P{Binomial(n, p) >= k}. Used for false-alarm budgets.
double binomial_tail_geq(int n, double p, int k);

double mean(const std::vector<double>& v);
// Population variance (divide by n). The moment features use population
// estimators throughout so a window's fingerprint is a pure function of
// its samples.
double variance_pop(const std::vector<double>& v);
// Unbiased sample variance (divide by n-1), for model estimation.
double variance_sample(const std::vector<double>& v);

}  // namespace iotwm
