#include "iotwm/fingerprint.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "iotwm/mathx.hpp"
#include "iotwm/rng.hpp"

namespace iotwm {

namespace {

// Direct DFT magnitudes for bins 1..L/2. Window lengths here are small
// (tens to a few thousand samples), so O(L^2) beats dragging in an FFT.
std::vector<double> dft_magnitudes(const std::vector<double>& x) {
    const std::size_t L = x.size();
    const std::size_t half = L / 2;
    std::vector<double> mag(half);
    const double w0 = 2.0 * M_PI / static_cast<double>(L);
    for (std::size_t k = 1; k <= half; ++k) {
        double re = 0.0, im = 0.0;
        const double wk = w0 * static_cast<double>(k);
        for (std::size_t t = 0; t < L; ++t) {
            re += x[t] * std::cos(wk * static_cast<double>(t));
            im -= x[t] * std::sin(wk * static_cast<double>(t));
        }
        mag[k - 1] = std::hypot(re, im);
    }
    return mag;
}

int quant12(double x, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("quantize: bad feature range");
    double v = (x - lo) / (hi - lo);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    const int q = static_cast<int>(std::lround(v * 4095.0));
    return q < 0 ? 0 : (q > 4095 ? 4095 : q);
}

}  // namespace

FingerprintVector features(const std::vector<double>& window) {
    if (window.size() < 4) throw std::invalid_argument("features: window must have >= 4 samples");

    FingerprintVector fp;
    fp.mean = mean(window);
    const double m2 = variance_pop(window);
    if (m2 <= 0.0) throw std::invalid_argument("features: constant window has no fingerprint");
    fp.variance = m2;

    double m3 = 0.0, m4 = 0.0;
    for (double x : window) {
        const double dx = x - fp.mean;
        m3 += dx * dx * dx;
        m4 += dx * dx * dx * dx;
    }
    m3 /= static_cast<double>(window.size());
    m4 /= static_cast<double>(window.size());
    fp.skewness = m3 / std::pow(m2, 1.5);
    fp.kurtosis = m4 / (m2 * m2);

    const std::vector<double> mag = dft_magnitudes(window);
    double arith = 0.0;
    double logsum = 0.0;
    bool zero_bin = false;
    for (double a : mag) {
        arith += a;
        if (a <= 0.0) {
            zero_bin = true;
        } else {
            logsum += std::log(a);
        }
    }
    arith /= static_cast<double>(mag.size());
    if (arith <= 0.0 || zero_bin) {
        fp.flatness = 0.0;  // a silent or pure-tone spectrum is maximally peaky
    } else {
        const double geo = std::exp(logsum / static_cast<double>(mag.size()));
        fp.flatness = geo / arith;
        if (fp.flatness > 1.0) fp.flatness = 1.0;  // guard rounding at the top
    }
    return fp;
}

BitStream quantize(const FingerprintVector& fp, int ns, std::uint64_t salt,
                   const QuantizerConfig& cfg) {
    if (ns < 1 || ns > 4096) throw std::invalid_argument("quantize: ns out of range [1, 4096]");

    const std::uint64_t q0 = static_cast<std::uint64_t>(quant12(fp.flatness, cfg.flatness_lo, cfg.flatness_hi));
    const std::uint64_t q1 = static_cast<std::uint64_t>(quant12(fp.mean, cfg.mean_lo, cfg.mean_hi));
    const std::uint64_t q2 = static_cast<std::uint64_t>(quant12(fp.variance, cfg.variance_lo, cfg.variance_hi));
    const std::uint64_t q3 = static_cast<std::uint64_t>(quant12(fp.skewness, cfg.skewness_lo, cfg.skewness_hi));
    const std::uint64_t q4 = static_cast<std::uint64_t>(quant12(fp.kurtosis, cfg.kurtosis_lo, cfg.kurtosis_hi));
    const std::uint64_t packed = (q0 << 48) | (q1 << 36) | (q2 << 24) | (q3 << 12) | q4;

    const std::uint64_t state = mix64(packed ^ mix64(salt));
    BitStream bits(static_cast<std::size_t>(ns));
    std::uint64_t word = 0;
    for (int i = 0; i < ns; ++i) {
        const int j = i % 64;
        if (j == 0) word = mix64(state ^ (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(i) / 64 + 1)));
        bits[i] = ((word >> (63 - j)) & 1u) ? 1 : -1;
    }
    return bits;
}

std::string feature_csv_header() { return "flatness,mean,variance,skewness,kurtosis"; }

std::string feature_csv_row(const FingerprintVector& fp) {
    std::ostringstream ss;
    ss.precision(17);
    ss << fp.flatness << ',' << fp.mean << ',' << fp.variance << ',' << fp.skewness << ','
       << fp.kurtosis;
    return ss.str();
}

}  // namespace iotwm
