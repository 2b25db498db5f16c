#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotwm/watermark.hpp"

namespace iotwm {

// Window features the bit stream is derived from. All moment estimators are
// population ones, so the vector is a pure function of the window samples.
struct FingerprintVector {
    double flatness = 0.0;   // spectral flatness in [0, 1]
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;   // non-excess (Gaussian ~ 3)
};

// Fixed-point ranges used before hashing. Values outside a range clamp to
// its edge; each feature quantizes to 12 bits across [lo, hi].
struct QuantizerConfig {
    double flatness_lo = 0.0, flatness_hi = 1.0;
    double mean_lo = -10.0, mean_hi = 10.0;
    double variance_lo = 0.0, variance_hi = 100.0;
    double skewness_lo = -5.0, skewness_hi = 5.0;
    double kurtosis_lo = 0.0, kurtosis_hi = 20.0;
};

// Compute the fingerprint of one window. The spectral flatness is the
// geometric over arithmetic mean of the DFT magnitude bins, DC excluded
// (bins 1..L/2). Requires length >= 4 and a non-constant window.
FingerprintVector features(const std::vector<double>& window);

// Map a fingerprint to ns watermark bits: quantize each feature to 12-bit
// fixed point, pack, and expand through a salted 64-bit mixing hash in
// counter mode. Any feature change of at least one quantization step flips
// the whole stream with avalanche probability.
BitStream quantize(const FingerprintVector& fp, int ns, std::uint64_t salt,
                   const QuantizerConfig& cfg = {});

std::string feature_csv_header();
std::string feature_csv_row(const FingerprintVector& fp);

}  // namespace iotwm
