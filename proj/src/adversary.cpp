#include "iotwm/adversary.hpp"

#include <cmath>
#include <stdexcept>

#include "iotwm/mathx.hpp"
#include "iotwm/rng.hpp"

namespace iotwm {

namespace {

void check_aligned(const std::vector<SignalFrame>& watermarked,
                   const std::vector<SignalFrame>& carriers) {
    if (watermarked.empty()) throw std::invalid_argument("record_and_sum: no recordings");
    if (watermarked.size() != carriers.size()) {
        throw std::invalid_argument("record_and_sum: recordings and carriers differ in count");
    }
    const std::size_t len = watermarked.front().samples.size();
    if (len == 0) throw std::invalid_argument("record_and_sum: empty window");
    for (std::size_t i = 0; i < watermarked.size(); ++i) {
        if (watermarked[i].samples.size() != len || carriers[i].samples.size() != len) {
            throw std::invalid_argument("record_and_sum: windows are not aligned");
        }
    }
}

double ratio_from_sums(const std::vector<double>& wsum, const std::vector<double>& ysum,
                       std::size_t len) {
    // Accumulated watermark power over the variance of the summed carriers.
    std::vector<double> mark(len);
    for (std::size_t t = 0; t < len; ++t) mark[t] = wsum[t] - ysum[t];
    double num = 0.0;
    for (double v : mark) num += v * v;
    num /= static_cast<double>(len);
    const double den = variance_pop(ysum);
    if (den <= 0.0) throw std::invalid_argument("record_and_sum: degenerate carrier sum");
    return num / den;
}

}  // namespace

std::vector<double> inject(const SignalModel& model, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("inject: n_samples must be positive");
    if (model.sigma <= 0.0) throw std::invalid_argument("inject: model sigma must be positive");
    Rng rng(seed);
    std::vector<double> out(n_samples);
    for (auto& x : out) x = rng.gaussian(model.mu, model.sigma);
    return out;
}

AttackTrace record_and_sum(const std::vector<SignalFrame>& watermarked,
                           const std::vector<SignalFrame>& carriers, double beta) {
    check_aligned(watermarked, carriers);
    if (beta <= 0.0) throw std::invalid_argument("record_and_sum: beta must be positive");
    const std::size_t len = watermarked.front().samples.size();

    AttackTrace trace;
    trace.m = static_cast<int>(watermarked.size());
    trace.key_estimate.assign(len, 0.0);
    std::vector<double> ysum(len, 0.0);
    for (std::size_t i = 0; i < watermarked.size(); ++i) {
        for (std::size_t t = 0; t < len; ++t) {
            trace.key_estimate[t] += watermarked[i].samples[t];
            ysum[t] += carriers[i].samples[t];
        }
    }
    trace.power_ratio = ratio_from_sums(trace.key_estimate, ysum, len);
    return trace;
}

std::vector<double> power_ratio_curve(const std::vector<SignalFrame>& watermarked,
                                      const std::vector<SignalFrame>& carriers, double beta) {
    check_aligned(watermarked, carriers);
    if (beta <= 0.0) throw std::invalid_argument("power_ratio_curve: beta must be positive");
    const std::size_t len = watermarked.front().samples.size();

    std::vector<double> wsum(len, 0.0), ysum(len, 0.0);
    std::vector<double> curve;
    curve.reserve(watermarked.size());
    for (std::size_t i = 0; i < watermarked.size(); ++i) {
        for (std::size_t t = 0; t < len; ++t) {
            wsum[t] += watermarked[i].samples[t];
            ysum[t] += carriers[i].samples[t];
        }
        curve.push_back(ratio_from_sums(wsum, ysum, len));
    }
    return curve;
}

std::vector<double> forge_with_estimate(const AttackTrace& trace, double beta,
                                        const BitStream& bits,
                                        const std::vector<double>& carrier) {
    validate_bits(bits);
    if (beta <= 0.0) throw std::invalid_argument("forge_with_estimate: beta must be positive");
    if (trace.key_estimate.empty() || carrier.size() != trace.key_estimate.size()) {
        throw std::invalid_argument("forge_with_estimate: carrier must match the estimate length");
    }
    if (carrier.size() % bits.size() != 0) {
        throw std::invalid_argument("forge_with_estimate: bit count must divide the window length");
    }
    const std::size_t n = carrier.size() / bits.size();
    std::vector<double> out(carrier.size());
    for (std::size_t t = 0; t < carrier.size(); ++t) {
        const int est = trace.key_estimate[t] >= 0.0 ? 1 : -1;
        out[t] = carrier[t] + beta * bits[t / n] * est;
    }
    return out;
}

}  // namespace iotwm
