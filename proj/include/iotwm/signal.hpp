#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iotwm {

struct SignalStream {
    std::vector<double> samples;
    double fs = 0.0;  // sampling rate, Hz; > 0
    std::uint32_t device_id = 0;
};

// One transmission window of n*ns samples.
struct SignalFrame {
    std::vector<double> samples;
    std::uint64_t window_index = 0;
    std::uint32_t device_id = 0;
};

// Second-order description of a device's signal: per-sample mean/std, plus
// the mean/std of the product of two independent samples (the quantities
// that drive the eavesdropper's correlation error).
struct SignalModel {
    double mu = 0.0;
    double sigma = 0.0;   // > 0
    double mu1 = 0.0;     // mean of y*y' for independent draws
    double sigma1 = 0.0;  // std of y*y'
};

// I.i.d. Gaussian stream; deterministic for a fixed seed.
SignalStream synth_gaussian(std::size_t n_samples, double mu, double sigma, double fs,
                            std::uint64_t seed, std::uint32_t device_id = 0);

// CSV loader. Accepts an optional header line "fs,<hz>"; every other
// non-empty line is one numeric sample. fs_override beats the header; if
// neither gives a rate the load fails. Errors carry 1-based line numbers.
SignalStream load_csv(const std::string& path,
                      std::optional<double> fs_override = std::nullopt,
                      std::uint32_t device_id = 0);

void save_csv(const std::string& path, const SignalStream& stream);

// Sample statistics of a stream. mu/sigma are the usual estimators
// (sigma with the n-1 divisor); mu1/sigma1 come from elementwise products
// of two internally-seeded independent shuffles of the samples, so the
// result is still a deterministic function of the stream alone.
SignalModel estimate_model(const SignalStream& stream);

// Split into consecutive windows of n*ns samples, dropping a trailing
// partial window. Throws if the stream is shorter than one window.
std::vector<SignalFrame> frame(const SignalStream& stream, int n, int ns);

}  // namespace iotwm
