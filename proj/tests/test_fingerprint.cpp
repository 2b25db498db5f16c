#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <iotwm/fingerprint.hpp>
#include <iotwm/signal.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace iotwm;

namespace {

std::vector<double> chirp16() {
    std::vector<double> x(16);
    for (int t = 0; t < 16; ++t) {
        x[static_cast<std::size_t>(t)] = std::sin(0.7 * t) + 0.1 * t;
    }
    return x;
}

}  // namespace

TEST_CASE("features match an independently computed reference") {
    // Frozen from a numpy evaluation of the same definitions (population
    // moments; flatness = geometric/arithmetic mean of DFT bins 1..L/2).
    auto fp = features(chirp16());
    CHECK(fp.flatness == doctest::Approx(0.541030571901379).epsilon(1e-9));
    CHECK(fp.mean == doctest::Approx(0.848829862357828).epsilon(1e-12));
    CHECK(fp.variance == doctest::Approx(0.548180484832545).epsilon(1e-12));
    CHECK(fp.skewness == doctest::Approx(0.089293412347883).epsilon(1e-9));
    CHECK(fp.kurtosis == doctest::Approx(1.968510808354515).epsilon(1e-9));
}

TEST_CASE("features validation") {
    CHECK_THROWS_AS((void)features({1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)features(std::vector<double>(16, 2.5)), std::invalid_argument);
}

TEST_CASE("features of a long Gaussian window approach the population shape") {
    auto s = synth_gaussian(4096, 0.0, 1.0, 1000.0, 31);
    auto fp = features(s.samples);
    CHECK(std::abs(fp.mean) < 0.08);
    CHECK(std::abs(fp.variance - 1.0) < 0.1);
    CHECK(std::abs(fp.skewness) < 0.15);
    CHECK(std::abs(fp.kurtosis - 3.0) < 0.3);
    // White-noise spectral flatness concentrates near exp(-gamma/2) /
    // (sqrt(pi)/2) ~ 0.8455 for Rayleigh magnitude bins.
    CHECK(fp.flatness > 0.80);
    CHECK(fp.flatness < 0.88);
}

TEST_CASE("flatness separates tones from noise") {
    std::vector<double> tone(256);
    for (int t = 0; t < 256; ++t) {
        tone[static_cast<std::size_t>(t)] = std::sin(2.0 * M_PI * 8.0 * t / 256.0);
    }
    auto tonal = features(tone);
    auto noisy = features(synth_gaussian(256, 0.0, 1.0, 1000.0, 8).samples);
    CHECK(tonal.flatness < 0.1);
    CHECK(noisy.flatness > 0.6);
}

TEST_CASE("quantize emits deterministic +-1 bits of the requested length") {
    auto fp = features(chirp16());
    auto bits = quantize(fp, 33, 777);
    REQUIRE(bits.size() == 33);
    for (int b : bits) CHECK((b == 1 || b == -1));
    CHECK(quantize(fp, 33, 777) == bits);

    // Long streams extend the counter-mode expansion, and prefixes agree.
    auto longer = quantize(fp, 200, 777);
    for (std::size_t i = 0; i < 33; ++i) CHECK(longer[i] == bits[i]);
}

TEST_CASE("quantize range guard") {
    auto fp = features(chirp16());
    CHECK_THROWS_AS((void)quantize(fp, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)quantize(fp, 4097, 1), std::invalid_argument);
    (void)quantize(fp, 4096, 1);  // boundary is allowed
}

TEST_CASE("salt and feature changes avalanche, sub-step changes do not") {
    auto fp = features(chirp16());
    const int ns = 512;
    auto base = quantize(fp, ns, 1);

    auto count_flips = [&](const BitStream& other) {
        int flips = 0;
        for (int i = 0; i < ns; ++i) flips += base[static_cast<std::size_t>(i)] != other[static_cast<std::size_t>(i)];
        return flips;
    };

    // Different salt: ~half the bits flip (binomial 3-sigma band ~ 0.066).
    CHECK(std::abs(count_flips(quantize(fp, ns, 2)) / 512.0 - 0.5) < 0.07);

    // One quantization step in one feature: mean step = 20/4095 ~ 0.0049.
    auto bumped = fp;
    bumped.mean += 0.006;
    CHECK(std::abs(count_flips(quantize(bumped, ns, 1)) / 512.0 - 0.5) < 0.07);

    // A change far below half a step maps to the same fixed-point code.
    auto tiny = fp;
    tiny.mean += 1e-7;
    CHECK(count_flips(quantize(tiny, ns, 1)) == 0);
}

TEST_CASE("quantize clamps out-of-range features instead of throwing") {
    FingerprintVector wild{2.0, 1e6, -5.0, 99.0, -1.0};
    FingerprintVector edge{1.0, 10.0, 0.0, 5.0, 0.0};
    CHECK(quantize(wild, 64, 9) == quantize(edge, 64, 9));
}

TEST_CASE("csv header matches row arity") {
    auto fp = features(chirp16());
    const auto header = feature_csv_header();
    const auto row = feature_csv_row(fp);
    const auto commas = [](const std::string& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    CHECK(commas(header) == commas(row));
    CHECK(header == "flatness,mean,variance,skewness,kurtosis");
}
