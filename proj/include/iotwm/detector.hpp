#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "iotwm/fingerprint.hpp"
#include "iotwm/signal.hpp"
#include "iotwm/watermark.hpp"

namespace iotwm {

struct DetectionReport {
    std::uint64_t window_index = 0;
    std::uint32_t device_id = 0;
    double mismatch_pct = 0.0;  // 0..100
    bool alarm = false;
    double delay_s = 0.0;       // decision latency: one window, n*ns/fs
};

// Percent of positions where the two streams disagree. Lengths must match.
double compare(const BitStream& extracted, const BitStream& expected);

struct DetectorConfig {
    WatermarkParams params;
    PNKey key;
    double threshold_pct = 20.0;  // alarm when mismatch is strictly above
};

// Where the expected bit stream comes from:
//   StaticExpected — a fixed registered stream (legacy scheme);
//   HashExpected   — recompute the fingerprint bits from the received
//                    window after peeling the watermark off with the
//                    extracted bits (exact when extraction is error-free);
//   HookExpected   — any external predictor of the expected stream, e.g.
//                    a trained network (see make_network_expected).
struct StaticExpected {
    BitStream stream;
};
struct HashExpected {
    std::uint64_t salt = 0;
    QuantizerConfig qcfg{};
};
struct HookExpected {
    std::function<BitStream(const std::vector<double>& watermarked, const PNKey& key)> fn;
};
using ExpectedSource = std::variant<StaticExpected, HashExpected, HookExpected>;

// Extract, derive the expected stream, compare, decide. A window whose
// reconstructed carrier is degenerate (constant) cannot carry a fingerprint
// and is reported as a full mismatch — real sensors are never silent.
DetectionReport authenticate_window(const SignalFrame& frame, const DetectorConfig& cfg,
                                    const ExpectedSource& expected);

// False-alarm probability per honest window implied by per-bit error p_bar.
// Static mode alarms only when enough bits flip to cross the threshold;
// hash mode can alarm on any bit error (a flip corrupts the reconstruction
// the expected stream is derived from).
double false_alarm_bound_static(double p_bar, int ns, double threshold_pct);
double false_alarm_bound_hash(double p_bar, int ns);

// Scheduling budget: with per-device extraction cost proportional to its
// sampling rate, the gateway can authenticate a subset S per epoch only if
// sum of f_i over S stays within cap = C/d. values are f_i / sum(f), so
// equivalently sum of v_i over S <= R = cap / sum(f).
struct ComplexityBudget {
    std::vector<std::int64_t> freqs;
    std::int64_t cap = 0;
    double R = 0.0;
    std::vector<double> values;

    bool feasible(const std::vector<int>& subset) const;  // exact, integer arithmetic
};

ComplexityBudget complexity_budget(const std::vector<std::int64_t>& freqs, std::int64_t cap);

std::string report_csv_header();
std::string report_csv_row(const DetectionReport& r);

}  // namespace iotwm
