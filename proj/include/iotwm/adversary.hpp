#pragma once

#include <cstdint>
#include <vector>

#include "iotwm/signal.hpp"
#include "iotwm/watermark.hpp"

namespace iotwm {

// What the eavesdropper has after summing m recorded windows. If the hidden
// bits were static, the watermark component adds up coherently and
// key_estimate's sign pattern converges to (bit k) * (chip t); if the bits
// changed per window, the component random-walks and stays buried.
struct AttackTrace {
    int m = 0;
    std::vector<double> key_estimate;  // elementwise sum of the recorded windows
    double power_ratio = 0.0;          // accumulated watermark power / var of summed carriers
};

// Plausible-looking forged window with no watermark: i.i.d. draws from the
// attacker's estimated signal model.
std::vector<double> inject(const SignalModel& model, std::size_t n_samples, std::uint64_t seed);

// Sum m aligned recorded windows. `carriers` are the matching unwatermarked
// windows; the simulation uses them only to score the attack (power_ratio
// denominator) — the attack payload (key_estimate) never touches them.
AttackTrace record_and_sum(const std::vector<SignalFrame>& watermarked,
                           const std::vector<SignalFrame>& carriers, double beta);

// power_ratio for every prefix m = 1..M of the recordings, for growth plots:
// static hidden bits give a straight line of slope beta^2/sigma^2, dynamic
// bits a bounded curve.
std::vector<double> power_ratio_curve(const std::vector<SignalFrame>& watermarked,
                                      const std::vector<SignalFrame>& carriers, double beta);

// Re-embed chosen bits on a fresh carrier using the estimated per-segment
// patterns sign(key_estimate). The estimate only ever reveals the product
// (bit * chip) — the key's global sign is unknowable from recordings — so
// bits are relative: +1 replays segment k's learned symbol, -1 flips it.
// Replaying all +1 reproduces the victim's static stream exactly.
std::vector<double> forge_with_estimate(const AttackTrace& trace, double beta,
                                        const BitStream& bits,
                                        const std::vector<double>& carrier);

}  // namespace iotwm
