#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iotwm/signal.hpp"

namespace iotwm {

// Spreading key: +-1 chips, balanced (same number of each sign) so the
// correlator is unbiased for any carrier mean.
struct PNKey {
    std::vector<int> chips;
    int length() const { return static_cast<int>(chips.size()); }
};

// Hidden bit stream, +-1 entries.
using BitStream = std::vector<int>;

struct WatermarkParams {
    double beta = 0.0;  // watermark amplitude, > 0
    int n = 0;          // key length (samples per hidden bit)
    int ns = 0;         // bits per window
    double fs = 0.0;    // sampling rate, Hz
    double d = 0.0;     // delay budget, seconds; n*ns <= d*fs
};

struct ExtractionResult {
    BitStream bits;            // hard decisions, sign of soft with ties -> +1
    std::vector<double> soft;  // correlator outputs, one per bit
};

// Balanced key of even length n, order shuffled by seed.
PNKey gen_pn_key(int n, std::uint64_t seed);

void validate_params(const WatermarkParams& p);
void validate_key(const PNKey& key);
void validate_bits(const BitStream& bits);

// w(t) = y(t) + beta * b_k * p(t mod n), k = t / n. Carrier length must be
// exactly n * |bits|.
std::vector<double> embed(const std::vector<double>& carrier, const PNKey& key,
                          const BitStream& bits, double beta);

// Per-segment correlation against the key: soft_k = <w_seg, p> / (beta*n).
ExtractionResult extract_stream(const std::vector<double>& watermarked, const PNKey& key,
                                double beta);

// Closed-form per-bit error of the gateway correlator when the carrier is
// i.i.d. Gaussian with std sigma and the key is balanced.
double analytic_ber(double beta, double sigma, int n);

// Monte-Carlo estimate of the same quantity. Work splits across `workers`
// with per-worker derived seeds and a fixed reduction order, so the result
// depends only on (params, sigma, n_bits, seed, workers).
double mc_ber(double beta, int n, double sigma, std::uint64_t n_bits, std::uint64_t seed,
              int workers = 1);

// Per-bit error of an eavesdropper that correlates two watermarked windows
// against each other to estimate the hidden bit (its best move without the
// key). Model supplies the carrier moments.
double attacker_ber(double beta, int n, const SignalModel& model);

// One grid point of the parameter search, with its feasibility screens
// re-evaluated (closed-loop check used by tests and the CLI).
struct ParamFeasibility {
    bool reliability = false;  // analytic_ber <= p_hi
    bool concealment = false;  // amplitude screen, see solve_params docs
    bool window = false;       // n * ns fits the delay budget
    bool ok() const { return reliability && concealment && window; }
};

ParamFeasibility check_params(const SignalModel& model, double p_lo, double p_hi, double fs,
                              double d, double beta, int n);

struct ParamSearchResult {
    WatermarkParams chosen;                 // max ns, then min n, then min beta
    std::vector<WatermarkParams> feasible;  // all feasible grid points, (n, beta) order
};

// Grid search for watermark parameters under three screens:
//   reliability: gateway per-bit error analytic_ber(beta, sigma, n) <= p_hi;
//   concealment: the printed eavesdropper bound attacker_ber >= 1 - p_lo,
//     which no nonnegative-moment carrier can meet (a half-erfc never
//     exceeds 1/2), OR the operational amplitude rule beta <= sigma that the
//     reference design actually applies — see README and design notes;
//   window: ns = floor(d*fs / n) >= 1.
// n ranges over even values up to floor(d*fs); beta over an 81-point log
// grid covering [1e-3 * sigma, 10 * sigma]. Throws infeasible_error naming
// the binding screen when nothing passes.
ParamSearchResult solve_params(const SignalModel& model, double p_lo, double p_hi, double fs,
                               double d);

// One-line serialization: space-separated +1/-1 tokens.
void save_pm1_line(const std::string& path, const std::vector<int>& values);
std::vector<int> load_pm1_line(const std::string& path);

std::string params_to_json(const WatermarkParams& p);
WatermarkParams params_from_json(const std::string& text);

}  // namespace iotwm
