#include "iotwm/detector.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "iotwm/mathx.hpp"

namespace iotwm {

double compare(const BitStream& extracted, const BitStream& expected) {
    if (extracted.empty() || extracted.size() != expected.size()) {
        throw std::invalid_argument("compare: streams must be nonempty and equally long");
    }
    std::size_t diff = 0;
    for (std::size_t i = 0; i < extracted.size(); ++i) diff += extracted[i] != expected[i];
    return 100.0 * static_cast<double>(diff) / static_cast<double>(extracted.size());
}

DetectionReport authenticate_window(const SignalFrame& frame, const DetectorConfig& cfg,
                                    const ExpectedSource& expected) {
    validate_params(cfg.params);
    if (cfg.key.length() != cfg.params.n) {
        throw std::invalid_argument("authenticate_window: key length does not match params.n");
    }
    const std::size_t want =
        static_cast<std::size_t>(cfg.params.n) * static_cast<std::size_t>(cfg.params.ns);
    if (frame.samples.size() != want) {
        throw std::invalid_argument("authenticate_window: frame length does not match n*ns");
    }

    const ExtractionResult ext = extract_stream(frame.samples, cfg.key, cfg.params.beta);

    DetectionReport rep;
    rep.window_index = frame.window_index;
    rep.device_id = frame.device_id;
    rep.delay_s = static_cast<double>(cfg.params.n) * cfg.params.ns / cfg.params.fs;

    BitStream want_bits;
    if (const auto* st = std::get_if<StaticExpected>(&expected)) {
        if (st->stream.size() != ext.bits.size()) {
            throw std::invalid_argument("authenticate_window: registered stream length mismatch");
        }
        want_bits = st->stream;
    } else if (const auto* h = std::get_if<HashExpected>(&expected)) {
        // Peel the watermark implied by the extracted bits off the window;
        // when extraction was error-free this recovers the carrier exactly,
        // so the recomputed fingerprint bits match what the sender embedded.
        std::vector<double> carrier(frame.samples.size());
        const int n = cfg.params.n;
        for (std::size_t t = 0; t < carrier.size(); ++t) {
            carrier[t] = frame.samples[t] -
                         cfg.params.beta * ext.bits[t / n] * cfg.key.chips[t % n];
        }
        try {
            want_bits = quantize(features(carrier), cfg.params.ns, h->salt, h->qcfg);
        } catch (const std::invalid_argument&) {
            rep.mismatch_pct = 100.0;  // degenerate carrier: nothing honest looks like this
            rep.alarm = true;
            return rep;
        }
    } else {
        const auto& hook = std::get<HookExpected>(expected);
        if (!hook.fn) throw std::invalid_argument("authenticate_window: empty expected-stream hook");
        want_bits = hook.fn(frame.samples, cfg.key);
        if (want_bits.size() != ext.bits.size()) {
            throw std::invalid_argument("authenticate_window: hook returned wrong stream length");
        }
    }

    rep.mismatch_pct = compare(ext.bits, want_bits);
    rep.alarm = rep.mismatch_pct > cfg.threshold_pct;
    return rep;
}

double false_alarm_bound_static(double p_bar, int ns, double threshold_pct) {
    if (ns < 1) throw std::invalid_argument("false_alarm_bound_static: ns must be >= 1");
    // Alarm needs strictly more than threshold_pct of ns bits wrong.
    const int k = static_cast<int>(std::floor(threshold_pct * ns / 100.0)) + 1;
    return binomial_tail_geq(ns, p_bar, k);
}

double false_alarm_bound_hash(double p_bar, int ns) {
    if (ns < 1) throw std::invalid_argument("false_alarm_bound_hash: ns must be >= 1");
    return 1.0 - std::pow(1.0 - p_bar, ns);
}

bool ComplexityBudget::feasible(const std::vector<int>& subset) const {
    std::int64_t total = 0;
    for (int i : subset) {
        if (i < 0 || i >= static_cast<int>(freqs.size())) {
            throw std::invalid_argument("ComplexityBudget: device index out of range");
        }
        total += freqs[static_cast<std::size_t>(i)];
    }
    return total <= cap;
}

ComplexityBudget complexity_budget(const std::vector<std::int64_t>& freqs, std::int64_t cap) {
    if (freqs.empty()) throw std::invalid_argument("complexity_budget: no devices");
    if (cap < 0) throw std::invalid_argument("complexity_budget: negative capacity");
    std::int64_t sum = 0;
    for (auto f : freqs) {
        if (f <= 0) throw std::invalid_argument("complexity_budget: frequencies must be positive");
        sum += f;
    }
    ComplexityBudget b;
    b.freqs = freqs;
    b.cap = cap;
    b.R = static_cast<double>(cap) / static_cast<double>(sum);
    b.values.reserve(freqs.size());
    for (auto f : freqs) b.values.push_back(static_cast<double>(f) / static_cast<double>(sum));
    return b;
}

std::string report_csv_header() { return "window_index,device_id,mismatch_pct,alarm,delay_s"; }

std::string report_csv_row(const DetectionReport& r) {
    std::ostringstream ss;
    ss.precision(17);
    ss << r.window_index << ',' << r.device_id << ',' << r.mismatch_pct << ','
       << (r.alarm ? 1 : 0) << ',' << r.delay_s;
    return ss.str();
}

}  // namespace iotwm
