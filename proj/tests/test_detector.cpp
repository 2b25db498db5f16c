#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <iotwm/detector.hpp>
#include <iotwm/fingerprint.hpp>
#include <iotwm/mathx.hpp>
#include <iotwm/signal.hpp>
#include <iotwm/watermark.hpp>

using namespace iotwm;

namespace {

// Detector tuned so extraction is exact on every fixture in this file:
// amplitude 1.0 against carrier std 0.5 leaves the per-bit error below 1e-15.
DetectorConfig strong_config(int n = 16, int ns = 32) {
    DetectorConfig cfg;
    cfg.params = {1.0, n, ns, 1000.0, 1.0};
    cfg.key = gen_pn_key(n, 3);
    cfg.threshold_pct = 20.0;
    return cfg;
}

SignalFrame framed(std::vector<double> samples, std::uint64_t window = 0,
                   std::uint32_t device = 0) {
    SignalFrame f;
    f.samples = std::move(samples);
    f.window_index = window;
    f.device_id = device;
    return f;
}

}  // namespace

TEST_CASE("compare counts disagreeing positions as a percentage") {
    CHECK(compare({1, -1, 1, -1}, {1, -1, 1, -1}) == 0.0);
    CHECK(compare({1, -1, 1, -1}, {1, 1, 1, -1}) == 25.0);
    CHECK(compare({1, 1}, {-1, -1}) == 100.0);
    CHECK(compare({1, -1, 1}, {1, 1, -1}) == doctest::Approx(200.0 / 3.0));

    CHECK_THROWS_AS(compare({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(compare({1, -1}, {1}), std::invalid_argument);
}

TEST_CASE("static mode alarms only strictly above the threshold") {
    auto cfg = strong_config(10, 10);
    BitStream sent(10);
    for (int k = 0; k < 10; ++k) sent[k] = (k % 3 == 0) ? 1 : -1;

    std::vector<double> quiet(100, 0.0);
    auto f = framed(embed(quiet, cfg.key, sent, cfg.params.beta), 42, 7);

    auto honest = authenticate_window(f, cfg, StaticExpected{sent});
    CHECK(honest.mismatch_pct == 0.0);
    CHECK_FALSE(honest.alarm);
    CHECK(honest.window_index == 42);
    CHECK(honest.device_id == 7);
    CHECK(honest.delay_s == doctest::Approx(0.1));

    // Exactly at 20% (2 of 10 flipped): no alarm. One more flip: alarm.
    BitStream two = sent;
    two[0] = -two[0];
    two[4] = -two[4];
    auto at = authenticate_window(f, cfg, StaticExpected{two});
    CHECK(at.mismatch_pct == 20.0);
    CHECK_FALSE(at.alarm);

    BitStream three = two;
    three[8] = -three[8];
    auto over = authenticate_window(f, cfg, StaticExpected{three});
    CHECK(over.mismatch_pct == 30.0);
    CHECK(over.alarm);
}

TEST_CASE("authenticate_window validates configuration and frame shape") {
    auto cfg = strong_config(10, 10);
    std::vector<double> quiet(100, 0.0);
    BitStream sent(10, 1);
    auto f = framed(embed(quiet, cfg.key, sent, cfg.params.beta));

    auto bad_key = cfg;
    bad_key.key = gen_pn_key(8, 3);
    CHECK_THROWS_AS(authenticate_window(f, bad_key, StaticExpected{sent}),
                    std::invalid_argument);

    auto short_frame = framed(std::vector<double>(99, 0.0));
    CHECK_THROWS_AS(authenticate_window(short_frame, cfg, StaticExpected{sent}),
                    std::invalid_argument);

    CHECK_THROWS_AS(authenticate_window(f, cfg, StaticExpected{BitStream(9, 1)}),
                    std::invalid_argument);

    auto bad_params = cfg;
    bad_params.params.beta = 0.0;
    CHECK_THROWS_AS(authenticate_window(f, bad_params, StaticExpected{sent}),
                    std::invalid_argument);
}

TEST_CASE("hash mode accepts an honest window bit for bit") {
    auto cfg = strong_config();
    const std::size_t len = 16 * 32;
    const std::uint64_t salt = 77;
    QuantizerConfig qcfg{};

    SignalStream carrier = synth_gaussian(len, 0.0, 0.5, 1000.0, 101);
    BitStream fp = quantize(features(carrier.samples), 32, salt, qcfg);
    auto f = framed(embed(carrier.samples, cfg.key, fp, cfg.params.beta), 5, 9);

    auto rep = authenticate_window(f, cfg, HashExpected{salt, qcfg});
    CHECK(rep.mismatch_pct == 0.0);
    CHECK_FALSE(rep.alarm);
    CHECK(rep.window_index == 5);
    CHECK(rep.device_id == 9);
    CHECK(rep.delay_s == doctest::Approx(0.512));
}

TEST_CASE("hash mode flags a replayed fingerprint on a fresh carrier") {
    auto cfg = strong_config();
    const std::size_t len = 16 * 32;
    const std::uint64_t salt = 77;
    QuantizerConfig qcfg{};

    // Attacker re-embeds the fingerprint learned from an old window. The
    // registered-stream detector is satisfied; the recomputing detector sees
    // roughly half the bits disagree because the carrier changed.
    SignalStream old_carrier = synth_gaussian(len, 0.0, 0.5, 1000.0, 55);
    BitStream stale = quantize(features(old_carrier.samples), 32, salt, qcfg);
    SignalStream fresh = synth_gaussian(len, 0.0, 0.5, 1000.0, 56);
    auto g = framed(embed(fresh.samples, cfg.key, stale, cfg.params.beta));

    auto hash_rep = authenticate_window(g, cfg, HashExpected{salt, qcfg});
    CHECK(hash_rep.mismatch_pct > 30.0);
    CHECK(hash_rep.alarm);

    auto static_rep = authenticate_window(g, cfg, StaticExpected{stale});
    CHECK(static_rep.mismatch_pct == 0.0);
    CHECK_FALSE(static_rep.alarm);
}

TEST_CASE("hash mode treats a degenerate reconstructed carrier as hostile") {
    auto cfg = strong_config();
    const std::size_t len = 16 * 32;

    // Constant carrier plus all-ones bits: the peel recovers the constant,
    // which carries no fingerprint at all.
    std::vector<double> flat(len, 2.5);
    auto f = framed(embed(flat, cfg.key, BitStream(32, 1), cfg.params.beta), 3, 4);
    auto rep = authenticate_window(f, cfg, HashExpected{77, QuantizerConfig{}});
    CHECK(rep.mismatch_pct == 100.0);
    CHECK(rep.alarm);
    CHECK(rep.window_index == 3);
}

TEST_CASE("hook mode delegates the expected stream to a callback") {
    auto cfg = strong_config(10, 10);
    BitStream sent(10);
    for (int k = 0; k < 10; ++k) sent[k] = (k % 2 == 0) ? 1 : -1;
    std::vector<double> quiet(100, 0.0);
    auto f = framed(embed(quiet, cfg.key, sent, cfg.params.beta));

    bool called = false;
    HookExpected hook;
    hook.fn = [&](const std::vector<double>& w, const PNKey& key) {
        called = true;
        CHECK(w.size() == 100);
        CHECK(key.length() == 10);
        return sent;
    };
    auto rep = authenticate_window(f, cfg, hook);
    CHECK(called);
    CHECK(rep.mismatch_pct == 0.0);

    HookExpected wrong_len;
    wrong_len.fn = [](const std::vector<double>&, const PNKey&) { return BitStream(9, 1); };
    CHECK_THROWS_AS(authenticate_window(f, cfg, wrong_len), std::invalid_argument);

    CHECK_THROWS_AS(authenticate_window(f, cfg, HookExpected{}), std::invalid_argument);
}

TEST_CASE("static false-alarm bound is the binomial tail above the threshold") {
    // 20% of 10 bits -> alarm needs >= 3 errors.
    CHECK(false_alarm_bound_static(0.01, 10, 20.0) ==
          doctest::Approx(1.1384911790577964e-4).epsilon(1e-12));
    // 25% of 8 bits -> alarm needs >= 3 errors.
    CHECK(false_alarm_bound_static(0.05, 8, 25.0) ==
          doctest::Approx(0.0057882179296875).epsilon(1e-12));
    // Threshold zero alarms on any error.
    CHECK(false_alarm_bound_static(0.01, 10, 0.0) ==
          doctest::Approx(0.09561792499119551).epsilon(1e-12));
    // Threshold 100 can never alarm.
    CHECK(false_alarm_bound_static(0.3, 10, 100.0) == 0.0);
    CHECK_THROWS_AS(false_alarm_bound_static(0.01, 0, 20.0), std::invalid_argument);
}

TEST_CASE("hash false-alarm bound is one minus the no-error probability") {
    CHECK(false_alarm_bound_hash(0.01, 10) ==
          doctest::Approx(0.09561792499119551).epsilon(1e-12));
    CHECK(false_alarm_bound_hash(0.3, 4) == doctest::Approx(0.7599).epsilon(1e-12));
    CHECK(false_alarm_bound_hash(0.0, 16) == 0.0);
    CHECK(false_alarm_bound_hash(0.25, 1) == doctest::Approx(0.25));
    // Single-error alarms make the two bounds coincide.
    CHECK(false_alarm_bound_hash(0.01, 10) ==
          doctest::Approx(false_alarm_bound_static(0.01, 10, 0.0)).epsilon(1e-14));
    CHECK_THROWS_AS(false_alarm_bound_hash(0.01, 0), std::invalid_argument);
}

TEST_CASE("complexity budget tracks the worked three-device deployment") {
    auto b = complexity_budget({1000, 2000, 3000}, 5000);
    CHECK(b.cap == 5000);
    CHECK(b.R == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    REQUIRE(b.values.size() == 3);
    CHECK(b.values[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(b.values[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(b.values[2] == doctest::Approx(0.5).epsilon(1e-15));

    CHECK(b.feasible({}));
    CHECK(b.feasible({0, 1}));
    CHECK(b.feasible({0, 2}));
    CHECK(b.feasible({1, 2}));  // exactly at capacity
    CHECK_FALSE(b.feasible({0, 1, 2}));
    CHECK_THROWS_AS(b.feasible({3}), std::invalid_argument);
    CHECK_THROWS_AS(b.feasible({-1}), std::invalid_argument);

    CHECK_THROWS_AS(complexity_budget({}, 10), std::invalid_argument);
    CHECK_THROWS_AS(complexity_budget({1000}, -1), std::invalid_argument);
    CHECK_THROWS_AS(complexity_budget({0}, 10), std::invalid_argument);
}

TEST_CASE("detection reports serialize to stable CSV") {
    CHECK(report_csv_header() == "window_index,device_id,mismatch_pct,alarm,delay_s");

    DetectionReport r;
    r.window_index = 3;
    r.device_id = 7;
    r.mismatch_pct = 25.0;
    r.alarm = true;
    r.delay_s = 1.5;
    CHECK(report_csv_row(r) == "3,7,25,1,1.5");

    r.alarm = false;
    r.mismatch_pct = 0.0;
    r.delay_s = 0.5;
    CHECK(report_csv_row(r) == "3,7,0,0,0.5");
}
