#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "iotwm/detector.hpp"
#include "iotwm/neural.hpp"
#include "iotwm/signal.hpp"

namespace iotwm::netsim {

// Wire format, all little-endian: magic "IOTW", version byte (1),
// device_id u32, window_index u64, sample_count u16, then sample_count
// IEEE-754 doubles.
struct Frame {
    std::uint32_t device_id = 0;
    std::uint64_t window_index = 0;
    std::vector<double> samples;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

// Streaming decoder: feed bytes as they arrive, drain complete frames.
// Throws std::runtime_error on a malformed prefix (wrong magic or version);
// the caller is expected to drop the connection.
class FrameDecoder {
public:
    void feed(const std::uint8_t* data, std::size_t len);
    bool next(Frame& out);

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

enum class AuthMode { static_stream, dynamic_hash, dynamic_lstm };

struct DeviceRegistration {
    std::uint32_t device_id = 0;
    WatermarkParams params;
    std::uint64_t key_seed = 0;
    AuthMode mode = AuthMode::dynamic_hash;
    SignalModel model;          // carrier statistics (synthesis and attack draws)
    BitStream static_bits;      // static_stream mode: the registered hidden stream
    std::uint64_t salt = 0;     // dynamic_hash mode
    std::shared_ptr<const Network> extractor;  // dynamic_lstm mode
    double threshold_pct = 20.0;
    long long freq = 0;         // authentication cost per window, Hz
};

struct ServiceConfig {
    std::vector<DeviceRegistration> devices;  // unique device_ids
    long long cap = 0;                        // per-epoch budget over selected freqs
    std::uint64_t epochs = 0;                 // run length in windows
};

// Which device ids to authenticate in an epoch. Selections must respect the
// budget; the service refuses an over-budget set rather than running it.
class SchedulerPolicy {
public:
    virtual ~SchedulerPolicy() = default;
    virtual std::vector<std::uint32_t> select(std::uint64_t epoch) = 0;
    virtual void feedback(std::uint64_t /*epoch*/, const std::vector<DetectionReport>& /*reports*/) {}
};

// Cycles through a fixed list of device sets.
class FixedSetsPolicy : public SchedulerPolicy {
public:
    explicit FixedSetsPolicy(std::vector<std::vector<std::uint32_t>> sets);
    std::vector<std::uint32_t> select(std::uint64_t epoch) override;

private:
    std::vector<std::vector<std::uint32_t>> sets_;
};

struct EpochLog {
    std::uint64_t epoch = 0;
    std::vector<std::uint32_t> selected;
    long long freq_used = 0;
    long long cap = 0;
};

struct RunSummary;

// The receive side: accepts frames from any transport, rejects the ones it
// cannot attribute (unknown device, sample count not matching the device's
// registered window), and authenticates the policy's per-epoch selections
// once arrival is done. on_frame/on_drop are safe to call from multiple
// reader threads.
class Gateway {
public:
    explicit Gateway(const ServiceConfig& cfg);

    void on_frame(const Frame& f);
    void on_drop(const std::string& reason);
    void run_epochs(SchedulerPolicy& policy, RunSummary& out);

    std::uint64_t rejected_frames() const { return rejected_; }

private:
    struct Entry {
        DeviceRegistration reg;
        DetectorConfig det;
        ExpectedSource expected{StaticExpected{}};
    };

    ServiceConfig cfg_;
    std::map<std::uint32_t, Entry> regs_;
    std::map<std::uint64_t, std::map<std::uint32_t, std::vector<double>>> frames_;
    std::vector<std::string> drop_log_;
    std::uint64_t rejected_ = 0;
    mutable std::mutex mu_;
};

struct RunSummary {
    std::vector<DetectionReport> reports;  // one per authenticated (device, window)
    std::vector<EpochLog> epochs;
    std::vector<std::string> drop_log;     // dropped connections with reasons
    std::uint64_t rejected_frames = 0;     // unknown device or bad sample count
    std::vector<std::pair<std::uint32_t, std::uint64_t>> ground_truth;  // attacked (device, window)
};

// Scripted misbehavior for one device over an inclusive window range.
// inject: replace the transmissions with unwatermarked draws from the
// device's signal model. record_and_sum_forge: record the first record_m
// honest windows, then transmit forgeries built from the summed estimate.
struct AttackAction {
    enum class Kind { inject, record_and_sum_forge };
    Kind kind = Kind::inject;
    std::uint32_t device_id = 0;
    std::uint64_t window_begin = 0;
    std::uint64_t window_end = 0;
    int record_m = 0;  // record_and_sum_forge only; must not exceed window_begin
};

struct Script {
    std::vector<AttackAction> actions;
};

enum class TransportKind { in_process, tcp };

// Full run: scripted devices emit framed windows over the chosen transport,
// the gateway authenticates the policy's per-epoch selections within the
// budget, and the summary carries logs plus ground truth for scoring.
// Deterministic given (config, policy, script, seed) on either transport.
RunSummary run_simulation(const ServiceConfig& cfg, SchedulerPolicy& policy, const Script& script,
                          std::uint64_t seed, TransportKind transport);

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochLog& log);

}  // namespace iotwm::netsim
