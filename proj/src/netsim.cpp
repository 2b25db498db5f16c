#include "iotwm/netsim.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <future>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "iotwm/adversary.hpp"
#include "iotwm/rng.hpp"

namespace iotwm::netsim {

namespace {

constexpr std::uint8_t kMagic[4] = {'I', 'O', 'T', 'W'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderLen = 4 + 1 + 4 + 8 + 2;

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v & 0xff));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (static_cast<std::uint16_t>(p[1]) << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.samples.size() > 0xffff) throw std::invalid_argument("encode_frame: too many samples for one frame");
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderLen + 8 * f.samples.size());
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(kVersion);
    put_u32(out, f.device_id);
    put_u64(out, f.window_index);
    put_u16(out, static_cast<std::uint16_t>(f.samples.size()));
    for (double s : f.samples) {
        std::uint64_t bits;
        std::memcpy(&bits, &s, 8);
        put_u64(out, bits);
    }
    return out;
}

void FrameDecoder::feed(const std::uint8_t* data, std::size_t len) {
    buf_.insert(buf_.end(), data, data + len);
}

bool FrameDecoder::next(Frame& out) {
    const std::size_t avail = buf_.size() - pos_;
    if (avail >= 4 && std::memcmp(buf_.data() + pos_, kMagic, 4) != 0)
        throw std::runtime_error("frame decoder: bad magic");
    if (avail >= 5 && buf_[pos_ + 4] != kVersion)
        throw std::runtime_error("frame decoder: unsupported version");
    if (avail < kHeaderLen) return false;
    const std::uint8_t* p = buf_.data() + pos_;
    const std::uint16_t count = get_u16(p + 17);
    const std::size_t total = kHeaderLen + 8 * static_cast<std::size_t>(count);
    if (avail < total) return false;
    out.device_id = get_u32(p + 5);
    out.window_index = get_u64(p + 9);
    out.samples.resize(count);
    for (std::uint16_t i = 0; i < count; ++i) {
        std::uint64_t bits = get_u64(p + kHeaderLen + 8 * static_cast<std::size_t>(i));
        std::memcpy(&out.samples[i], &bits, 8);
    }
    pos_ += total;
    if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    return true;
}

FixedSetsPolicy::FixedSetsPolicy(std::vector<std::vector<std::uint32_t>> sets) : sets_(std::move(sets)) {
    if (sets_.empty()) throw std::invalid_argument("FixedSetsPolicy: need at least one set");
}

std::vector<std::uint32_t> FixedSetsPolicy::select(std::uint64_t epoch) {
    return sets_[static_cast<std::size_t>(epoch % sets_.size())];
}

Gateway::Gateway(const ServiceConfig& cfg) : cfg_(cfg) {
    for (const auto& d : cfg.devices) {
        if (regs_.count(d.device_id)) throw std::invalid_argument("gateway: duplicate device_id");
        Entry e;
        e.reg = d;
        e.det.params = d.params;
        e.det.key = gen_pn_key(d.params.n, d.key_seed);
        e.det.threshold_pct = d.threshold_pct;
        switch (d.mode) {
            case AuthMode::static_stream:
                if (static_cast<int>(d.static_bits.size()) != d.params.ns)
                    throw std::invalid_argument("gateway: static_bits length must equal ns");
                e.expected = StaticExpected{d.static_bits};
                break;
            case AuthMode::dynamic_hash:
                e.expected = HashExpected{d.salt, {}};
                break;
            case AuthMode::dynamic_lstm:
                if (!d.extractor) throw std::invalid_argument("gateway: lstm mode needs an extractor");
                e.expected = make_network_expected(d.extractor, d.params.ns);
                break;
        }
        regs_.emplace(d.device_id, std::move(e));
    }
}

void Gateway::on_frame(const Frame& f) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = regs_.find(f.device_id);
    if (it == regs_.end()) {
        ++rejected_;
        return;
    }
    const auto& p = it->second.reg.params;
    if (f.samples.size() != static_cast<std::size_t>(p.n) * static_cast<std::size_t>(p.ns)) {
        ++rejected_;
        return;
    }
    frames_[f.window_index][f.device_id] = f.samples;
}

void Gateway::on_drop(const std::string& reason) {
    std::lock_guard<std::mutex> lk(mu_);
    drop_log_.push_back(reason);
}

// Epoch processing, run by the scheduler after arrival. A selected device
// that delivered no frame this window is simply skipped (dead link).
void Gateway::run_epochs(SchedulerPolicy& policy, RunSummary& out) {
    for (std::uint64_t e = 0; e < cfg_.epochs; ++e) {
        std::vector<std::uint32_t> sel = policy.select(e);
        std::sort(sel.begin(), sel.end());
        sel.erase(std::unique(sel.begin(), sel.end()), sel.end());
        long long used = 0;
        for (auto id : sel) {
            auto it = regs_.find(id);
            if (it == regs_.end()) throw std::runtime_error("gateway: policy selected an unregistered device");
            used += it->second.reg.freq;
        }
        if (used > cfg_.cap)
            throw std::runtime_error("gateway: policy selection exceeds the authentication budget");

        std::vector<DetectionReport> reports;
        auto win_it = frames_.find(e);
        std::vector<std::future<DetectionReport>> jobs;
        for (auto id : sel) {
            if (win_it == frames_.end()) continue;
            auto f_it = win_it->second.find(id);
            if (f_it == win_it->second.end()) continue;
            const Entry& ent = regs_.at(id);
            SignalFrame frame{f_it->second, e, id};
            jobs.push_back(std::async(std::launch::async, [&ent, frame]() {
                return authenticate_window(frame, ent.det, ent.expected);
            }));
        }
        for (auto& j : jobs) reports.push_back(j.get());
        EpochLog log;
        log.epoch = e;
        log.selected = sel;
        log.freq_used = used;
        log.cap = cfg_.cap;
        out.epochs.push_back(log);
        out.reports.insert(out.reports.end(), reports.begin(), reports.end());
        policy.feedback(e, reports);
    }
    out.drop_log = drop_log_;
    out.rejected_frames = rejected_;
}

namespace {

// One device's transmit-side state, honest plus scripted misbehavior.
struct DeviceSim {
    const DeviceRegistration* reg = nullptr;
    PNKey key;
    Rng carrier_rng{0};
    Rng attack_rng{0};
    const AttackAction* action = nullptr;
    std::vector<SignalFrame> recorded_wm, recorded_carrier;
    bool trace_ready = false;
    std::vector<double> forged;

    std::vector<double> window_payload(std::uint64_t w) {
        const auto& p = reg->params;
        const std::size_t len = static_cast<std::size_t>(p.n) * static_cast<std::size_t>(p.ns);
        std::vector<double> carrier(len);
        for (auto& s : carrier) s = carrier_rng.gaussian(reg->model.mu, reg->model.sigma);

        BitStream bits;
        if (reg->mode == AuthMode::static_stream) {
            bits = reg->static_bits;
        } else {
            bits = quantize(features(carrier), p.ns, reg->salt);
        }
        std::vector<double> wm = embed(carrier, key, bits, p.beta);

        const bool attacked = action && w >= action->window_begin && w <= action->window_end;
        if (action && action->kind == AttackAction::Kind::record_and_sum_forge &&
            static_cast<int>(recorded_wm.size()) < action->record_m && !attacked) {
            recorded_wm.push_back({wm, w, reg->device_id});
            recorded_carrier.push_back({carrier, w, reg->device_id});
        }
        if (!attacked) return wm;

        if (action->kind == AttackAction::Kind::inject)
            return inject(reg->model, len, attack_rng.engine()());

        if (!trace_ready) {
            AttackTrace trace = record_and_sum(recorded_wm, recorded_carrier, p.beta);
            std::vector<double> own(len);
            for (auto& s : own) s = attack_rng.gaussian(reg->model.mu, reg->model.sigma);
            forged = forge_with_estimate(trace, p.beta, BitStream(p.ns, 1), own);
            trace_ready = true;
        }
        return forged;
    }
};

void validate_script(const ServiceConfig& cfg, const Script& script) {
    std::set<std::uint32_t> ids;
    for (const auto& d : cfg.devices) ids.insert(d.device_id);
    std::set<std::uint32_t> seen;
    for (const auto& a : script.actions) {
        if (!ids.count(a.device_id)) throw std::invalid_argument("script: action targets an unregistered device");
        if (!seen.insert(a.device_id).second)
            throw std::invalid_argument("script: one action per device");
        if (a.window_end < a.window_begin) throw std::invalid_argument("script: empty window range");
        if (a.kind == AttackAction::Kind::record_and_sum_forge) {
            if (a.record_m <= 0) throw std::invalid_argument("script: record_m must be positive");
            if (static_cast<std::uint64_t>(a.record_m) > a.window_begin)
                throw std::invalid_argument("script: cannot record windows that are already forged");
        }
    }
}

std::vector<DeviceSim> make_device_sims(const ServiceConfig& cfg, const Script& script, std::uint64_t seed) {
    std::vector<DeviceSim> sims(cfg.devices.size());
    for (std::size_t i = 0; i < cfg.devices.size(); ++i) {
        DeviceSim& s = sims[i];
        s.reg = &cfg.devices[i];
        s.key = gen_pn_key(s.reg->params.n, s.reg->key_seed);
        s.carrier_rng = Rng(derive_seed(seed, 0x100000000ull + s.reg->device_id));
        s.attack_rng = Rng(derive_seed(seed, 0x200000000ull + s.reg->device_id));
        for (const auto& a : script.actions)
            if (a.device_id == s.reg->device_id) s.action = &a;
    }
    return sims;
}

void append_ground_truth(const Script& script, std::uint64_t epochs, RunSummary& out) {
    for (const auto& a : script.actions)
        for (std::uint64_t w = a.window_begin; w <= a.window_end && w < epochs; ++w)
            out.ground_truth.emplace_back(a.device_id, w);
    std::sort(out.ground_truth.begin(), out.ground_truth.end());
}

void run_in_process(Gateway& svc, std::vector<DeviceSim>& sims, std::uint64_t epochs) {
    std::vector<FrameDecoder> decoders(sims.size());
    std::vector<bool> dropped(sims.size(), false);
    for (std::uint64_t w = 0; w < epochs; ++w) {
        for (std::size_t i = 0; i < sims.size(); ++i) {
            if (dropped[i]) continue;
            Frame f{sims[i].reg->device_id, w, sims[i].window_payload(w)};
            auto bytes = encode_frame(f);
            try {
                decoders[i].feed(bytes.data(), bytes.size());
                Frame got;
                while (decoders[i].next(got)) svc.on_frame(got);
            } catch (const std::exception& ex) {
                svc.on_drop(std::string("device ") + std::to_string(f.device_id) + ": " + ex.what());
                dropped[i] = true;
            }
        }
    }
}

void close_fd(int fd) {
    if (fd >= 0) ::close(fd);
}

void run_tcp(Gateway& svc, std::vector<DeviceSim>& sims, std::uint64_t epochs) {
    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw std::runtime_error("tcp: socket failed");
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    timeval tv{30, 0};  // never hang accept if a sender dies before connecting
    ::setsockopt(listener, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listener, static_cast<int>(sims.size()) + 1) != 0) {
        close_fd(listener);
        throw std::runtime_error("tcp: bind/listen failed");
    }
    socklen_t alen = sizeof(addr);
    if (::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &alen) != 0) {
        close_fd(listener);
        throw std::runtime_error("tcp: getsockname failed");
    }
    const std::uint16_t port = ntohs(addr.sin_port);

    std::vector<std::thread> readers;
    std::thread acceptor([&]() {
        for (std::size_t i = 0; i < sims.size(); ++i) {
            int conn = ::accept(listener, nullptr, nullptr);
            if (conn < 0) return;
            readers.emplace_back([conn, &svc]() {
                FrameDecoder dec;
                std::uint8_t buf[4096];
                std::uint32_t bound = 0;
                bool have_bound = false;
                for (;;) {
                    ssize_t got = ::read(conn, buf, sizeof(buf));
                    if (got <= 0) break;
                    try {
                        dec.feed(buf, static_cast<std::size_t>(got));
                        Frame f;
                        while (dec.next(f)) {
                            if (!have_bound) {
                                bound = f.device_id;
                                have_bound = true;
                            }
                            svc.on_frame(f);
                        }
                    } catch (const std::exception& ex) {
                        svc.on_drop(std::string("connection") +
                                    (have_bound ? " for device " + std::to_string(bound) : std::string()) +
                                    ": " + ex.what());
                        break;
                    }
                }
                close_fd(conn);
            });
        }
    });

    std::vector<std::thread> senders;
    senders.reserve(sims.size());
    for (auto& sim : sims) {
        senders.emplace_back([&sim, port, epochs]() {
            sockaddr_in peer{};
            peer.sin_family = AF_INET;
            peer.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
            peer.sin_port = htons(port);
            int fd = -1;
            for (int attempt = 0; attempt < 50; ++attempt) {
                fd = ::socket(AF_INET, SOCK_STREAM, 0);
                if (fd < 0) return;
                if (::connect(fd, reinterpret_cast<sockaddr*>(&peer), sizeof(peer)) == 0) break;
                close_fd(fd);
                fd = -1;
                std::this_thread::sleep_for(std::chrono::milliseconds(10));
            }
            if (fd < 0) return;
            for (std::uint64_t w = 0; w < epochs; ++w) {
                Frame f{sim.reg->device_id, w, sim.window_payload(w)};
                auto bytes = encode_frame(f);
                std::size_t sent = 0;
                while (sent < bytes.size()) {
                    ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
                    if (n <= 0) {
                        close_fd(fd);
                        return;
                    }
                    sent += static_cast<std::size_t>(n);
                }
            }
            close_fd(fd);
        });
    }
    for (auto& t : senders) t.join();
    acceptor.join();
    close_fd(listener);
    for (auto& t : readers) t.join();
}

}  // namespace

RunSummary run_simulation(const ServiceConfig& cfg, SchedulerPolicy& policy, const Script& script,
                          std::uint64_t seed, TransportKind transport) {
    if (cfg.devices.empty()) throw std::invalid_argument("run_simulation: no devices registered");
    if (cfg.epochs == 0) throw std::invalid_argument("run_simulation: epochs must be positive");
    for (const auto& d : cfg.devices) {
        validate_params(d.params);
        if (d.freq <= 0) throw std::invalid_argument("run_simulation: device freq must be positive");
    }
    validate_script(cfg, script);

    Gateway svc(cfg);
    std::vector<DeviceSim> sims = make_device_sims(cfg, script, seed);
    if (transport == TransportKind::in_process)
        run_in_process(svc, sims, cfg.epochs);
    else
        run_tcp(svc, sims, cfg.epochs);

    RunSummary out;
    svc.run_epochs(policy, out);
    append_ground_truth(script, cfg.epochs, out);
    return out;
}

std::string epoch_csv_header() { return "epoch,selected,freq_used,cap"; }

std::string epoch_csv_row(const EpochLog& log) {
    std::ostringstream os;
    os << log.epoch << ",\"";
    for (std::size_t i = 0; i < log.selected.size(); ++i) {
        if (i) os << ' ';
        os << log.selected[i];
    }
    os << "\"," << log.freq_used << ',' << log.cap;
    return os.str();
}

}  // namespace iotwm::netsim
