#include "iotwm/neural.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace iotwm {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate rows inside each layer's fused 4H-wide block.
// [0,H) input gate, [H,2H) forget, [2H,3H) output, [3H,4H) candidate.

}  // namespace

int Network::in_dim(int l) const {
    return l == 0 ? input_dim_ : hidden_dims_[static_cast<std::size_t>(l) - 1];
}

Network::Network(int input_dim, std::vector<int> hidden_dims, int output_dim, std::uint64_t seed)
    : input_dim_(input_dim), hidden_dims_(std::move(hidden_dims)), output_dim_(output_dim) {
    if (input_dim_ < 1 || output_dim_ < 1 || hidden_dims_.empty()) {
        throw std::invalid_argument("Network: dimensions must be positive");
    }
    for (int h : hidden_dims_) {
        if (h < 1) throw std::invalid_argument("Network: hidden dims must be positive");
    }

    std::size_t total = 0;
    for (std::size_t l = 0; l < hidden_dims_.size(); ++l) {
        const std::size_t H = static_cast<std::size_t>(hidden_dims_[l]);
        const std::size_t I = static_cast<std::size_t>(in_dim(static_cast<int>(l)));
        offW_.push_back(total);
        total += 4 * H * I;
        offU_.push_back(total);
        total += 4 * H * H;
        offb_.push_back(total);
        total += 4 * H;
    }
    const std::size_t Hlast = static_cast<std::size_t>(hidden_dims_.back());
    offWy_ = total;
    total += static_cast<std::size_t>(output_dim_) * Hlast;
    offby_ = total;
    total += static_cast<std::size_t>(output_dim_);
    theta_.resize(total);

    std::mt19937_64 eng(seed);
    for (std::size_t l = 0; l < hidden_dims_.size(); ++l) {
        const double r = 1.0 / std::sqrt(static_cast<double>(hidden_dims_[l]));
        std::uniform_real_distribution<double> dist(-r, r);
        const std::size_t end = l + 1 < hidden_dims_.size() ? offW_[l + 1] : offWy_;
        for (std::size_t i = offW_[l]; i < end; ++i) theta_[i] = dist(eng);
    }
    {
        const double r = 1.0 / std::sqrt(static_cast<double>(hidden_dims_.back()));
        std::uniform_real_distribution<double> dist(-r, r);
        for (std::size_t i = offWy_; i < theta_.size(); ++i) theta_[i] = dist(eng);
    }
}

void Network::check_input(const std::vector<std::vector<double>>& xs) const {
    if (xs.empty()) throw std::invalid_argument("Network: empty input sequence");
    for (const auto& row : xs) {
        if (static_cast<int>(row.size()) != input_dim_) {
            throw std::invalid_argument("Network: input row width != input_dim");
        }
    }
}

Network::State Network::initial_state() const {
    State st;
    st.h.reserve(hidden_dims_.size());
    st.c.reserve(hidden_dims_.size());
    for (int h : hidden_dims_) {
        st.h.emplace_back(static_cast<std::size_t>(h), 0.0);
        st.c.emplace_back(static_cast<std::size_t>(h), 0.0);
    }
    return st;
}

void Network::advance(State& st, const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim_) {
        throw std::invalid_argument("Network: input row width != input_dim");
    }
    const double* cur = x.data();
    std::size_t cur_len = x.size();
    for (std::size_t l = 0; l < hidden_dims_.size(); ++l) {
        const int H = hidden_dims_[l];
        const int I = static_cast<int>(cur_len);
        const double* W = theta_.data() + offW_[l];
        const double* U = theta_.data() + offU_[l];
        const double* b = theta_.data() + offb_[l];
        double* h = st.h[l].data();
        double* c = st.c[l].data();

        std::vector<double> a(static_cast<std::size_t>(4 * H));
        for (int r = 0; r < 4 * H; ++r) {
            double acc = b[r];
            const double* Wr = W + static_cast<std::size_t>(r) * I;
            for (int j = 0; j < I; ++j) acc += Wr[j] * cur[j];
            const double* Ur = U + static_cast<std::size_t>(r) * H;
            for (int j = 0; j < H; ++j) acc += Ur[j] * h[j];
            a[static_cast<std::size_t>(r)] = acc;
        }
        for (int j = 0; j < H; ++j) {
            const double gi = sigmoid(a[static_cast<std::size_t>(j)]);
            const double gf = sigmoid(a[static_cast<std::size_t>(H + j)]);
            const double go = sigmoid(a[static_cast<std::size_t>(2 * H + j)]);
            const double gg = std::tanh(a[static_cast<std::size_t>(3 * H + j)]);
            c[j] = gf * c[j] + gi * gg;
            h[j] = go * std::tanh(c[j]);
        }
        cur = h;
        cur_len = static_cast<std::size_t>(H);
    }
}

std::vector<double> Network::readout(const State& st) const {
    const int H = hidden_dims_.back();
    const double* h = st.h.back().data();
    const double* Wy = theta_.data() + offWy_;
    const double* by = theta_.data() + offby_;
    std::vector<double> y(static_cast<std::size_t>(output_dim_));
    for (int o = 0; o < output_dim_; ++o) {
        double acc = by[o];
        const double* Wr = Wy + static_cast<std::size_t>(o) * H;
        for (int j = 0; j < H; ++j) acc += Wr[j] * h[j];
        y[static_cast<std::size_t>(o)] = acc;
    }
    return y;
}

std::vector<std::vector<double>> Network::forward(const std::vector<std::vector<double>>& xs) const {
    check_input(xs);
    State st = initial_state();
    std::vector<std::vector<double>> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        advance(st, x);
        out.push_back(readout(st));
    }
    return out;
}

// Everything BPTT needs from the forward pass, per layer and timestep:
// post-activation gates, cell state, tanh(cell), hidden output.
struct Network::Cache {
    std::size_t T = 0;
    // [layer][t] -> vector
    std::vector<std::vector<std::vector<double>>> gates;  // 4H: i, f, o, g
    std::vector<std::vector<std::vector<double>>> c, tc, h;
    std::vector<std::vector<double>> out;  // readout per t
};

void Network::forward_cached(const std::vector<std::vector<double>>& xs, Cache& cache) const {
    const std::size_t T = xs.size();
    const std::size_t L = hidden_dims_.size();
    cache.T = T;
    cache.gates.assign(L, {});
    cache.c.assign(L, {});
    cache.tc.assign(L, {});
    cache.h.assign(L, {});
    cache.out.clear();
    for (std::size_t l = 0; l < L; ++l) {
        cache.gates[l].resize(T);
        cache.c[l].resize(T);
        cache.tc[l].resize(T);
        cache.h[l].resize(T);
    }

    State st = initial_state();
    for (std::size_t t = 0; t < T; ++t) {
        const double* cur = xs[t].data();
        std::size_t cur_len = xs[t].size();
        for (std::size_t l = 0; l < L; ++l) {
            const int H = hidden_dims_[l];
            const int I = static_cast<int>(cur_len);
            const double* W = theta_.data() + offW_[l];
            const double* U = theta_.data() + offU_[l];
            const double* b = theta_.data() + offb_[l];
            double* hprev = st.h[l].data();
            double* cprev = st.c[l].data();

            auto& g4 = cache.gates[l][t];
            g4.resize(static_cast<std::size_t>(4 * H));
            for (int r = 0; r < 4 * H; ++r) {
                double acc = b[r];
                const double* Wr = W + static_cast<std::size_t>(r) * I;
                for (int j = 0; j < I; ++j) acc += Wr[j] * cur[j];
                const double* Ur = U + static_cast<std::size_t>(r) * H;
                for (int j = 0; j < H; ++j) acc += Ur[j] * hprev[j];
                g4[static_cast<std::size_t>(r)] = acc;
            }
            auto& ct = cache.c[l][t];
            auto& tct = cache.tc[l][t];
            auto& ht = cache.h[l][t];
            ct.resize(static_cast<std::size_t>(H));
            tct.resize(static_cast<std::size_t>(H));
            ht.resize(static_cast<std::size_t>(H));
            for (int j = 0; j < H; ++j) {
                const double gi = sigmoid(g4[static_cast<std::size_t>(j)]);
                const double gf = sigmoid(g4[static_cast<std::size_t>(H + j)]);
                const double go = sigmoid(g4[static_cast<std::size_t>(2 * H + j)]);
                const double gg = std::tanh(g4[static_cast<std::size_t>(3 * H + j)]);
                g4[static_cast<std::size_t>(j)] = gi;  // keep post-activation values
                g4[static_cast<std::size_t>(H + j)] = gf;
                g4[static_cast<std::size_t>(2 * H + j)] = go;
                g4[static_cast<std::size_t>(3 * H + j)] = gg;
                ct[static_cast<std::size_t>(j)] = gf * cprev[j] + gi * gg;
                tct[static_cast<std::size_t>(j)] = std::tanh(ct[static_cast<std::size_t>(j)]);
                ht[static_cast<std::size_t>(j)] = go * tct[static_cast<std::size_t>(j)];
            }
            st.h[l] = ht;
            st.c[l] = ct;
            cur = ht.data();
            cur_len = ht.size();
        }
        State ro;
        ro.h = st.h;
        ro.c = st.c;
        cache.out.push_back(readout(ro));
    }
}

namespace {

// Number of supervised scalar cells in a sequence and target row for step t
// (or nullptr when t is unsupervised).
const std::vector<double>* target_row(const Sequence& s, std::size_t t) {
    if (s.y.size() == s.x.size()) return &s.y[t];
    if (s.y.size() == 1) return t + 1 == s.x.size() ? &s.y[0] : nullptr;
    throw std::invalid_argument("Sequence: y must have one row per timestep or exactly one row");
}

}  // namespace

double Network::loss(const std::vector<Sequence>& batch) const {
    if (batch.empty()) throw std::invalid_argument("Network::loss: empty batch");
    double total = 0.0;
    for (const auto& s : batch) {
        check_input(s.x);
        const auto out = forward(s.x);
        double se = 0.0;
        std::size_t cells = 0;
        for (std::size_t t = 0; t < s.x.size(); ++t) {
            const auto* y = target_row(s, t);
            if (!y) continue;
            if (static_cast<int>(y->size()) != output_dim_) {
                throw std::invalid_argument("Sequence: target row width != output_dim");
            }
            for (int o = 0; o < output_dim_; ++o) {
                const double d = out[t][static_cast<std::size_t>(o)] - (*y)[static_cast<std::size_t>(o)];
                se += d * d;
            }
            cells += static_cast<std::size_t>(output_dim_);
        }
        if (cells == 0) throw std::invalid_argument("Sequence: no supervised timesteps");
        total += se / static_cast<double>(cells);
    }
    return total / static_cast<double>(batch.size());
}

double Network::grad(const std::vector<Sequence>& batch, std::vector<double>& grad_out) const {
    if (batch.empty()) throw std::invalid_argument("Network::grad: empty batch");
    grad_out.assign(theta_.size(), 0.0);
    const std::size_t L = hidden_dims_.size();
    double total_loss = 0.0;

    Cache cache;
    for (const auto& s : batch) {
        check_input(s.x);
        forward_cached(s.x, cache);
        const std::size_t T = cache.T;

        std::size_t cells = 0;
        for (std::size_t t = 0; t < T; ++t) {
            if (target_row(s, t)) cells += static_cast<std::size_t>(output_dim_);
        }
        if (cells == 0) throw std::invalid_argument("Sequence: no supervised timesteps");
        const double scale = 2.0 / (static_cast<double>(cells) * static_cast<double>(batch.size()));

        // Readout layer first; collect d(loss)/dh for the top LSTM layer.
        const int Hlast = hidden_dims_.back();
        std::vector<std::vector<double>> dtop(T, std::vector<double>(static_cast<std::size_t>(Hlast), 0.0));
        const double* Wy = theta_.data() + offWy_;
        double* gWy = grad_out.data() + offWy_;
        double* gby = grad_out.data() + offby_;
        for (std::size_t t = 0; t < T; ++t) {
            const auto* y = target_row(s, t);
            if (!y) continue;
            for (int o = 0; o < output_dim_; ++o) {
                const double d = cache.out[t][static_cast<std::size_t>(o)] - (*y)[static_cast<std::size_t>(o)];
                total_loss += d * d / (static_cast<double>(cells) * static_cast<double>(batch.size()));
                const double dy = scale * d;
                gby[o] += dy;
                const double* Wr = Wy + static_cast<std::size_t>(o) * Hlast;
                double* gWr = gWy + static_cast<std::size_t>(o) * Hlast;
                const auto& htop = cache.h[L - 1][t];
                for (int j = 0; j < Hlast; ++j) {
                    gWr[j] += dy * htop[static_cast<std::size_t>(j)];
                    dtop[t][static_cast<std::size_t>(j)] += dy * Wr[j];
                }
            }
        }

        // BPTT, top layer down. dabove[t] is d(loss)/d(h_l[t]) contributed
        // from outside the layer (readout and/or the layer above).
        std::vector<std::vector<double>> dabove = std::move(dtop);
        for (int li = static_cast<int>(L) - 1; li >= 0; --li) {
            const std::size_t l = static_cast<std::size_t>(li);
            const int H = hidden_dims_[l];
            const int I = in_dim(li);
            const double* W = theta_.data() + offW_[l];
            const double* U = theta_.data() + offU_[l];
            double* gW = grad_out.data() + offW_[l];
            double* gU = grad_out.data() + offU_[l];
            double* gb = grad_out.data() + offb_[l];

            std::vector<std::vector<double>> dx(T, std::vector<double>(static_cast<std::size_t>(I), 0.0));
            std::vector<double> dh_next(static_cast<std::size_t>(H), 0.0);
            std::vector<double> dc_next(static_cast<std::size_t>(H), 0.0);
            std::vector<double> da(static_cast<std::size_t>(4 * H));

            for (std::size_t t = T; t-- > 0;) {
                const auto& g4 = cache.gates[l][t];
                const auto& tct = cache.tc[l][t];
                for (int j = 0; j < H; ++j) {
                    const double gi = g4[static_cast<std::size_t>(j)];
                    const double gf = g4[static_cast<std::size_t>(H + j)];
                    const double go = g4[static_cast<std::size_t>(2 * H + j)];
                    const double gg = g4[static_cast<std::size_t>(3 * H + j)];
                    const double dh = dabove[t][static_cast<std::size_t>(j)] + dh_next[static_cast<std::size_t>(j)];
                    const double tc = tct[static_cast<std::size_t>(j)];
                    const double dc = dh * go * (1.0 - tc * tc) + dc_next[static_cast<std::size_t>(j)];
                    const double cprev = t > 0 ? cache.c[l][t - 1][static_cast<std::size_t>(j)] : 0.0;
                    da[static_cast<std::size_t>(j)] = dc * gg * gi * (1.0 - gi);            // input gate
                    da[static_cast<std::size_t>(H + j)] = dc * cprev * gf * (1.0 - gf);     // forget gate
                    da[static_cast<std::size_t>(2 * H + j)] = dh * tc * go * (1.0 - go);    // output gate
                    da[static_cast<std::size_t>(3 * H + j)] = dc * gi * (1.0 - gg * gg);    // candidate
                    dc_next[static_cast<std::size_t>(j)] = dc * gf;
                }

                const double* xrow = l == 0 ? s.x[t].data() : cache.h[l - 1][t].data();
                const double* hprev = t > 0 ? cache.h[l][t - 1].data() : nullptr;
                std::fill(dh_next.begin(), dh_next.end(), 0.0);
                for (int r = 0; r < 4 * H; ++r) {
                    const double d = da[static_cast<std::size_t>(r)];
                    if (d == 0.0) continue;
                    gb[r] += d;
                    double* gWr = gW + static_cast<std::size_t>(r) * I;
                    const double* Wr = W + static_cast<std::size_t>(r) * I;
                    auto& dxt = dx[t];
                    for (int j = 0; j < I; ++j) {
                        gWr[j] += d * xrow[j];
                        dxt[static_cast<std::size_t>(j)] += d * Wr[j];
                    }
                    double* gUr = gU + static_cast<std::size_t>(r) * H;
                    const double* Ur = U + static_cast<std::size_t>(r) * H;
                    for (int j = 0; j < H; ++j) {
                        if (hprev) gUr[j] += d * hprev[j];
                        dh_next[static_cast<std::size_t>(j)] += d * Ur[j];
                    }
                }
            }
            dabove = std::move(dx);
        }
    }
    return total_loss;
}

void Network::apply_update(const std::vector<double>& grad, double lr, double clip_norm) {
    if (grad.size() != theta_.size()) throw std::invalid_argument("apply_update: gradient size mismatch");
    double scale = 1.0;
    if (clip_norm > 0.0) {
        double norm2 = 0.0;
        for (double g : grad) norm2 += g * g;
        const double norm = std::sqrt(norm2);
        if (norm > clip_norm) scale = clip_norm / norm;
    }
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_[i] -= lr * scale * grad[i];
}

std::vector<LossPoint> Network::train(const std::vector<Sequence>& data, const TrainConfig& cfg) {
    if (cfg.lr < 0.0 || cfg.epochs < 0) throw std::invalid_argument("train: bad config");
    std::vector<LossPoint> curve;
    curve.push_back({0, loss(data)});
    std::vector<double> g;
    for (int e = 1; e <= cfg.epochs; ++e) {
        const double l = grad(data, g);
        if (!std::isfinite(l)) {
            throw std::runtime_error("train: loss diverged at epoch " + std::to_string(e) +
                                     "; lower the learning rate");
        }
        apply_update(g, cfg.lr, cfg.clip_norm);
        curve.push_back({e, loss(data)});
    }
    return curve;
}

std::string Network::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["input_dim"] = input_dim_;
    j["hidden_dims"] = hidden_dims_;
    j["output_dim"] = output_dim_;
    j["theta"] = theta_;
    return j.dump();
}

Network Network::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) throw std::runtime_error("Network: unknown checkpoint version");
    Network net(j.at("input_dim").get<int>(), j.at("hidden_dims").get<std::vector<int>>(),
                j.at("output_dim").get<int>(), 0);
    auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != net.theta_.size()) throw std::runtime_error("Network: checkpoint size mismatch");
    net.theta_ = std::move(theta);
    return net;
}

void Network::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("Network::save: cannot open " + path);
    f << to_json() << "\n";
    if (!f) throw std::runtime_error("Network::save: write failed for " + path);
}

Network Network::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("Network::load: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

HookExpected make_network_expected(std::shared_ptr<const Network> net, int ns) {
    if (!net) throw std::invalid_argument("make_network_expected: null network");
    if (net->input_dim() != 2 || net->output_dim() != 1) {
        throw std::invalid_argument("make_network_expected: expected a [sample, chip] -> score network");
    }
    if (ns < 1) throw std::invalid_argument("make_network_expected: ns must be >= 1");
    HookExpected hook;
    hook.fn = [net, ns](const std::vector<double>& watermarked, const PNKey& key) -> BitStream {
        const std::size_t n = key.chips.size();
        if (watermarked.size() != n * static_cast<std::size_t>(ns)) {
            throw std::invalid_argument("network expected-stream hook: window length != n*ns");
        }
        std::vector<std::vector<double>> xs;
        xs.reserve(watermarked.size());
        for (std::size_t t = 0; t < watermarked.size(); ++t) {
            xs.push_back({watermarked[t], static_cast<double>(key.chips[t % n])});
        }
        const auto out = net->forward(xs);
        BitStream bits(static_cast<std::size_t>(ns));
        for (int k = 0; k < ns; ++k) {
            double acc = 0.0;
            for (std::size_t t = static_cast<std::size_t>(k) * n; t < (static_cast<std::size_t>(k) + 1) * n; ++t) {
                acc += out[t][0];
            }
            bits[static_cast<std::size_t>(k)] = acc >= 0.0 ? 1 : -1;
        }
        return bits;
    };
    return hook;
}

}  // namespace iotwm
