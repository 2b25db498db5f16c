#include "iotwm/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace iotwm {

std::vector<double> Belief::deltas() const {
    std::vector<double> d(counts.size(), 0.0);
    if (t > 0) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            d[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
        }
    }
    return d;
}

void belief_update(Belief& b, const Strategy& observed) {
    for (int i : observed.devices) {
        if (i < 0 || i >= static_cast<int>(b.counts.size())) {
            throw std::invalid_argument("belief_update: device index out of range");
        }
        ++b.counts[static_cast<std::size_t>(i)];
    }
    ++b.t;
}

Strategy br_attacker(const Belief& about_gateway, const std::vector<double>& values, int K) {
    const int n = static_cast<int>(values.size());
    if (K < 1 || K > n) throw std::invalid_argument("br_attacker: K must be in [1, N]");
    if (about_gateway.counts.size() != values.size()) {
        throw std::invalid_argument("br_attacker: belief/values size mismatch");
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> key(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        key[static_cast<std::size_t>(i)] = (1.0 - about_gateway.delta(i)) * values[static_cast<std::size_t>(i)];
    }
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double ka = key[static_cast<std::size_t>(a)], kb = key[static_cast<std::size_t>(b)];
        return ka != kb ? ka > kb : a < b;
    });
    Strategy s;
    s.devices.assign(idx.begin(), idx.begin() + K);
    std::sort(s.devices.begin(), s.devices.end());
    return s;
}

Strategy br_gateway(const std::vector<double>& attack_rates, const std::vector<double>& values,
                    const std::vector<long long>& freqs, long long cap) {
    const std::size_t N = freqs.size();
    if (values.size() != N) throw std::invalid_argument("br_gateway: values/freqs size mismatch");
    if (attack_rates.size() != N) {
        throw std::invalid_argument("br_gateway: rates/freqs size mismatch");
    }
    if (cap < 0) throw std::invalid_argument("br_gateway: cap must be nonnegative");
    for (long long f : freqs) {
        if (f <= 0) throw std::invalid_argument("br_gateway: frequencies must be positive");
    }

    long long g = 0;
    for (long long f : freqs) g = std::gcd(g, f);
    std::vector<long long> f(N);
    long long total = 0;
    for (std::size_t i = 0; i < N; ++i) {
        f[i] = freqs[i] / g;
        total += f[i];
    }
    const long long capS = std::min(cap / g, total);
    if ((N + 1) * static_cast<std::size_t>(capS + 1) > 50000000ull) {
        throw std::runtime_error("br_gateway: knapsack table too large; rescale frequencies");
    }

    std::vector<double> p(N);
    for (std::size_t i = 0; i < N; ++i) p[i] = attack_rates[i] * values[i];

    // Suffix table best[i][r]: the best profit from devices i.. with capacity r.
    std::vector<std::vector<double>> best(N + 1, std::vector<double>(static_cast<std::size_t>(capS + 1), 0.0));
    for (std::size_t i = N; i-- > 0;) {
        for (long long r = 0; r <= capS; ++r) {
            double b = best[i + 1][static_cast<std::size_t>(r)];
            if (f[i] <= r) {
                const double w = p[i] + best[i + 1][static_cast<std::size_t>(r - f[i])];
                if (w > b) b = w;
            }
            best[i][static_cast<std::size_t>(r)] = b;
        }
    }

    // Front-to-back reconstruction. Taking a device whenever its branch ties
    // the optimum, and stopping once nothing of value remains, yields the
    // lexicographically smallest optimal set.
    Strategy s;
    long long r = capS;
    for (std::size_t i = 0; i < N; ++i) {
        if (best[i][static_cast<std::size_t>(r)] == 0.0) break;
        if (f[i] <= r && p[i] + best[i + 1][static_cast<std::size_t>(r - f[i])] == best[i][static_cast<std::size_t>(r)]) {
            s.devices.push_back(static_cast<int>(i));
            r -= f[i];
        }
    }
    return s;
}

Strategy br_gateway(const Belief& about_attacker, const std::vector<double>& values,
                    const std::vector<long long>& freqs, long long cap) {
    if (about_attacker.counts.size() != freqs.size()) {
        throw std::invalid_argument("br_gateway: belief/freqs size mismatch");
    }
    return br_gateway(about_attacker.deltas(), values, freqs, cap);
}

FpResult fp_run(const GameConfig& cfg, double eps, long long max_iter) {
    cfg.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("fp_run: eps must be positive");
    if (max_iter < 1) throw std::invalid_argument("fp_run: max_iter must be positive");

    const int N = cfg.n();
    const auto values = cfg.values();
    FpResult res;
    res.gateway_belief = Belief(N);   // gateway's view of the attacker
    res.attacker_belief = Belief(N);  // attacker's view of the gateway
    std::vector<double> prev_a(static_cast<std::size_t>(N), 0.0);
    std::vector<double> prev_g(static_cast<std::size_t>(N), 0.0);
    res.value_trace.reserve(static_cast<std::size_t>(std::min<long long>(max_iter, 1 << 20)));

    for (long long t = 0; t < max_iter; ++t) {
        const Strategy S = br_gateway(res.gateway_belief, values, cfg.freqs, cfg.cap);
        const Strategy A = br_attacker(res.attacker_belief, values, cfg.K);
        belief_update(res.gateway_belief, A);
        belief_update(res.attacker_belief, S);

        auto da = res.gateway_belief.deltas();   // attacker's empirical allocation
        auto dg = res.attacker_belief.deltas();  // gateway's empirical allocation
        res.value_trace.push_back(expected_utility(da, dg, values).second);

        double mx = 0.0;
        for (int i = 0; i < N; ++i) {
            mx = std::max(mx, std::abs(da[static_cast<std::size_t>(i)] - prev_a[static_cast<std::size_t>(i)]));
            mx = std::max(mx, std::abs(dg[static_cast<std::size_t>(i)] - prev_g[static_cast<std::size_t>(i)]));
        }
        prev_a.swap(da);
        prev_g.swap(dg);
        res.iterations = t + 1;
        if (mx < eps) {
            res.converged = true;
            break;
        }
    }
    res.attacker_alloc = res.gateway_belief.deltas();
    res.gateway_alloc = res.attacker_belief.deltas();
    return res;
}

Strategy sample_baseline(BaselineKind kind, const GameConfig& cfg, Rng& rng) {
    cfg.validate();
    const int N = cfg.n();
    std::vector<int> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), 0);
    if (kind == BaselineKind::equal) {
        std::shuffle(order.begin(), order.end(), rng.engine());
    } else {
        const auto values = cfg.values();
        std::vector<double> w(values);
        std::vector<int> picked;
        picked.reserve(static_cast<std::size_t>(N));
        std::vector<int> alive(order);
        while (!alive.empty()) {
            double total = 0.0;
            for (int i : alive) total += w[static_cast<std::size_t>(i)];
            double u = rng.uniform() * total;
            std::size_t chosen = alive.size() - 1;
            for (std::size_t k = 0; k < alive.size(); ++k) {
                u -= w[static_cast<std::size_t>(alive[k])];
                if (u <= 0.0) {
                    chosen = k;
                    break;
                }
            }
            picked.push_back(alive[chosen]);
            alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen));
        }
        order = std::move(picked);
    }
    Strategy s;
    long long rem = cfg.cap;
    for (int i : order) {
        if (cfg.freqs[static_cast<std::size_t>(i)] <= rem) {
            s.devices.push_back(i);
            rem -= cfg.freqs[static_cast<std::size_t>(i)];
        }
    }
    std::sort(s.devices.begin(), s.devices.end());
    return s;
}

QState QState::unknown(int q, int n) {
    if (q < 1 || n < 1) throw std::invalid_argument("QState: q and n must be positive");
    QState s;
    s.rows.assign(static_cast<std::size_t>(q), std::vector<int>(static_cast<std::size_t>(n), 2));
    return s;
}

void QState::push(std::vector<int> row) {
    if (rows.empty() || row.size() != rows[0].size()) {
        throw std::invalid_argument("QState::push: row width mismatch");
    }
    rows.erase(rows.begin());
    rows.push_back(std::move(row));
}

std::vector<int> impute_state(const std::vector<int>& row, const std::vector<double>& delta, Rng& rng) {
    if (row.size() != delta.size()) throw std::invalid_argument("impute_state: row/delta size mismatch");
    std::vector<int> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 2) {
            out[i] = rng.bernoulli(delta[i]) ? 1 : 0;
        } else if (row[i] == 0 || row[i] == 1) {
            out[i] = row[i];
        } else {
            throw std::invalid_argument("impute_state: entries must be 0, 1, or 2");
        }
    }
    return out;
}

std::vector<double> PartialBelief::deltas() const {
    std::vector<double> d(auth_count.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = delta(static_cast<int>(i));
    return d;
}

void PartialBelief::observe(int device, bool attacked) {
    if (device < 0 || device >= static_cast<int>(auth_count.size())) {
        throw std::invalid_argument("PartialBelief::observe: device index out of range");
    }
    ++auth_count[static_cast<std::size_t>(device)];
    if (attacked) ++attack_count[static_cast<std::size_t>(device)];
}

std::vector<std::vector<double>> q_input(const std::vector<std::vector<int>>& imputed_rows,
                                         const Strategy& action,
                                         const std::vector<std::size_t>& order) {
    if (imputed_rows.empty()) throw std::invalid_argument("q_input: need at least one history row");
    const std::size_t N = imputed_rows.front().size();
    const std::size_t q = imputed_rows.size();
    for (const auto& row : imputed_rows) {
        if (row.size() != N) throw std::invalid_argument("q_input: row width mismatch");
        for (int v : row) {
            if (v != 0 && v != 1) throw std::invalid_argument("q_input: rows must be imputed to 0/1");
        }
    }
    for (int i : action.devices) {
        if (i < 0 || i >= static_cast<int>(N)) throw std::invalid_argument("q_input: action index out of range");
    }
    if (!order.empty() && order.size() != N) {
        throw std::invalid_argument("q_input: order/row size mismatch");
    }

    std::vector<std::vector<double>> xs(N, std::vector<double>(q + 1, 0.0));
    for (std::size_t k = 0; k < N; ++k) {
        const std::size_t i = order.empty() ? k : order[k];
        for (std::size_t j = 0; j < q; ++j) xs[k][j] = imputed_rows[j][i];
        xs[k][q] = action.contains(static_cast<int>(i)) ? 1.0 : 0.0;
    }
    return xs;
}

std::vector<std::size_t> random_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    return order;
}

Strategy sample_maximal_set(const GameConfig& cfg, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(cfg.n()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    Strategy s;
    long long rem = cfg.cap;
    for (int i : order) {
        if (cfg.freqs[static_cast<std::size_t>(i)] <= rem) {
            s.devices.push_back(i);
            rem -= cfg.freqs[static_cast<std::size_t>(i)];
        }
    }
    std::sort(s.devices.begin(), s.devices.end());
    return s;
}

double q_target_value(const std::function<double(const QState&, const Strategy&)>& qeval,
                      const Experience& exp, const std::vector<Strategy>& candidates, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("q_target_value: gamma must be in [0,1)");
    if (exp.terminal) return exp.reward;
    if (candidates.empty()) throw std::invalid_argument("q_target_value: empty candidate pool");
    double best = qeval(exp.next_state, candidates[0]);
    for (std::size_t k = 1; k < candidates.size(); ++k) {
        best = std::max(best, qeval(exp.next_state, candidates[k]));
    }
    return exp.reward + gamma * best;
}

// Greedy completion: covering more devices never hurts the gateway, so pool
// candidates are always topped up to maximal sets.
Strategy extend_maximal(const GameConfig& cfg, Strategy s) {
    long long used = 0;
    for (int i : s.devices) used += cfg.freqs[static_cast<std::size_t>(i)];
    for (int i = 0; i < cfg.n(); ++i) {
        if (!s.contains(i) && used + cfg.freqs[static_cast<std::size_t>(i)] <= cfg.cap) {
            s.devices.push_back(i);
            used += cfg.freqs[static_cast<std::size_t>(i)];
        }
    }
    std::sort(s.devices.begin(), s.devices.end());
    return s;
}

namespace {

std::vector<std::vector<int>> impute_rows(const QState& s, const std::vector<double>& delta, Rng& rng) {
    std::vector<std::vector<int>> out;
    out.reserve(s.rows.size());
    for (const auto& row : s.rows) out.push_back(impute_state(row, delta, rng));
    return out;
}

// One shared presentation order across the pool keeps the comparison fair:
// candidates differ only in their membership channel.
std::vector<double> score_pool(const Network& net, const std::vector<std::size_t>& order,
                               const std::vector<std::vector<int>>& imputed_rows,
                               const std::vector<Strategy>& pool) {
    const std::size_t q = imputed_rows.size();
    std::vector<double> x(q + 1);
    std::vector<double> scores(pool.size());
    for (std::size_t k = 0; k < pool.size(); ++k) {
        auto st = net.initial_state();
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const std::size_t i = order[pos];
            for (std::size_t j = 0; j < q; ++j) x[j] = imputed_rows[j][i];
            x[q] = pool[k].contains(static_cast<int>(i)) ? 1.0 : 0.0;
            net.advance(st, x);
        }
        scores[k] = net.readout(st)[0];
    }
    return scores;
}

// Candidate actions are maximal feasible sets drawn with the same
// value-weighted fill rule as the proportional baseline. Uniform sampling
// wastes most candidates on low-value sets, and seeding the pool with the
// deterministic knapsack response lets a trained net collapse onto a pure
// strategy the fictitious-play attacker then farms; a value-weighted pool
// keeps the greedy policy a well-mixed distribution no matter how sharp
// the learned scores get.
std::vector<Strategy> make_pool(const GameConfig& cfg, int count, Rng& rng) {
    std::vector<Strategy> pool;
    pool.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        pool.push_back(sample_baseline(BaselineKind::proportional, cfg, rng));
    return pool;
}

double epsilon_at(const DrlConfig& cfg, int step) {
    const double decay_steps = std::max(1.0, cfg.eps_frac * static_cast<double>(cfg.train_steps));
    if (static_cast<double>(step) >= decay_steps) return cfg.eps_end;
    const double frac = static_cast<double>(step) / decay_steps;
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

}  // namespace

double q_update(Network& qnet, const GameConfig& game, const Experience& exp,
                const std::vector<Strategy>& candidates, const std::vector<double>& delta,
                double alpha, double gamma, double clip_norm, Rng& rng) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("q_update: alpha must be in (0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("q_update: gamma must be in [0,1)");
    if (qnet.input_dim() != static_cast<int>(exp.state.rows.size()) + 1 || qnet.output_dim() != 1) {
        throw std::invalid_argument("q_update: network shape does not match the state depth");
    }

    double target;
    if (exp.terminal) {
        target = exp.reward;
    } else {
        if (candidates.empty()) throw std::invalid_argument("q_update: empty candidate pool");
        const auto imputed_next = impute_rows(exp.next_state, delta, rng);
        const auto scores =
            score_pool(qnet, random_order(static_cast<std::size_t>(game.n()), rng), imputed_next, candidates);
        target = exp.reward + gamma * *std::max_element(scores.begin(), scores.end());
    }

    Sequence s;
    s.x = q_input(impute_rows(exp.state, delta, rng), exp.action,
                  random_order(static_cast<std::size_t>(game.n()), rng));
    s.y = {{target}};
    std::vector<double> g;
    qnet.grad({s}, g);
    qnet.apply_update(g, alpha, clip_norm);
    return target;
}

Strategy DrlPolicy::act_greedy(const QState& state, const std::vector<double>& delta, Rng& rng) const {
    const auto pool = make_pool(game, cfg.act_pool, rng);
    // One imputation draw is a single-sample estimate of the expected score;
    // averaging a few draws makes the argmax read the net, not the dice.
    std::vector<double> acc(pool.size(), 0.0);
    const int draws = std::max(1, cfg.act_draws);
    for (int d = 0; d < draws; ++d) {
        const auto imputed = impute_rows(state, delta, rng);
        const auto scores =
            score_pool(*net, random_order(static_cast<std::size_t>(game.n()), rng), imputed, pool);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += scores[k];
    }
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
    return pool[best];
}

DrlResult drl_train(const GameConfig& game, const DrlConfig& cfg, std::uint64_t seed) {
    game.validate();
    if (cfg.q < 1 || cfg.train_steps < 1 || cfg.episode_len < 1 || cfg.batch < 1 ||
        cfg.act_pool < 1 || cfg.target_pool < 1) {
        throw std::invalid_argument("drl_train: counts must be positive");
    }
    if (cfg.replay_capacity < static_cast<std::size_t>(cfg.batch)) {
        throw std::invalid_argument("drl_train: replay capacity below batch size");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw std::invalid_argument("drl_train: alpha must be in (0,1]");
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("drl_train: gamma must be in [0,1)");

    const int N = game.n();
    const auto values = game.values();
    auto net = std::make_shared<Network>(cfg.q + 1, cfg.hidden, 1, derive_seed(seed, 1));
    Rng rng_eps(derive_seed(seed, 2));
    Rng rng_imp(derive_seed(seed, 3));
    Rng rng_pool(derive_seed(seed, 4));
    Rng rng_replay(derive_seed(seed, 5));

    Belief attacker_view(N);  // attacker's empirical model of the gateway
    PartialBelief belief(N, static_cast<double>(game.K) / static_cast<double>(N));
    QState state = QState::unknown(cfg.q, N);

    std::vector<Experience> replay;
    replay.reserve(std::min<std::size_t>(cfg.replay_capacity, static_cast<std::size_t>(cfg.train_steps)));
    std::size_t write_at = 0;

    DrlResult res;
    res.ug_running_mean.reserve(static_cast<std::size_t>(cfg.train_steps));
    double ug_sum = 0.0;
    std::vector<double> grad_buf;

    for (int t = 0; t < cfg.train_steps; ++t) {
        const Strategy attack = br_attacker(attacker_view, values, game.K);

        const auto pool = make_pool(game, cfg.act_pool, rng_pool);
        Strategy play;
        if (rng_eps.uniform() < epsilon_at(cfg, t)) {
            play = pool[static_cast<std::size_t>(
                rng_eps.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        } else {
            std::vector<double> acc(pool.size(), 0.0);
            const int draws = std::max(1, cfg.act_draws);
            for (int d = 0; d < draws; ++d) {
                const auto imputed = impute_rows(state, belief.deltas(), rng_imp);
                const auto scores = score_pool(
                    *net, random_order(static_cast<std::size_t>(N), rng_imp), imputed, pool);
                for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += scores[k];
            }
            play = pool[static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) -
                                                 acc.begin())];
        }

        std::vector<int> row(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            row[static_cast<std::size_t>(i)] =
                play.contains(i) ? (attack.contains(i) ? 1 : 0) : 2;
        }
        for (int i : play.devices) belief.observe(i, attack.contains(i));

        const auto delta = belief.deltas();
        const auto imputed_row = impute_state(row, delta, rng_imp);
        double reward = 1.0;
        for (int i = 0; i < N; ++i) {
            if (!play.contains(i) && imputed_row[static_cast<std::size_t>(i)] == 1) {
                reward -= values[static_cast<std::size_t>(i)];
            }
        }

        QState next = state;
        next.push(row);
        const bool terminal = (t + 1) % cfg.episode_len == 0;

        Experience exp{state, play, reward, next, terminal};
        if (replay.size() < cfg.replay_capacity) {
            replay.push_back(std::move(exp));
        } else {
            replay[write_at] = std::move(exp);
            write_at = (write_at + 1) % cfg.replay_capacity;
        }

        if (replay.size() >= static_cast<std::size_t>(cfg.batch)) {
            std::vector<Sequence> batch;
            batch.reserve(static_cast<std::size_t>(cfg.batch));
            for (int b = 0; b < cfg.batch; ++b) {
                const Experience& ex = replay[static_cast<std::size_t>(
                    rng_replay.uniform_int(0, static_cast<std::int64_t>(replay.size()) - 1))];
                double target;
                if (ex.terminal) {
                    target = ex.reward;
                } else {
                    const auto tpool = make_pool(game, cfg.target_pool, rng_pool);
                    const auto imputed_next = impute_rows(ex.next_state, delta, rng_imp);
                    const auto scores = score_pool(
                        *net, random_order(static_cast<std::size_t>(N), rng_imp), imputed_next, tpool);
                    target = ex.reward + cfg.gamma * *std::max_element(scores.begin(), scores.end());
                }
                Sequence s;
                s.x = q_input(impute_rows(ex.state, delta, rng_imp), ex.action,
                              random_order(static_cast<std::size_t>(N), rng_imp));
                s.y = {{target}};
                batch.push_back(std::move(s));
            }
            net->grad(batch, grad_buf);
            net->apply_update(grad_buf, cfg.alpha, 5.0);
        }

        ug_sum += utilities(play, attack, values).first;
        res.ug_running_mean.push_back(ug_sum / static_cast<double>(t + 1));

        belief_update(attacker_view, play);
        state = terminal ? QState::unknown(cfg.q, N) : next;
    }

    res.policy = DrlPolicy{net, game, cfg};
    res.belief = std::move(belief);
    res.final_state = std::move(state);
    return res;
}

FpGatewayAgent::FpGatewayAgent(const GameConfig& cfg)
    : cfg_(cfg), values_(cfg.values()), about_attacker_(cfg.n()) {}

Strategy FpGatewayAgent::act(Rng&) {
    return br_gateway(about_attacker_, values_, cfg_.freqs, cfg_.cap);
}

void FpGatewayAgent::observe(const Strategy&, const Strategy& attacked) {
    belief_update(about_attacker_, attacked);
}

DrlGatewayAgent::DrlGatewayAgent(DrlPolicy policy, PartialBelief belief, QState state)
    : policy_(std::move(policy)), belief_(std::move(belief)), state_(std::move(state)) {}

Strategy DrlGatewayAgent::act(Rng& rng) {
    return policy_.act_greedy(state_, belief_.deltas(), rng);
}

void DrlGatewayAgent::observe(const Strategy& played, const Strategy& attacked) {
    const int N = policy_.game.n();
    std::vector<int> row(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        row[static_cast<std::size_t>(i)] = played.contains(i) ? (attacked.contains(i) ? 1 : 0) : 2;
    }
    for (int i : played.devices) belief_.observe(i, attacked.contains(i));
    state_.push(std::move(row));
}

DuelResult run_duel(const GameConfig& cfg, GatewayAgent& agent, long long steps, std::uint64_t seed) {
    cfg.validate();
    if (steps < 1) throw std::invalid_argument("run_duel: steps must be positive");

    const int N = cfg.n();
    const auto values = cfg.values();
    Rng rng(derive_seed(seed, 0xd0e1));
    Belief attacker_view(N);
    std::vector<long long> included(static_cast<std::size_t>(N), 0);

    DuelResult res;
    res.ug_trace.reserve(static_cast<std::size_t>(steps));
    double sum = 0.0;
    for (long long t = 0; t < steps; ++t) {
        const Strategy play = agent.act(rng);
        long long used = 0;
        for (int i : play.devices) used += cfg.freqs[static_cast<std::size_t>(i)];
        if (used > cfg.cap) throw std::runtime_error("run_duel: agent exceeded the authentication budget");

        const Strategy attack = br_attacker(attacker_view, values, cfg.K);
        const double ug = utilities(play, attack, values).first;
        sum += ug;
        res.ug_trace.push_back(ug);
        for (int i : play.devices) ++included[static_cast<std::size_t>(i)];

        agent.observe(play, attack);
        belief_update(attacker_view, play);
    }
    res.mean_ug = sum / static_cast<double>(steps);
    res.inclusion_freq.assign(static_cast<std::size_t>(N), 0.0);
    for (int i = 0; i < N; ++i) {
        res.inclusion_freq[static_cast<std::size_t>(i)] =
            static_cast<double>(included[static_cast<std::size_t>(i)]) / static_cast<double>(steps);
    }
    return res;
}

}  // namespace iotwm
