#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "iotwm/game.hpp"
#include "iotwm/neural.hpp"
#include "iotwm/rng.hpp"

namespace iotwm {

// Empirical opponent model: counts[i] observations of device i over t steps,
// so delta(i) = counts[i]/t is exactly the observed inclusion frequency.
struct Belief {
    std::vector<long long> counts;
    long long t = 0;

    Belief() = default;
    explicit Belief(int n) : counts(static_cast<std::size_t>(n), 0) {}
    double delta(int i) const {
        return t > 0 ? static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(t)
                     : 0.0;
    }
    std::vector<double> deltas() const;
};

void belief_update(Belief& b, const Strategy& observed);

// Attacker's best response to its belief about the gateway: the K devices
// with the largest (1 - delta_i) * v_i, ties to the smaller index.
Strategy br_attacker(const Belief& about_gateway, const std::vector<double>& values, int K);

// Gateway's best response to estimated per-device attack rates: exact 0/1
// knapsack (profit rate_i * v_i, weight f_i, capacity cap), ties resolved to
// the lexicographically smallest optimal set.
Strategy br_gateway(const std::vector<double>& attack_rates, const std::vector<double>& values,
                    const std::vector<long long>& freqs, long long cap);
Strategy br_gateway(const Belief& about_attacker, const std::vector<double>& values,
                    const std::vector<long long>& freqs, long long cap);

struct FpResult {
    Belief gateway_belief;   // held by the gateway, about the attacker
    Belief attacker_belief;  // held by the attacker, about the gateway
    AllocationVector gateway_alloc;   // gateway's empirical play frequencies
    AllocationVector attacker_alloc;  // attacker's empirical play frequencies
    std::vector<double> value_trace;  // attacker's expected utility at the empirical allocations
    bool converged = false;
    long long iterations = 0;
};

// Simultaneous fictitious play. Stops when every belief component moves less
// than eps between consecutive iterations, or at max_iter.
FpResult fp_run(const GameConfig& cfg, double eps, long long max_iter);

enum class BaselineKind { equal, proportional };

// One random feasible gateway set: devices drawn without replacement
// (uniformly, or weighted by value), greedily kept while the budget allows.
Strategy sample_baseline(BaselineKind kind, const GameConfig& cfg, Rng& rng);

// Defender's per-device observation history: q rows, oldest first, entries
// 0 (authenticated, no attack), 1 (authenticated, attack), 2 (not authenticated).
struct QState {
    std::vector<std::vector<int>> rows;

    static QState unknown(int q, int n);  // all entries 2
    void push(std::vector<int> row);      // drop oldest, append newest
};

// Replace every 2 with a Bernoulli(delta_i) draw; observed 0/1 entries pass through.
std::vector<int> impute_state(const std::vector<int>& row, const std::vector<double>& delta, Rng& rng);

struct Experience {
    QState state;
    Strategy action;
    double reward = 0.0;
    QState next_state;
    bool terminal = false;
};

// Attack-rate estimate per device when only authenticated devices reveal
// their status: delta_i = (attacks seen + prior)/(authentications + 1).
// The single pseudo-observation keeps never-authenticated devices at the
// prior instead of a hard 0.
struct PartialBelief {
    std::vector<long long> auth_count, attack_count;
    double prior = 0.5;

    PartialBelief() = default;
    PartialBelief(int n, double prior_mean)
        : auth_count(static_cast<std::size_t>(n), 0),
          attack_count(static_cast<std::size_t>(n), 0),
          prior(prior_mean) {}
    double delta(int i) const {
        return (static_cast<double>(attack_count[static_cast<std::size_t>(i)]) + prior) /
               (static_cast<double>(auth_count[static_cast<std::size_t>(i)]) + 1.0);
    }
    std::vector<double> deltas() const;
    void observe(int device, bool attacked);
};

struct DrlConfig {
    int q = 4;                         // history rows fed to the Q-network
    int train_steps = 5000;
    int episode_len = 200;             // bootstrap boundary; last step regresses to the bare reward
    std::size_t replay_capacity = 10000;
    int batch = 16;
    double alpha = 0.05;               // gradient step for the Q regression
    double gamma = 0.3;
    double eps_start = 1.0, eps_end = 0.05;
    double eps_frac = 0.2;             // fraction of train_steps spent decaying epsilon
    int act_pool = 24;                 // candidate sets scored when acting
    int act_draws = 4;                 // imputation/order redraws averaged per act
    int target_pool = 4;               // candidate sets scored inside Bellman targets
    std::vector<int> hidden = {12};
};

// Q-network input: one timestep per device, features [the device's q imputed
// history entries oldest first, action indicator a_i]; the readout at the
// last device is Q(state, action). Two deliberate omissions keep the policy
// well mixed: device values are absent (the candidate pool already carries
// the value weighting), and devices are presented in a randomized order
// (sequence position would otherwise act as a device identity). A net that
// can tell devices apart learns static preferences, and the adaptive
// attacker farms whatever the resulting coverage distribution neglects;
// exchangeable inputs force any learned tilt to track the attack pattern.
// An empty order means identity.
std::vector<std::vector<double>> q_input(const std::vector<std::vector<int>>& imputed_rows,
                                         const Strategy& action,
                                         const std::vector<std::size_t>& order = {});

// Seeded uniform permutation of 0..n-1 for the presentation order.
std::vector<std::size_t> random_order(std::size_t n, Rng& rng);

// A random maximal feasible set: permutation order, greedy fill.
Strategy sample_maximal_set(const GameConfig& cfg, Rng& rng);

// Greedy ascending-index top-up to a maximal feasible set; covering more
// devices never hurts the gateway.
Strategy extend_maximal(const GameConfig& cfg, Strategy s);

// Bellman regression target over an explicit candidate-action pool;
// terminal experiences regress to the bare reward. qeval is any
// state-action value oracle (network-backed or tabular).
double q_target_value(const std::function<double(const QState&, const Strategy&)>& qeval,
                      const Experience& exp, const std::vector<Strategy>& candidates, double gamma);

// One Q-learning step on the network: compute the target (imputing the
// stored raw states with the current belief), then a single gradient step
// of size alpha toward it. Returns the target.
double q_update(Network& qnet, const GameConfig& game, const Experience& exp,
                const std::vector<Strategy>& candidates, const std::vector<double>& delta,
                double alpha, double gamma, double clip_norm, Rng& rng);

struct DrlPolicy {
    std::shared_ptr<const Network> net;
    GameConfig game;
    DrlConfig cfg;

    // Greedy action over a freshly sampled candidate pool; history rows are
    // imputed with the supplied belief at evaluation time.
    Strategy act_greedy(const QState& state, const std::vector<double>& delta, Rng& rng) const;
};

struct DrlResult {
    DrlPolicy policy;
    std::vector<double> ug_running_mean;  // true gateway utility, time-averaged over training
    PartialBelief belief;
    QState final_state;
};

// Incomplete-information defender training: the attacker plays fictitious-play
// best responses with full observability; the gateway observes only the
// devices it authenticates, imputes the rest, and trains the Q-network from
// uniformly sampled replay experiences (one batch per environment step).
DrlResult drl_train(const GameConfig& game, const DrlConfig& cfg, std::uint64_t seed);

// Head-to-head evaluation against a fictitious-play attacker. The harness
// hands observe() the ground-truth attacked set; incomplete-information
// agents must restrict themselves to played-and-attacked intersections.
class GatewayAgent {
public:
    virtual ~GatewayAgent() = default;
    virtual Strategy act(Rng& rng) = 0;
    virtual void observe(const Strategy& played, const Strategy& attacked) = 0;
};

class FpGatewayAgent : public GatewayAgent {
public:
    explicit FpGatewayAgent(const GameConfig& cfg);
    Strategy act(Rng& rng) override;
    void observe(const Strategy& played, const Strategy& attacked) override;

private:
    GameConfig cfg_;
    std::vector<double> values_;
    Belief about_attacker_;
};

class BaselineGatewayAgent : public GatewayAgent {
public:
    BaselineGatewayAgent(BaselineKind kind, const GameConfig& cfg) : kind_(kind), cfg_(cfg) {}
    Strategy act(Rng& rng) override { return sample_baseline(kind_, cfg_, rng); }
    void observe(const Strategy&, const Strategy&) override {}

private:
    BaselineKind kind_;
    GameConfig cfg_;
};

class DrlGatewayAgent : public GatewayAgent {
public:
    DrlGatewayAgent(DrlPolicy policy, PartialBelief belief, QState state);
    Strategy act(Rng& rng) override;
    void observe(const Strategy& played, const Strategy& attacked) override;

private:
    DrlPolicy policy_;
    PartialBelief belief_;
    QState state_;
};

struct DuelResult {
    double mean_ug = 0.0;
    std::vector<double> ug_trace;          // true per-step gateway utility
    AllocationVector inclusion_freq;       // gateway's empirical per-device coverage
};

DuelResult run_duel(const GameConfig& cfg, GatewayAgent& agent, long long steps, std::uint64_t seed);

}  // namespace iotwm
