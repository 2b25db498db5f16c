#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace iotwm {

using Rational = boost::multiprecision::cpp_rational;

// A pure strategy: the set of device indices (0-based, strictly increasing).
// Gateway strategies are budget-feasible device sets; attacker strategies
// are the K-subsets it records and spoofs.
struct Strategy {
    std::vector<int> devices;

    bool contains(int i) const;
    bool operator==(const Strategy& o) const { return devices == o.devices; }
    bool operator<(const Strategy& o) const { return devices < o.devices; }
};

std::string strategy_to_string(const Strategy& s);

// Constant-sum game instance. Device values v_i = f_i / sum(f) and the
// normalized budget R = cap / sum(f) are derived, never stored, so the
// sum-to-one invariant holds by construction.
struct GameConfig {
    std::vector<long long> freqs;  // Hz per device, positive integers
    long long cap = 0;             // per-window authentication budget, Hz
    int K = 1;                     // attacker's recording devices

    int n() const { return static_cast<int>(freqs.size()); }
    long long freq_sum() const;
    std::vector<double> values() const;
    std::vector<Rational> values_exact() const;
    double budget_ratio() const;  // R
    void validate() const;

    // cap chosen as floor(R * sum(f)), the largest budget not exceeding R.
    static GameConfig from_budget(std::vector<long long> freqs, double R, int K);
};

// u_attacker = sum of values of attacked-but-unauthenticated devices,
// u_gateway = 1 - u_attacker. Returned as (u_gateway, u_attacker).
std::pair<double, double> utilities(const Strategy& gateway, const Strategy& attacker,
                                    const std::vector<double>& values);
std::pair<Rational, Rational> utilities_exact(const Strategy& gateway, const Strategy& attacker,
                                              const std::vector<Rational>& values);

// All maximal budget-feasible device sets (no result is a strict subset of a
// feasible set), via the subset-sum table M[i][j] ("some subset of the first
// i devices sums to j") and recursive path reconstruction. Frequencies and
// cap are gcd-scaled first so the table stays small. Results sort
// lexicographically by device index. `truncated` reports an early stop at
// `limit` strategies.
struct EnumerationResult {
    std::vector<Strategy> strategies;
    bool truncated = false;
};
EnumerationResult enumerate_gateway_strategies(const std::vector<long long>& freqs, long long cap,
                                               std::size_t limit = SIZE_MAX);

// Lazy lexicographic enumeration of the attacker's K-subsets.
class KSubsetEnumerator {
public:
    KSubsetEnumerator(int n, int k);
    static unsigned long long count(int n, int k);  // C(n,k), saturates at ULLONG_MAX
    bool next(Strategy& out);                       // false once exhausted
    void reset();

private:
    int n_, k_;
    std::vector<int> cur_;
    bool fresh_ = true;
    bool done_ = false;
};

// Per-device marginal probability of being picked, induced by a mixed
// strategy over explicit sets: p_i = sum of weights of sets containing i.
using AllocationVector = std::vector<double>;

AllocationVector allocation_from_mixed(const std::vector<double>& mixed,
                                       const std::vector<Strategy>& sets, int n_devices);
std::vector<Rational> allocation_from_mixed_exact(const std::vector<Rational>& mixed,
                                                  const std::vector<Strategy>& sets, int n_devices);

// Expected utilities under independent per-device marginals:
// U_attacker = sum_i alloc_a[i] * (1 - alloc_g[i]) * v_i, U_gateway = 1 - U_attacker.
// Returned as (U_gateway, U_attacker).
std::pair<double, double> expected_utility(const AllocationVector& alloc_a,
                                           const AllocationVector& alloc_g,
                                           const std::vector<double>& values);
std::pair<Rational, Rational> expected_utility_exact(const std::vector<Rational>& alloc_a,
                                                     const std::vector<Rational>& alloc_g,
                                                     const std::vector<Rational>& values);

// Matrix game solver. payoff[i][j] is what the column player wins when the
// row player picks i and the column player picks j; the row player minimizes.
// Solved as an LP (simplex from the all-slack basis, Bland's rule), primal
// giving the row mix and the duals the column mix.
template <typename T>
struct MatrixGameSolution {
    std::vector<T> row_mixed;
    std::vector<T> col_mixed;
    T value{};  // column player's guaranteed payoff
};

MatrixGameSolution<double> solve_matrix_game(const std::vector<std::vector<double>>& payoff,
                                             double tol = 1e-9);
MatrixGameSolution<Rational> solve_matrix_game_exact(const std::vector<std::vector<Rational>>& payoff);

// Mixed-strategy equilibrium of the enumerated game. Exact rational
// arithmetic up to 64x64 payoff matrices, floating point beyond; instances
// whose strategy-space product exceeds the guard are rejected with a hint
// to use fictitious play instead.
struct MsneResult {
    std::vector<Strategy> gateway_strategies;
    std::vector<Strategy> attacker_strategies;
    std::vector<double> gateway_mixed;
    std::vector<double> attacker_mixed;
    AllocationVector gateway_alloc;
    AllocationVector attacker_alloc;
    double gateway_value = 0.0;
    double attacker_value = 0.0;
    bool exact = false;
    Rational attacker_value_exact{0};  // valid when exact
};

inline constexpr std::size_t kMsneSpaceGuard = 1000000;

MsneResult msne(const GameConfig& cfg);

}  // namespace iotwm
