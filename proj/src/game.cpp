#include "iotwm/game.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace iotwm {

bool Strategy::contains(int i) const {
    return std::binary_search(devices.begin(), devices.end(), i);
}

std::string strategy_to_string(const Strategy& s) {
    std::ostringstream os;
    os << "{";
    for (std::size_t i = 0; i < s.devices.size(); ++i) {
        if (i) os << ",";
        os << s.devices[i];
    }
    os << "}";
    return os.str();
}

long long GameConfig::freq_sum() const {
    long long s = 0;
    for (long long f : freqs) s += f;
    return s;
}

std::vector<double> GameConfig::values() const {
    const double s = static_cast<double>(freq_sum());
    std::vector<double> v;
    v.reserve(freqs.size());
    for (long long f : freqs) v.push_back(static_cast<double>(f) / s);
    return v;
}

std::vector<Rational> GameConfig::values_exact() const {
    const Rational s(freq_sum());
    std::vector<Rational> v;
    v.reserve(freqs.size());
    for (long long f : freqs) v.push_back(Rational(f) / s);
    return v;
}

double GameConfig::budget_ratio() const {
    return static_cast<double>(cap) / static_cast<double>(freq_sum());
}

void GameConfig::validate() const {
    if (freqs.empty()) throw std::invalid_argument("GameConfig: no devices");
    for (long long f : freqs) {
        if (f <= 0) throw std::invalid_argument("GameConfig: frequencies must be positive integers");
    }
    if (K < 1 || K > n()) throw std::invalid_argument("GameConfig: K must be in [1, N]");
    if (cap < 0) throw std::invalid_argument("GameConfig: cap must be nonnegative");
}

GameConfig GameConfig::from_budget(std::vector<long long> freqs, double R, int K) {
    GameConfig cfg;
    cfg.freqs = std::move(freqs);
    cfg.K = K;
    if (!(R > 0.0)) throw std::invalid_argument("GameConfig: R must be positive");
    cfg.cap = static_cast<long long>(std::floor(R * static_cast<double>(cfg.freq_sum()) + 1e-9));
    cfg.validate();
    return cfg;
}

std::pair<double, double> utilities(const Strategy& gateway, const Strategy& attacker,
                                    const std::vector<double>& values) {
    double ua = 0.0;
    for (int i : attacker.devices) {
        if (i < 0 || i >= static_cast<int>(values.size())) {
            throw std::invalid_argument("utilities: device index out of range");
        }
        if (!gateway.contains(i)) ua += values[static_cast<std::size_t>(i)];
    }
    return {1.0 - ua, ua};
}

std::pair<Rational, Rational> utilities_exact(const Strategy& gateway, const Strategy& attacker,
                                              const std::vector<Rational>& values) {
    Rational ua(0);
    for (int i : attacker.devices) {
        if (i < 0 || i >= static_cast<int>(values.size())) {
            throw std::invalid_argument("utilities: device index out of range");
        }
        if (!gateway.contains(i)) ua += values[static_cast<std::size_t>(i)];
    }
    return {Rational(1) - ua, ua};
}

namespace {

struct MaximalSubsetEnumerator {
    const std::vector<long long>& f;  // gcd-scaled frequencies
    const std::vector<std::vector<char>>& M;
    std::size_t limit;
    std::vector<Strategy>* out;
    bool truncated = false;
    long long threshold = 0;  // an excluded device must have f > threshold
    std::vector<int> partial;

    // Walks the subset-sum table from row i, remaining target j. Devices are
    // visited in descending index; the exclude branch is cut whenever the
    // skipped device would still fit beside the finished subset.
    void rec(std::size_t i, long long j) {
        if (truncated) return;
        if (i == 0) {
            if (out->size() >= limit) {
                truncated = true;
                return;
            }
            Strategy s;
            s.devices.assign(partial.rbegin(), partial.rend());
            out->push_back(std::move(s));
            return;
        }
        const long long fi = f[i - 1];
        if (j >= fi && M[i - 1][static_cast<std::size_t>(j - fi)]) {
            partial.push_back(static_cast<int>(i - 1));
            rec(i - 1, j - fi);
            partial.pop_back();
        }
        if (fi > threshold && M[i - 1][static_cast<std::size_t>(j)]) rec(i - 1, j);
    }
};

}  // namespace

EnumerationResult enumerate_gateway_strategies(const std::vector<long long>& freqs, long long cap,
                                               std::size_t limit) {
    if (freqs.empty()) throw std::invalid_argument("enumerate: no devices");
    for (long long f : freqs) {
        if (f <= 0) throw std::invalid_argument("enumerate: frequencies must be positive integers");
    }
    if (cap < 0) throw std::invalid_argument("enumerate: cap must be nonnegative");

    EnumerationResult res;
    if (cap < *std::min_element(freqs.begin(), freqs.end())) return res;  // nothing affordable

    long long g = 0;
    for (long long f : freqs) g = std::gcd(g, f);
    const std::size_t N = freqs.size();
    std::vector<long long> f(N);
    long long total = 0;
    for (std::size_t i = 0; i < N; ++i) {
        f[i] = freqs[i] / g;
        total += f[i];
    }
    long long capS = std::min(cap / g, total);

    if ((N + 1) * static_cast<std::size_t>(capS + 1) > 200000000ull) {
        throw std::runtime_error("enumerate: subset-sum table too large; rescale frequencies");
    }
    std::vector<std::vector<char>> M(N + 1, std::vector<char>(static_cast<std::size_t>(capS + 1), 0));
    M[0][0] = 1;
    for (std::size_t i = 1; i <= N; ++i) {
        const long long fi = f[i - 1];
        for (long long j = 0; j <= capS; ++j) {
            M[i][static_cast<std::size_t>(j)] =
                M[i - 1][static_cast<std::size_t>(j)] ||
                (j >= fi && M[i - 1][static_cast<std::size_t>(j - fi)]);
        }
    }

    MaximalSubsetEnumerator en{f, M, limit, &res.strategies, false, 0, {}};
    for (long long k = capS; k >= 0 && !en.truncated; --k) {
        if (!M[N][static_cast<std::size_t>(k)]) continue;
        en.threshold = capS - k;
        en.rec(N, k);
    }
    res.truncated = en.truncated;
    std::sort(res.strategies.begin(), res.strategies.end());
    return res;
}

KSubsetEnumerator::KSubsetEnumerator(int n, int k) : n_(n), k_(k) {
    if (k < 1 || k > n) throw std::invalid_argument("KSubsetEnumerator: need 1 <= k <= n");
    cur_.resize(static_cast<std::size_t>(k));
}

unsigned long long KSubsetEnumerator::count(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned long long r = 1;
    for (int i = 1; i <= k; ++i) {
        const unsigned __int128 t =
            static_cast<unsigned __int128>(r) * static_cast<unsigned long long>(n - k + i);
        if (t / static_cast<unsigned long long>(n - k + i) != r || t > ULLONG_MAX) return ULLONG_MAX;
        r = static_cast<unsigned long long>(t) / static_cast<unsigned long long>(i);
    }
    return r;
}

void KSubsetEnumerator::reset() {
    fresh_ = true;
    done_ = false;
}

bool KSubsetEnumerator::next(Strategy& out) {
    if (done_) return false;
    if (fresh_) {
        std::iota(cur_.begin(), cur_.end(), 0);
        fresh_ = false;
    } else {
        int i = k_ - 1;
        while (i >= 0 && cur_[static_cast<std::size_t>(i)] == n_ - k_ + i) --i;
        if (i < 0) {
            done_ = true;
            return false;
        }
        ++cur_[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k_; ++j) {
            cur_[static_cast<std::size_t>(j)] = cur_[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    out.devices = cur_;
    return true;
}

AllocationVector allocation_from_mixed(const std::vector<double>& mixed,
                                       const std::vector<Strategy>& sets, int n_devices) {
    if (mixed.size() != sets.size()) throw std::invalid_argument("allocation: weight/set count mismatch");
    double s = 0.0;
    for (double w : mixed) {
        if (w < -1e-12) throw std::invalid_argument("allocation: negative weight");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("allocation: weights must sum to 1");
    AllocationVector probs(static_cast<std::size_t>(n_devices), 0.0);
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (int i : sets[k].devices) {
            if (i < 0 || i >= n_devices) throw std::invalid_argument("allocation: device index out of range");
            probs[static_cast<std::size_t>(i)] += mixed[k];
        }
    }
    return probs;
}

std::vector<Rational> allocation_from_mixed_exact(const std::vector<Rational>& mixed,
                                                  const std::vector<Strategy>& sets, int n_devices) {
    if (mixed.size() != sets.size()) throw std::invalid_argument("allocation: weight/set count mismatch");
    Rational s(0);
    for (const auto& w : mixed) {
        if (w < 0) throw std::invalid_argument("allocation: negative weight");
        s += w;
    }
    if (s != 1) throw std::invalid_argument("allocation: weights must sum to 1");
    std::vector<Rational> probs(static_cast<std::size_t>(n_devices), Rational(0));
    for (std::size_t k = 0; k < sets.size(); ++k) {
        for (int i : sets[k].devices) {
            if (i < 0 || i >= n_devices) throw std::invalid_argument("allocation: device index out of range");
            probs[static_cast<std::size_t>(i)] += mixed[k];
        }
    }
    return probs;
}

std::pair<double, double> expected_utility(const AllocationVector& alloc_a,
                                           const AllocationVector& alloc_g,
                                           const std::vector<double>& values) {
    if (alloc_a.size() != values.size() || alloc_g.size() != values.size()) {
        throw std::invalid_argument("expected_utility: allocation size mismatch");
    }
    double ua = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) ua += alloc_a[i] * (1.0 - alloc_g[i]) * values[i];
    return {1.0 - ua, ua};
}

std::pair<Rational, Rational> expected_utility_exact(const std::vector<Rational>& alloc_a,
                                                     const std::vector<Rational>& alloc_g,
                                                     const std::vector<Rational>& values) {
    if (alloc_a.size() != values.size() || alloc_g.size() != values.size()) {
        throw std::invalid_argument("expected_utility: allocation size mismatch");
    }
    Rational ua(0);
    for (std::size_t i = 0; i < values.size(); ++i) ua += alloc_a[i] * (Rational(1) - alloc_g[i]) * values[i];
    return {Rational(1) - ua, ua};
}

namespace {

// Primal simplex (Bland's rule) for: maximize sum(w) subject to
// B^T w <= 1, w >= 0, where all B entries are positive. The all-slack basis
// is feasible, the objective is bounded, and Bland's rule rules out cycling.
// Returns primal w, duals y (one per constraint), and the objective.
template <typename T>
void simplex_game(const std::vector<std::vector<T>>& B, const T& tol, std::vector<T>& w,
                  std::vector<T>& y, T& obj) {
    const std::size_t m = B.size();        // structural variables (rows of B)
    const std::size_t k = B[0].size();     // constraints (columns of B)
    const std::size_t nv = m + k;

    std::vector<std::vector<T>> A(k, std::vector<T>(nv, T(0)));
    std::vector<T> rhs(k, T(1));
    std::vector<T> rc(nv, T(0));
    std::vector<std::size_t> basis(k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < m; ++i) A[j][i] = B[i][j];
        A[j][m + j] = T(1);
        basis[j] = m + j;
    }
    for (std::size_t i = 0; i < m; ++i) rc[i] = T(1);
    obj = T(0);

    for (long iter = 0; iter < 200000; ++iter) {
        std::size_t e = nv;
        for (std::size_t j = 0; j < nv; ++j) {
            if (rc[j] > tol) {
                e = j;
                break;
            }
        }
        if (e == nv) {
            w.assign(m, T(0));
            y.assign(k, T(0));
            for (std::size_t r = 0; r < k; ++r) {
                if (basis[r] < m) w[basis[r]] = rhs[r];
            }
            for (std::size_t j = 0; j < k; ++j) y[j] = -rc[m + j];
            return;
        }
        std::size_t row = k;
        for (std::size_t r = 0; r < k; ++r) {
            if (!(A[r][e] > tol)) continue;
            if (row == k) {
                row = r;
                continue;
            }
            const T lhs = rhs[r] * A[row][e];
            const T rhs2 = rhs[row] * A[r][e];
            if (lhs < rhs2 || (lhs == rhs2 && basis[r] < basis[row])) row = r;
        }
        if (row == k) throw std::runtime_error("simplex: unbounded game LP");

        const T piv = A[row][e];
        for (std::size_t j = 0; j < nv; ++j) A[row][j] /= piv;
        rhs[row] /= piv;
        for (std::size_t r = 0; r < k; ++r) {
            if (r == row) continue;
            const T fct = A[r][e];
            if (fct == T(0)) continue;
            for (std::size_t j = 0; j < nv; ++j) A[r][j] -= fct * A[row][j];
            rhs[r] -= fct * rhs[row];
        }
        const T fobj = rc[e];
        for (std::size_t j = 0; j < nv; ++j) rc[j] -= fobj * A[row][j];
        obj += fobj * rhs[row];
        basis[row] = e;
    }
    throw std::runtime_error("simplex: pivot limit reached");
}

template <typename T>
MatrixGameSolution<T> solve_matrix_game_impl(const std::vector<std::vector<T>>& payoff, const T& tol) {
    if (payoff.empty() || payoff[0].empty()) throw std::invalid_argument("matrix game: empty payoff");
    const std::size_t m = payoff.size();
    const std::size_t k = payoff[0].size();
    for (const auto& row : payoff) {
        if (row.size() != k) throw std::invalid_argument("matrix game: ragged payoff");
    }

    T minv = payoff[0][0];
    for (const auto& row : payoff) {
        for (const auto& v : row) {
            if (v < minv) minv = v;
        }
    }
    const T shift = T(1) - minv;
    std::vector<std::vector<T>> B(m, std::vector<T>(k));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) B[i][j] = payoff[i][j] + shift;
    }

    std::vector<T> w, y;
    T obj;
    simplex_game(B, tol, w, y, obj);
    if (!(obj > T(0))) throw std::runtime_error("matrix game: degenerate LP objective");

    MatrixGameSolution<T> sol;
    sol.row_mixed.resize(m);
    sol.col_mixed.resize(k);
    for (std::size_t i = 0; i < m; ++i) sol.row_mixed[i] = w[i] / obj;
    for (std::size_t j = 0; j < k; ++j) sol.col_mixed[j] = y[j] / obj;
    sol.value = T(1) / obj - shift;
    return sol;
}

}  // namespace

MatrixGameSolution<double> solve_matrix_game(const std::vector<std::vector<double>>& payoff,
                                             double tol) {
    auto sol = solve_matrix_game_impl<double>(payoff, tol);
    double sr = 0.0, sc = 0.0;
    for (double v : sol.row_mixed) sr += v;
    for (double v : sol.col_mixed) sc += v;
    for (double& v : sol.row_mixed) v /= sr;
    for (double& v : sol.col_mixed) v /= sc;
    return sol;
}

MatrixGameSolution<Rational> solve_matrix_game_exact(const std::vector<std::vector<Rational>>& payoff) {
    return solve_matrix_game_impl<Rational>(payoff, Rational(0));
}

MsneResult msne(const GameConfig& cfg) {
    cfg.validate();
    const int N = cfg.n();

    auto en = enumerate_gateway_strategies(cfg.freqs, cfg.cap, kMsneSpaceGuard + 1);
    if (en.truncated) {
        throw std::runtime_error("msne: gateway strategy space exceeds the exact-solve guard; "
                                 "use fictitious play (fp)");
    }
    MsneResult res;
    res.gateway_strategies = std::move(en.strategies);
    if (res.gateway_strategies.empty()) res.gateway_strategies.push_back(Strategy{});  // authenticate nothing

    const unsigned long long nAtt = KSubsetEnumerator::count(N, cfg.K);
    if (nAtt == 0 || nAtt > kMsneSpaceGuard ||
        res.gateway_strategies.size() * nAtt > kMsneSpaceGuard) {
        throw std::runtime_error("msne: strategy space exceeds the exact-solve guard; "
                                 "use fictitious play (fp)");
    }
    KSubsetEnumerator it(N, cfg.K);
    Strategy a;
    while (it.next(a)) res.attacker_strategies.push_back(a);

    const std::size_t m = res.gateway_strategies.size();
    const std::size_t k = res.attacker_strategies.size();

    if (m <= 64 && k <= 64) {
        const auto values = cfg.values_exact();
        std::vector<std::vector<Rational>> P(m, std::vector<Rational>(k));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                P[i][j] = utilities_exact(res.gateway_strategies[i], res.attacker_strategies[j], values).second;
            }
        }
        auto sol = solve_matrix_game_exact(P);
        res.exact = true;
        res.attacker_value_exact = sol.value;
        res.attacker_value = sol.value.convert_to<double>();
        res.gateway_mixed.resize(m);
        res.attacker_mixed.resize(k);
        for (std::size_t i = 0; i < m; ++i) res.gateway_mixed[i] = sol.row_mixed[i].convert_to<double>();
        for (std::size_t j = 0; j < k; ++j) res.attacker_mixed[j] = sol.col_mixed[j].convert_to<double>();
        const auto ag = allocation_from_mixed_exact(sol.row_mixed, res.gateway_strategies, N);
        const auto aa = allocation_from_mixed_exact(sol.col_mixed, res.attacker_strategies, N);
        res.gateway_alloc.resize(static_cast<std::size_t>(N));
        res.attacker_alloc.resize(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            res.gateway_alloc[static_cast<std::size_t>(i)] = ag[static_cast<std::size_t>(i)].convert_to<double>();
            res.attacker_alloc[static_cast<std::size_t>(i)] = aa[static_cast<std::size_t>(i)].convert_to<double>();
        }
    } else {
        const auto values = cfg.values();
        std::vector<std::vector<double>> P(m, std::vector<double>(k));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                P[i][j] = utilities(res.gateway_strategies[i], res.attacker_strategies[j], values).second;
            }
        }
        auto sol = solve_matrix_game(P);
        res.attacker_value = sol.value;
        res.gateway_mixed = std::move(sol.row_mixed);
        res.attacker_mixed = std::move(sol.col_mixed);
        res.gateway_alloc = allocation_from_mixed(res.gateway_mixed, res.gateway_strategies, N);
        res.attacker_alloc = allocation_from_mixed(res.attacker_mixed, res.attacker_strategies, N);
    }
    res.gateway_value = 1.0 - res.attacker_value;
    return res;
}

}  // namespace iotwm
