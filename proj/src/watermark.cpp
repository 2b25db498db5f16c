#include "iotwm/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "iotwm/errors.hpp"
#include "iotwm/mathx.hpp"
#include "iotwm/rng.hpp"

namespace iotwm {

PNKey gen_pn_key(int n, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("gen_pn_key: key length must be even and >= 2");
    }
    PNKey key;
    key.chips.assign(static_cast<std::size_t>(n), 1);
    std::fill(key.chips.begin() + n / 2, key.chips.end(), -1);
    std::mt19937_64 eng(seed);
    std::shuffle(key.chips.begin(), key.chips.end(), eng);
    return key;
}

void validate_params(const WatermarkParams& p) {
    if (p.beta <= 0.0) throw std::invalid_argument("params: beta must be positive");
    if (p.n < 1) throw std::invalid_argument("params: n must be >= 1");
    if (p.ns < 1) throw std::invalid_argument("params: ns must be >= 1");
    if (p.fs <= 0.0) throw std::invalid_argument("params: fs must be positive");
    if (p.d <= 0.0) throw std::invalid_argument("params: d must be positive");
    if (static_cast<double>(p.n) * p.ns > p.d * p.fs + 1e-9) {
        throw std::invalid_argument("params: window n*ns exceeds the delay budget d*fs");
    }
}

void validate_key(const PNKey& key) {
    if (key.chips.empty()) throw std::invalid_argument("key: empty");
    int sum = 0;
    for (int c : key.chips) {
        if (c != 1 && c != -1) throw std::invalid_argument("key: chips must be +1 or -1");
        sum += c;
    }
    if (sum != 0) throw std::invalid_argument("key: not balanced");
}

void validate_bits(const BitStream& bits) {
    if (bits.empty()) throw std::invalid_argument("bits: empty");
    for (int b : bits) {
        if (b != 1 && b != -1) throw std::invalid_argument("bits: entries must be +1 or -1");
    }
}

std::vector<double> embed(const std::vector<double>& carrier, const PNKey& key,
                          const BitStream& bits, double beta) {
    validate_key(key);
    validate_bits(bits);
    if (beta <= 0.0) throw std::invalid_argument("embed: beta must be positive");
    const std::size_t n = key.chips.size();
    if (carrier.size() != n * bits.size()) {
        throw std::invalid_argument("embed: carrier length must be n * ns");
    }
    std::vector<double> w(carrier.size());
    for (std::size_t t = 0; t < carrier.size(); ++t) {
        const std::size_t k = t / n;
        w[t] = carrier[t] + beta * bits[k] * key.chips[t % n];
    }
    return w;
}

ExtractionResult extract_stream(const std::vector<double>& watermarked, const PNKey& key,
                                double beta) {
    validate_key(key);
    if (beta <= 0.0) throw std::invalid_argument("extract_stream: beta must be positive");
    const std::size_t n = key.chips.size();
    if (watermarked.empty() || watermarked.size() % n != 0) {
        throw std::invalid_argument("extract_stream: length must be a positive multiple of n");
    }
    const std::size_t ns = watermarked.size() / n;
    ExtractionResult r;
    r.bits.resize(ns);
    r.soft.resize(ns);
    for (std::size_t k = 0; k < ns; ++k) {
        double acc = 0.0;
        const std::size_t base = k * n;
        for (std::size_t j = 0; j < n; ++j) acc += watermarked[base + j] * key.chips[j];
        const double soft = acc / (beta * static_cast<double>(n));
        r.soft[k] = soft;
        r.bits[k] = soft >= 0.0 ? 1 : -1;  // tie at exactly zero decides +1
    }
    return r;
}

double analytic_ber(double beta, double sigma, int n) {
    if (beta <= 0.0 || sigma <= 0.0 || n < 1) {
        throw std::invalid_argument("analytic_ber: beta, sigma, n must be positive");
    }
    return 0.5 * erfc_approx(beta * std::sqrt(static_cast<double>(n)) / (sigma * std::sqrt(2.0)));
}

double mc_ber(double beta, int n, double sigma, std::uint64_t n_bits, std::uint64_t seed,
              int workers) {
    if (n_bits == 0) throw std::invalid_argument("mc_ber: n_bits must be positive");
    if (workers < 1) throw std::invalid_argument("mc_ber: workers must be >= 1");
    if (n % 2 != 0) throw std::invalid_argument("mc_ber: n must be even (balanced key)");

    auto run_chunk = [&](int widx, std::uint64_t bits) -> std::uint64_t {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(widx)));
        const PNKey key = gen_pn_key(n, derive_seed(seed, 0x10000u + widx));
        std::vector<double> seg(static_cast<std::size_t>(n));
        std::uint64_t errors = 0;
        for (std::uint64_t i = 0; i < bits; ++i) {
            const int b = rng.bernoulli(0.5) ? 1 : -1;
            double acc = 0.0;
            for (int t = 0; t < n; ++t) {
                seg[t] = rng.gaussian(0.0, sigma) + beta * b * key.chips[t];
                acc += seg[t] * key.chips[t];
            }
            const int est = acc >= 0.0 ? 1 : -1;
            if (est != b) ++errors;
        }
        return errors;
    };

    // Split bits across workers; sum error counts in worker order so the
    // result never depends on scheduling.
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(workers), 0);
    const std::uint64_t per = n_bits / workers;
    const std::uint64_t extra = n_bits % workers;
    if (workers == 1) {
        counts[0] = run_chunk(0, n_bits);
    } else {
        std::vector<std::future<std::uint64_t>> futs;
        futs.reserve(static_cast<std::size_t>(workers));
        for (int wi = 0; wi < workers; ++wi) {
            const std::uint64_t bits = per + (static_cast<std::uint64_t>(wi) < extra ? 1 : 0);
            futs.push_back(std::async(std::launch::async, run_chunk, wi, bits));
        }
        for (int wi = 0; wi < workers; ++wi) counts[wi] = futs[wi].get();
    }
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    return static_cast<double>(total) / static_cast<double>(n_bits);
}

double attacker_ber(double beta, int n, const SignalModel& model) {
    if (beta <= 0.0 || n < 1) throw std::invalid_argument("attacker_ber: beta and n must be positive");
    if (model.sigma <= 0.0) throw std::invalid_argument("attacker_ber: model sigma must be positive");
    const double b2n2 = beta * beta * static_cast<double>(n) * n;
    const double num = (1.0 + model.mu1 / b2n2) * beta * beta * n * std::sqrt(static_cast<double>(n));
    const double den = std::sqrt(2.0 * (model.sigma1 * model.sigma1 + 2.0 * model.sigma * model.sigma));
    const double v = 0.5 * erfc_approx(num / den);
    return std::max(v, 1e-300);  // keep strictly positive through underflow
}

ParamFeasibility check_params(const SignalModel& model, double p_lo, double p_hi, double fs,
                              double d, double beta, int n) {
    ParamFeasibility f;
    const int ns = static_cast<int>(std::floor(d * fs / n));
    f.window = ns >= 1;
    f.reliability = analytic_ber(beta, model.sigma, n) <= p_hi;
    // The printed eavesdropper-error bound, or the operational amplitude
    // rule (watermark no louder than the carrier). The former is
    // unsatisfiable for nonnegative carrier product-mean, so the latter is
    // what actually shapes the region; both are kept so the check stays a
    // faithful re-evaluation of the planner's screens.
    f.concealment = attacker_ber(beta, n, model) >= 1.0 - p_lo || beta <= model.sigma;
    return f;
}

ParamSearchResult solve_params(const SignalModel& model, double p_lo, double p_hi, double fs,
                               double d) {
    if (!(p_lo > 0.0 && p_lo < 0.5) || !(p_hi > 0.0 && p_hi < 0.5)) {
        throw std::invalid_argument("solve_params: error targets must lie in (0, 0.5)");
    }
    if (fs <= 0.0 || d <= 0.0) throw std::invalid_argument("solve_params: fs and d must be positive");
    if (model.sigma <= 0.0) throw std::invalid_argument("solve_params: model sigma must be positive");

    const int n_max = static_cast<int>(std::floor(d * fs));
    if (n_max < 2) {
        throw infeasible_error("solve_params: delay budget admits no window (d*fs < 2)", "window");
    }

    // 81 log-spaced amplitudes covering [1e-3*sigma, 10*sigma].
    std::vector<double> betas;
    betas.reserve(81);
    for (int i = 0; i <= 80; ++i) betas.push_back(model.sigma * std::pow(10.0, -3.0 + 0.05 * i));

    ParamSearchResult out;
    bool any_reliable = false, any_concealed = false;
    for (int n = 2; n <= n_max; n += 2) {
        const int ns = static_cast<int>(std::floor(d * fs / n));
        if (ns < 1) break;
        for (double beta : betas) {
            const ParamFeasibility f = check_params(model, p_lo, p_hi, fs, d, beta, n);
            any_reliable |= f.reliability;
            any_concealed |= f.concealment;
            if (f.ok()) out.feasible.push_back({beta, n, ns, fs, d});
        }
    }
    if (out.feasible.empty()) {
        if (!any_reliable) {
            throw infeasible_error(
                "solve_params: no grid point meets the gateway reliability target", "reliability");
        }
        throw infeasible_error(
            "solve_params: reliability and concealment screens never overlap on the grid",
            "concealment");
    }
    // Feasible list is already in (n ascending, beta ascending) order, so the
    // best point (max ns == min n, then min beta) is the front.
    out.chosen = out.feasible.front();
    return out;
}

void save_pm1_line(const std::string& path, const std::vector<int>& values) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_pm1_line: cannot open " + path);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 1 && values[i] != -1) {
            throw std::invalid_argument("save_pm1_line: values must be +1 or -1");
        }
        f << (i ? " " : "") << (values[i] > 0 ? "+1" : "-1");
    }
    f << "\n";
    if (!f) throw std::runtime_error("save_pm1_line: write failed for " + path);
}

std::vector<int> load_pm1_line(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_pm1_line: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_pm1_line: empty file " + path);
    std::istringstream ss(line);
    std::vector<int> out;
    std::string tok;
    while (ss >> tok) {
        if (tok == "+1" || tok == "1") {
            out.push_back(1);
        } else if (tok == "-1") {
            out.push_back(-1);
        } else {
            throw std::runtime_error("load_pm1_line: bad token '" + tok + "' in " + path);
        }
    }
    if (out.empty()) throw std::runtime_error("load_pm1_line: no values in " + path);
    return out;
}

std::string params_to_json(const WatermarkParams& p) {
    nlohmann::json j{{"beta", p.beta}, {"n", p.n}, {"ns", p.ns}, {"fs", p.fs}, {"d", p.d}};
    return j.dump();
}

WatermarkParams params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    WatermarkParams p;
    p.beta = j.at("beta").get<double>();
    p.n = j.at("n").get<int>();
    p.ns = j.at("ns").get<int>();
    p.fs = j.at("fs").get<double>();
    p.d = j.at("d").get<double>();
    validate_params(p);
    return p;
}

}  // namespace iotwm
