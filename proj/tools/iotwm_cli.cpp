// Command-line front end: one subcommand per library operation plus the
// sweep/report experiment harness. Exit codes: 0 ok, 2 usage, 3 contract
// violation, 4 infeasible.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iotwm/adversary.hpp"
#include "iotwm/detector.hpp"
#include "iotwm/errors.hpp"
#include "iotwm/fingerprint.hpp"
#include "iotwm/game.hpp"
#include "iotwm/learning.hpp"
#include "iotwm/mathx.hpp"
#include "iotwm/netsim.hpp"
#include "iotwm/neural.hpp"
#include "iotwm/rng.hpp"
#include "iotwm/signal.hpp"
#include "iotwm/watermark.hpp"

using nlohmann::json;
using namespace iotwm;

namespace {

std::vector<long long> parse_freqs(const std::string& text) {
    std::vector<long long> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoll(tok));
    }
    if (out.empty()) throw std::invalid_argument("expected a comma-separated frequency list");
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    auto dots = text.find("..");
    if (dots != std::string::npos) {
        std::uint64_t lo = std::stoull(text.substr(0, dots));
        std::uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("seed range is empty");
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    if (out.empty()) throw std::invalid_argument("expected seeds as lo..hi or a comma-separated list");
    return out;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open output file: " + path);
    return file;
}

json params_json(const WatermarkParams& p) {
    return json{{"beta", p.beta}, {"n", p.n}, {"ns", p.ns}, {"fs", p.fs}, {"d", p.d}};
}

json strategy_json(const Strategy& s, const std::vector<long long>& freqs) {
    json ids = json::array(), fr = json::array();
    for (int i : s.devices) {
        ids.push_back(i);
        fr.push_back(freqs[static_cast<std::size_t>(i)]);
    }
    return json{{"devices", ids}, {"freqs", fr}};
}

// ---- embed / extract ------------------------------------------------------

struct EmbedArgs {
    std::string in_path, out_path, bits_path;
    std::size_t synth = 0;
    double mu = 0.0, sigma = 1.0, fs = 1000.0, beta = 0.0;
    int n = 0, ns = 0;
    std::uint64_t key_seed = 0, salt = 0, seed = 0;
    bool use_salt = false;
};

int cmd_embed(const EmbedArgs& a) {
    SignalStream stream = a.synth > 0 ? synth_gaussian(a.synth, a.mu, a.sigma, a.fs, a.seed)
                                      : load_csv(a.in_path);
    const std::size_t win = static_cast<std::size_t>(a.n) * static_cast<std::size_t>(a.ns);
    const std::size_t n_win = stream.samples.size() / win;
    if (n_win == 0) throw std::invalid_argument("input shorter than one window (n*ns samples)");
    PNKey key = gen_pn_key(a.n, a.key_seed);

    BitStream static_bits;
    if (!a.bits_path.empty()) {
        static_bits = load_pm1_line(a.bits_path);
        if (static_cast<int>(static_bits.size()) != a.ns)
            throw std::invalid_argument("bits file length must equal ns");
    }

    SignalStream out = stream;
    for (std::size_t w = 0; w < n_win; ++w) {
        std::vector<double> carrier(stream.samples.begin() + static_cast<std::ptrdiff_t>(w * win),
                                    stream.samples.begin() + static_cast<std::ptrdiff_t>((w + 1) * win));
        BitStream bits = a.use_salt ? quantize(features(carrier), a.ns, a.salt) : static_bits;
        std::vector<double> wm = embed(carrier, key, bits, a.beta);
        std::copy(wm.begin(), wm.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(w * win));
    }
    save_csv(a.out_path, out);
    std::cout << json{{"windows", n_win}, {"samples", stream.samples.size()},
                      {"leftover", stream.samples.size() - n_win * win}}
              << "\n";
    return 0;
}

struct ExtractArgs {
    std::string in_path, out_path;
    double beta = 0.0;
    int n = 0, ns = 0;
    std::uint64_t key_seed = 0;
    bool soft = false;
};

int cmd_extract(const ExtractArgs& a) {
    SignalStream stream = load_csv(a.in_path);
    const std::size_t win = static_cast<std::size_t>(a.n) * static_cast<std::size_t>(a.ns);
    const std::size_t n_win = stream.samples.size() / win;
    if (n_win == 0) throw std::invalid_argument("input shorter than one window (n*ns samples)");
    PNKey key = gen_pn_key(a.n, a.key_seed);

    std::ofstream file;
    std::ostream& os = open_out(file, a.out_path);
    for (std::size_t w = 0; w < n_win; ++w) {
        std::vector<double> seg(stream.samples.begin() + static_cast<std::ptrdiff_t>(w * win),
                                stream.samples.begin() + static_cast<std::ptrdiff_t>((w + 1) * win));
        ExtractionResult r = extract_stream(seg, key, a.beta);
        for (std::size_t i = 0; i < r.bits.size(); ++i) {
            if (i) os << ' ';
            if (a.soft)
                os << r.soft[i];
            else
                os << (r.bits[i] > 0 ? "+1" : "-1");
        }
        os << "\n";
    }
    return 0;
}

// ---- parameter solving and error rates ------------------------------------

int cmd_solve_params(double mu, double sigma, double mu1, double sigma1, double plo, double phi,
                     double fs, double d) {
    SignalModel model{mu, sigma, mu1, sigma1};
    ParamSearchResult r = solve_params(model, plo, phi, fs, d);
    json feas = json::array();
    for (const auto& p : r.feasible) feas.push_back(params_json(p));
    json out{{"chosen", params_json(r.chosen)},
             {"feasible", feas},
             {"feasible_count", r.feasible.size()},
             {"gateway_ber", analytic_ber(r.chosen.beta, sigma, r.chosen.n)},
             {"attacker_ber", attacker_ber(r.chosen.beta, r.chosen.n, model)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_ber(double beta, int n, double sigma, std::uint64_t bits, std::uint64_t seed, int workers) {
    double mc = mc_ber(beta, n, sigma, bits, seed, workers);
    double an = analytic_ber(beta, sigma, n);
    std::cout << json{{"analytic", an}, {"monte_carlo", mc}, {"bits", bits},
                      {"relative_error", an > 0 ? std::abs(mc - an) / an : 0.0}}
                     .dump(2)
              << "\n";
    return 0;
}

int cmd_attack_sweep(double beta, int n, int ns, double mu, double sigma, int m_max,
                     std::uint64_t seed, const std::string& out_path) {
    PNKey key = gen_pn_key(n, derive_seed(seed, 1));
    Rng bit_rng(derive_seed(seed, 2));
    Rng carrier_rng(derive_seed(seed, 3));
    Rng dyn_rng(derive_seed(seed, 4));
    const std::size_t win = static_cast<std::size_t>(n) * static_cast<std::size_t>(ns);

    BitStream static_bits(static_cast<std::size_t>(ns));
    for (auto& b : static_bits) b = bit_rng.bernoulli(0.5) ? 1 : -1;

    std::vector<SignalFrame> carriers, wm_static, wm_dynamic;
    for (int w = 0; w < m_max; ++w) {
        std::vector<double> carrier(win);
        for (auto& s : carrier) s = carrier_rng.gaussian(mu, sigma);
        BitStream dyn_bits(static_cast<std::size_t>(ns));
        for (auto& b : dyn_bits) b = dyn_rng.bernoulli(0.5) ? 1 : -1;
        auto widx = static_cast<std::uint64_t>(w);
        carriers.push_back({carrier, widx, 0});
        wm_static.push_back({embed(carrier, key, static_bits, beta), widx, 0});
        wm_dynamic.push_back({embed(carrier, key, dyn_bits, beta), widx, 0});
    }
    std::vector<double> rs = power_ratio_curve(wm_static, carriers, beta);
    std::vector<double> rd = power_ratio_curve(wm_dynamic, carriers, beta);

    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "m,power_ratio_static,power_ratio_dynamic\n";
    for (int m = 1; m <= m_max; ++m)
        os << m << ',' << rs[static_cast<std::size_t>(m - 1)] << ','
           << rd[static_cast<std::size_t>(m - 1)] << "\n";
    return 0;
}

// ---- game commands ---------------------------------------------------------

int cmd_enumerate(const std::vector<long long>& freqs, long long cap, bool ids) {
    EnumerationResult r = enumerate_gateway_strategies(freqs, cap);
    for (const auto& s : r.strategies) {
        for (std::size_t i = 0; i < s.devices.size(); ++i) {
            if (i) std::cout << ',';
            if (ids)
                std::cout << s.devices[i];
            else
                std::cout << freqs[static_cast<std::size_t>(s.devices[i])];
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_msne(const std::vector<long long>& freqs, long long cap, int k) {
    GameConfig cfg{freqs, cap, k};
    MsneResult r = msne(cfg);
    json gs = json::array(), as = json::array();
    for (const auto& s : r.gateway_strategies) gs.push_back(strategy_json(s, freqs));
    for (const auto& s : r.attacker_strategies) as.push_back(strategy_json(s, freqs));
    json out{{"gateway", {{"strategies", gs}, {"mixed", r.gateway_mixed}, {"alloc", r.gateway_alloc},
                          {"value", r.gateway_value}}},
             {"attacker", {{"strategies", as}, {"mixed", r.attacker_mixed}, {"alloc", r.attacker_alloc},
                           {"value", r.attacker_value}}},
             {"exact", r.exact}};
    if (r.exact) {
        std::ostringstream ex;
        ex << r.attacker_value_exact;
        out["attacker_value_exact"] = ex.str();
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fp(const std::vector<long long>& freqs, long long cap, int k, double eps,
           long long max_iter, const std::string& trace_path) {
    GameConfig cfg{freqs, cap, k};
    FpResult r = fp_run(cfg, eps, max_iter);
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot open output file: " + trace_path);
        tf << "iteration,attacker_value\n";
        for (std::size_t i = 0; i < r.value_trace.size(); ++i)
            tf << (i + 1) << ',' << r.value_trace[i] << "\n";
    }
    json out{{"converged", r.converged},
             {"iterations", r.iterations},
             {"gateway_alloc", r.gateway_alloc},
             {"attacker_alloc", r.attacker_alloc},
             {"attacker_value", r.value_trace.empty() ? 0.0 : r.value_trace.back()}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

std::vector<long long> random_freqs(int n, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xF12E));
    std::vector<long long> f(static_cast<std::size_t>(n));
    for (auto& x : f) x = 1000 * rng.uniform_int(1, 15);
    return f;
}

int cmd_drl(std::vector<long long> freqs, int n, int k, double r_budget, int steps,
            std::uint64_t seed, const std::string& trace_path) {
    if (freqs.empty()) {
        if (n <= 0) throw std::invalid_argument("need --freqs or --n");
        freqs = random_freqs(n, seed);
    }
    GameConfig cfg = GameConfig::from_budget(freqs, r_budget, k);
    DrlConfig dcfg;
    dcfg.train_steps = steps;
    DrlResult res = drl_train(cfg, dcfg, seed);
    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot open output file: " + trace_path);
        tf << "step,ug_running_mean\n";
        for (std::size_t i = 0; i < res.ug_running_mean.size(); ++i)
            tf << (i + 1) << ',' << res.ug_running_mean[i] << "\n";
    }
    json out{{"freqs", cfg.freqs},
             {"cap", cfg.cap},
             {"train_steps", steps},
             {"final_ug_mean", res.ug_running_mean.empty() ? 0.0 : res.ug_running_mean.back()}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---- serve ------------------------------------------------------------------

netsim::AuthMode parse_mode(const std::string& s) {
    if (s == "static") return netsim::AuthMode::static_stream;
    if (s == "dynamic_hash") return netsim::AuthMode::dynamic_hash;
    if (s == "dynamic_lstm") return netsim::AuthMode::dynamic_lstm;
    throw std::invalid_argument("unknown mode: " + s + " (static | dynamic_hash | dynamic_lstm)");
}

int cmd_serve(const std::string& config_path, const std::string& transport, std::uint64_t seed,
              const std::string& reports_path, const std::string& epochs_path) {
    std::ifstream cf(config_path);
    if (!cf) throw std::runtime_error("cannot open config file: " + config_path);
    json doc = json::parse(cf);

    netsim::ServiceConfig cfg;
    cfg.cap = doc.at("cap").get<long long>();
    cfg.epochs = doc.at("epochs").get<std::uint64_t>();
    for (const auto& jd : doc.at("devices")) {
        netsim::DeviceRegistration d;
        d.device_id = jd.at("device_id").get<std::uint32_t>();
        d.freq = jd.at("freq").get<long long>();
        d.mode = parse_mode(jd.at("mode").get<std::string>());
        d.params = WatermarkParams{jd.at("beta").get<double>(), jd.at("n").get<int>(),
                                   jd.at("ns").get<int>(), jd.at("fs").get<double>(),
                                   jd.at("d").get<double>()};
        d.key_seed = jd.at("key_seed").get<std::uint64_t>();
        d.model = SignalModel{jd.value("mu", 0.0), jd.at("sigma").get<double>(),
                              jd.value("mu1", 0.0), jd.value("sigma1", 0.0)};
        d.salt = jd.value("salt", std::uint64_t{0});
        d.threshold_pct = jd.value("threshold_pct", 20.0);
        if (jd.contains("static_bits")) d.static_bits = jd["static_bits"].get<BitStream>();
        if (jd.contains("extractor_path"))
            d.extractor = std::make_shared<Network>(Network::load(jd["extractor_path"].get<std::string>()));
        cfg.devices.push_back(std::move(d));
    }

    netsim::Script script;
    for (const auto& ja : doc.value("script", json::array())) {
        netsim::AttackAction a;
        std::string kind = ja.at("kind").get<std::string>();
        if (kind == "inject")
            a.kind = netsim::AttackAction::Kind::inject;
        else if (kind == "record_and_sum_forge")
            a.kind = netsim::AttackAction::Kind::record_and_sum_forge;
        else
            throw std::invalid_argument("unknown attack kind: " + kind);
        a.device_id = ja.at("device_id").get<std::uint32_t>();
        a.window_begin = ja.at("window_begin").get<std::uint64_t>();
        a.window_end = ja.at("window_end").get<std::uint64_t>();
        a.record_m = ja.value("record_m", 0);
        script.actions.push_back(a);
    }

    std::unique_ptr<netsim::SchedulerPolicy> policy;
    json jp = doc.value("policy", json{{"kind", "fixed"}});
    std::string pkind = jp.value("kind", std::string("fixed"));
    if (pkind == "fixed") {
        std::vector<std::vector<std::uint32_t>> sets;
        if (jp.contains("sets"))
            sets = jp["sets"].get<std::vector<std::vector<std::uint32_t>>>();
        else {
            std::vector<std::uint32_t> all;
            for (const auto& d : cfg.devices) all.push_back(d.device_id);
            sets.push_back(all);
        }
        policy = std::make_unique<netsim::FixedSetsPolicy>(sets);
    } else if (pkind == "maximal-cycle") {
        std::vector<long long> freqs;
        for (const auto& d : cfg.devices) freqs.push_back(d.freq);
        EnumerationResult er = enumerate_gateway_strategies(freqs, cfg.cap);
        if (er.strategies.empty()) throw std::invalid_argument("no feasible authentication set under cap");
        std::vector<std::vector<std::uint32_t>> sets;
        for (const auto& s : er.strategies) {
            std::vector<std::uint32_t> ids;
            for (int i : s.devices) ids.push_back(cfg.devices[static_cast<std::size_t>(i)].device_id);
            sets.push_back(ids);
        }
        policy = std::make_unique<netsim::FixedSetsPolicy>(sets);
    } else {
        throw std::invalid_argument("unknown policy kind: " + pkind);
    }

    netsim::TransportKind tk;
    if (transport == "tcp")
        tk = netsim::TransportKind::tcp;
    else if (transport == "inproc")
        tk = netsim::TransportKind::in_process;
    else
        throw std::invalid_argument("unknown transport: " + transport + " (tcp | inproc)");

    netsim::RunSummary sum = netsim::run_simulation(cfg, *policy, script, seed, tk);

    if (!reports_path.empty()) {
        std::ofstream rf(reports_path);
        if (!rf) throw std::runtime_error("cannot open output file: " + reports_path);
        rf << report_csv_header() << "\n";
        for (const auto& r : sum.reports) rf << report_csv_row(r) << "\n";
    }
    if (!epochs_path.empty()) {
        std::ofstream ef(epochs_path);
        if (!ef) throw std::runtime_error("cannot open output file: " + epochs_path);
        ef << netsim::epoch_csv_header() << "\n";
        for (const auto& e : sum.epochs) ef << netsim::epoch_csv_row(e) << "\n";
    }

    std::size_t alarms = 0;
    for (const auto& r : sum.reports) alarms += r.alarm ? 1 : 0;
    json gt = json::array();
    for (const auto& [dev, win] : sum.ground_truth) gt.push_back(json::array({dev, win}));
    std::cout << json{{"epochs", sum.epochs.size()},
                      {"reports", sum.reports.size()},
                      {"alarms", alarms},
                      {"rejected_frames", sum.rejected_frames},
                      {"dropped_connections", sum.drop_log},
                      {"ground_truth", gt}}
                     .dump(2)
              << "\n";
    return 0;
}

// ---- sweep / report ---------------------------------------------------------

struct SweepArgs {
    std::string experiment = "r-sweep";
    int n = 50, k = 5;
    std::string seeds = "0..9";
    std::string out_path;
    std::string r_grid = "0.1:1.0:0.1";
    int duel_steps = 500;
    int drl_steps = 3000;
    bool raw = false;
};

std::vector<double> parse_grid(const std::string& text) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0)
        throw std::invalid_argument("grid must be lo:hi:step with step > 0");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        double v = lo + step * i;
        if (v > hi + 1e-12) break;
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("grid is empty");
    return out;
}

double duel_mean(const GameConfig& cfg, GatewayAgent& agent, int steps, std::uint64_t seed) {
    return run_duel(cfg, agent, steps, seed).mean_ug;
}

int cmd_sweep(const SweepArgs& a) {
    if (a.experiment != "r-sweep")
        throw std::invalid_argument("unknown experiment: " + a.experiment + " (supported: r-sweep)");
    std::vector<std::uint64_t> seeds = parse_seeds(a.seeds);
    std::vector<double> grid = parse_grid(a.r_grid);
    const std::vector<std::string> policies = {"fp", "drl", "equal", "proportional"};

    std::ofstream file;
    std::ostream& os = open_out(file, a.out_path);
    char buf[64];

    if (a.raw)
        os << "R,policy,seed,u_g\n";
    else
        os << "R,policy,U_g_mean,U_g_std\n";

    for (double R : grid) {
        std::map<std::string, std::vector<double>> runs;
        for (std::uint64_t seed : seeds) {
            std::vector<long long> freqs = random_freqs(a.n, seed);
            GameConfig cfg = GameConfig::from_budget(freqs, R, a.k);
            std::map<std::string, double> ug;
            {
                FpGatewayAgent agent(cfg);
                ug["fp"] = duel_mean(cfg, agent, a.duel_steps, seed);
            }
            {
                DrlConfig dcfg;
                dcfg.train_steps = a.drl_steps;
                DrlResult res = drl_train(cfg, dcfg, seed);
                DrlGatewayAgent agent(res.policy, res.belief, res.final_state);
                ug["drl"] = duel_mean(cfg, agent, a.duel_steps, seed);
            }
            {
                BaselineGatewayAgent agent(BaselineKind::equal, cfg);
                ug["equal"] = duel_mean(cfg, agent, a.duel_steps, seed);
            }
            {
                BaselineGatewayAgent agent(BaselineKind::proportional, cfg);
                ug["proportional"] = duel_mean(cfg, agent, a.duel_steps, seed);
            }
            for (const auto& p : policies) runs[p].push_back(ug[p]);
            if (a.raw)
                for (const auto& p : policies) {
                    std::snprintf(buf, sizeof buf, "%.4f,%s,%llu,%.6f", R, p.c_str(),
                                  static_cast<unsigned long long>(seed), ug[p]);
                    os << buf << "\n";
                }
        }
        if (!a.raw)
            for (const auto& p : policies) {
                const auto& v = runs[p];
                double m = mean(v);
                double s = v.size() > 1 ? std::sqrt(variance_sample(v)) : 0.0;
                std::snprintf(buf, sizeof buf, "%.4f,%s,%.6f,%.6f", R, p.c_str(), m, s);
                os << buf << "\n";
            }
    }
    return 0;
}

int cmd_report(const std::string& in_path) {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open input file: " + in_path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("report: empty CSV");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
    }
    auto col = [&](const std::string& name) {
        auto it = std::find(cols.begin(), cols.end(), name);
        return it == cols.end() ? -1 : static_cast<int>(it - cols.begin());
    };
    int cR = col("R"), cP = col("policy");
    if (cR < 0) throw std::invalid_argument("report: missing column 'R'");
    if (cP < 0) throw std::invalid_argument("report: missing column 'policy'");
    int cV = col("u_g");
    if (cV < 0) cV = col("U_g_mean");
    if (cV < 0) throw std::invalid_argument("report: missing column 'u_g' or 'U_g_mean'");

    std::map<std::pair<double, std::string>, std::vector<double>> groups;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> row;
        while (std::getline(ss, tok, ',')) row.push_back(tok);
        if (static_cast<int>(row.size()) <= std::max({cR, cP, cV}))
            throw std::invalid_argument("report: short row: " + line);
        groups[{std::stod(row[static_cast<std::size_t>(cR)]), row[static_cast<std::size_t>(cP)]}]
            .push_back(std::stod(row[static_cast<std::size_t>(cV)]));
    }
    if (groups.empty()) throw std::invalid_argument("report: no data rows");

    char buf[96];
    std::cout << "R,policy,count,mean,std,ci95\n";
    for (const auto& [key, v] : groups) {
        double m = mean(v);
        double s = v.size() > 1 ? std::sqrt(variance_sample(v)) : 0.0;
        double ci = v.size() > 1 ? 1.96 * s / std::sqrt(static_cast<double>(v.size())) : 0.0;
        std::snprintf(buf, sizeof buf, "%.4f,%s,%zu,%.6f,%.6f,%.6f", key.first, key.second.c_str(),
                      v.size(), m, s, ci);
        std::cout << buf << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"watermark authentication toolkit: embedding, detection, games, learning"};
    app.require_subcommand(1);

    // embed
    EmbedArgs ea;
    auto* embed_cmd = app.add_subcommand("embed", "embed hidden bits into a carrier stream");
    embed_cmd->add_option("--in", ea.in_path, "carrier CSV");
    auto* synth_opt = embed_cmd->add_option("--synth", ea.synth, "synthesize this many Gaussian samples");
    auto* seed_opt = embed_cmd->add_option("--seed", ea.seed, "seed for synthesis");
    synth_opt->needs(seed_opt);
    embed_cmd->add_option("--mu", ea.mu, "carrier mean");
    embed_cmd->add_option("--sigma", ea.sigma, "carrier std");
    embed_cmd->add_option("--fs", ea.fs, "sampling rate");
    embed_cmd->add_option("--beta", ea.beta, "watermark amplitude")->required();
    embed_cmd->add_option("--n", ea.n, "key length")->required();
    embed_cmd->add_option("--ns", ea.ns, "bits per window")->required();
    embed_cmd->add_option("--key-seed", ea.key_seed, "PN key seed")->required();
    auto* bits_opt = embed_cmd->add_option("--bits-file", ea.bits_path, "static bits (+1/-1 line)");
    auto* salt_opt = embed_cmd->add_option("--salt", ea.salt, "fingerprint salt (dynamic bits)");
    bits_opt->excludes(salt_opt);
    embed_cmd->add_option("--out", ea.out_path, "output CSV")->required();

    // extract
    ExtractArgs xa;
    auto* extract_cmd = app.add_subcommand("extract", "extract hidden bits from a watermarked stream");
    extract_cmd->add_option("--in", xa.in_path, "watermarked CSV")->required();
    extract_cmd->add_option("--beta", xa.beta, "watermark amplitude")->required();
    extract_cmd->add_option("--n", xa.n, "key length")->required();
    extract_cmd->add_option("--ns", xa.ns, "bits per window")->required();
    extract_cmd->add_option("--key-seed", xa.key_seed, "PN key seed")->required();
    extract_cmd->add_option("--out", xa.out_path, "output file (default stdout)");
    extract_cmd->add_flag("--soft", xa.soft, "print correlator soft values instead of bits");

    // solve-params
    double sp_mu = 0, sp_sigma = 0, sp_mu1 = 0, sp_sigma1 = 0, sp_plo = 0, sp_phi = 0, sp_fs = 0, sp_d = 0;
    auto* sp_cmd = app.add_subcommand("solve-params", "search feasible watermark parameters");
    sp_cmd->add_option("--mu", sp_mu, "carrier mean");
    sp_cmd->add_option("--sigma", sp_sigma, "carrier std")->required();
    sp_cmd->add_option("--mu1", sp_mu1, "mean of cross products")->required();
    sp_cmd->add_option("--sigma1", sp_sigma1, "std of cross products")->required();
    sp_cmd->add_option("--plo", sp_plo, "eavesdropper error target (lower bound 1-plo)")->required();
    sp_cmd->add_option("--phi", sp_phi, "gateway per-bit error budget")->required();
    sp_cmd->add_option("--fs", sp_fs, "sampling rate")->required();
    sp_cmd->add_option("--d", sp_d, "delay budget, seconds")->required();

    // ber
    double b_beta = 0, b_sigma = 0;
    int b_n = 0, b_workers = 1;
    std::uint64_t b_bits = 1000000, b_seed = 0;
    auto* ber_cmd = app.add_subcommand("ber", "analytic vs Monte-Carlo bit error rate");
    ber_cmd->add_option("--beta", b_beta, "watermark amplitude")->required();
    ber_cmd->add_option("--n", b_n, "key length")->required();
    ber_cmd->add_option("--sigma", b_sigma, "carrier std")->required();
    ber_cmd->add_option("--bits", b_bits, "Monte-Carlo sample size");
    ber_cmd->add_option("--seed", b_seed, "RNG seed")->required();
    ber_cmd->add_option("--workers", b_workers, "worker count (deterministic per count, scheduling-invariant)");

    // attack-sweep
    double as_beta = 0, as_sigma = 0, as_mu = 0;
    int as_n = 0, as_ns = 0, as_m = 100;
    std::uint64_t as_seed = 0;
    std::string as_out;
    auto* as_cmd = app.add_subcommand("attack-sweep", "record-and-sum power ratio vs recordings");
    as_cmd->add_option("--beta", as_beta, "watermark amplitude")->required();
    as_cmd->add_option("--n", as_n, "key length")->required();
    as_cmd->add_option("--ns", as_ns, "bits per window")->required();
    as_cmd->add_option("--mu", as_mu, "carrier mean");
    as_cmd->add_option("--sigma", as_sigma, "carrier std")->required();
    as_cmd->add_option("--m", as_m, "max recorded windows");
    as_cmd->add_option("--seed", as_seed, "RNG seed")->required();
    as_cmd->add_option("--out", as_out, "output CSV (default stdout)");

    // enumerate
    std::string en_freqs;
    long long en_cap = 0;
    bool en_ids = false;
    auto* en_cmd = app.add_subcommand("enumerate", "maximal budget-feasible authentication sets");
    en_cmd->add_option("--freqs", en_freqs, "comma-separated device frequencies")->required();
    en_cmd->add_option("--cap", en_cap, "budget cap")->required();
    en_cmd->add_flag("--ids", en_ids, "print 0-based device indices instead of frequencies");

    // msne
    std::string ms_freqs;
    long long ms_cap = 0;
    int ms_k = 1;
    auto* ms_cmd = app.add_subcommand("msne", "mixed equilibrium of the authentication game");
    ms_cmd->add_option("--freqs", ms_freqs, "comma-separated device frequencies")->required();
    ms_cmd->add_option("--cap", ms_cap, "budget cap")->required();
    ms_cmd->add_option("--k", ms_k, "number of attacked devices");

    // fp
    std::string fp_freqs, fp_trace;
    long long fp_cap = 0, fp_max_iter = 100000;
    int fp_k = 1;
    double fp_eps = 1e-3;
    auto* fp_cmd = app.add_subcommand("fp", "fictitious play on the authentication game");
    fp_cmd->add_option("--freqs", fp_freqs, "comma-separated device frequencies")->required();
    fp_cmd->add_option("--cap", fp_cap, "budget cap")->required();
    fp_cmd->add_option("--k", fp_k, "number of attacked devices");
    fp_cmd->add_option("--eps", fp_eps, "belief convergence threshold");
    fp_cmd->add_option("--max-iter", fp_max_iter, "iteration cap");
    fp_cmd->add_option("--trace-out", fp_trace, "value trace CSV");

    // drl
    std::string dr_freqs, dr_trace;
    int dr_n = 0, dr_k = 1, dr_steps = 3000;
    double dr_r = 0.5;
    std::uint64_t dr_seed = 0;
    auto* dr_cmd = app.add_subcommand("drl", "train the deep RL defender");
    dr_cmd->add_option("--freqs", dr_freqs, "comma-separated device frequencies");
    dr_cmd->add_option("--n", dr_n, "device count (random frequencies when --freqs absent)");
    dr_cmd->add_option("--k", dr_k, "number of attacked devices");
    dr_cmd->add_option("--r", dr_r, "budget ratio R");
    dr_cmd->add_option("--steps", dr_steps, "training steps");
    dr_cmd->add_option("--seed", dr_seed, "RNG seed")->required();
    dr_cmd->add_option("--trace-out", dr_trace, "running-mean utility CSV");

    // serve
    std::string sv_config, sv_transport = "inproc", sv_reports, sv_epochs;
    std::uint64_t sv_seed = 0;
    auto* sv_cmd = app.add_subcommand("serve", "run the gateway simulation harness");
    sv_cmd->add_option("--config", sv_config, "service config JSON")->required();
    sv_cmd->add_option("--transport", sv_transport, "inproc | tcp");
    sv_cmd->add_option("--seed", sv_seed, "RNG seed")->required();
    sv_cmd->add_option("--out", sv_reports, "detection reports CSV");
    sv_cmd->add_option("--epochs-out", sv_epochs, "per-epoch schedule CSV");

    // sweep
    SweepArgs sw;
    auto* sw_cmd = app.add_subcommand("sweep", "policy comparison over a budget grid");
    sw_cmd->add_option("--experiment", sw.experiment, "experiment name (r-sweep)");
    sw_cmd->add_option("--n", sw.n, "device count");
    sw_cmd->add_option("--k", sw.k, "number of attacked devices");
    sw_cmd->add_option("--seeds", sw.seeds, "seeds, lo..hi or comma list")->required();
    sw_cmd->add_option("--r-grid", sw.r_grid, "budget grid lo:hi:step");
    sw_cmd->add_option("--duel-steps", sw.duel_steps, "evaluation steps per run");
    sw_cmd->add_option("--drl-steps", sw.drl_steps, "DRL training steps per run");
    sw_cmd->add_flag("--per-seed", sw.raw, "emit one row per seed instead of aggregates");
    sw_cmd->add_option("--out", sw.out_path, "output CSV (default stdout)");

    // report
    std::string rp_in;
    auto* rp_cmd = app.add_subcommand("report", "aggregate a sweep CSV into summary tables");
    rp_cmd->add_option("--in", rp_in, "sweep CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*embed_cmd) {
            if (ea.in_path.empty() == (ea.synth == 0))
                throw std::invalid_argument("need exactly one of --in or --synth");
            if (ea.bits_path.empty() && !*salt_opt)
                throw std::invalid_argument("need one of --bits-file or --salt");
            ea.use_salt = salt_opt->count() > 0;
            return cmd_embed(ea);
        }
        if (*extract_cmd) return cmd_extract(xa);
        if (*sp_cmd) return cmd_solve_params(sp_mu, sp_sigma, sp_mu1, sp_sigma1, sp_plo, sp_phi, sp_fs, sp_d);
        if (*ber_cmd) return cmd_ber(b_beta, b_n, b_sigma, b_bits, b_seed, b_workers);
        if (*as_cmd) return cmd_attack_sweep(as_beta, as_n, as_ns, as_mu, as_sigma, as_m, as_seed, as_out);
        if (*en_cmd) return cmd_enumerate(parse_freqs(en_freqs), en_cap, en_ids);
        if (*ms_cmd) return cmd_msne(parse_freqs(ms_freqs), ms_cap, ms_k);
        if (*fp_cmd) return cmd_fp(parse_freqs(fp_freqs), fp_cap, fp_k, fp_eps, fp_max_iter, fp_trace);
        if (*dr_cmd)
            return cmd_drl(dr_freqs.empty() ? std::vector<long long>{} : parse_freqs(dr_freqs), dr_n,
                           dr_k, dr_r, dr_steps, dr_seed, dr_trace);
        if (*sv_cmd) return cmd_serve(sv_config, sv_transport, sv_seed, sv_reports, sv_epochs);
        if (*sw_cmd) return cmd_sweep(sw);
        if (*rp_cmd) return cmd_report(rp_in);
    } catch (const infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << " (binding: " << e.binding << ")\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
