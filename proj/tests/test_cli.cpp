// Drives the installed binary end to end: exit codes, JSON/CSV shapes,
// byte-for-byte reproducibility. IOTWM_CLI_PATH is injected by the build.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <iotwm/detector.hpp>
#include <iotwm/watermark.hpp>

using nlohmann::json;

namespace {

struct CmdResult {
    int code = -1;
    std::string out, err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string tag = std::to_string(++counter);
    const std::string out_path = "cli_stdout_" + tag + ".tmp";
    const std::string err_path = "cli_stderr_" + tag + ".tmp";
    const std::string cmd =
        std::string(IOTWM_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

}  // namespace

TEST_CASE("usage problems exit 2, help exits 0") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("nope").code == 2);
    CHECK(run_cli("ber").code == 2);          // missing required options
    CHECK(run_cli("embed --beta 0.5").code == 2);

    const auto help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("embed") != std::string::npos);
    CHECK(help.out.find("serve") != std::string::npos);
    CHECK(help.out.find("sweep") != std::string::npos);
}

TEST_CASE("contract violations exit 3 with an error line") {
    const auto missing = run_cli("extract --in no_such_file.csv --beta 0.5 --n 6 --ns 10 --key-seed 1");
    CHECK(missing.code == 3);
    CHECK(missing.err.rfind("error:", 0) == 0);

    // Input source must be exactly one of --in / --synth.
    CHECK(run_cli("embed --synth 60 --seed 1 --in x.csv --beta 0.5 --n 6 --ns 10 "
                  "--key-seed 1 --salt 2 --out cli_never.csv")
              .code == 3);
    CHECK(run_cli("embed --synth 60 --seed 1 --beta 0.5 --n 6 --ns 10 --key-seed 1 "
                  "--out cli_never.csv")
              .code == 3);  // neither bits nor salt

    // Shorter than one window.
    CHECK(run_cli("embed --synth 30 --seed 1 --beta 0.5 --n 6 --ns 10 --key-seed 1 "
                  "--salt 2 --out cli_never.csv")
              .code == 3);

    // Odd key length is rejected by the key generator.
    CHECK(run_cli("embed --synth 600 --seed 1 --beta 0.5 --n 5 --ns 10 --key-seed 1 "
                  "--salt 2 --out cli_never.csv")
              .code == 3);

    const auto bogus = run_cli("sweep --experiment bogus --seeds 0..1");
    CHECK(bogus.code == 3);
    CHECK(bogus.err.find("unknown experiment") != std::string::npos);
}

TEST_CASE("an unsatisfiable parameter search exits 4 naming the binding screen") {
    const auto r = run_cli(
        "solve-params --mu1 0 --sigma1 0.5 --sigma 0.5 --plo 0.05 --phi 0.01 --fs 1000 --d 0.001");
    CHECK(r.code == 4);
    CHECK(r.err.rfind("infeasible:", 0) == 0);
    CHECK(r.err.find("binding:") != std::string::npos);
}

TEST_CASE("solve-params lists the textbook triple as feasible") {
    const auto r = run_cli(
        "solve-params --mu1 0 --sigma1 0.5 --sigma 0.5 --plo 0.05 --phi 0.01 --fs 1000 --d 0.1");
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("feasible_count").get<std::size_t>() == d.at("feasible").size());
    CHECK(d.at("gateway_ber").get<double>() <= 0.01);

    bool has_textbook = false, chosen_listed = false;
    const json& chosen = d.at("chosen");
    for (const auto& p : d.at("feasible")) {
        if (p.at("beta") == 0.5 && p.at("n") == 10 && p.at("ns") == 10) has_textbook = true;
        if (p == chosen) chosen_listed = true;
    }
    CHECK(has_textbook);
    CHECK(chosen_listed);
    // The chosen point passes the same screens the search applied.
    iotwm::SignalModel model{0.0, 0.5, 0.0, 0.5};
    const auto feas = iotwm::check_params(model, 0.05, 0.01, 1000.0, 0.1,
                                          chosen.at("beta").get<double>(), chosen.at("n").get<int>());
    CHECK(feas.ok());
    CHECK(chosen.at("n").get<int>() * chosen.at("ns").get<int>() <= 100);  // fs * d samples
}

TEST_CASE("ber reports the analytic value and a seeded estimate") {
    const std::string args = "ber --beta 0.5 --n 10 --sigma 0.5 --bits 200000 --seed 3";
    const auto a = run_cli(args + " --workers 1");
    REQUIRE(a.code == 0);
    const json d = json::parse(a.out);
    CHECK(d.at("analytic").get<double>() == iotwm::analytic_ber(0.5, 0.5, 10));
    CHECK(d.at("bits").get<std::uint64_t>() == 200000);
    CHECK(d.at("relative_error").get<double>() < 0.10);

    // Same worker count, same seed: identical output. Worker counts use
    // disjoint derived streams, so the estimate stays within tolerance.
    const auto b = run_cli(args + " --workers 1");
    CHECK(b.out == a.out);
    const auto c = run_cli(args + " --workers 3");
    REQUIRE(c.code == 0);
    CHECK(json::parse(c.out).at("relative_error").get<double>() < 0.10);
}

TEST_CASE("enumerate prints maximal feasible sets in order") {
    const auto by_freq = run_cli("enumerate --freqs 1000,2000,3000 --cap 5000");
    REQUIRE(by_freq.code == 0);
    CHECK(by_freq.out == "1000,2000\n1000,3000\n2000,3000\n");

    const auto by_id = run_cli("enumerate --freqs 1000,2000,3000 --cap 5000 --ids");
    CHECK(by_id.out == "0,1\n0,2\n1,2\n");

    const auto none = run_cli("enumerate --freqs 5,5 --cap 4");
    CHECK(none.code == 0);
    CHECK(none.out.empty());

    CHECK(run_cli("enumerate --freqs 0,5 --cap 4").code == 3);
}

TEST_CASE("msne emits the exact equilibrium of the three-device game") {
    const auto r = run_cli("msne --freqs 1000,2000,3000 --cap 5000 --k 1");
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("exact") == true);
    CHECK(d.at("attacker_value_exact") == "1/11");
    CHECK(d.at("attacker").at("value").get<double>() == doctest::Approx(1.0 / 11).epsilon(1e-12));
    CHECK(d.at("gateway").at("value").get<double>() == doctest::Approx(10.0 / 11).epsilon(1e-12));

    const auto galloc = d.at("gateway").at("alloc").get<std::vector<double>>();
    REQUIRE(galloc.size() == 3);
    CHECK(galloc[0] == doctest::Approx(5.0 / 11).epsilon(1e-9));
    CHECK(galloc[1] == doctest::Approx(8.0 / 11).epsilon(1e-9));
    CHECK(galloc[2] == doctest::Approx(9.0 / 11).epsilon(1e-9));

    const json& gs = d.at("gateway").at("strategies");
    REQUIRE(gs.size() == 3);
    CHECK(gs[0].at("devices") == json::array({0, 1}));
    CHECK(gs[0].at("freqs") == json::array({1000, 2000}));
    CHECK(gs[2].at("devices") == json::array({1, 2}));

    double gmix_sum = 0.0;
    for (double m : d.at("gateway").at("mixed").get<std::vector<double>>()) gmix_sum += m;
    CHECK(gmix_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fp converges near the game value and writes a trace") {
    const std::string trace = "cli_fp_trace.csv";
    const auto r = run_cli("fp --freqs 1000,2000,3000 --cap 5000 --k 1 --eps 1e-3 --trace-out " + trace);
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("converged") == true);
    const auto iters = d.at("iterations").get<long long>();
    CHECK(iters >= 1);
    CHECK(std::abs(d.at("attacker_value").get<double>() - 1.0 / 11) <= 1e-2);

    const auto tl = lines_of(slurp(trace));
    REQUIRE(tl.size() == static_cast<std::size_t>(iters) + 1);
    CHECK(tl[0] == "iteration,attacker_value");

    const auto again = run_cli("fp --freqs 1000,2000,3000 --cap 5000 --k 1 --eps 1e-3");
    CHECK(again.out == r.out);
    std::remove(trace.c_str());
}

TEST_CASE("embed and extract round-trip a synthesized stream reproducibly") {
    const std::string wm1 = "cli_wm1.csv", wm2 = "cli_wm2.csv", bits = "cli_bits.txt";
    const std::string embed_args =
        "embed --synth 600 --seed 4 --mu 0 --sigma 0.5 --beta 0.5 --n 6 --ns 10 --key-seed 2 --salt 7";
    const auto e1 = run_cli(embed_args + " --out " + wm1);
    REQUIRE(e1.code == 0);
    const json ej = json::parse(e1.out);
    CHECK(ej.at("windows") == 10);
    CHECK(ej.at("samples") == 600);
    CHECK(ej.at("leftover") == 0);

    const auto e2 = run_cli(embed_args + " --out " + wm2);
    REQUIRE(e2.code == 0);
    CHECK(slurp(wm1) == slurp(wm2));

    const auto x = run_cli("extract --in " + wm1 + " --beta 0.5 --n 6 --ns 10 --key-seed 2 --out " + bits);
    REQUIRE(x.code == 0);
    const auto bl = lines_of(slurp(bits));
    REQUIRE(bl.size() == 10);
    for (const auto& line : bl) {
        std::stringstream ss(line);
        std::string tok;
        int count = 0;
        while (ss >> tok) {
            CHECK((tok == "+1" || tok == "-1"));
            ++count;
        }
        CHECK(count == 10);
    }

    // Soft output parses as one real per bit position.
    const auto soft = run_cli("extract --in " + wm1 + " --beta 0.5 --n 6 --ns 10 --key-seed 2 --soft");
    REQUIRE(soft.code == 0);
    const auto sl = lines_of(soft.out);
    REQUIRE(sl.size() == 10);
    std::stringstream ss(sl[0]);
    double v = 0.0;
    int count = 0;
    while (ss >> v) ++count;
    CHECK(count == 10);

    std::remove(wm1.c_str());
    std::remove(wm2.c_str());
    std::remove(bits.c_str());
}

TEST_CASE("attack-sweep writes a deterministic growth curve") {
    const std::string f1 = "cli_as1.csv", f2 = "cli_as2.csv";
    const std::string args = "attack-sweep --beta 0.5 --n 8 --ns 16 --sigma 0.5 --m 30 --seed 9 --out ";
    REQUIRE(run_cli(args + f1).code == 0);
    REQUIRE(run_cli(args + f2).code == 0);
    const std::string body = slurp(f1);
    CHECK(body == slurp(f2));

    const auto rows = lines_of(body);
    REQUIRE(rows.size() == 31);
    CHECK(rows[0] == "m,power_ratio_static,power_ratio_dynamic");
    double m = 0, s_first = 0, s_last = 0, dyn = 0;
    char comma;
    std::stringstream first(rows[1]), last(rows[30]);
    first >> m >> comma >> s_first >> comma >> dyn;
    CHECK(m == 1);
    last >> m >> comma >> s_last >> comma >> dyn;
    CHECK(m == 30);
    // Replay power against a static stream accumulates with recordings.
    CHECK(s_last > 10.0 * s_first);
    CHECK(dyn < s_last);
    std::remove(f1.c_str());
    std::remove(f2.c_str());
}

TEST_CASE("drl trains from explicit or generated frequencies") {
    const std::string trace = "cli_drl_trace.csv";
    const auto r = run_cli("drl --freqs 3,5,2,7 --k 1 --r 0.5 --steps 40 --seed 5 --trace-out " + trace);
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("freqs") == json::array({3, 5, 2, 7}));
    CHECK(d.at("cap").get<long long>() == 8);
    CHECK(d.at("train_steps") == 40);
    const double ug = d.at("final_ug_mean").get<double>();
    CHECK(ug >= 0.0);
    CHECK(ug <= 1.0);
    const auto tl = lines_of(slurp(trace));
    REQUIRE(tl.size() == 41);
    CHECK(tl[0] == "step,ug_running_mean");
    std::remove(trace.c_str());

    const auto gen = run_cli("drl --n 3 --k 1 --r 0.5 --steps 20 --seed 5");
    REQUIRE(gen.code == 0);
    const auto freqs = json::parse(gen.out).at("freqs").get<std::vector<long long>>();
    REQUIRE(freqs.size() == 3);
    for (long long f : freqs) {
        CHECK(f >= 1000);
        CHECK(f <= 15000);
        CHECK(f % 1000 == 0);
    }

    CHECK(run_cli("drl --k 1 --r 0.5 --steps 20 --seed 5").code == 3);  // no freqs, no n
}

TEST_CASE("serve runs a scripted simulation from a config file") {
    const std::string cfg_path = "cli_serve_cfg.json";
    write_file(cfg_path, R"({
  "cap": 2000,
  "epochs": 6,
  "devices": [
    {"device_id": 1, "freq": 1000, "mode": "static", "beta": 0.8, "n": 16, "ns": 32,
     "fs": 1000, "d": 1.0, "key_seed": 8, "sigma": 0.5,
     "static_bits": [1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1,1,-1]},
    {"device_id": 2, "freq": 1000, "mode": "dynamic_hash", "beta": 0.8, "n": 16, "ns": 32,
     "fs": 1000, "d": 1.0, "key_seed": 9, "sigma": 0.5, "salt": 77}
  ],
  "script": [{"kind": "inject", "device_id": 2, "window_begin": 3, "window_end": 5}]
})");

    const std::string reports = "cli_reports.csv", epochs = "cli_epochs.csv";
    const auto r = run_cli("serve --config " + cfg_path + " --seed 21 --out " + reports +
                           " --epochs-out " + epochs);
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("epochs") == 6);
    CHECK(d.at("reports") == 12);
    CHECK(d.at("alarms") == 3);
    CHECK(d.at("rejected_frames") == 0);
    CHECK(d.at("dropped_connections").empty());
    CHECK(d.at("ground_truth") == json::array({{2, 3}, {2, 4}, {2, 5}}));

    const auto rl = lines_of(slurp(reports));
    REQUIRE(rl.size() == 13);
    CHECK(rl[0] == iotwm::report_csv_header());
    const auto el = lines_of(slurp(epochs));
    REQUIRE(el.size() == 7);
    CHECK(el[1] == "0,\"1 2\",2000,2000");

    // The TCP transport produces the same reports, byte for byte.
    const std::string reports_tcp = "cli_reports_tcp.csv";
    const auto t = run_cli("serve --config " + cfg_path + " --seed 21 --transport tcp --out " +
                           reports_tcp);
    REQUIRE(t.code == 0);
    CHECK(t.out == r.out);
    CHECK(slurp(reports_tcp) == slurp(reports));

    CHECK(run_cli("serve --config missing.json --seed 1").code == 3);
    CHECK(run_cli("serve --config " + cfg_path + " --seed 1 --transport carrier_pigeon").code == 3);

    std::remove(reports.c_str());
    std::remove(reports_tcp.c_str());
    std::remove(epochs.c_str());
    std::remove(cfg_path.c_str());
}

TEST_CASE("serve cycles maximal sets when asked to") {
    const std::string cfg_path = "cli_serve_cycle.json";
    write_file(cfg_path, R"({
  "cap": 1000,
  "epochs": 4,
  "policy": {"kind": "maximal-cycle"},
  "devices": [
    {"device_id": 1, "freq": 1000, "mode": "dynamic_hash", "beta": 0.8, "n": 16, "ns": 32,
     "fs": 1000, "d": 1.0, "key_seed": 8, "sigma": 0.5, "salt": 5},
    {"device_id": 2, "freq": 1000, "mode": "dynamic_hash", "beta": 0.8, "n": 16, "ns": 32,
     "fs": 1000, "d": 1.0, "key_seed": 9, "sigma": 0.5, "salt": 6}
  ]
})");
    const std::string epochs = "cli_cycle_epochs.csv";
    const auto r = run_cli("serve --config " + cfg_path + " --seed 2 --epochs-out " + epochs);
    REQUIRE(r.code == 0);
    const json d = json::parse(r.out);
    CHECK(d.at("epochs") == 4);
    CHECK(d.at("reports") == 4);  // one device per epoch under the cap
    CHECK(d.at("alarms") == 0);

    const auto el = lines_of(slurp(epochs));
    REQUIRE(el.size() == 5);
    CHECK(el[1] == "0,\"1\",1000,1000");
    CHECK(el[2] == "1,\"2\",1000,1000");
    CHECK(el[3] == "2,\"1\",1000,1000");

    std::remove(epochs.c_str());
    std::remove(cfg_path.c_str());
}

TEST_CASE("sweep and report compose into the experiment pipeline") {
    const std::string raw = "cli_sweep_raw.csv", agg = "cli_sweep_agg.csv";
    const std::string base =
        "sweep --experiment r-sweep --n 6 --k 2 --seeds 0..1 --r-grid 0.5:0.5:0.1 "
        "--duel-steps 30 --drl-steps 30";
    REQUIRE(run_cli(base + " --per-seed --out " + raw).code == 0);
    const auto rl = lines_of(slurp(raw));
    REQUIRE(rl.size() == 9);  // header + 2 seeds x 4 policies
    CHECK(rl[0] == "R,policy,seed,u_g");
    for (std::size_t i = 1; i < rl.size(); ++i) {
        std::stringstream ss(rl[i]);
        std::string rcol, pol, seed, ug;
        std::getline(ss, rcol, ',');
        std::getline(ss, pol, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, ug, ',');
        CHECK(rcol == "0.5000");
        CHECK((pol == "fp" || pol == "drl" || pol == "equal" || pol == "proportional"));
        const double u = std::stod(ug);
        CHECK(u >= 0.0);
        CHECK(u <= 1.0);
    }

    const auto rep = run_cli("report --in " + raw);
    REQUIRE(rep.code == 0);
    const auto repl = lines_of(rep.out);
    REQUIRE(repl.size() == 5);  // header + 4 policies at one R
    CHECK(repl[0] == "R,policy,count,mean,std,ci95");
    CHECK(repl[1].find(",2,") != std::string::npos);  // two seeds per group

    REQUIRE(run_cli(base + " --out " + agg).code == 0);
    const auto al = lines_of(slurp(agg));
    REQUIRE(al.size() == 5);
    CHECK(al[0] == "R,policy,U_g_mean,U_g_std");
    // Aggregated output is itself consumable by report.
    CHECK(run_cli("report --in " + agg).code == 0);

    std::remove(raw.c_str());
    std::remove(agg.c_str());
}

TEST_CASE("report aggregates a handwritten CSV exactly") {
    const std::string path = "cli_report_in.csv";
    write_file(path, "R,policy,seed,u_g\n0.5,fp,0,0.8\n0.5,fp,1,0.9\n0.5,equal,0,0.6\n");
    const auto r = run_cli("report --in " + path);
    REQUIRE(r.code == 0);
    CHECK(r.out ==
          "R,policy,count,mean,std,ci95\n"
          "0.5000,equal,1,0.600000,0.000000,0.000000\n"
          "0.5000,fp,2,0.850000,0.070711,0.098000\n");

    write_file(path, "R,policy,value\n0.5,fp,0.8\n");
    CHECK(run_cli("report --in " + path).code == 3);
    write_file(path, "policy,u_g\nfp,0.8\n");
    CHECK(run_cli("report --in " + path).code == 3);
    write_file(path, "");
    CHECK(run_cli("report --in " + path).code == 3);
    write_file(path, "R,policy,seed,u_g\n");
    CHECK(run_cli("report --in " + path).code == 3);  // no data rows
    write_file(path, "R,policy,seed,u_g\n0.5,fp\n");
    CHECK(run_cli("report --in " + path).code == 3);  // short row
    CHECK(run_cli("report --in cli_no_such.csv").code == 3);
    std::remove(path.c_str());
}
