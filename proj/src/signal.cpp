#include "iotwm/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "iotwm/mathx.hpp"
#include "iotwm/rng.hpp"

namespace iotwm {

SignalStream synth_gaussian(std::size_t n_samples, double mu, double sigma, double fs,
                            std::uint64_t seed, std::uint32_t device_id) {
    if (fs <= 0.0) throw std::invalid_argument("synth_gaussian: fs must be positive");
    if (sigma < 0.0) throw std::invalid_argument("synth_gaussian: sigma must be nonnegative");
    SignalStream s;
    s.fs = fs;
    s.device_id = device_id;
    s.samples.resize(n_samples);
    Rng rng(seed);
    for (auto& x : s.samples) x = rng.gaussian(mu, sigma);
    return s;
}

namespace {

bool parse_double(const std::string& text, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(text, &pos);
    } catch (const std::exception&) {
        return false;
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    return pos == text.size();
}

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

SignalStream load_csv(const std::string& path, std::optional<double> fs_override,
                      std::uint32_t device_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    SignalStream s;
    s.device_id = device_id;
    double header_fs = 0.0;
    bool have_header_fs = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trimmed(line);
        if (t.empty()) continue;
        if (lineno == 1 && t.rfind("fs,", 0) == 0) {
            if (!parse_double(t.substr(3), header_fs) || header_fs <= 0.0) {
                throw std::runtime_error("load_csv: " + path + ":1: bad fs header '" + t + "'");
            }
            have_header_fs = true;
            continue;
        }
        double v = 0.0;
        if (!parse_double(t, v)) {
            throw std::runtime_error("load_csv: " + path + ":" + std::to_string(lineno) +
                                     ": not a number: '" + t + "'");
        }
        s.samples.push_back(v);
    }
    if (s.samples.empty()) throw std::runtime_error("load_csv: " + path + ": no samples");

    if (fs_override) {
        if (*fs_override <= 0.0) throw std::invalid_argument("load_csv: fs override must be positive");
        s.fs = *fs_override;
    } else if (have_header_fs) {
        s.fs = header_fs;
    } else {
        throw std::runtime_error("load_csv: " + path + ": no fs header and no override given");
    }
    return s;
}

void save_csv(const std::string& path, const SignalStream& stream) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    out.precision(17);
    out << "fs," << stream.fs << "\n";
    for (double x : stream.samples) out << x << "\n";
    if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

SignalModel estimate_model(const SignalStream& stream) {
    if (stream.samples.size() < 2) {
        throw std::invalid_argument("estimate_model: need at least 2 samples");
    }
    SignalModel m;
    m.mu = mean(stream.samples);
    m.sigma = std::sqrt(variance_sample(stream.samples));
    if (m.sigma <= 0.0) throw std::invalid_argument("estimate_model: constant stream (sigma = 0)");

    // Products of two independent shuffles stand in for independent draws
    // y*y'. Internal constants keep this a pure function of the stream.
    std::vector<double> a = stream.samples;
    std::vector<double> b = stream.samples;
    std::mt19937_64 ra(0x5157a7e5u), rb(0xc0ffee42u);
    std::shuffle(a.begin(), a.end(), ra);
    std::shuffle(b.begin(), b.end(), rb);
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
    m.mu1 = mean(prod);
    m.sigma1 = std::sqrt(variance_sample(prod));
    return m;
}

std::vector<SignalFrame> frame(const SignalStream& stream, int n, int ns) {
    if (n < 1 || ns < 1) throw std::invalid_argument("frame: n and ns must be >= 1");
    const std::size_t win = static_cast<std::size_t>(n) * static_cast<std::size_t>(ns);
    if (stream.samples.size() < win) {
        throw std::invalid_argument("frame: stream shorter than one window");
    }
    std::vector<SignalFrame> out;
    const std::size_t count = stream.samples.size() / win;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        SignalFrame f;
        f.window_index = w;
        f.device_id = stream.device_id;
        f.samples.assign(stream.samples.begin() + static_cast<std::ptrdiff_t>(w * win),
                         stream.samples.begin() + static_cast<std::ptrdiff_t>((w + 1) * win));
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace iotwm
