#include "pdiff/io.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pdiff {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_samples_csv(const std::string& path, const Vec& values) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_samples_csv: cannot open " + path);
    for (Eigen::Index i = 0; i < values.size(); ++i) os << format_double(values[i]) << "\n";
    if (!os) throw std::runtime_error("write_samples_csv: write failed for " + path);
}

Vec read_samples_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("read_samples_csv: cannot open " + path);
    std::vector<double> values;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str()) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw std::runtime_error("read_samples_csv: non-numeric row in " + path);
        }
        first = false;
        values.push_back(v);
    }
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_history_csv(const std::string& path, const std::vector<double>& epoch_loss) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_history_csv: cannot open " + path);
    os << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < epoch_loss.size(); ++i)
        os << (i + 1) << "," << format_double(epoch_loss[i]) << "\n";
}

void write_curve_csv(const std::string& path,
                     const std::vector<std::pair<double, double>>& curve,
                     const std::string& header) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_curve_csv: cannot open " + path);
    os << header << "\n";
    for (const auto& [a, v] : curve) os << format_double(a) << "," << format_double(v) << "\n";
}

void write_pmf_csv(const std::string& path, const Vec& raw, const Vec& smoothed,
                   const Vec& band_lo, const Vec& band_hi) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_pmf_csv: cannot open " + path);
    os << "cell,raw,smoothed,band_lo,band_hi\n";
    for (Eigen::Index k = 0; k < raw.size(); ++k)
        os << k << "," << format_double(raw[k]) << "," << format_double(smoothed[k]) << ","
           << format_double(band_lo[k]) << "," << format_double(band_hi[k]) << "\n";
}

// ---------------------------------------------------------------------------
// SHA-256
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint32_t, 64> kRound = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

struct Sha256 {
    std::array<std::uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                      0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::array<std::uint8_t, 64> block{};
    std::size_t fill = 0;
    std::uint64_t total = 0;

    void process(const std::uint8_t* p) {
        std::uint32_t w[64];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; ++i) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, hh] = h;
        for (int i = 0; i < 64; ++i) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + kRound[static_cast<std::size_t>(i)] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        total += len;
        while (len > 0) {
            const std::size_t take = std::min(len, block.size() - fill);
            std::memcpy(block.data() + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == block.size()) {
                process(block.data());
                fill = 0;
            }
        }
    }

    std::string finish() {
        const std::uint64_t bits = total * 8;
        const std::uint8_t pad = 0x80;
        update(&pad, 1);
        const std::uint8_t zero = 0;
        while (fill != 56) update(&zero, 1);
        for (int i = 7; i >= 0; --i) {
            const std::uint8_t b = static_cast<std::uint8_t>(bits >> (8 * i));
            update(&b, 1);
        }
        char out[65];
        for (int i = 0; i < 8; ++i) std::snprintf(out + 8 * i, 9, "%08x", h[static_cast<std::size_t>(i)]);
        return std::string(out, 64);
    }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
    Sha256 s;
    s.update(data, len);
    return s.finish();
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("sha256_file: cannot open " + path);
    Sha256 s;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        s.update(buf, static_cast<std::size_t>(is.gcount()));
    }
    return s.finish();
}

}  // namespace pdiff
