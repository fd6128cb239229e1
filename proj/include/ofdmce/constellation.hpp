#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ofdmce/common.hpp"

namespace ofdmce {

using BitVec = std::vector<std::uint8_t>;

// Gray-mapped constellation with unit average symbol energy. Point index is
// the bit pattern read MSB-first.
struct Constellation {
    std::string name;
    int bits_per_symbol = 0;
    std::vector<cplx> points;

    // bits (b0,b1) -> ((1-2*b0) + i(1-2*b1)) / sqrt(2)
    static Constellation qpsk() {
        Constellation c;
        c.name = "QPSK";
        c.bits_per_symbol = 2;
        const double s = 1.0 / std::sqrt(2.0);
        c.points.resize(4);
        for (int b0 = 0; b0 < 2; ++b0)
            for (int b1 = 0; b1 < 2; ++b1)
                c.points[b0 * 2 + b1] = cplx((1 - 2 * b0) * s, (1 - 2 * b1) * s);
        return c;
    }

    // Per-axis Gray coding; bits (b0,b2) select I, (b1,b3) select Q.
    static Constellation qam16() {
        Constellation c;
        c.name = "QAM16";
        c.bits_per_symbol = 4;
        const double s = 1.0 / std::sqrt(10.0);
        auto level = [](int hi, int lo) {
            // Gray: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
            static const double lut[4] = {-3.0, -1.0, +1.0, +3.0};
            return lut[(hi << 1) | (hi ^ lo)];
        };
        c.points.resize(16);
        for (int v = 0; v < 16; ++v) {
            const int b0 = (v >> 3) & 1, b1 = (v >> 2) & 1, b2 = (v >> 1) & 1, b3 = v & 1;
            c.points[v] = cplx(level(b0, b2) * s, level(b1, b3) * s);
        }
        return c;
    }

    static Constellation by_name(const std::string& n) {
        if (n == "QPSK" || n == "qpsk") return qpsk();
        if (n == "QAM16" || n == "qam16" || n == "16QAM") return qam16();
        throw std::invalid_argument("unknown constellation: " + n);
    }
};

inline std::vector<cplx> modulate(std::span<const std::uint8_t> bits, const Constellation& c) {
    require(c.bits_per_symbol > 0, "modulate: empty constellation");
    require(bits.size() % static_cast<std::size_t>(c.bits_per_symbol) == 0,
            "modulate: bit count not divisible by bits_per_symbol");
    std::vector<cplx> out(bits.size() / c.bits_per_symbol);
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::size_t idx = 0;
        for (int b = 0; b < c.bits_per_symbol; ++b)
            idx = (idx << 1) | (bits[s * c.bits_per_symbol + b] & 1u);
        out[s] = c.points[idx];
    }
    return out;
}

// Hard decision: nearest constellation point, MSB-first bits.
inline BitVec demodulate(std::span<const cplx> symbols, const Constellation& c) {
    BitVec out(symbols.size() * c.bits_per_symbol);
    for (std::size_t s = 0; s < symbols.size(); ++s) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            const double d = std::norm(symbols[s] - c.points[i]);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        for (int b = 0; b < c.bits_per_symbol; ++b)
            out[s * c.bits_per_symbol + b] =
                static_cast<std::uint8_t>((best >> (c.bits_per_symbol - 1 - b)) & 1u);
    }
    return out;
}

}  // namespace ofdmce
