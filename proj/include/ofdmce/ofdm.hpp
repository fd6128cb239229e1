#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ofdmce/common.hpp"
#include "ofdmce/fft.hpp"
#include "ofdmce/resource_grid.hpp"

namespace ofdmce {

struct OfdmParams {
    int n_fft = 512;
    int n_guard = 64;
    double sample_rate = 512 * 15000.0;  // subcarrier spacing times FFT size

    void validate() const {
        require(is_power_of_two(static_cast<std::size_t>(n_fft)),
                "ofdm params: n_fft must be a power of two");
        require(n_guard >= 0 && n_guard < n_fft, "ofdm params: need 0 <= n_guard < n_fft");
        require(sample_rate > 0.0, "ofdm params: sample_rate must be positive");
    }

    int symbol_len() const { return n_fft + n_guard; }
};

// Per-antenna sample streams. t0 is the absolute index of the first sample,
// carried so channel synthesis keeps Doppler phase continuity across blocks.
struct TimeSignal {
    std::array<std::vector<cplx>, n_antennas> samples;
    std::int64_t t0 = 0;
};

// Prepends the last n_guard samples of the symbol.
inline std::vector<cplx> add_cp(std::span<const cplx> symbol, int n_guard) {
    require(n_guard >= 0 && static_cast<std::size_t>(n_guard) < symbol.size(),
            "add_cp: need 0 <= n_guard < symbol length");
    std::vector<cplx> out;
    out.reserve(symbol.size() + n_guard);
    out.insert(out.end(), symbol.end() - n_guard, symbol.end());
    out.insert(out.end(), symbol.begin(), symbol.end());
    return out;
}

inline std::vector<cplx> remove_cp(std::span<const cplx> block, int n_guard) {
    require(n_guard >= 0 && static_cast<std::size_t>(n_guard) < block.size(),
            "remove_cp: invalid guard length");
    return std::vector<cplx>(block.begin() + n_guard, block.end());
}

// Per antenna: concatenation over symbols of add_cp(idft(grid column)).
inline TimeSignal ofdm_modulate(const ResourceGrid& grid, const OfdmParams& p) {
    p.validate();
    require(grid.n_fft == p.n_fft, "ofdm_modulate: grid/params FFT size mismatch");
    TimeSignal sig;
    for (int a = 0; a < n_antennas; ++a) {
        sig.samples[a].reserve(static_cast<std::size_t>(grid.n_symbols) * p.symbol_len());
        for (int t = 0; t < grid.n_symbols; ++t) {
            std::span<const cplx> col(grid.cells[a].data() + grid.at(0, t),
                                      static_cast<std::size_t>(p.n_fft));
            const std::vector<cplx> time = idft(col);
            if (p.n_guard > 0) {
                sig.samples[a].insert(sig.samples[a].end(), time.end() - p.n_guard, time.end());
            }
            sig.samples[a].insert(sig.samples[a].end(), time.begin(), time.end());
        }
    }
    return sig;
}

// Per antenna per symbol: dft(remove_cp(block)). Returned grid holds raw
// received values; cell labeling is the receiver's business.
inline ResourceGrid ofdm_demodulate(const TimeSignal& sig, const OfdmParams& p, int n_symbols) {
    p.validate();
    const std::size_t expected = static_cast<std::size_t>(n_symbols) * p.symbol_len();
    for (int a = 0; a < n_antennas; ++a)
        require(sig.samples[a].size() == expected,
                "ofdm_demodulate: sample count must be n_symbols * (n_fft + n_guard)");
    ResourceGrid grid(p.n_fft, n_symbols);
    std::vector<cplx> sym(static_cast<std::size_t>(p.n_fft));
    for (int a = 0; a < n_antennas; ++a) {
        for (int t = 0; t < n_symbols; ++t) {
            const cplx* block = sig.samples[a].data() + static_cast<std::size_t>(t) * p.symbol_len();
            std::copy(block + p.n_guard, block + p.symbol_len(), sym.begin());
            const std::vector<cplx> freq = dft(sym);
            std::copy(freq.begin(), freq.end(), grid.cells[a].begin() + grid.at(0, t));
        }
    }
    return grid;
}

}  // namespace ofdmce
