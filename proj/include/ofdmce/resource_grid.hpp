#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ofdmce/common.hpp"

namespace ofdmce {

inline constexpr int n_antennas = 2;

enum class CellKind : std::uint8_t { data, pilot, null_cell };

// (d_t, d_f) comb with disjoint per-antenna frequency combs: antenna a owns
// subcarriers k with k mod d_f == (a * antenna_offset) mod d_f.
struct PilotPattern {
    int d_t = 4;
    int d_f = 2;
    cplx pilot_value{1.0, 0.0};
    int antenna_offset = 1;

    void validate() const {
        require(d_t >= 1, "pilot pattern: d_t must be >= 1");
        require(d_f >= 2, "pilot pattern: d_f must be >= 2");
        require(antenna_offset % d_f != 0,
                "pilot pattern: antenna_offset must separate the two combs");
        require(std::abs(std::abs(pilot_value) - 1.0) <= 1e-12,
                "pilot pattern: pilot value must have unit magnitude");
    }

    int comb_offset(int antenna) const {
        int o = (antenna * antenna_offset) % d_f;
        return o < 0 ? o + d_f : o;
    }
};

inline std::vector<int> pilot_symbol_indices(const PilotPattern& p, int n_symbols) {
    std::vector<int> out;
    for (int t = 0; t < n_symbols; t += p.d_t) out.push_back(t);
    return out;
}

inline std::vector<int> pilot_subcarriers(const PilotPattern& p, int n_fft, int antenna) {
    std::vector<int> out;
    for (int k = p.comb_offset(antenna); k < n_fft; k += p.d_f) out.push_back(k);
    return out;
}

// Frequency-time lattice of complex cells for both antennas, column-major in
// time: index = k + t * n_fft.
struct ResourceGrid {
    int n_fft = 0;
    int n_symbols = 0;
    std::array<std::vector<cplx>, n_antennas> cells;
    std::array<std::vector<CellKind>, n_antennas> kind;

    ResourceGrid() = default;
    ResourceGrid(int nfft, int nsym) : n_fft(nfft), n_symbols(nsym) {
        for (int a = 0; a < n_antennas; ++a) {
            cells[a].assign(static_cast<std::size_t>(n_fft) * n_symbols, cplx(0.0, 0.0));
            kind[a].assign(static_cast<std::size_t>(n_fft) * n_symbols, CellKind::data);
        }
    }

    std::size_t at(int k, int t) const { return static_cast<std::size_t>(t) * n_fft + k; }
    cplx& operator()(int a, int k, int t) { return cells[a][at(k, t)]; }
    const cplx& operator()(int a, int k, int t) const { return cells[a][at(k, t)]; }
};

// x = [x1, x2, x3, x4, ...] -> ([x1, x3, ...], [x2, x4, ...])
inline std::pair<std::vector<cplx>, std::vector<cplx>> layer_map(std::span<const cplx> x) {
    require(x.size() % 2 == 0, "layer_map: sequence length must be even");
    std::pair<std::vector<cplx>, std::vector<cplx>> out;
    out.first.reserve(x.size() / 2);
    out.second.reserve(x.size() / 2);
    for (std::size_t i = 0; i < x.size(); i += 2) {
        out.first.push_back(x[i]);
        out.second.push_back(x[i + 1]);
    }
    return out;
}

inline std::vector<cplx> layer_demap(std::span<const cplx> a, std::span<const cplx> b) {
    require(a.size() == b.size(), "layer_demap: sequences must have equal length");
    std::vector<cplx> out;
    out.reserve(a.size() * 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(a[i]);
        out.push_back(b[i]);
    }
    return out;
}

// Cell labeling induced by the pattern: on pilot symbols each antenna's comb
// subcarriers are pilot for the owner and null for the other antenna.
inline ResourceGrid make_grid_layout(const PilotPattern& p, int n_fft, int n_symbols) {
    p.validate();
    require(n_fft >= p.d_f && n_symbols >= 1, "grid layout: invalid dimensions");
    ResourceGrid g(n_fft, n_symbols);
    for (int t : pilot_symbol_indices(p, n_symbols)) {
        for (int a = 0; a < n_antennas; ++a) {
            for (int k : pilot_subcarriers(p, n_fft, a)) {
                g.kind[a][g.at(k, t)] = CellKind::pilot;
                g.kind[1 - a][g.at(k, t)] = CellKind::null_cell;
            }
        }
    }
    return g;
}

inline std::size_t data_capacity(const PilotPattern& p, int n_fft, int n_symbols) {
    const ResourceGrid g = make_grid_layout(p, n_fft, n_symbols);
    std::size_t count = 0;
    for (CellKind k : g.kind[0])
        if (k == CellKind::data) ++count;
    return count;  // identical for both antennas by construction
}

// Pilot cells get pilot_value on the owning antenna (0 on the other); data
// fills remaining cells frequency-major then time; leftovers become null.
inline ResourceGrid insert_pilots(const std::array<std::vector<cplx>, n_antennas>& data,
                                  const PilotPattern& p, int n_fft, int n_symbols) {
    ResourceGrid g = make_grid_layout(p, n_fft, n_symbols);
    const std::size_t capacity = data_capacity(p, n_fft, n_symbols);
    for (int a = 0; a < n_antennas; ++a) {
        require(data[a].size() <= capacity,
                "insert_pilots: data overflow, capacity per antenna is " +
                    std::to_string(capacity) + " cells, got " + std::to_string(data[a].size()));
        std::size_t next = 0;
        for (int t = 0; t < n_symbols; ++t) {
            for (int k = 0; k < n_fft; ++k) {
                const std::size_t i = g.at(k, t);
                switch (g.kind[a][i]) {
                    case CellKind::pilot:
                        g.cells[a][i] = p.pilot_value;
                        break;
                    case CellKind::null_cell:
                        g.cells[a][i] = cplx(0.0, 0.0);
                        break;
                    case CellKind::data:
                        if (next < data[a].size()) {
                            g.cells[a][i] = data[a][next++];
                        } else {
                            g.cells[a][i] = cplx(0.0, 0.0);
                            g.kind[a][i] = CellKind::null_cell;
                        }
                        break;
                }
            }
        }
    }
    return g;
}

// Values of every grid plane at each tx antenna's pilot coordinates, in the
// deterministic frequency-major order used by insert_pilots.
// values[a][b]: plane b sampled on antenna a's comb.
struct PilotCells {
    std::array<std::vector<int>, n_antennas> subcarriers;
    std::vector<int> symbols;
    std::array<std::array<std::vector<cplx>, n_antennas>, n_antennas> values;
};

inline PilotCells extract_pilots(const ResourceGrid& grid, const PilotPattern& p) {
    p.validate();
    require(grid.n_fft >= p.d_f, "extract_pilots: grid/pattern mismatch");
    PilotCells out;
    out.symbols = pilot_symbol_indices(p, grid.n_symbols);
    for (int a = 0; a < n_antennas; ++a) {
        out.subcarriers[a] = pilot_subcarriers(p, grid.n_fft, a);
        for (int b = 0; b < n_antennas; ++b) {
            auto& v = out.values[a][b];
            v.reserve(out.subcarriers[a].size() * out.symbols.size());
            for (int t : out.symbols)
                for (int k : out.subcarriers[a]) v.push_back(grid(b, k, t));
        }
    }
    return out;
}

}  // namespace ofdmce
