#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ofdmce/channel.hpp"
#include "ofdmce/common.hpp"
#include "ofdmce/mlp.hpp"

namespace ofdmce {

inline constexpr int tap_features = 8;  // 4 complex taps as interleaved re/im

// [Re h0, Im h0, ..., Re h3, Im h3]
inline std::array<double, tap_features> pack_taps(std::span<const cplx> taps) {
    require(taps.size() == 4, "pack_taps: exactly 4 complex taps expected");
    std::array<double, tap_features> out;
    for (std::size_t i = 0; i < 4; ++i) {
        out[2 * i] = taps[i].real();
        out[2 * i + 1] = taps[i].imag();
    }
    return out;
}

inline std::array<cplx, 4> unpack_taps(std::span<const double> v) {
    require(v.size() == tap_features, "unpack_taps: exactly 8 reals expected");
    std::array<cplx, 4> out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = cplx(v[2 * i], v[2 * i + 1]);
    return out;
}

// Inverse DFT of a full-grid frequency estimate, sampled at the PDP's tap
// delays. With the unitary transforms used elsewhere this equals
// (1/N) sum_k H[k] exp(+j 2 pi k d / N), the physical tap gain.
inline std::array<cplx, 4> extract_ls_taps(std::span<const cplx> h_grid,
                                           const PowerDelayProfile& pdp) {
    require(pdp.n_taps() == 4, "extract_ls_taps: model input is fixed at 4 taps");
    const int n_fft = static_cast<int>(h_grid.size());
    require(n_fft > 0, "extract_ls_taps: empty grid estimate");
    std::array<cplx, 4> out;
    for (std::size_t i = 0; i < 4; ++i) {
        const double w = 2.0 * pi * static_cast<double>(pdp.delays[i]) / n_fft;
        const cplx step = std::polar(1.0, w);
        cplx rot(1.0, 0.0);
        cplx acc(0.0, 0.0);
        for (int k = 0; k < n_fft; ++k) {
            acc += h_grid[k] * rot;
            rot *= step;
        }
        out[i] = acc / static_cast<double>(n_fft);
    }
    return out;
}

struct SplitSizes {
    std::size_t train = 0, val = 0, test = 0;
};

// 70/15/15 floor split, remainder to train. Integer arithmetic: 15% = 3/20.
inline SplitSizes split_sizes(std::size_t n) {
    SplitSizes s;
    s.val = n * 3 / 20;
    s.test = s.val;
    s.train = n - s.val - s.test;
    return s;
}

// Row-major (LS taps -> true taps) regression dataset with a contiguous
// train/validation/test layout fixed by the shuffle seed.
struct TapDataset {
    RowMat inputs;   // N x 8
    RowMat targets;  // N x 8
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    std::uint64_t shuffle_seed = 0;

    std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }

    auto train_inputs() const { return inputs.topRows(n_train); }
    auto train_targets() const { return targets.topRows(n_train); }
    auto val_inputs() const { return inputs.middleRows(n_train, n_val); }
    auto val_targets() const { return targets.middleRows(n_train, n_val); }
    auto test_inputs() const { return inputs.bottomRows(n_test); }
    auto test_targets() const { return targets.bottomRows(n_test); }

    void validate() const {
        require(inputs.rows() == targets.rows() && inputs.cols() == tap_features &&
                    targets.cols() == tap_features,
                "dataset: inputs/targets must be N x 8");
        require(n_train + n_val + n_test == rows(), "dataset: split does not cover all rows");
    }
};

// Seeded Fisher-Yates shuffle of rows followed by the 70/15/15 split.
inline void shuffle_and_split(TapDataset& ds, std::uint64_t shuffle_seed) {
    const std::size_t n = ds.rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(shuffle_seed);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    RowMat in(n, tap_features), tg(n, tap_features);
    for (std::size_t i = 0; i < n; ++i) {
        in.row(i) = ds.inputs.row(perm[i]);
        tg.row(i) = ds.targets.row(perm[i]);
    }
    ds.inputs.swap(in);
    ds.targets.swap(tg);
    const SplitSizes s = split_sizes(n);
    ds.n_train = s.train;
    ds.n_val = s.val;
    ds.n_test = s.test;
    ds.shuffle_seed = shuffle_seed;
}

// Binary layout (little endian): magic "OFDMCED1", u32 version, u64 rows,
// u32 n_in, u32 n_out, u64 shuffle_seed, u64 train, u64 val, u64 test, then
// rows * (n_in + n_out) doubles, inputs then targets per row.
inline constexpr char dataset_magic[8] = {'O', 'F', 'D', 'M', 'C', 'E', 'D', '1'};

inline void save_dataset(const TapDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
    f.write(dataset_magic, 8);
    const std::uint32_t version = 1, n_in = tap_features, n_out = tap_features;
    const std::uint64_t rows = ds.rows(), tr = ds.n_train, va = ds.n_val, te = ds.n_test;
    auto put = [&f](const void* p, std::size_t n) { f.write(static_cast<const char*>(p), n); };
    put(&version, 4);
    put(&rows, 8);
    put(&n_in, 4);
    put(&n_out, 4);
    put(&ds.shuffle_seed, 8);
    put(&tr, 8);
    put(&va, 8);
    put(&te, 8);
    std::vector<double> row(2 * tap_features);
    for (std::size_t i = 0; i < rows; ++i) {
        for (int c = 0; c < tap_features; ++c) {
            row[c] = ds.inputs(i, c);
            row[tap_features + c] = ds.targets(i, c);
        }
        put(row.data(), row.size() * sizeof(double));
    }
    if (!f) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline TapDataset load_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, dataset_magic, 8) != 0)
        throw std::runtime_error("load_dataset: bad magic in " + path);
    auto get = [&f, &path](void* p, std::size_t n) {
        f.read(static_cast<char*>(p), n);
        if (!f) throw std::runtime_error("load_dataset: truncated file " + path);
    };
    std::uint32_t version = 0, n_in = 0, n_out = 0;
    std::uint64_t rows = 0, tr = 0, va = 0, te = 0, seed = 0;
    get(&version, 4);
    get(&rows, 8);
    get(&n_in, 4);
    get(&n_out, 4);
    get(&seed, 8);
    get(&tr, 8);
    get(&va, 8);
    get(&te, 8);
    if (version != 1 || n_in != tap_features || n_out != tap_features)
        throw std::runtime_error("load_dataset: unsupported layout in " + path);
    TapDataset ds;
    ds.inputs.resize(rows, tap_features);
    ds.targets.resize(rows, tap_features);
    ds.n_train = tr;
    ds.n_val = va;
    ds.n_test = te;
    ds.shuffle_seed = seed;
    std::vector<double> row(2 * tap_features);
    for (std::uint64_t i = 0; i < rows; ++i) {
        get(row.data(), row.size() * sizeof(double));
        for (int c = 0; c < tap_features; ++c) {
            ds.inputs(i, c) = row[c];
            ds.targets(i, c) = row[tap_features + c];
        }
    }
    ds.validate();
    return ds;
}

}  // namespace ofdmce
