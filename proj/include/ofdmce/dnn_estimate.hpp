#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "ofdmce/channel.hpp"
#include "ofdmce/constellation.hpp"
#include "ofdmce/dataset.hpp"
#include "ofdmce/estimate.hpp"
#include "ofdmce/mlp.hpp"
#include "ofdmce/ofdm.hpp"
#include "ofdmce/resource_grid.hpp"

namespace ofdmce {

namespace seed_stream {
inline constexpr std::uint64_t frame_data = 1;
inline constexpr std::uint64_t frame_channel = 2;
inline constexpr std::uint64_t frame_noise = 3;
inline constexpr std::uint64_t dataset_row = 4;
inline constexpr std::uint64_t dataset_noise = 5;
inline constexpr std::uint64_t stats_channel = 6;
}  // namespace seed_stream

// Refine one full-frequency LS column: LS taps -> network -> 4-tap response.
inline std::vector<cplx> dnn_refine_column(const MlpModel& model, std::span<const cplx> h_ls_col,
                                           const PowerDelayProfile& pdp) {
    require(model.n_in() == tap_features && model.n_out() == tap_features,
            "dnn_estimate: model i/o must be 8 features");
    const std::array<cplx, 4> ls_taps = extract_ls_taps(h_ls_col, pdp);
    const std::array<double, tap_features> packed = pack_taps(ls_taps);
    Eigen::VectorXd x(tap_features);
    for (int i = 0; i < tap_features; ++i) x(i) = packed[i];
    const Eigen::VectorXd y = infer(model, x);
    std::array<cplx, 8> refined{};
    for (int i = 0; i < 4; ++i) refined[i] = cplx(y(2 * i), y(2 * i + 1));
    std::vector<cplx> col(h_ls_col.size());
    taps_to_response(refined, pdp, static_cast<int>(h_ls_col.size()), col.data());
    return col;
}

// DNN-aided estimate: per (a,b) pair per pilot symbol, frequency-interpolate
// the pilot LS values, refine the 4 extracted taps through the network,
// rebuild the frequency response, then interpolate in time.
inline ChannelEstimate dnn_estimate(const MlpModel& model, const PilotEstimate& pe,
                                    const PowerDelayProfile& pdp,
                                    EstimatorKind method = EstimatorKind::dnn1) {
    require(model.n_in() == tap_features && model.n_out() == tap_features,
            "dnn_estimate: model i/o must be 8 features");
    ChannelEstimate est(pe.n_fft, pe.n_symbols, method);
    const std::size_t n_sym_p = pe.symbols.size();
    for (int a = 0; a < n_antennas; ++a) {
        const auto& comb = pe.subcarriers[a];
        for (int b = 0; b < n_antennas; ++b) {
            std::vector<std::vector<cplx>> columns(n_sym_p);
            for (std::size_t j = 0; j < n_sym_p; ++j) {
                std::span<const cplx> v(pe.h[a][b].data() + j * comb.size(), comb.size());
                const std::vector<cplx> ls_col = interp_freq(v, comb, pe.n_fft);
                columns[j] = dnn_refine_column(model, ls_col, pdp);
            }
            est.h[a * n_antennas + b] = interp_time(columns, pe.symbols, pe.n_fft, pe.n_symbols);
        }
    }
    return est;
}

struct DatasetSimParams {
    OfdmParams ofdm;
    PilotPattern pattern;
    PowerDelayProfile pdp;
    double f_d_max = 36.0;
    int n_harmonics = 32;
    int n_symbols = 14;  // slot length; pilot-symbol time offsets are drawn from it
};

namespace detail {

// One dataset row: a single pilot OFDM symbol through the fading channel at a
// drawn SNR, LS-estimated and reduced to taps; the target is the window
// average of the true taps.
inline void dataset_row(const DatasetSimParams& sp, std::uint64_t row_seed, double snr_lo,
                        double snr_hi, double* input8, double* target8) {
    std::mt19937_64 rng(row_seed);
    std::uniform_int_distribution<int> pick_pair(0, n_antennas * n_antennas - 1);
    const int pair = pick_pair(rng);
    const int a = pair / n_antennas, b = pair % n_antennas;

    const std::vector<int> psyms = pilot_symbol_indices(sp.pattern, sp.n_symbols);
    std::uniform_int_distribution<std::size_t> pick_sym(0, psyms.size() - 1);
    const std::int64_t t0 =
        static_cast<std::int64_t>(psyms[pick_sym(rng)]) * sp.ofdm.symbol_len();

    std::uniform_real_distribution<double> pick_snr(snr_lo, snr_hi);
    const double snr_db = pick_snr(rng);

    // Pilot symbol content; with d_f > 2 the leftover cells carry random data.
    std::array<std::vector<cplx>, n_antennas> data;
    const std::size_t cap = data_capacity(sp.pattern, sp.ofdm.n_fft, 1);
    if (cap > 0) {
        const Constellation qpsk = Constellation::qpsk();
        BitVec bits(cap * n_antennas * qpsk.bits_per_symbol);
        std::uniform_int_distribution<int> bit(0, 1);
        for (auto& v : bits) v = static_cast<std::uint8_t>(bit(rng));
        const std::vector<cplx> symbols = modulate(bits, qpsk);
        auto [s0, s1] = layer_map(symbols);
        data[0] = std::move(s0);
        data[1] = std::move(s1);
    }
    const ResourceGrid grid = insert_pilots(data, sp.pattern, sp.ofdm.n_fft, 1);

    TimeSignal tx = ofdm_modulate(grid, sp.ofdm);
    tx.t0 = t0;
    DopplerConfig dop{sp.f_d_max, sp.n_harmonics, derive_seed(row_seed, seed_stream::frame_channel)};
    const ChannelRealization ch =
        generate_taps(sp.pdp, dop, static_cast<std::size_t>(sp.ofdm.symbol_len()),
                      sp.ofdm.sample_rate, t0);
    const TimeSignal rx_clean = apply_channel(tx, ch);
    const double power = mean_power(rx_clean);
    const double noise_var = snr_to_noise_variance(snr_db, power);
    std::mt19937_64 noise_rng(derive_seed(row_seed, seed_stream::dataset_noise));
    const TimeSignal rx = add_awgn(rx_clean, noise_var, noise_rng);
    const ResourceGrid rx_grid = ofdm_demodulate(rx, sp.ofdm, 1);

    const PilotCells cells = extract_pilots(rx_grid, sp.pattern);
    const PilotEstimate pe = ls_estimate(cells, sp.pattern, sp.ofdm.n_fft, 1);
    const std::vector<cplx> ls_col =
        interp_freq(pe.h[a][b], pe.subcarriers[a], sp.ofdm.n_fft);
    const std::array<double, tap_features> in = pack_taps(extract_ls_taps(ls_col, sp.pdp));

    const auto truth = effective_taps(ch, sp.ofdm, 1, t0);
    std::array<cplx, 4> true_taps;
    for (int i = 0; i < 4; ++i) true_taps[i] = truth[pair][0][i];
    const std::array<double, tap_features> out = pack_taps(true_taps);

    for (int i = 0; i < tap_features; ++i) {
        input8[i] = in[i];
        target8[i] = out[i];
    }
}

}  // namespace detail

// One row per realization: (LS tap estimate, true taps) at an SNR drawn
// uniformly from [snr_lo, snr_hi]; seeded shuffle then 70/15/15 split.
inline TapDataset build_dataset(const DatasetSimParams& sp, std::size_t n_realizations,
                                double snr_lo, double snr_hi, std::uint64_t master_seed,
                                std::uint64_t shuffle_seed, unsigned n_threads = 0) {
    require(n_realizations >= 10, "build_dataset: need at least 10 realizations");
    require(snr_hi >= snr_lo, "build_dataset: invalid SNR range");
    sp.pattern.validate();
    sp.ofdm.validate();
    sp.pdp.validate_against_guard(sp.ofdm.n_guard);
    require(sp.pdp.n_taps() == 4, "build_dataset: model features are fixed at 4 taps");

    TapDataset ds;
    ds.inputs.resize(n_realizations, tap_features);
    ds.targets.resize(n_realizations, tap_features);
    parallel_for(n_realizations, n_threads, [&](std::size_t r) {
        detail::dataset_row(sp, derive_seed(master_seed, seed_stream::dataset_row, r), snr_lo,
                            snr_hi, ds.inputs.row(r).data(), ds.targets.row(r).data());
    });
    shuffle_and_split(ds, shuffle_seed);
    return ds;
}

}  // namespace ofdmce
